#include "celab/report.hpp"

#include "celab/errors.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>

namespace celab {

std::string manifest_json(const RunResult& res, const ScenarioConfig& cfg,
                          const std::vector<std::string>& artifacts) {
    nlohmann::ordered_json j;
    auto& s = j["scenario"];
    s["name"] = cfg.name;
    s["d"] = cfg.d;
    s["c0_re"] = cfg.c0.real();
    s["c0_im"] = cfg.c0.imag();
    s["epsilon"] = cfg.epsilon;
    s["Delta"] = cfg.nbhd.Delta;
    s["DeltaPrime"] = cfg.nbhd.DeltaPrime;
    s["beta"] = cfg.nbhd.beta;
    s["epsilon1"] = cfg.nbhd.epsilon1;
    s["n_max"] = cfg.n_max;
    s["sample_grid"] = cfg.sample_grid;
    s["depth_limit"] = cfg.depth_limit;
    s["max_leaves"] = cfg.max_leaves;
    s["C_tilde"] = cfg.C_tilde;
    s["C1"] = cfg.C1;
    s["gamma_H"] = cfg.gamma_H;
    s["kappa_prime"] = cfg.kappa_prime;
    s["alpha"] = cfg.alpha;
    s["seed"] = cfg.seed;
    j["startup_kind"] = to_string(res.startup.kind);
    j["startup_time"] = res.startup.N;
    j["artifacts"] = artifacts;
    auto& c = j["counts"];
    c["ledger_rows"] = res.ledger.size();
    c["deletion_records"] = res.deletions.size();
    c["q_records"] = res.q_records.size();
    c["final_leaves"] = res.summary.n_final_leaves;
    return j.dump(2) + "\n";
}

std::vector<std::string> write_run_report(const RunResult& res, const ScenarioConfig& cfg,
                                          const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec)
        throw Error("cannot create output directory '" + out_dir + "': " + ec.message());
    auto open = [&](const std::string& f) {
        std::ofstream os(fs::path(out_dir) / f, std::ios::binary);
        if (!os)
            throw Error("cannot write '" + f + "' in '" + out_dir + "'");
        return os;
    };
    {
        auto os = open("ledger.csv");
        write_ledger_csv(os, res.ledger);
    }
    {
        auto os = open("summary.json");
        os << summary_to_json(res.summary, res.constants);
    }
    {
        auto os = open("tree.jsonl");
        res.tree.dump_jsonl(os);
    }
    const std::vector<std::string> core{"ledger.csv", "summary.json", "tree.jsonl"};
    {
        auto os = open("manifest.json");
        os << manifest_json(res, cfg, core);
    }
    auto files = core;
    files.push_back("manifest.json");
    return files;
}

} // namespace celab
