#include "CLI11.hpp"

#include "celab/density.hpp"
#include "celab/dynamics.hpp"
#include "celab/errors.hpp"
#include "celab/exclusion.hpp"
#include "celab/format.hpp"
#include "celab/parallel.hpp"
#include "celab/partition.hpp"
#include "celab/report.hpp"
#include "celab/returns.hpp"
#include "celab/rng.hpp"
#include "celab/scenario.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace celab;

// thrown by subcommands to reach the dedicated exit codes
struct StartupAbort {
    std::string reason;
};
struct VerifyFail {};

Complex parse_complex(const std::string& s) {
    const auto comma = s.find(',');
    if (comma == std::string::npos)
        throw ScenarioError("expected RE,IM but got '" + s + "'");
    auto num = [&](const std::string& part) {
        if (part.empty())
            throw ScenarioError("expected RE,IM but got '" + s + "'");
        errno = 0;
        char* end = nullptr;
        const double x = std::strtod(part.c_str(), &end);
        if (end != part.c_str() + part.size() || errno == ERANGE)
            throw ScenarioError("expected RE,IM but got '" + s + "'");
        return x;
    };
    return Complex{num(s.substr(0, comma)), num(s.substr(comma + 1))};
}

// runs `fn` against the file at `path`, or against `fallback` when path is empty
template <typename Fn>
void to_sink(const std::string& path, std::ostream& fallback, Fn&& fn) {
    if (path.empty()) {
        fn(fallback);
        return;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw Error("cannot write '" + path + "'");
    fn(os);
}

void write_orbit_csv(std::ostream& os, const OrbitRecord& orb) {
    os << "n,re,im,alpha,gamma\n";
    for (std::size_t n = 0; n <= orb.last_index(); ++n) {
        os << n << ',' << fmt_double(orb.points[n].real()) << ','
           << fmt_double(orb.points[n].imag()) << ',' << fmt_double(orb.alpha[n]) << ','
           << fmt_double(orb.gamma[n]) << '\n';
    }
}

SampleLayout parse_layout(const std::string& s) {
    if (s == "grid")
        return SampleLayout::Grid;
    if (s == "stratified")
        return SampleLayout::Stratified;
    throw ScenarioError("layout must be 'grid' or 'stratified', not '" + s + "'");
}

// ---- verify suites ----

struct CheckRow {
    std::string name;
    bool ok = false;
    std::string detail;
};

CheckRow check_chain_identity() {
    double worst = 0.0;
    std::size_t n_checked = 0;
    int t = 0;
    for (int d : {2, 3, 4}) {
        for (int i = 0; i < 333; ++i, ++t) {
            Complex c{-2.2 + 3.0 * u01(5u, 2 * t), -1.2 + 2.4 * u01(5u, 2 * t + 1)};
            auto orb = critical_orbit(make_family(d, c), 50);
            for (std::size_t n = 1; n <= orb.last_index(); ++n) {
                if (!std::isfinite(orb.gamma[n]))
                    continue;
                worst = std::max(worst, chain_identity_residual(orb, n));
                ++n_checked;
            }
        }
    }
    std::ostringstream d2;
    d2 << "max residual " << fmt_double(worst) << " over " << n_checked << " indices";
    return {"chain-identity", worst < 1e-9 && n_checked > 0, d2.str()};
}

CheckRow check_transversality() {
    auto tr = transversality_ratio(make_family(2, Complex{-2.0, 0.0}), 60, 1e-12);
    const double err = std::abs(tr.limit - Complex{2.0 / 3.0, 0.0});
    std::ostringstream d;
    d << "|L - 2/3| = " << fmt_double(err) << " after " << tr.n_used << " terms";
    return {"transversality", err < 1e-9, d.str()};
}

CheckRow check_bound_order() {
    CriticalNeighborhoods nbhd;
    std::size_t n_events = 0, violations = 0, n_anchors = 0;
    for (double base : {-2.0, -1.76}) {
        for (int k = 0; k < 8; ++k) {
            Complex c{base + k * 2.5e-6, 0.0};
            auto orb = critical_orbit(make_family(2, c), 10000);
            const std::size_t hi = std::min<std::size_t>(orb.last_index(), 2000);
            if (hi < 1 || !ce_window_test(orb, 0.3, 1, hi))
                continue;
            ++n_anchors;
            for (const auto& ev : timeline(orb, nbhd, orb.last_index())) {
                ++n_events;
                if (ev.p >= ev.n)
                    ++violations;
            }
        }
    }
    std::ostringstream d;
    d << violations << " violations over " << n_events << " returns from " << n_anchors
      << " expanding anchors";
    return {"bound-order", violations == 0 && n_events > 0, d.str()};
}

// anchor in the chaotic band: deep startup at N = 15 with a straddle cascade,
// so later shallow set-returns arrive undersized (inessential) and escapes
// carry nontrivial (r, q) records
const RunResult& cascade_probe_run() {
    static const RunResult res = [] {
        ScenarioConfig cfg;
        cfg.c0 = Complex{-1.9, 0.0};
        cfg.epsilon = 6e-7;
        cfg.nbhd.Delta = 1.3;
        cfg.nbhd.DeltaPrime = 1.2;
        cfg.n_max = 4000;
        cfg.name = "chaotic-cascade";
        return run_exclusion(cfg);
    }();
    return res;
}

CheckRow check_inessential_no_deletion() {
    const auto& res = cascade_probe_run();
    std::ostringstream d;
    d << res.summary.deletions_at_inessential << " deletions over "
      << res.summary.n_inessential_events << " inessential returns";
    return {"inessential-no-deletion",
            res.summary.deletions_at_inessential == 0 && res.summary.n_inessential_events > 0,
            d.str()};
}

CheckRow check_q_bound() {
    const auto& res = cascade_probe_run();
    if (res.q_records.empty()) {
        return {"q-bound", true, "no escape events recorded"};
    }
    std::size_t violations = 0;
    for (const auto& q : res.q_records) {
        const double bound = res.constants.M_tilde * std::max(1, q.r);
        if (res.constants.M_tilde > 0.0 && static_cast<double>(q.q) > bound)
            ++violations;
    }
    std::ostringstream d;
    d << violations << " violations over " << res.q_records.size()
      << " escapes, max q/(M~ r) = " << fmt_double(res.summary.max_q_over_mr);
    return {"q-bound", violations == 0, d.str()};
}

CheckRow check_density_trend(Complex anchor, unsigned threads) {
    auto rows = scale_sweep(2, anchor, 0.25, 2.0, 5, 20, 400, SampleLayout::Grid, 1, threads);
    bool ok = true;
    std::ostringstream d;
    d << "densities";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        d << ' ' << fmt_double(rows[i].density);
        if (i > 0 && rows[i].density < rows[i - 1].density -
                         2.0 * (rows[i].wilson_halfwidth + rows[i - 1].wilson_halfwidth))
            ok = false;
    }
    return {"density-trend", ok, d.str()};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for parameter exclusion in the unicritical family"};
    app.require_subcommand(1);

    // ---- orbit ----
    auto* s_orbit = app.add_subcommand("orbit", "critical-orbit statistics as CSV");
    std::string orbit_c = "0,0", orbit_csv;
    int orbit_d = 2;
    std::size_t orbit_n = 100;
    s_orbit->add_option("--c", orbit_c, "parameter RE,IM")->required();
    s_orbit->add_option("--d", orbit_d, "family degree")->check(CLI::Range(2, 64));
    s_orbit->add_option("--n", orbit_n, "iteration budget");
    s_orbit->add_option("--csv", orbit_csv, "output path (default stdout)");
    s_orbit->callback([&] {
        auto orb = critical_orbit(make_family(orbit_d, parse_complex(orbit_c)), orbit_n);
        for (std::size_t k = 1; k <= orb.last_index(); ++k) {
            if (std::abs(orb.points[k]) == 0.0) {
                std::cerr << "warning: degenerate orbit: the critical point recurs exactly; "
                             "alpha/gamma carry sentinel values\n";
                break;
            }
        }
        to_sink(orbit_csv, std::cout, [&](std::ostream& os) { write_orbit_csv(os, orb); });
    });

    // ---- timeline ----
    auto* s_tl = app.add_subcommand("timeline", "free returns and bound periods as CSV");
    std::string tl_c = "0,0", tl_csv;
    int tl_d = 2;
    std::size_t tl_n = 10000;
    CriticalNeighborhoods tl_nbhd;
    s_tl->add_option("--c", tl_c, "parameter RE,IM")->required();
    s_tl->add_option("--d", tl_d, "family degree")->check(CLI::Range(2, 64));
    s_tl->add_option("--n", tl_n, "iteration budget");
    s_tl->add_option("--Delta", tl_nbhd.Delta, "U = D(0, e^-Delta)");
    s_tl->add_option("--DeltaPrime", tl_nbhd.DeltaPrime, "U' = D(0, e^-DeltaPrime)");
    s_tl->add_option("--beta", tl_nbhd.beta, "binding rate");
    s_tl->add_option("--epsilon1", tl_nbhd.epsilon1, "large-scale factor");
    s_tl->add_option("--csv", tl_csv, "output path (default stdout)");
    s_tl->callback([&] {
        tl_nbhd.validate();
        auto orb = critical_orbit(make_family(tl_d, parse_complex(tl_c)), tl_n);
        auto events = timeline(orb, tl_nbhd, orb.last_index());
        to_sink(tl_csv, std::cout, [&](std::ostream& os) { write_timeline_csv(os, events); });
    });

    // ---- partition ----
    auto* s_part = app.add_subcommand("partition",
                                      "refine a parameter square at its first essential return");
    std::string part_c = "0,0", part_jsonl;
    int part_d = 2, part_grid = 2, part_depth = 48;
    double part_eps = 1e-6;
    std::size_t part_cap = 20000;
    CriticalNeighborhoods part_nbhd;
    s_part->add_option("--c", part_c, "square center RE,IM")->required();
    s_part->add_option("--eps", part_eps, "square side")->required();
    s_part->add_option("--d", part_d, "family degree")->check(CLI::Range(2, 64));
    s_part->add_option("--grid", part_grid, "boundary sample lattice")->check(CLI::Range(1, 64));
    s_part->add_option("--depth-limit", part_depth, "maximum split depth");
    s_part->add_option("--n-cap", part_cap, "startup iteration budget");
    s_part->add_option("--Delta", part_nbhd.Delta, "U = D(0, e^-Delta)");
    s_part->add_option("--DeltaPrime", part_nbhd.DeltaPrime, "U' = D(0, e^-DeltaPrime)");
    s_part->add_option("--beta", part_nbhd.beta, "binding rate");
    s_part->add_option("--epsilon1", part_nbhd.epsilon1, "large-scale factor");
    s_part->add_option("--jsonl", part_jsonl, "leaf dump path (default stdout)");
    s_part->callback([&] {
        part_nbhd.validate();
        const Complex c0 = parse_complex(part_c);
        const FamilyParams fam = make_family(part_d, c0);
        auto st = startup(fam, c0, part_eps, part_nbhd, part_cap, part_grid);
        std::cout << "startup " << to_string(st.kind) << " at N=" << st.N
                  << " diam=" << fmt_double(st.diam) << " dist=" << fmt_double(st.dist);
        if (st.kind == StartupKind::EssentialReturn)
            std::cout << " r=" << st.r << " comparability=" << fmt_double(st.comparability)
                      << " distortion=" << fmt_double(st.distortion);
        std::cout << '\n';
        if (st.kind == StartupKind::Failed)
            throw StartupAbort{st.reason};

        PartitionTree tree(c0, part_eps);
        if (st.kind == StartupKind::EssentialReturn) {
            auto out = refine_at_essential_return(tree, tree.root(), fam, st.N, part_nbhd,
                                                  part_grid, part_depth,
                                                  part_nbhd.large_scale());
            std::cout << out.leaves.size() << " partition elements, " << out.anomalous.size()
                      << " anomalous\n";
        } else {
            tree.node(tree.root()).status = SquareStatus::Escaped;
            tree.node(tree.root()).last_k = st.N;
        }
        to_sink(part_jsonl, std::cout, [&](std::ostream& os) { tree.dump_jsonl(os); });
    });

    // ---- run ----
    auto* s_run = app.add_subcommand("run", "execute a scenario and write its run directory");
    std::string run_scn, run_out, run_c, run_name, run_layoutless;
    double run_eps = 0.0, run_alpha = 0.0, run_kp = 0.0, run_ct = 0.0, run_c1 = 0.0,
           run_gh = 0.0;
    std::size_t run_nmax = 0, run_maxleaves = 0;
    int run_grid = 0, run_depth = 0;
    std::uint64_t run_seed = 0;
    s_run->add_option("--scenario", run_scn, "scenario file")->required();
    s_run->add_option("--out", run_out, "output directory")->required();
    auto* o_c = s_run->add_option("--c", run_c, "override: anchor RE,IM");
    auto* o_eps = s_run->add_option("--epsilon", run_eps, "override: square side");
    auto* o_nmax = s_run->add_option("--n-max", run_nmax, "override: iteration budget");
    auto* o_grid = s_run->add_option("--grid", run_grid, "override: sample lattice");
    auto* o_depth = s_run->add_option("--depth-limit", run_depth, "override: split depth");
    auto* o_leaves = s_run->add_option("--max-leaves", run_maxleaves, "override: leaf budget");
    auto* o_alpha = s_run->add_option("--alpha", run_alpha, "override: recurrence exponent");
    auto* o_kp = s_run->add_option("--kappa-prime", run_kp, "override: kappa_prime");
    auto* o_ct = s_run->add_option("--C-tilde", run_ct, "override: promotion target");
    auto* o_c1 = s_run->add_option("--C1", run_c1, "override: comparability factor");
    auto* o_gh = s_run->add_option("--gamma-H", run_gh, "override: outside expansion rate");
    auto* o_seed = s_run->add_option("--seed", run_seed, "override: RNG seed");
    auto* o_name = s_run->add_option("--name", run_name, "override: scenario name");
    s_run->callback([&] {
        auto cfg = load_scenario(run_scn);
        if (o_c->count())
            cfg.c0 = parse_complex(run_c);
        if (o_eps->count())
            cfg.epsilon = run_eps;
        if (o_nmax->count())
            cfg.n_max = run_nmax;
        if (o_grid->count())
            cfg.sample_grid = run_grid;
        if (o_depth->count())
            cfg.depth_limit = run_depth;
        if (o_leaves->count())
            cfg.max_leaves = run_maxleaves;
        if (o_alpha->count())
            cfg.alpha = run_alpha;
        if (o_kp->count())
            cfg.kappa_prime = run_kp;
        if (o_ct->count())
            cfg.C_tilde = run_ct;
        if (o_c1->count())
            cfg.C1 = run_c1;
        if (o_gh->count())
            cfg.gamma_H = run_gh;
        if (o_seed->count())
            cfg.seed = run_seed;
        if (o_name->count())
            cfg.name = run_name;
        auto res = run_exclusion(cfg);
        write_run_report(res, cfg, run_out);
        std::cout << "run '" << cfg.name << "': startup " << to_string(res.startup.kind)
                  << ", delta0 = " << fmt_double(res.summary.delta0)
                  << ", delta1 = " << fmt_double(res.summary.delta1)
                  << ", delta2 = " << fmt_double(res.summary.delta2) << ", artifacts in "
                  << run_out << '\n';
        if (res.startup.kind == StartupKind::Failed)
            throw StartupAbort{res.startup.reason};
    });

    // ---- density ----
    auto* s_den = app.add_subcommand("density", "escape density across shrinking scales");
    std::string den_anchor, den_layout = "grid", den_csv;
    int den_d = 2, den_scales = 4, den_grid = 40;
    double den_eps0 = 1e-3, den_shrink = 2.0;
    std::size_t den_nbase = 1000;
    std::uint64_t den_seed = 1;
    unsigned den_threads = 0;
    s_den->add_option("--anchor", den_anchor, "anchor RE,IM")->required();
    s_den->add_option("--d", den_d, "family degree")->check(CLI::Range(2, 64));
    s_den->add_option("--eps0", den_eps0, "largest scale");
    s_den->add_option("--shrink", den_shrink, "scale shrink factor");
    s_den->add_option("--scales", den_scales, "number of scales")->check(CLI::Range(1, 64));
    s_den->add_option("--grid", den_grid, "sample grid per scale")->check(CLI::Range(1, 4096));
    s_den->add_option("--n-base", den_nbase, "iteration budget at the largest scale");
    s_den->add_option("--layout", den_layout, "grid | stratified");
    s_den->add_option("--seed", den_seed, "RNG seed");
    s_den->add_option("--threads", den_threads, "worker cap (0 = hardware)");
    s_den->add_option("--csv", den_csv, "output path (default stdout)");
    s_den->callback([&] {
        auto rows = scale_sweep(den_d, parse_complex(den_anchor), den_eps0, den_shrink,
                                den_scales, den_grid, den_nbase, parse_layout(den_layout),
                                den_seed, den_threads);
        to_sink(den_csv, std::cout, [&](std::ostream& os) { write_density_csv(os, rows); });
    });

    // ---- render ----
    auto* s_ren = app.add_subcommand("render", "escape-time image of a parameter square (P5 PGM)");
    std::string ren_center, ren_pgm;
    int ren_d = 2, ren_px = 256;
    double ren_width = 3.0;
    std::size_t ren_nmax = 500;
    unsigned ren_threads = 0;
    s_ren->add_option("--center", ren_center, "square center RE,IM")->required();
    s_ren->add_option("--d", ren_d, "family degree")->check(CLI::Range(2, 64));
    s_ren->add_option("--width", ren_width, "square side");
    s_ren->add_option("--px", ren_px, "image size in pixels")->check(CLI::Range(1, 16384));
    s_ren->add_option("--n-max", ren_nmax, "iteration budget");
    s_ren->add_option("--threads", ren_threads, "worker cap (0 = hardware)");
    s_ren->add_option("--pgm", ren_pgm, "output path (default stdout)");
    s_ren->callback([&] {
        to_sink(ren_pgm, std::cout, [&](std::ostream& os) {
            render_escape_pgm(os, ren_d, parse_complex(ren_center), ren_width, ren_px,
                              ren_nmax, ren_threads);
        });
    });

    // ---- verify ----
    auto* s_ver = app.add_subcommand("verify", "batch property checks; exit 1 on any failure");
    std::string ver_suite = "all", ver_anchor = "-2,0";
    unsigned ver_threads = 0;
    s_ver->add_option("suite", ver_suite,
                      "all | chain-identity | transversality | bound-order | "
                      "inessential-no-deletion | q-bound | density-trend");
    s_ver->add_option("--anchor", ver_anchor, "density-trend anchor RE,IM");
    s_ver->add_option("--threads", ver_threads, "worker cap (0 = hardware)");
    s_ver->callback([&] {
        const Complex anchor = parse_complex(ver_anchor);
        std::vector<CheckRow> rows;
        auto want = [&](const char* n) { return ver_suite == "all" || ver_suite == n; };
        if (want("chain-identity"))
            rows.push_back(check_chain_identity());
        if (want("transversality"))
            rows.push_back(check_transversality());
        if (want("bound-order"))
            rows.push_back(check_bound_order());
        if (want("inessential-no-deletion"))
            rows.push_back(check_inessential_no_deletion());
        if (want("q-bound"))
            rows.push_back(check_q_bound());
        if (want("density-trend"))
            rows.push_back(check_density_trend(anchor, ver_threads));
        if (rows.empty())
            throw ScenarioError("unknown verify suite '" + ver_suite + "'");
        bool all_ok = true;
        for (const auto& r : rows) {
            std::printf("%-26s %s  %s\n", r.name.c_str(), r.ok ? "PASS" : "FAIL",
                        r.detail.c_str());
            all_ok = all_ok && r.ok;
        }
        if (!all_ok)
            throw VerifyFail{};
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const StartupAbort& e) {
        std::cerr << "startup failed: " << e.reason << '\n';
        return 4;
    } catch (const VerifyFail&) {
        return 1;
    } catch (const InvalidConstants& e) {
        std::cerr << "constants: " << e.what() << '\n';
        return 5;
    } catch (const ScenarioError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
