#include "celab/scenario.hpp"

#include "celab/errors.hpp"
#include "celab/format.hpp"

#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace celab {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    if (v.empty())
        throw ScenarioError("scenario value for '" + key + "' is empty");
    errno = 0;
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size() || errno == ERANGE)
        throw ScenarioError("scenario value for '" + key + "' is not a number: '" + v + "'");
    return x;
}

long long parse_int(const std::string& key, const std::string& v, long long lo, long long hi) {
    if (v.empty())
        throw ScenarioError("scenario value for '" + key + "' is empty");
    errno = 0;
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (end != v.c_str() + v.size() || errno == ERANGE)
        throw ScenarioError("scenario value for '" + key + "' is not an integer: '" + v + "'");
    if (x < lo || x > hi)
        throw ScenarioError("scenario value for '" + key + "' is outside [" + std::to_string(lo) +
                    ", " + std::to_string(hi) + "]");
    return x;
}

} // namespace

ScenarioConfig parse_scenario(std::istream& is, const std::string& name_hint) {
    ScenarioConfig cfg;
    cfg.name = name_hint;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        const auto t = trim(line);
        if (t.empty())
            continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ScenarioError("scenario line " + std::to_string(lineno) + " has no '='");
        const auto key = trim(t.substr(0, eq));
        const auto val = trim(t.substr(eq + 1));
        if (key.empty())
            throw ScenarioError("scenario line " + std::to_string(lineno) + " has an empty key");

        if (key == "name") {
            if (val.empty())
                throw ScenarioError("scenario value for 'name' is empty");
            cfg.name = val;
        } else if (key == "d") {
            cfg.d = static_cast<int>(parse_int(key, val, 2, 64));
        } else if (key == "c0_re") {
            cfg.c0 = Complex{parse_double(key, val), cfg.c0.imag()};
        } else if (key == "c0_im") {
            cfg.c0 = Complex{cfg.c0.real(), parse_double(key, val)};
        } else if (key == "epsilon") {
            cfg.epsilon = parse_double(key, val);
        } else if (key == "Delta") {
            cfg.nbhd.Delta = parse_double(key, val);
        } else if (key == "DeltaPrime") {
            cfg.nbhd.DeltaPrime = parse_double(key, val);
        } else if (key == "beta") {
            cfg.nbhd.beta = parse_double(key, val);
        } else if (key == "epsilon1") {
            cfg.nbhd.epsilon1 = parse_double(key, val);
        } else if (key == "n_max") {
            cfg.n_max = static_cast<std::size_t>(parse_int(key, val, 1, 1000000000000LL));
        } else if (key == "sample_grid") {
            cfg.sample_grid = static_cast<int>(parse_int(key, val, 1, 64));
        } else if (key == "depth_limit") {
            cfg.depth_limit = static_cast<int>(parse_int(key, val, 1, 4096));
        } else if (key == "max_leaves") {
            cfg.max_leaves = static_cast<std::size_t>(parse_int(key, val, 1, 1000000000000LL));
        } else if (key == "C_tilde") {
            cfg.C_tilde = parse_double(key, val);
        } else if (key == "C1") {
            cfg.C1 = parse_double(key, val);
        } else if (key == "gamma_H") {
            cfg.gamma_H = parse_double(key, val);
        } else if (key == "kappa_prime") {
            cfg.kappa_prime = parse_double(key, val);
        } else if (key == "alpha") {
            cfg.alpha = parse_double(key, val);
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(
                parse_int(key, val, 0, 9223372036854775807LL));
        } else {
            throw ScenarioError("unknown scenario key '" + key + "'");
        }
    }
    return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw ScenarioError("cannot open scenario file '" + path + "'");
    return parse_scenario(f, std::filesystem::path(path).stem().string());
}

void write_scenario(std::ostream& os, const ScenarioConfig& cfg) {
    os << "name = " << cfg.name << '\n';
    os << "d = " << cfg.d << '\n';
    os << "c0_re = " << fmt_double(cfg.c0.real()) << '\n';
    os << "c0_im = " << fmt_double(cfg.c0.imag()) << '\n';
    os << "epsilon = " << fmt_double(cfg.epsilon) << '\n';
    os << "Delta = " << fmt_double(cfg.nbhd.Delta) << '\n';
    os << "DeltaPrime = " << fmt_double(cfg.nbhd.DeltaPrime) << '\n';
    os << "beta = " << fmt_double(cfg.nbhd.beta) << '\n';
    os << "epsilon1 = " << fmt_double(cfg.nbhd.epsilon1) << '\n';
    os << "n_max = " << cfg.n_max << '\n';
    os << "sample_grid = " << cfg.sample_grid << '\n';
    os << "depth_limit = " << cfg.depth_limit << '\n';
    os << "max_leaves = " << cfg.max_leaves << '\n';
    os << "C_tilde = " << fmt_double(cfg.C_tilde) << '\n';
    os << "C1 = " << fmt_double(cfg.C1) << '\n';
    os << "gamma_H = " << fmt_double(cfg.gamma_H) << '\n';
    os << "kappa_prime = " << fmt_double(cfg.kappa_prime) << '\n';
    os << "alpha = " << fmt_double(cfg.alpha) << '\n';
    os << "seed = " << cfg.seed << '\n';
}

} // namespace celab
