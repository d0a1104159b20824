#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "celab/density.hpp"
#include "celab/dynamics.hpp"
#include "celab/exclusion.hpp"
#include "celab/returns.hpp"
#include "celab/scenario.hpp"

#include <sstream>

namespace py = pybind11;
using namespace celab;

namespace {

py::dict orbit_dict(const OrbitRecord& orb) {
    py::dict d;
    d["d"] = orb.d;
    d["points"] = orb.points;
    d["log_deriv"] = orb.log_deriv;
    d["alpha"] = orb.alpha;
    d["gamma"] = orb.gamma;
    d["escape_index"] =
        orb.escape_index ? py::object(py::int_(*orb.escape_index)) : py::object(py::none());
    return d;
}

py::dict constants_dict(const RunConstants& rc) {
    py::dict d;
    d["d"] = rc.d;
    d["gamma_under"] = rc.gamma_under;
    d["gamma_H"] = rc.gamma_H;
    d["gamma_bar"] = rc.gamma_bar;
    d["alpha_nu0"] = rc.alpha_nu0;
    d["kappa"] = rc.kappa;
    d["kappa_prime"] = rc.kappa_prime;
    d["kappa_tilde"] = rc.kappa_tilde;
    d["gamma_I"] = rc.gamma_I;
    d["kappa_hat"] = rc.kappa_hat;
    d["gamma_C"] = rc.gamma_C;
    d["M_tilde"] = rc.M_tilde;
    d["alpha_cap"] = rc.alpha_cap;
    d["iota"] = rc.iota;
    d["C_tilde"] = rc.C_tilde;
    d["C1"] = rc.C1;
    d["feasible"] = rc.feasible;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "critical-orbit statistics, return timelines, parameter-square "
              "exclusion runs, and escape-density estimation for z^d + c";

    m.def(
        "orbit",
        [](int d, Complex c, std::size_t n_max) {
            return orbit_dict(critical_orbit(make_family(d, c), n_max));
        },
        py::arg("d"), py::arg("c"), py::arg("n_max"),
        "critical orbit xi_k = f_c^k(0) with log-derivative, alpha and gamma profiles");

    m.def(
        "chain_residual",
        [](int d, Complex c, std::size_t n) {
            auto orb = critical_orbit(make_family(d, c), n);
            return chain_identity_residual(orb, std::min(n, orb.last_index()));
        },
        py::arg("d"), py::arg("c"), py::arg("n"),
        "defect of gamma_n n = gamma_{n-1}(n-1) + log d - alpha_n n (d-1)");

    m.def(
        "ce_window",
        [](int d, Complex c, double gamma, std::size_t n_lo, std::size_t n_hi) {
            auto orb = critical_orbit(make_family(d, c), n_hi);
            return ce_window_test(orb, gamma, n_lo, n_hi);
        },
        py::arg("d"), py::arg("c"), py::arg("gamma"), py::arg("n_lo"), py::arg("n_hi"),
        "true iff log|Df_c^k(c)| >= gamma k throughout the window");

    m.def(
        "transversality",
        [](int d, Complex c, std::size_t n_max, double tol) {
            auto res = transversality_ratio(make_family(d, c), n_max, tol);
            return py::make_tuple(res.limit, res.n_used, res.converged);
        },
        py::arg("d"), py::arg("c"), py::arg("n_max") = 2000, py::arg("tol") = 1e-12,
        "limit of xi'_n / Df^{n-1} as (value, n_used, converged)");

    m.def(
        "timeline_csv",
        [](int d, Complex c, std::size_t n_max, double Delta, double DeltaPrime, double beta,
           double epsilon1) {
            CriticalNeighborhoods nb;
            nb.Delta = Delta;
            nb.DeltaPrime = DeltaPrime;
            nb.beta = beta;
            nb.epsilon1 = epsilon1;
            nb.validate();
            auto orb = critical_orbit(make_family(d, c), n_max);
            auto evs = timeline(orb, nb, std::min(n_max, orb.last_index()));
            std::ostringstream os;
            write_timeline_csv(os, evs);
            return os.str();
        },
        py::arg("d"), py::arg("c"), py::arg("n_max"), py::arg("Delta") = 3.0,
        py::arg("DeltaPrime") = 1.2, py::arg("beta") = 0.01, py::arg("epsilon1") = 0.0456,
        "free-return timeline of the critical orbit as CSV text");

    m.def(
        "run_scenario",
        [](const std::string& text) {
            std::istringstream is(text);
            ScenarioConfig cfg = parse_scenario(is, "inline");
            RunResult res = run_exclusion(cfg);
            return summary_to_json(res.summary, res.constants);
        },
        py::arg("text"),
        "parse key=value scenario text, run the exclusion driver, return summary JSON");

    m.def(
        "membership",
        [](int d, Complex c, std::size_t n_max) {
            auto s = membership_sample(d, c, n_max);
            return py::make_tuple(s.escaped, s.steps);
        },
        py::arg("d"), py::arg("c"), py::arg("n_max"),
        "(escaped, steps) for the critical orbit of c under the strict escape test");

    m.def(
        "density",
        [](int d, Complex c0, double epsilon, int grid, std::size_t n_max,
           const std::string& layout, std::uint64_t seed, unsigned threads) {
            SampleLayout lay = layout == "stratified" ? SampleLayout::Stratified
                                                      : SampleLayout::Grid;
            auto row = density_at_scale(d, c0, epsilon, grid, n_max, lay, seed, threads);
            py::dict out;
            out["epsilon"] = row.epsilon;
            out["n_samples"] = row.n_samples;
            out["n_escaped"] = row.n_escaped;
            out["n_max"] = row.n_max;
            out["density"] = row.density;
            out["wilson_low"] = row.wilson_low;
            out["wilson_high"] = row.wilson_high;
            return out;
        },
        py::arg("d"), py::arg("c0"), py::arg("epsilon"), py::arg("grid") = 40,
        py::arg("n_max") = 1000, py::arg("layout") = "grid", py::arg("seed") = 1,
        py::arg("threads") = 0,
        "escape-density of the epsilon-square at c0 with a Wilson interval");

    m.def(
        "constants",
        [](int d, double gamma_under, double gamma_H, double gamma_bar, double alpha_nu0,
           double kappa_prime, double C_tilde, double C1) {
            return constants_dict(derive_constants(d, gamma_under, gamma_H, gamma_bar,
                                                   alpha_nu0, kappa_prime, C_tilde, C1));
        },
        py::arg("d"), py::arg("gamma_under"), py::arg("gamma_H"), py::arg("gamma_bar"),
        py::arg("alpha_nu0"), py::arg("kappa_prime") = 0.0, py::arg("C_tilde") = 0.05,
        py::arg("C1") = 1.1,
        "the full constant chain kappa..iota derived from measured exponents");
}
