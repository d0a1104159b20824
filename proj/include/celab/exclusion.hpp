#pragma once

#include "celab/dynamics.hpp"
#include "celab/partition.hpp"
#include "celab/returns.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace celab {

// Constants derived from the measured expansion data of an anchor parameter.
// All downstream thresholds (deletion rate, escape-length cap, promotion
// target) are functions of these.
struct RunConstants {
    int d = 2;
    double gamma_under = 0.0; // lower expansion envelope at the first return
    double gamma_H = 0.0;     // expansion rate outside the critical neighborhood
    double gamma_bar = 0.0;   // upper expansion envelope
    double alpha_nu0 = 0.0;   // measured recurrence exponent at the first return
    double kappa = 0.0;       // 1 - gamma_under / (4 gamma_bar)
    double kappa_prime = 0.0; // default (1 + kappa)/2, must lie in (kappa, 1)
    double kappa_tilde = 0.0; // (1 + kappa_prime)/2
    double gamma_I = 0.0;     // intermediate rate fed to the deletion estimates
    double kappa_hat = 0.0;   // 1 - gamma_I / (4 gamma_bar)
    double gamma_C = 0.0;     // min(gamma_I / (12 d), gamma_H)
    double M_tilde = 0.0;     // 16 d gamma_bar / gamma_C^2: escape-length factor
    double alpha_cap = 0.0;   // gamma_I * min(1/(16 d), gamma_C^3/(1000 d gamma_bar^2))
    double iota = 0.0;        // 10 M_tilde ((3+kappa_hat)/(1-kappa_hat)) alpha_nu0
    double C_tilde = 0.05;    // promotion target: alpha_tilde <= C_tilde * gamma_under
    double C1 = 1.1;          // derivative-comparability factor for the initial deletion
    bool feasible = false;    // alpha_nu0 <= alpha_cap and iota <= 1
};

// throws InvalidConstants naming the violated inequality on nonsensical
// inputs; the feasibility conditions (alpha cap, iota <= 1) only set
// `feasible` so that measured-but-infeasible runs can still be reported
RunConstants derive_constants(int d, double gamma_under, double gamma_H, double gamma_bar,
                              double alpha_nu0, double kappa_prime = 0.0,
                              double C_tilde = 0.05, double C1 = 1.1);

// throws InvalidConstants naming the failed condition when !rc.feasible
void check_feasibility(const RunConstants& rc);

// ---- startup classification of a parameter square ----

enum class StartupKind : std::uint8_t {
    TrivialEscape,   // a sample escaped before anything else happened
    LargeScale,      // the image grew to diameter >= S before returning
    EssentialReturn, // first return to U is an essential set-return
    Failed,          // straddle or budget exhaustion: no decisive event
};

const char* to_string(StartupKind k);

struct StartupResult {
    StartupKind kind = StartupKind::Failed;
    std::size_t N = 0; // decision time
    double diam = 0.0;
    double dist = 0.0;
    int r = 0;                 // return depth index (EssentialReturn only)
    double comparability = 0.0; // max |L_N(corner) - L_N(center)| diagnostic
    double distortion = 0.0;    // max corner-vs-center orbit distortion sum
    std::string reason;        // Failed only
};

StartupResult startup(const FamilyParams& fam, Complex c0, double epsilon,
                      const CriticalNeighborhoods& nbhd, std::size_t n_cap, int sample_grid);

// ---- promotion arithmetic (pure) ----

// alpha bound transported to the next essential return:
//   alpha_tilde(nu') = kappa_prime (nu/nu') sup_alpha(nu)
double promote_alpha_tilde(double sup_alpha_nu, std::size_t nu, std::size_t nu_next, double kappa_prime);

// expansion floor transported to the next essential return:
//   gamma_under(nu') = (gamma_under(nu) + gamma_H ell/nu) (nu/(nu'-1))
double promote_gamma_under(double gamma_under_nu, double gamma_H, std::size_t nu,
                           std::size_t nu_next, double ell);

bool promotion_done(double alpha_tilde, double gamma_under, double C_tilde);

// expansion floor at the first essential return, from the anchor orbit:
//   gamma_{N-1}(A) - (d-1) alpha_N(A) - log d / N
double initial_gamma_under(const OrbitRecord& anchor, std::size_t N);

// fraction bound for alpha-deletions at an essential return of depth r
double deletion_fraction_bound(double kappa_prime, double kappa, int r);

// ---- initial deletion (derivative comparability against the anchor) ----

struct InitialDeletion {
    std::vector<std::int32_t> kept;
    std::vector<std::int32_t> deleted;
    std::vector<std::int32_t> escaped;
    double kept_area = 0.0;
    double deleted_area = 0.0;
    double escaped_area = 0.0;
};

// keeps a leaf iff max_{1<=j<=N} |L_j(center) - L_j(anchor)| <= log C1;
// leaves whose center escapes before N are set Escaped instead
InitialDeletion initial_deletion(PartitionTree& tree, const std::vector<std::int32_t>& leaves,
                                 const OrbitRecord& anchor, int d, std::size_t N, double C1);

// ---- full run ----

struct ScenarioConfig {
    int d = 2;
    Complex c0;
    double epsilon = 1e-6;
    CriticalNeighborhoods nbhd;
    std::size_t n_max = 20000;
    int sample_grid = 2;
    int depth_limit = 48;
    std::size_t max_leaves = 20000;
    double C_tilde = 0.05;
    double C1 = 1.1;
    double gamma_H = 0.0;      // <= 0: fall back to the measured initial floor
    double kappa_prime = 0.0;  // <= 0: default (1 + kappa)/2
    double alpha = 0.0;        // > 0: recurrence override; infeasible constants then abort
    std::uint64_t seed = 1;
    std::string name = "unnamed";
};

struct LedgerRow {
    std::size_t step = 0;
    std::int32_t node = 0;
    std::size_t time = 0;
    std::string event; // startup, essential-return, inessential-return, initial-deletion,
                       // deleted-alpha, escaped, promoted, undetermined, anomalous
    int r = 0;              // 0: n/a
    std::size_t p = 0;      // bound period, 0: n/a
    double ell = -1.0;      // free time, <0: n/a
    double q = -1.0;        // escape length, <0: n/a
    double alpha_tilde = std::numeric_limits<double>::quiet_NaN();
    double sup_alpha = std::numeric_limits<double>::quiet_NaN();
    double gamma_under = std::numeric_limits<double>::quiet_NaN();
    double area = 0.0;
};

void write_ledger_csv(std::ostream& os, const std::vector<LedgerRow>& rows);

// per essential-return deletion statistics (drives the rate checks)
struct DeletionRecord {
    std::size_t nu = 0;
    int r = 0;
    double exposed_area = 0.0;
    double deleted_area = 0.0;
};

// escape-length records (drives the q <= M_tilde r checks)
struct QRecord {
    std::int32_t node = 0;
    std::size_t nu = 0; // last essential return
    int r = 0;
    std::size_t q = 0; // escape time - nu
};

struct RunSummary {
    std::string scenario;
    std::string startup_kind;
    std::size_t N = 0;
    double delta0 = 0.0; // initial-deletion fraction of the square
    double delta1 = 0.0; // alpha-deletion fraction of the square
    double delta2 = 0.0; // combined exclusion: 1 - (1-delta0)(1-delta1)
    double escaped_fraction = 0.0; // area share of final leaves that escaped the family
    std::size_t n_initial_leaves = 0;
    std::size_t n_final_leaves = 0;
    std::size_t n_active = 0;
    std::size_t n_deleted_alpha = 0;
    std::size_t n_escaped = 0;
    std::size_t n_undetermined = 0;
    std::size_t n_anomalous = 0;
    std::size_t n_essential_events = 0;
    std::size_t n_inessential_events = 0;
    std::size_t deletions_at_inessential = 0; // structurally zero
    int max_promotion_j = 0;
    std::size_t n_promoted = 0;
    std::size_t n_q_records = 0;
    double max_q_over_mr = 0.0;
};

struct RunResult {
    StartupResult startup;
    RunConstants constants;
    std::vector<LedgerRow> ledger;
    std::vector<DeletionRecord> deletions;
    std::vector<QRecord> q_records;
    RunSummary summary;
    PartitionTree tree{Complex{0.0, 0.0}, 0.0};
};

// set-level bound period of a return at time nu: largest p such that for all
// ordered sample pairs (a, b) and 1 <= i <= p,
//   |xi_{nu+i}(a) - xi_i(b)| <= e^{-beta i} |xi_i(b)|
BoundPeriod set_bound_period(SquareTracker& trk, std::size_t nu, double beta, std::size_t j_max);

RunResult run_exclusion(const ScenarioConfig& cfg);

std::string summary_to_json(const RunSummary& s, const RunConstants& rc);

} // namespace celab
