#pragma once

#include "celab/dynamics.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace celab {

// Critical neighbourhoods U = D(0, e^-Delta) inside U' = D(0, e^-DeltaPrime),
// plus the binding rate beta and the large-scale factor epsilon1 (S = eps1 * delta).
struct CriticalNeighborhoods {
    double Delta = 9.0;
    double DeltaPrime = 6.0;
    double beta = 0.01;
    double epsilon1 = 0.05;

    double delta() const;
    double delta_prime() const;
    double large_scale() const; // S

    // 0 < DeltaPrime < Delta, beta > 0, epsilon1 in (0, 1); throws Error
    void validate() const;
};

enum class ReturnKind : std::uint8_t {
    NonReturn,
    ReturnU,        // |xi_n| <= delta (closed-ball tie rule)
    PseudoReturn,   // delta < |xi_n| <= delta'
    FreeReturn,     // chained timeline event (a return into U outside bound periods)
    InessentialSet, // set-level return with diam < (1/2) dist / (log dist)^2
    EssentialSet,   // set-level return with diam >= (1/2) dist / (log dist)^2
};

const char* to_string(ReturnKind k);

ReturnKind classify_time(const OrbitRecord& orbit, const CriticalNeighborhoods& nbhd, std::size_t n);

// Largest p <= j_max with |xi_{n+j} - xi_j| <= e^{-beta j} |xi_j| for all
// 1 <= j <= p. truncated means the binding still held at j_max (orbit or
// budget ended first); p is then the measured prefix, never a guess.
struct BoundPeriod {
    std::size_t p = 0;
    bool truncated = false;
};

BoundPeriod bound_period(const OrbitRecord& orbit, std::size_t n, const CriticalNeighborhoods& nbhd, std::size_t j_max);

// r = ceil(-log dist - 1/2), so e^{-r-1/2} <= dist < e^{-r+1/2}. pre: 0 < dist < 1.
int r_index(double dist);

struct ReturnEvent {
    std::size_t n = 0;   // return time nu_j
    ReturnKind kind = ReturnKind::FreeReturn;
    int r = 0;
    std::size_t p = 0;   // bound period
    std::size_t ell = 0; // free period: nu_{j+1} = nu_j + p_j + 1 + ell_j
    double alpha_n = 0;
    double gamma_n = 0;
    bool open_ended = false; // p or ell ran into the n_max / orbit boundary
};

// Free returns into U up to n_max. Returns inside bound periods are not
// chained; pseudo-return excursions outside bound periods are folded into
// ell_j. Bound/free/return indices tile [first return, n_max].
std::vector<ReturnEvent> timeline(const OrbitRecord& orbit, const CriticalNeighborhoods& nbhd, std::size_t n_max);

// CSV columns: n,kind,r,p,ell,alpha_n,gamma_n (one header line).
void write_timeline_csv(std::ostream& os, const std::vector<ReturnEvent>& events);

struct BoundPeriodPrediction {
    double p_lower;
    double p_upper;
    double expansion_lower; // |Df^{p+1}| >= this at the end of the bound period
};

// Slack brackets (1 -+ eta) d r / (gamma + alpha + beta) and the expansion
// lower bound e^{(1-eta) r (gamma - (d-1)(alpha+beta)) / (gamma + alpha + beta)}.
BoundPeriodPrediction bound_period_prediction(int r, double gamma_p, double alpha_p1, double beta, double eta, int d);

} // namespace celab
