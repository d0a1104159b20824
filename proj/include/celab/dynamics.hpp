#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

namespace celab {

using Complex = std::complex<double>;

// Unicritical family f_c(z) = z^d + c with critical point 0.
struct FamilyParams {
    int d = 2;
    Complex c{0.0, 0.0};
    double escape_radius = 2.0;
};

// escape_radius defaults to max(|c|, 2^(1/(d-1))); once |z| exceeds it
// (strictly), |f_c^n(z)| increases monotonically to infinity.
FamilyParams make_family(int d, Complex c);
FamilyParams make_family(int d, Complex c, double escape_radius);

// One application of f_c; z^d by repeated multiplication.
Complex step(Complex z, const FamilyParams& fam);

// Critical orbit xi_k = f_c^k(0) together with its exponent profiles.
//
//   log_deriv[k] = L_k = log|Df_c^k(c)|, accumulated in log space as
//                  L_k = L_{k-1} + log d + (d-1) log|xi_k|   (L_0 = 0)
//   gamma[k]     = L_{k-1} / k, the derivative exponent entering step k
//                  (gamma_1 = 0); -inf once some xi_j = 0 (superattracting
//                  anchors keep the sentinel)
//   alpha[k]     = -log|xi_{k-1}| / k for k >= 2 and alpha_1 = log d/(d-1),
//                  so gamma_n n = gamma_{n-1}(n-1) + log d - alpha_n n (d-1)
//                  holds exactly at every n >= 1; +inf if xi_{k-1} = 0
//
// The orbit stops at the first k with |xi_k| > escape_radius (strict, so the
// Chebyshev anchor c = -2 with |xi_k| = 2 never counts as escaped); that
// escaping point is the last one recorded.
struct OrbitRecord {
    int d = 2;
    std::vector<Complex> points; // xi_0 .. xi_len
    std::vector<double> log_deriv;
    std::vector<double> alpha; // alpha[0] = NaN
    std::vector<double> gamma; // gamma[0] = NaN

    std::optional<std::size_t> escape_index;

    std::size_t last_index() const { return points.size() - 1; }
    bool escaped() const { return escape_index.has_value(); }
    bool alive_at(std::size_t k) const {
        return k < points.size() && (!escape_index || k <= *escape_index);
    }
};

// throws NonFiniteOrbit if iteration overflows before the escape test fires
OrbitRecord critical_orbit(const FamilyParams& fam, std::size_t n_max);

// Extends an existing record up to n_max (no-op if escaped or long enough).
void extend_orbit(OrbitRecord& orbit, const FamilyParams& fam, std::size_t n_max);

// | gamma_n n - gamma_{n-1}(n-1) - log d + alpha_n n (d-1) |, the defect of
// the one-step derivative chain identity. Zero up to rounding by construction.
double chain_identity_residual(const OrbitRecord& orbit, std::size_t n);

// true iff L_k >= gamma * k for every k in [n_lo, n_hi].
// throws WindowBeyondOrbit if n_hi exceeds the recorded orbit.
bool ce_window_test(const OrbitRecord& orbit, double gamma, std::size_t n_lo, std::size_t n_hi);

struct TransversalityResult {
    Complex limit;
    std::size_t n_used = 0;
    bool converged = false;
};

// Partial limits rho_{n+1} = rho_n + 1/Df_c^n(c), rho_1 = 1. The reciprocal
// derivative is carried in (log magnitude, phase) form, never as a raw
// product. Converged means |rho_{n+1} - rho_n| < tol |rho_n| held for 10
// consecutive steps. throws DerivativeVanished if some xi_k = 0.
TransversalityResult transversality_ratio(const FamilyParams& fam, std::size_t n_max, double tol);

// Upsilon_n(a, b) = sum_{j=1}^{n-1} |xi_j(a) - xi_j(b)| / |xi_j(b)| where both
// orbits use fam_b.d; fam_b.c is b. throws OrbitHitsCritical if xi_j(b) = 0.
double distortion_sum(Complex a, const FamilyParams& fam_b, std::size_t n);

struct LyapunovSummary {
    double gamma_lower;      // min of gamma_k over the tail window
    double gamma_upper;      // max of gamma_k over the tail window
    double gamma_bar_trivial; // sup log|Df_c(z)| over a grid on |z| <= 2
};

// Tail window = last ceil(tail_fraction * len) indices. Degenerate anchors
// (some xi_j = 0) report the -inf sentinel in gamma_lower.
LyapunovSummary lyapunov_summary(const OrbitRecord& orbit, int d, double tail_fraction);

} // namespace celab
