#pragma once

#include "celab/dynamics.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace celab {

// Escape test for a single parameter by plain iteration, strict inequality on
// the modulus exactly as the orbit record applies it. `steps` is the escape
// step, or n_max when undecided.
struct MembershipResult {
    bool escaped = false;
    std::size_t steps = 0;
};

MembershipResult membership_sample(int d, Complex c, std::size_t n_max);

#ifdef CELAB_EXTENDED_PRECISION
// same loop in 50-digit floating point, for squares smaller than double can resolve
MembershipResult membership_sample_extended(int d, Complex c, std::size_t n_max);
#endif

// picks the kernel by scale: below 1e-13 doubles cannot separate the samples;
// throws PrecisionExhausted if no extended kernel was built
MembershipResult membership_sample_auto(int d, Complex c, std::size_t n_max, double scale);

struct WilsonInterval {
    double low = 0.0;
    double high = 0.0;
    double halfwidth = 0.0;
};

// 95% score interval (z = 1.96) for x successes out of n
WilsonInterval wilson_interval(std::size_t x, std::size_t n);

enum class SampleLayout : std::uint8_t { Grid, Stratified };

struct DensityEstimate {
    double epsilon = 0.0;
    std::size_t n_samples = 0;
    std::size_t n_escaped = 0;
    std::size_t n_max = 0;
    double density = 0.0;
    double wilson_low = 0.0;
    double wilson_high = 0.0;
    double wilson_halfwidth = 0.0;
};

// escape density over the square Q(c0, epsilon) from a grid x grid sample set
// (cell centers; Stratified jitters each point inside its cell via the
// counter RNG, so results do not depend on the thread count)
DensityEstimate density_at_scale(int d, Complex c0, double epsilon, int grid,
                                 std::size_t n_max, SampleLayout layout,
                                 std::uint64_t seed, unsigned threads = 0);

// densities at epsilon_k = eps0 * shrink^{-k}, n_max_k = n_base * 2^k, k < k_count
std::vector<DensityEstimate> scale_sweep(int d, Complex c0, double eps0, double shrink,
                                         int k_count, int grid, std::size_t n_base,
                                         SampleLayout layout, std::uint64_t seed,
                                         unsigned threads = 0);

// recurrence envelope of an anchor orbit: the smallest exponent alpha >= 0 with
// |xi_n| >= K e^{-alpha n} for all n, normalized to K <= 1
struct RecurrenceFit {
    double alpha = 0.0;
    double K = 1.0;
};

RecurrenceFit initial_recurrence_fit(const OrbitRecord& orbit);

// expansion along orbit segments that avoid the critical disc D(0, delta):
// gamma_H = min_n (pooled min of log|Df^n| over length-n windows)/n, C_U = 1
struct OutsideExpansion {
    double C_U = 1.0;
    double gamma_H = 0.0;
    std::size_t n_segments = 0;
};

OutsideExpansion outside_expansion_estimate(const OrbitRecord& orbit, double delta, std::size_t n_pool);

void write_density_csv(std::ostream& os, const std::vector<DensityEstimate>& rows);

// escape-time image over a width x width square, P5 PGM, 8-bit:
// value = min(255, escape step), 0 for parameters that never escaped
void render_escape_pgm(std::ostream& os, int d, Complex center, double width,
                       int px, std::size_t n_max, unsigned threads = 0);

} // namespace celab
