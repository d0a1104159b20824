#include "celab/density.hpp"

#include "celab/errors.hpp"
#include "celab/format.hpp"
#include "celab/parallel.hpp"
#include "celab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#ifdef CELAB_EXTENDED_PRECISION
#include <boost/multiprecision/cpp_bin_float.hpp>
#endif

namespace celab {

namespace {

// doubles stop resolving distinct samples once the square side drops near
// |c| * 2^-52; 1e-13 leaves a safety factor of ~50 at |c| = 2
constexpr double kDoubleScaleFloor = 1e-13;

} // namespace

MembershipResult membership_sample(int d, Complex c, std::size_t n_max) {
    if (d < 2)
        throw Error("family degree must be >= 2");
    const double R = std::max(std::abs(c), std::pow(2.0, 1.0 / (d - 1)));
    const double cr = c.real(), ci = c.imag();
    double zr = 0.0, zi = 0.0;
    for (std::size_t k = 1; k <= n_max; ++k) {
        // z <- z^d + c, powers by repeated multiplication like the orbit kernel;
        // the modulus compare must match the orbit record bit for bit (|xi_1| = R
        // is an exact tie whenever |c| sets the radius)
        double wr = zr, wi = zi;
        for (int i = 1; i < d; ++i) {
            double t = wr * zr - wi * zi;
            wi = wr * zi + wi * zr;
            wr = t;
        }
        zr = wr + cr;
        zi = wi + ci;
        if (std::hypot(zr, zi) > R)
            return MembershipResult{true, k};
    }
    return MembershipResult{false, n_max};
}

#ifdef CELAB_EXTENDED_PRECISION

MembershipResult membership_sample_extended(int d, Complex c, std::size_t n_max) {
    if (d < 2)
        throw Error("family degree must be >= 2");
    using mpf = boost::multiprecision::cpp_bin_float_50;
    const mpf cr(c.real()), ci(c.imag());
    // compare squared moduli; keeping R^2 = max(|c|^2, 2^{2/(d-1)}) makes the
    // |xi_1| = |c| tie exact instead of hinging on sqrt rounding
    const mpf R2 = (std::max)(cr * cr + ci * ci, pow(mpf(2), mpf(2) / (d - 1)));
    mpf zr(0), zi(0);
    for (std::size_t k = 1; k <= n_max; ++k) {
        mpf wr = zr, wi = zi;
        for (int i = 1; i < d; ++i) {
            mpf t = wr * zr - wi * zi;
            wi = wr * zi + wi * zr;
            wr = t;
        }
        zr = wr + cr;
        zi = wi + ci;
        if (zr * zr + zi * zi > R2)
            return MembershipResult{true, k};
    }
    return MembershipResult{false, n_max};
}

#endif

MembershipResult membership_sample_auto(int d, Complex c, std::size_t n_max, double scale) {
    if (scale >= kDoubleScaleFloor)
        return membership_sample(d, c, n_max);
#ifdef CELAB_EXTENDED_PRECISION
    return membership_sample_extended(d, c, n_max);
#else
    throw PrecisionExhausted("scale below the double-precision sample resolution and no "
                             "extended kernel was built");
#endif
}

WilsonInterval wilson_interval(std::size_t x, std::size_t n) {
    if (n == 0)
        throw Error("interval requires at least one sample");
    if (x > n)
        throw Error("successes exceed the sample count");
    const double z = 1.96;
    const double nd = static_cast<double>(n);
    const double p = static_cast<double>(x) / nd;
    const double denom = 1.0 + z * z / nd;
    const double center = (p + z * z / (2.0 * nd)) / denom;
    const double hw = z * std::sqrt(p * (1.0 - p) / nd + z * z / (4.0 * nd * nd)) / denom;
    WilsonInterval w;
    w.halfwidth = hw;
    w.low = std::max(0.0, center - hw);
    w.high = std::min(1.0, center + hw);
    return w;
}

DensityEstimate density_at_scale(int d, Complex c0, double epsilon, int grid,
                                 std::size_t n_max, SampleLayout layout,
                                 std::uint64_t seed, unsigned threads) {
    if (grid < 1)
        throw Error("sample grid must be at least 1x1");
    if (!(epsilon > 0.0))
        throw Error("scale must be positive");
    const std::size_t n = static_cast<std::size_t>(grid) * static_cast<std::size_t>(grid);
    const double g = static_cast<double>(grid);

    // probe the kernel choice once so an impossible scale fails before spawning work
    membership_sample_auto(d, c0, 0, epsilon);

    std::vector<std::uint8_t> escaped(n, 0);
    parallel_for(n, threads, [&](std::size_t idx) {
        const std::size_t col = idx % static_cast<std::size_t>(grid);
        const std::size_t row = idx / static_cast<std::size_t>(grid);
        double jx = 0.0, jy = 0.0;
        if (layout == SampleLayout::Stratified) {
            jx = u01(seed, 2 * idx) - 0.5;
            jy = u01(seed, 2 * idx + 1) - 0.5;
        }
        const double re = c0.real() + ((static_cast<double>(col) + 0.5 + jx) / g - 0.5) * epsilon;
        const double im = c0.imag() + ((static_cast<double>(row) + 0.5 + jy) / g - 0.5) * epsilon;
        escaped[idx] = membership_sample_auto(d, Complex{re, im}, n_max, epsilon).escaped ? 1 : 0;
    });

    std::size_t x = 0;
    for (std::uint8_t e : escaped)
        x += e;

    DensityEstimate est;
    est.epsilon = epsilon;
    est.n_samples = n;
    est.n_escaped = x;
    est.n_max = n_max;
    est.density = static_cast<double>(x) / static_cast<double>(n);
    auto w = wilson_interval(x, n);
    est.wilson_low = w.low;
    est.wilson_high = w.high;
    est.wilson_halfwidth = w.halfwidth;
    return est;
}

std::vector<DensityEstimate> scale_sweep(int d, Complex c0, double eps0, double shrink,
                                         int k_count, int grid, std::size_t n_base,
                                         SampleLayout layout, std::uint64_t seed,
                                         unsigned threads) {
    if (!(shrink > 1.0))
        throw Error("shrink factor must exceed 1");
    if (k_count < 1)
        throw Error("sweep needs at least one scale");
    std::vector<DensityEstimate> rows;
    rows.reserve(static_cast<std::size_t>(k_count));
    for (int k = 0; k < k_count; ++k) {
        const double eps_k = eps0 * std::pow(shrink, -static_cast<double>(k));
        const std::size_t n_max_k = n_base << static_cast<unsigned>(k);
        rows.push_back(density_at_scale(d, c0, eps_k, grid, n_max_k, layout,
                                        seed + static_cast<std::uint64_t>(k), threads));
    }
    return rows;
}

RecurrenceFit initial_recurrence_fit(const OrbitRecord& orbit) {
    const std::size_t last = orbit.last_index();
    if (last < 1)
        throw Error("recurrence fit needs at least one orbit point");
    double max_s = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= last; ++k) {
        const double a = std::abs(orbit.points[k]);
        if (a == 0.0)
            return RecurrenceFit{std::numeric_limits<double>::infinity(), 0.0};
        max_s = std::max(max_s, -std::log(a) / static_cast<double>(k));
    }
    RecurrenceFit fit;
    fit.alpha = std::max(0.0, max_s);
    double min_k = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= last; ++k)
        min_k = std::min(min_k, std::abs(orbit.points[k]) *
                                    std::exp(fit.alpha * static_cast<double>(k)));
    fit.K = std::min(1.0, min_k);
    return fit;
}

OutsideExpansion outside_expansion_estimate(const OrbitRecord& orbit, double delta,
                                            std::size_t n_pool) {
    if (!(delta > 0.0))
        throw Error("critical disc radius must be positive");
    const std::size_t last = orbit.last_index();
    OutsideExpansion oe;

    // maximal index runs with |xi_j| > delta
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    std::size_t j = 1;
    while (j <= last) {
        if (std::abs(orbit.points[j]) > delta) {
            std::size_t s = j;
            while (j + 1 <= last && std::abs(orbit.points[j + 1]) > delta)
                ++j;
            runs.emplace_back(s, j);
        }
        ++j;
    }
    oe.n_segments = runs.size();
    if (runs.empty() || n_pool == 0)
        return oe;

    double gamma_h = std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t n = 1; n <= n_pool; ++n) {
        double g_n = std::numeric_limits<double>::infinity();
        for (const auto& [s, e] : runs) {
            if (e - s + 1 < n)
                continue;
            for (std::size_t start = s; start + n - 1 <= e; ++start)
                g_n = std::min(g_n, orbit.log_deriv[start + n - 1] - orbit.log_deriv[start - 1]);
        }
        if (std::isfinite(g_n)) {
            any = true;
            gamma_h = std::min(gamma_h, g_n / static_cast<double>(n));
        }
    }
    oe.gamma_H = any ? gamma_h : 0.0;
    return oe;
}

void write_density_csv(std::ostream& os, const std::vector<DensityEstimate>& rows) {
    os << "epsilon,n_samples,n_escaped,n_max,density,wilson_low,wilson_high,wilson_halfwidth\n";
    for (const auto& r : rows) {
        os << fmt_double(r.epsilon) << ',' << r.n_samples << ',' << r.n_escaped << ','
           << r.n_max << ',' << fmt_double(r.density) << ',' << fmt_double(r.wilson_low)
           << ',' << fmt_double(r.wilson_high) << ',' << fmt_double(r.wilson_halfwidth)
           << '\n';
    }
}

void render_escape_pgm(std::ostream& os, int d, Complex center, double width,
                       int px, std::size_t n_max, unsigned threads) {
    if (px < 1)
        throw Error("image needs at least one pixel");
    if (!(width > 0.0))
        throw Error("image width must be positive");
    const std::size_t n = static_cast<std::size_t>(px) * static_cast<std::size_t>(px);
    const double p = static_cast<double>(px);
    std::vector<unsigned char> img(n, 0);
    parallel_for(n, threads, [&](std::size_t idx) {
        const std::size_t col = idx % static_cast<std::size_t>(px);
        const std::size_t row = idx / static_cast<std::size_t>(px); // row 0 on top
        const double re = center.real() + ((static_cast<double>(col) + 0.5) / p - 0.5) * width;
        const double im = center.imag() + (0.5 - (static_cast<double>(row) + 0.5) / p) * width;
        auto m = membership_sample(d, Complex{re, im}, n_max);
        img[idx] = m.escaped ? static_cast<unsigned char>(std::min<std::size_t>(255, m.steps))
                             : static_cast<unsigned char>(0);
    });
    os << "P5\n" << px << ' ' << px << "\n255\n";
    os.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
}

} // namespace celab
