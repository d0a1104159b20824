#include "celab/dynamics.hpp"

#include "celab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace celab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Complex ipow(Complex z, int d) {
    Complex w = z;
    for (int i = 1; i < d; ++i)
        w *= z;
    return w;
}

} // namespace

FamilyParams make_family(int d, Complex c) {
    if (d < 2)
        throw Error("family degree must be >= 2");
    double r = std::max(std::abs(c), std::pow(2.0, 1.0 / (d - 1)));
    return FamilyParams{d, c, r};
}

FamilyParams make_family(int d, Complex c, double escape_radius) {
    if (d < 2)
        throw Error("family degree must be >= 2");
    return FamilyParams{d, c, escape_radius};
}

Complex step(Complex z, const FamilyParams& fam) {
    return ipow(z, fam.d) + fam.c;
}

OrbitRecord critical_orbit(const FamilyParams& fam, std::size_t n_max) {
    OrbitRecord orb;
    orb.d = fam.d;
    orb.points.reserve(n_max + 1);
    orb.log_deriv.reserve(n_max + 1);
    orb.alpha.reserve(n_max + 1);
    orb.gamma.reserve(n_max + 1);
    orb.points.emplace_back(0.0, 0.0);
    orb.log_deriv.push_back(0.0);
    orb.alpha.push_back(kNaN);
    orb.gamma.push_back(kNaN);
    extend_orbit(orb, fam, n_max);
    return orb;
}

void extend_orbit(OrbitRecord& orbit, const FamilyParams& fam, std::size_t n_max) {
    if (orbit.escaped())
        return;
    const double logd = std::log(static_cast<double>(fam.d));
    Complex z = orbit.points.back();
    double L = orbit.log_deriv.back();
    for (std::size_t k = orbit.last_index() + 1; k <= n_max; ++k) {
        double prev_az = std::abs(orbit.points.back());
        z = step(z, fam);
        double az = std::abs(z);
        if (!std::isfinite(az))
            throw NonFiniteOrbit("orbit overflowed before the escape test fired");
        double kd = static_cast<double>(k);
        orbit.points.push_back(z);
        // gamma_k n uses the derivative up to the previous point; alpha_k is
        // chosen so the one-step chain identity closes exactly (alpha_1 is the
        // log d/(d-1) base case). |xi_{k-1}| = 0 leaves +inf in alpha and,
        // through L, -inf in gamma.
        orbit.alpha.push_back(k == 1 ? logd / (fam.d - 1) : -std::log(prev_az) / kd);
        orbit.gamma.push_back(L / kd);
        // L_k = L_{k-1} + log d + (d-1) log|xi_k|
        L += logd + (fam.d - 1) * std::log(az);
        orbit.log_deriv.push_back(L);
        if (az > fam.escape_radius) {
            orbit.escape_index = k;
            break;
        }
    }
}

double chain_identity_residual(const OrbitRecord& orbit, std::size_t n) {
    if (n < 1 || n > orbit.last_index())
        throw WindowBeyondOrbit("chain identity index outside the recorded orbit");
    double nd = static_cast<double>(n);
    double prev = (n >= 2) ? orbit.gamma[n - 1] * (nd - 1.0) : 0.0;
    double lhs = orbit.gamma[n] * nd - prev - std::log(static_cast<double>(orbit.d)) +
                 orbit.alpha[n] * nd * (orbit.d - 1);
    return std::fabs(lhs);
}

bool ce_window_test(const OrbitRecord& orbit, double gamma, std::size_t n_lo, std::size_t n_hi) {
    if (n_lo < 1)
        n_lo = 1;
    if (n_hi > orbit.last_index())
        throw WindowBeyondOrbit("ce window extends past the recorded orbit");
    for (std::size_t k = n_lo; k <= n_hi; ++k)
        if (!(orbit.log_deriv[k] >= gamma * static_cast<double>(k)))
            return false;
    return true;
}

TransversalityResult transversality_ratio(const FamilyParams& fam, std::size_t n_max, double tol) {
    TransversalityResult res;
    res.limit = Complex(1.0, 0.0); // rho_1
    res.n_used = 1;
    if (n_max <= 1)
        return res;

    const double logd = std::log(static_cast<double>(fam.d));
    const double two_pi = 2.0 * std::acos(-1.0);
    Complex z = fam.c; // xi_1
    double logmag = 0.0; // log|Df^n(c)|
    double phase = 0.0;  // arg Df^n(c), reduced mod 2pi
    bool frozen = false; // |xi| out of double range; increments are 0
    int consecutive = 0;

    for (std::size_t n = 1; n + 1 <= n_max; ++n) {
        double az = std::abs(z);
        if (az == 0.0)
            throw DerivativeVanished("critical orbit hit 0; transversality ratio undefined");
        double inc_mag = 0.0;
        if (!frozen) {
            logmag += logd + (fam.d - 1) * std::log(az);
            phase = std::remainder(phase + (fam.d - 1) * std::arg(z), two_pi);
            inc_mag = std::exp(-logmag);
            res.limit += inc_mag * Complex(std::cos(-phase), std::sin(-phase));
        }
        res.n_used = n + 1;
        if (inc_mag < tol * std::abs(res.limit)) {
            if (++consecutive >= 10) {
                res.converged = true;
                return res;
            }
        } else {
            consecutive = 0;
        }
        if (!frozen) {
            z = step(z, fam);
            if (std::abs(z) > 1e100)
                frozen = true;
        }
    }
    return res;
}

double distortion_sum(Complex a, const FamilyParams& fam_b, std::size_t n) {
    FamilyParams fam_a = fam_b;
    fam_a.c = a;
    Complex za = a;       // xi_1(a)
    Complex zb = fam_b.c; // xi_1(b)
    double sum = 0.0;
    for (std::size_t j = 1; j + 1 <= n; ++j) {
        double rb = std::abs(zb);
        if (rb == 0.0)
            throw OrbitHitsCritical("reference orbit passed through the critical point");
        sum += std::abs(za - zb) / rb;
        za = step(za, fam_a);
        zb = step(zb, fam_b);
    }
    return sum;
}

LyapunovSummary lyapunov_summary(const OrbitRecord& orbit, int d, double tail_fraction) {
    std::size_t len = orbit.last_index();
    if (len < 1)
        throw Error("lyapunov summary needs at least one orbit point");
    auto count = static_cast<std::size_t>(
        std::ceil(std::clamp(tail_fraction, 0.0, 1.0) * static_cast<double>(len)));
    count = std::max<std::size_t>(count, 1);
    std::size_t lo = len - count + 1;

    double gmin = std::numeric_limits<double>::infinity();
    double gmax = -std::numeric_limits<double>::infinity();
    for (std::size_t k = lo; k <= len; ++k) {
        gmin = std::min(gmin, orbit.gamma[k]);
        gmax = std::max(gmax, orbit.gamma[k]);
    }

    // sup over |z| <= 2 of log|Df_c(z)| = log(d |z|^{d-1}) on a radial grid;
    // the grid includes |z| = 2, where the sup is attained.
    double sup = -std::numeric_limits<double>::infinity();
    const int grid = 2000;
    for (int i = 1; i <= grid; ++i) {
        double r = 2.0 * static_cast<double>(i) / grid;
        sup = std::max(sup, std::log(d * std::pow(r, d - 1)));
    }
    return LyapunovSummary{gmin, gmax, sup};
}

} // namespace celab
