#include "doctest.h"

#include "celab/density.hpp"
#include "celab/errors.hpp"
#include "celab/rng.hpp"

#include <cmath>
#include <sstream>
#include <string>

using namespace celab;

TEST_CASE("membership kernel agrees with the orbit record") {
    for (int d : {2, 3}) {
        for (int t = 0; t < 200; ++t) {
            Complex c{-2.2 + 3.0 * u01(7u, 2 * t), -1.2 + 2.4 * u01(7u, 2 * t + 1)};
            auto m = membership_sample(d, c, 500);
            auto orb = critical_orbit(make_family(d, c), 500);
            bool orb_escaped = orb.escaped() && orb.escape_index <= 500;
            CHECK(m.escaped == orb_escaped);
            if (m.escaped) CHECK(m.steps == orb.escape_index);
        }
    }
}

TEST_CASE("membership boundary cases") {
    // the landing point of the antenna never escapes, a hair west does
    CHECK_FALSE(membership_sample(2, Complex{-2.0, 0.0}, 20000).escaped);
    CHECK(membership_sample(2, Complex{-2.0 - 1e-12, 0.0}, 20000).escaped);
    // parabolic root point: inside stays, outside leaves slowly
    CHECK_FALSE(membership_sample(2, Complex{0.25, 0.0}, 20000).escaped);
    auto slow = membership_sample(2, Complex{0.2501, 0.0}, 20000);
    CHECK(slow.escaped);
    CHECK(slow.steps > 50);
}

#ifdef CELAB_EXTENDED_PRECISION
TEST_CASE("extended-precision kernel matches the double kernel") {
    auto e = membership_sample_extended(2, Complex{3.0, 0.0}, 10);
    CHECK(e.escaped);
    CHECK(e.steps == 2);
    for (int t = 0; t < 25; ++t) {
        Complex c{-2.0 + 0.4 * u01(11u, 2 * t), 0.3 * u01(11u, 2 * t + 1)};
        auto a = membership_sample(2, c, 300);
        auto b = membership_sample_extended(2, c, 300);
        CHECK(a.escaped == b.escaped);
        if (a.escaped) CHECK(a.steps == b.steps);
    }
}
#endif

TEST_CASE("kernel selection by scale") {
    CHECK(membership_sample_auto(2, Complex{3.0, 0.0}, 10, 1e-6).escaped);
#ifdef CELAB_EXTENDED_PRECISION
    CHECK(membership_sample_auto(2, Complex{3.0, 0.0}, 10, 1e-15).escaped);
#else
    CHECK_THROWS_AS(membership_sample_auto(2, Complex{3.0, 0.0}, 10, 1e-15),
                    const PrecisionExhausted&);
#endif
}

TEST_CASE("Wilson interval hand values") {
    auto w = wilson_interval(40, 100);
    const double z = 1.96, p = 0.4, n = 100.0;
    const double denom = 1.0 + z * z / n;
    const double center = (p + z * z / (2.0 * n)) / denom;
    const double hw = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
    CHECK(w.halfwidth == doctest::Approx(hw).epsilon(1e-14));
    CHECK(w.low == doctest::Approx(center - hw).epsilon(1e-14));
    CHECK(w.high == doctest::Approx(center + hw).epsilon(1e-14));

    auto zero = wilson_interval(0, 50);
    CHECK(zero.low == 0.0);
    CHECK(zero.high > 0.0);
    CHECK(zero.high < 0.2);
    auto one = wilson_interval(50, 50);
    CHECK(one.high == 1.0);
    CHECK(one.low < 1.0);
    CHECK(one.low > 0.8);
}

TEST_CASE("density extremes: deep exterior and deep interior") {
    auto outside = density_at_scale(2, Complex{3.0, 0.0}, 1e-3, 20, 100, SampleLayout::Grid, 1);
    CHECK(outside.n_samples == 400);
    CHECK(outside.n_escaped == 400);
    CHECK(outside.density == 1.0);
    CHECK(outside.wilson_high == 1.0);

    auto inside = density_at_scale(2, Complex{0.0, 0.0}, 0.1, 20, 2000, SampleLayout::Grid, 1);
    CHECK(inside.n_escaped == 0);
    CHECK(inside.density == 0.0);
    CHECK(inside.wilson_low == 0.0);
}

TEST_CASE("density is strictly mixed across a window boundary") {
    // Q(-1.8, 0.1) meets both the period-3 island and its escaping surroundings
    auto est = density_at_scale(2, Complex{-1.8, 0.0}, 0.1, 24, 3000, SampleLayout::Grid, 1);
    CHECK(est.density > 0.0);
    CHECK(est.density < 1.0);
    CHECK(est.wilson_low > 0.0);
    CHECK(est.wilson_high < 1.0);
    CHECK(est.wilson_low < est.density);
    CHECK(est.wilson_high > est.density);
}

TEST_CASE("density results do not depend on the worker count") {
    for (auto layout : {SampleLayout::Grid, SampleLayout::Stratified}) {
        auto a = density_at_scale(2, Complex{-1.8, 0.0}, 0.05, 16, 800, layout, 42, 1);
        auto b = density_at_scale(2, Complex{-1.8, 0.0}, 0.05, 16, 800, layout, 42, 8);
        CHECK(a.n_escaped == b.n_escaped);
        CHECK(a.density == b.density);
        CHECK(a.wilson_low == b.wilson_low);
        CHECK(a.wilson_high == b.wilson_high);
    }
    // stratified jitter changes with the seed but stays in the square
    auto s1 = density_at_scale(2, Complex{-1.8, 0.0}, 0.05, 16, 800, SampleLayout::Stratified, 1, 2);
    auto s2 = density_at_scale(2, Complex{-1.8, 0.0}, 0.05, 16, 800, SampleLayout::Stratified, 2, 2);
    CHECK(s1.n_samples == s2.n_samples);
}

TEST_CASE("scale sweep schedules epsilon and n_max geometrically") {
    auto rows = scale_sweep(2, Complex{-1.8, 0.0}, 1e-3, 2.0, 3, 8, 500, SampleLayout::Grid, 1);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].epsilon == doctest::Approx(1e-3).epsilon(1e-15));
    CHECK(rows[1].epsilon == doctest::Approx(5e-4).epsilon(1e-15));
    CHECK(rows[2].epsilon == doctest::Approx(2.5e-4).epsilon(1e-15));
    CHECK(rows[0].n_max == 500);
    CHECK(rows[1].n_max == 1000);
    CHECK(rows[2].n_max == 2000);
#ifndef CELAB_EXTENDED_PRECISION
    CHECK_THROWS_AS(scale_sweep(2, Complex{-2.0, 0.0}, 1e-12, 10.0, 3, 4, 100, SampleLayout::Grid, 1),
                    const PrecisionExhausted&);
#endif
}

TEST_CASE("recurrence envelope of bounded non-recurrent anchors is flat") {
    auto cheb = initial_recurrence_fit(critical_orbit(make_family(2, Complex{-2.0, 0.0}), 500));
    CHECK(cheb.alpha == 0.0);
    CHECK(cheb.K == 1.0);

    // orbit of c = i cycles through magnitudes >= 1
    auto gauss = initial_recurrence_fit(critical_orbit(make_family(2, Complex{0.0, 1.0}), 500));
    CHECK(gauss.alpha == 0.0);
    CHECK(gauss.K == 1.0);

    // a recurrent anchor has a positive exponent and a K <= 1 prefactor
    auto rec = initial_recurrence_fit(critical_orbit(make_family(2, Complex{-1.9, 0.0}), 2000));
    CHECK(rec.alpha > 0.0);
    CHECK(rec.K <= 1.0);
    CHECK(rec.K > 0.0);
}

TEST_CASE("outside expansion rate: anchor whose orbit never meets U") {
    auto orb = critical_orbit(make_family(2, Complex{-2.0, 0.0}), 200);
    auto oe = outside_expansion_estimate(orb, std::exp(-9.0), 20);
    CHECK(oe.C_U == 1.0);
    CHECK(oe.n_segments == 1);
    CHECK(oe.gamma_H == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("outside expansion rate: synthetic single segment") {
    // hand-built record with |Df| = 3 at every step
    OrbitRecord orb;
    orb.d = 2;
    const double l3 = std::log(3.0);
    for (std::size_t k = 0; k <= 10; ++k) {
        orb.points.push_back(Complex{1.5, 0.0});
        orb.log_deriv.push_back(static_cast<double>(k) * l3);
        orb.alpha.push_back(0.0);
        orb.gamma.push_back(l3);
    }
    auto oe = outside_expansion_estimate(orb, 0.1, 5);
    CHECK(oe.C_U == 1.0);
    CHECK(oe.n_segments == 1);
    CHECK(oe.gamma_H == doctest::Approx(l3).epsilon(1e-12));
}

TEST_CASE("density table serializes with fixed columns") {
    DensityEstimate e;
    e.epsilon = 1e-3;
    e.n_samples = 400;
    e.n_escaped = 100;
    e.n_max = 1000;
    e.density = 0.25;
    e.wilson_low = 0.2;
    e.wilson_high = 0.3;
    e.wilson_halfwidth = 0.05;
    std::ostringstream os;
    write_density_csv(os, {e});
    CHECK(os.str() ==
          "epsilon,n_samples,n_escaped,n_max,density,wilson_low,wilson_high,wilson_halfwidth\n"
          "0.001,400,100,1000,0.25,0.2,0.3,0.05\n");
}

TEST_CASE("escape-time render: deep exterior is uniform, interior is black") {
    std::ostringstream os;
    render_escape_pgm(os, 2, Complex{3.0, 0.0}, 1e-3, 8, 100);
    std::string expect = "P5\n8 8\n255\n" + std::string(64, static_cast<char>(2));
    CHECK(os.str() == expect);

    std::ostringstream os2;
    render_escape_pgm(os2, 2, Complex{0.0, 0.0}, 0.1, 4, 500);
    CHECK(os2.str() == std::string("P5\n4 4\n255\n") + std::string(16, '\0'));

    // worker count must not change a single byte
    std::ostringstream a, b;
    render_escape_pgm(a, 2, Complex{-1.8, 0.0}, 0.5, 16, 300, 1);
    render_escape_pgm(b, 2, Complex{-1.8, 0.0}, 0.5, 16, 300, 8);
    CHECK(a.str() == b.str());
}
