#include "doctest.h"

#include "celab/exclusion.hpp"
#include "celab/errors.hpp"

#include "json.hpp"

#include <cmath>
#include <sstream>
#include <string>

using namespace celab;

namespace {
// real parameter whose third critical iterate lands on the critical point
constexpr double kThirdRoot = -1.7548776662466927;
} // namespace

TEST_CASE("derived constants: hand-checked values") {
    // kappa = 1 - gamma_under/(4 gamma_bar) = 1 - 0.6/4.8 exactly
    auto rc = derive_constants(2, 0.6, 0.6, 1.2, 0.3, 0.9);
    CHECK(rc.kappa == 0.875);
    // gamma_I = 0.6 * 0.6 * 0.1 / (2*0.3*2 + 0.6*0.1) = 0.036/1.26
    CHECK(rc.gamma_I == doctest::Approx(0.036 / 1.26).epsilon(1e-14));
    CHECK(rc.gamma_I == doctest::Approx(0.02857142857142857).epsilon(1e-12));
    CHECK(rc.kappa_tilde == doctest::Approx((1.0 + 0.9) / 2.0).epsilon(1e-15));

    // default kappa_prime is the midpoint of (kappa, 1)
    auto rc2 = derive_constants(2, 0.6, 0.6, 1.2, 1e-12);
    CHECK(rc2.kappa_prime == doctest::Approx((1.0 + 0.875) / 2.0).epsilon(1e-15));
}

TEST_CASE("derived constants: escape-length factor recipe") {
    // gamma_I = 0.6*(0.6/45)/(1/50 + 0.6/45) = 0.24 and gamma_C = 0.24/24 = 0.01,
    // so M_tilde = 16*2*1.3863/0.0001 = 443616
    auto rc = derive_constants(2, 0.6, 0.6, 1.3863, 1.0 / 200.0, 44.0 / 45.0);
    CHECK(rc.gamma_I == doctest::Approx(0.24).epsilon(1e-12));
    CHECK(rc.gamma_C == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(rc.M_tilde == doctest::Approx(443616.0).epsilon(1e-12));
    CHECK(rc.kappa_hat == doctest::Approx(1.0 - 0.24 / (4.0 * 1.3863)).epsilon(1e-12));
    // that alpha is far above the cap, so the run is not feasible
    CHECK(rc.alpha_cap < 1e-9);
    CHECK(rc.iota > 1.0);
    CHECK_FALSE(rc.feasible);
    CHECK_THROWS_WITH_AS(check_feasibility(rc), "alpha_nu0 exceeds the alpha/gamma_I cap",
                         const InvalidConstants&);
}

TEST_CASE("derived constants: tiny recurrence exponent is feasible") {
    auto rc = derive_constants(2, 0.6, 0.6, 1.3863, 1e-12);
    CHECK(rc.alpha_cap > 1e-12);
    CHECK(rc.iota < 1.0);
    CHECK(rc.feasible);
    CHECK_NOTHROW(check_feasibility(rc));
}

TEST_CASE("derived constants: nonsensical inputs name the violated condition") {
    CHECK_THROWS_WITH_AS(derive_constants(1, 0.6, 0.6, 1.2, 0.1),
                         doctest::Contains("d"), const InvalidConstants&);
    CHECK_THROWS_WITH_AS(derive_constants(2, 0.0, 0.6, 1.2, 0.1),
                         doctest::Contains("gamma_under"), const InvalidConstants&);
    CHECK_THROWS_WITH_AS(derive_constants(2, 0.6, -1.0, 1.2, 0.1),
                         doctest::Contains("gamma_H"), const InvalidConstants&);
    CHECK_THROWS_WITH_AS(derive_constants(2, 0.6, 0.6, 0.5, 0.1),
                         doctest::Contains("gamma_bar"), const InvalidConstants&);
    CHECK_THROWS_WITH_AS(derive_constants(2, 0.6, 0.6, 1.2, -0.1),
                         doctest::Contains("alpha_nu0"), const InvalidConstants&);
    // kappa = 0.875 here, so 0.5 lies outside (kappa, 1)
    CHECK_THROWS_WITH_AS(derive_constants(2, 0.6, 0.6, 1.2, 0.1, 0.5),
                         doctest::Contains("kappa_prime"), const InvalidConstants&);
    CHECK_THROWS_WITH_AS(derive_constants(2, 0.6, 0.6, 1.2, 0.1, 0.9, -0.05),
                         doctest::Contains("C_tilde"), const InvalidConstants&);
    CHECK_THROWS_WITH_AS(derive_constants(2, 0.6, 0.6, 1.2, 0.1, 0.9, 0.05, 0.99),
                         doctest::Contains("C1"), const InvalidConstants&);
}

TEST_CASE("promotion arithmetic") {
    CHECK(promote_alpha_tilde(0.01, 100, 150, 0.9) == doctest::Approx(0.006).epsilon(1e-15));
    CHECK(promote_gamma_under(0.5, 0.6, 100, 150, 30.0) ==
          doctest::Approx((0.5 + 0.6 * 30.0 / 100.0) * (100.0 / 149.0)).epsilon(1e-15));
    CHECK(promotion_done(0.02, 0.5, 0.05));
    CHECK(promotion_done(0.025, 0.5, 0.05)); // closed inequality
    CHECK_FALSE(promotion_done(0.03, 0.5, 0.05));

    // deletion-rate envelope 10 e^{-1.5 (kappa'-kappa) r}
    CHECK(deletion_fraction_bound(0.95, 0.875, 20) ==
          doctest::Approx(10.0 * std::exp(-2.25)).epsilon(1e-14));
}

TEST_CASE("initial expansion floor from the anchor orbit") {
    // at c = -2: gamma_{N-1} = log 4 and the alpha and log-d corrections cancel
    auto orb = critical_orbit(make_family(2, Complex{-2.0, 0.0}), 64);
    for (std::size_t N : {5, 10, 40})
        CHECK(initial_gamma_under(orb, N) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("startup: large-scale growth before any return") {
    auto fam = make_family(2, Complex{-2.0, 0.0});
    CriticalNeighborhoods nbhd;

    // a desk-size square is already past the large scale at its first image
    auto big = startup(fam, fam.c, 1e-3, nbhd, 100, 0);
    CHECK(big.kind == StartupKind::LargeScale);
    CHECK(big.N == 1);
    CHECK(big.diam >= nbhd.large_scale());

    // a tiny square needs several doublings first; the orbit pins near the
    // repelling fixed point 2, far from the critical point, so no return.
    // offset east so no sample sits outside the connectedness locus
    auto tiny = startup(make_family(2, Complex{-2.0 + 2e-12, 0.0}), Complex{-2.0 + 2e-12, 0.0},
                        1e-12, nbhd, 200, 0);
    CHECK(tiny.kind == StartupKind::LargeScale);
    CHECK(tiny.N > 5);
    CHECK(tiny.N < 40);
    CHECK(tiny.diam >= nbhd.large_scale());
}

TEST_CASE("startup: sample escape and failure modes") {
    CriticalNeighborhoods nbhd;

    auto esc = startup(make_family(2, Complex{3.0, 0.0}), Complex{3.0, 0.0}, 1e-6, nbhd, 100, 0);
    CHECK(esc.kind == StartupKind::TrivialEscape);
    CHECK(esc.N == 2);

    auto straddle = startup(make_family(2, Complex{0.0, 0.0}), Complex{0.0, 0.0}, 1e-9, nbhd, 100, 0);
    CHECK(straddle.kind == StartupKind::Failed);
    CHECK(straddle.reason.find("straddle") != std::string::npos);

    // orbit of c = 0.2 settles on an attracting fixed point away from 0
    auto budget = startup(make_family(2, Complex{0.2, 0.0}), Complex{0.2, 0.0}, 1e-9, nbhd, 300, 0);
    CHECK(budget.kind == StartupKind::Failed);
    CHECK(budget.reason.find("budget") != std::string::npos);
}

TEST_CASE("startup: essential first return near a deep-return anchor") {
    // c0 sits 8e-6 east of the parameter whose third iterate hits 0, so
    // xi_3(c0) ~ -5.65 * 8e-6 lands inside U = D(0, e^-9)
    Complex c0{kThirdRoot + 8e-6, 0.0};
    auto fam = make_family(2, c0);
    CriticalNeighborhoods nbhd;

    auto st = startup(fam, c0, 1e-7, nbhd, 100, 2);
    CHECK(st.kind == StartupKind::EssentialReturn);
    CHECK(st.N == 3);
    CHECK(st.dist > 3e-5);
    CHECK(st.dist < 6e-5);
    CHECK(st.r == 10);
    CHECK(st.diam > 0.5 * st.dist / (std::log(st.dist) * std::log(st.dist)));
    CHECK(st.comparability >= 0.0);
    CHECK(std::isfinite(st.distortion));
}

TEST_CASE("set-level bound period after a deep return") {
    Complex c0{kThirdRoot + 8e-6, 0.0};
    auto fam = make_family(2, c0);
    SquareTracker trk(SquareGeom{c0, 1e-7}, fam, 2);
    trk.geometry(3);

    // after the return at time 3 the set shadows the early orbit for a long
    // stretch (the parameter sits in an attracting window)
    auto bp = set_bound_period(trk, 3, 0.01, 50);
    CHECK(bp.p == 50);
    CHECK(bp.truncated);

    auto bp2 = set_bound_period(trk, 3, 0.01, 100000);
    CHECK(bp2.p > 100);
    CHECK_FALSE(bp2.truncated);

    // time 1 is not a return: the next image is nowhere near the early orbit
    auto none = set_bound_period(trk, 1, 0.01, 50);
    CHECK(none.p == 0);
}

TEST_CASE("initial deletion: comparability test against the anchor") {
    Complex c0{kThirdRoot + 8e-6, 0.0};
    auto fam = make_family(2, c0);
    CriticalNeighborhoods nbhd;
    const std::size_t N = 3;

    auto anchor = critical_orbit(fam, N);
    PartitionTree tree(c0, 1e-7);
    auto out = refine_at_essential_return(tree, tree.root(), fam, N, nbhd, 2, 48, nbhd.large_scale());
    REQUIRE(out.leaves.size() >= 4);
    REQUIRE(out.anomalous.empty());

    // C1 = 1.1 allows ~10% derivative drift; a 1e-7 square drifts far less
    auto keep = initial_deletion(tree, out.leaves, anchor, 2, N, 1.1);
    CHECK(keep.deleted.empty());
    CHECK(keep.escaped.empty());
    CHECK(keep.kept.size() == out.leaves.size());
    CHECK(keep.kept_area == doctest::Approx(1e-14).epsilon(1e-12));
    for (auto l : keep.kept) CHECK(tree.node(l).status == SquareStatus::Active);

    // an absurdly tight factor deletes everything
    PartitionTree tree2(c0, 1e-7);
    auto out2 = refine_at_essential_return(tree2, tree2.root(), fam, N, nbhd, 2, 48, nbhd.large_scale());
    auto cut = initial_deletion(tree2, out2.leaves, anchor, 2, N, 1.0 + 1e-7);
    CHECK(cut.kept.empty());
    CHECK(cut.deleted.size() == out2.leaves.size());
    for (auto l : cut.deleted) CHECK(tree2.node(l).status == SquareStatus::DeletedAlpha);
}

TEST_CASE("ledger serialization uses fixed columns and full precision") {
    LedgerRow row;
    row.step = 1;
    row.node = 0;
    row.time = 3;
    row.event = "essential-return";
    row.r = 10;
    row.p = 5;
    row.ell = 2.0;
    row.sup_alpha = 0.25;
    row.gamma_under = 0.5;
    row.area = 1e-14;

    std::ostringstream os;
    write_ledger_csv(os, {row});
    CHECK(os.str() ==
          "step,node,time,event,r,p,ell,q,alpha_tilde,sup_alpha,gamma_under,area\n"
          "1,0,3,essential-return,10,5,2,,,0.25,0.5,1e-14\n");
}

TEST_CASE("exclusion run: essential startup inside an attracting window") {
    ScenarioConfig cfg;
    cfg.c0 = Complex{kThirdRoot + 8e-6, 0.0};
    cfg.epsilon = 1e-7;
    cfg.n_max = 4000;
    cfg.sample_grid = 2;
    cfg.name = "window-probe";

    RunResult res = run_exclusion(cfg);
    CHECK(res.startup.kind == StartupKind::EssentialReturn);
    CHECK(res.summary.N == 3);
    CHECK(res.summary.n_initial_leaves >= 4);
    CHECK(res.summary.delta0 == 0.0);
    CHECK(res.summary.n_essential_events >= 2);
    CHECK(res.summary.deletions_at_inessential == 0);
    // the parameter lies in an attracting window: the set keeps returning at
    // the same depth while the transported alpha bound tightens, so every
    // lineage is eventually alpha-deleted; nothing escapes or promotes
    CHECK(res.summary.n_escaped == 0);
    CHECK(res.summary.n_promoted == 0);
    CHECK(res.summary.n_deleted_alpha > 0);
    CHECK(res.summary.delta1 == 1.0);
    CHECK(res.summary.delta2 == 1.0);
    CHECK(res.summary.n_undetermined + res.summary.n_anomalous +
              res.summary.n_deleted_alpha + res.summary.n_active ==
          res.summary.n_final_leaves - res.summary.n_escaped);
    CHECK(!res.ledger.empty());
    CHECK(res.ledger.front().event == "startup");

    // leaf areas still tile the square
    double total = 0.0;
    for (auto l : res.tree.leaves()) total += res.tree.area(l);
    CHECK(total == doctest::Approx(1e-14).epsilon(1e-10));
}

TEST_CASE("exclusion run: an explicit recurrence override must satisfy the constants") {
    ScenarioConfig cfg;
    cfg.c0 = Complex{kThirdRoot + 8e-6, 0.0};
    cfg.epsilon = 1e-7;
    cfg.n_max = 500;
    cfg.name = "override-abort";
    cfg.alpha = 5.0; // far above any cap: the run must abort, not degrade
    CHECK_THROWS_AS(run_exclusion(cfg), const InvalidConstants&);
}

TEST_CASE("exclusion run: identical inputs give byte-identical outputs") {
    ScenarioConfig cfg;
    cfg.c0 = Complex{kThirdRoot + 8e-6, 0.0};
    cfg.epsilon = 1e-7;
    cfg.n_max = 2000;
    cfg.name = "determinism-probe";

    auto render = [](const RunResult& r) {
        std::ostringstream os;
        write_ledger_csv(os, r.ledger);
        os << summary_to_json(r.summary, r.constants);
        r.tree.dump_jsonl(os);
        return os.str();
    };
    auto a = render(run_exclusion(cfg));
    auto b = render(run_exclusion(cfg));
    CHECK(a == b);
    CHECK(a.size() > 100);
}

TEST_CASE("run summary serializes to parseable JSON with stable keys") {
    ScenarioConfig cfg;
    cfg.c0 = Complex{-2.0, 0.0};
    cfg.epsilon = 1e-3;
    cfg.n_max = 50;
    cfg.name = "large-scale-probe";

    RunResult res = run_exclusion(cfg);
    CHECK(res.startup.kind == StartupKind::LargeScale);
    auto j = nlohmann::json::parse(summary_to_json(res.summary, res.constants));
    CHECK(j["scenario"] == "large-scale-probe");
    CHECK(j["startup_kind"] == "large-scale");
    CHECK(j["delta0"].is_number());
    CHECK(j["delta2"].is_number());
    CHECK(j["constants"]["C_tilde"] == 0.05);
}

TEST_CASE("cascade anchor regression: shallow set-returns arrive undersized") {
    // the -1.9 orbit returns at depths 0.156, 0.011, 0.017, 0.25, ...; a deep
    // startup at N = 15 straddles the critical line and the refinement
    // cascade leaves children far below the shallow-return floor, so later
    // processed returns classify inessential and, per the driver contract,
    // never delete. Counters frozen from the first validated run.
    ScenarioConfig cfg;
    cfg.c0 = Complex{-1.9, 0.0};
    cfg.epsilon = 6e-7;
    cfg.nbhd.Delta = 1.3;
    cfg.nbhd.DeltaPrime = 1.2;
    cfg.n_max = 4000;
    cfg.name = "chaotic-cascade";

    RunResult res = run_exclusion(cfg);
    CHECK(res.startup.kind == StartupKind::EssentialReturn);
    CHECK(res.startup.N == 15);
    CHECK(res.summary.n_inessential_events == 59);
    CHECK(res.summary.deletions_at_inessential == 0);
    CHECK(res.summary.n_essential_events == 122);
    CHECK(res.summary.n_escaped == 3227);
    CHECK(res.summary.n_deleted_alpha == 19778);
    CHECK(res.summary.n_undetermined == 156);
    CHECK(res.summary.n_final_leaves == 23161);
    CHECK(res.summary.n_q_records == 3227);
    CHECK(res.summary.delta0 <= 1.0);
    CHECK(res.summary.delta1 <= 1.0);
    CHECK(res.summary.delta2 <= 1.0);
    CHECK(res.summary.max_q_over_mr <= 1.0);
}
