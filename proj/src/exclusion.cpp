#include "celab/exclusion.hpp"

#include "celab/errors.hpp"
#include "celab/format.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <utility>

namespace celab {

const char* to_string(StartupKind k) {
    switch (k) {
        case StartupKind::TrivialEscape: return "trivial-escape";
        case StartupKind::LargeScale: return "large-scale";
        case StartupKind::EssentialReturn: return "essential-return";
        case StartupKind::Failed: return "failed";
    }
    return "?";
}

RunConstants derive_constants(int d, double gamma_under, double gamma_H, double gamma_bar,
                              double alpha_nu0, double kappa_prime, double C_tilde, double C1) {
    if (d < 2) throw InvalidConstants("d must be at least 2");
    if (!(gamma_under > 0.0)) throw InvalidConstants("gamma_under must be positive");
    if (!(gamma_H > 0.0)) throw InvalidConstants("gamma_H must be positive");
    if (!(gamma_bar >= gamma_under)) throw InvalidConstants("gamma_bar must be at least gamma_under");
    if (!(alpha_nu0 >= 0.0)) throw InvalidConstants("alpha_nu0 must be nonnegative");
    if (!(C_tilde > 0.0 && C_tilde < 1.0)) throw InvalidConstants("C_tilde must lie in (0, 1)");
    if (!(C1 > 1.0)) throw InvalidConstants("C1 must exceed 1");

    RunConstants rc;
    rc.d = d;
    rc.gamma_under = gamma_under;
    rc.gamma_H = gamma_H;
    rc.gamma_bar = gamma_bar;
    rc.alpha_nu0 = alpha_nu0;
    rc.C_tilde = C_tilde;
    rc.C1 = C1;
    rc.kappa = 1.0 - gamma_under / (4.0 * gamma_bar);
    rc.kappa_prime = kappa_prime > 0.0 ? kappa_prime : (1.0 + rc.kappa) / 2.0;
    if (!(rc.kappa_prime > rc.kappa && rc.kappa_prime < 1.0))
        throw InvalidConstants("kappa_prime must lie in (kappa, 1)");
    rc.kappa_tilde = (1.0 + rc.kappa_prime) / 2.0;

    const double gu1k = gamma_under * (1.0 - rc.kappa_prime);
    rc.gamma_I = std::min(gamma_under, gamma_H) * gu1k / (2.0 * alpha_nu0 * d + gu1k);
    rc.kappa_hat = 1.0 - rc.gamma_I / (4.0 * gamma_bar);
    rc.gamma_C = std::min(rc.gamma_I / (12.0 * d), gamma_H);
    rc.M_tilde = 16.0 * d * gamma_bar / (rc.gamma_C * rc.gamma_C);
    rc.alpha_cap = rc.gamma_I * std::min(1.0 / (16.0 * d),
                                         rc.gamma_C * rc.gamma_C * rc.gamma_C /
                                             (1000.0 * d * gamma_bar * gamma_bar));
    rc.iota = 10.0 * rc.M_tilde * ((3.0 + rc.kappa_hat) / (1.0 - rc.kappa_hat)) * alpha_nu0;
    rc.feasible = alpha_nu0 <= rc.alpha_cap && rc.iota <= 1.0;
    return rc;
}

void check_feasibility(const RunConstants& rc) {
    if (!(rc.alpha_nu0 <= rc.alpha_cap)) throw InvalidConstants("alpha_nu0 exceeds the alpha/gamma_I cap");
    if (!(rc.iota <= 1.0)) throw InvalidConstants("iota exceeds 1");
}

double promote_alpha_tilde(double sup_alpha_nu, std::size_t nu, std::size_t nu_next, double kappa_prime) {
    return kappa_prime * (static_cast<double>(nu) / static_cast<double>(nu_next)) * sup_alpha_nu;
}

double promote_gamma_under(double gamma_under_nu, double gamma_H, std::size_t nu,
                           std::size_t nu_next, double ell) {
    return (gamma_under_nu + gamma_H * ell / static_cast<double>(nu)) *
           (static_cast<double>(nu) / (static_cast<double>(nu_next) - 1.0));
}

bool promotion_done(double alpha_tilde, double gamma_under, double C_tilde) {
    return alpha_tilde <= C_tilde * gamma_under;
}

double initial_gamma_under(const OrbitRecord& anchor, std::size_t N) {
    if (N < 2 || N > anchor.last_index()) throw WindowBeyondOrbit("initial floor needs the orbit through N");
    // L_{N-1}/(N-1) less the depth cost of the return point and the one-step
    // degree term: the derivative exponent the lineage can still certify at N.
    const double Nd = static_cast<double>(N);
    return anchor.log_deriv[N - 1] / (Nd - 1.0) +
           (anchor.d - 1) * std::log(std::abs(anchor.points[N])) / Nd -
           std::log(static_cast<double>(anchor.d)) / Nd;
}

double deletion_fraction_bound(double kappa_prime, double kappa, int r) {
    return 10.0 * std::exp(-1.5 * (kappa_prime - kappa) * r);
}

StartupResult startup(const FamilyParams& fam, Complex c0, double epsilon,
                      const CriticalNeighborhoods& nbhd, std::size_t n_cap, int sample_grid) {
    nbhd.validate();
    const double S = nbhd.large_scale();
    SquareTracker trk(SquareGeom{c0, epsilon}, fam, sample_grid);
    StartupResult res;

    auto diagnostics_at = [&](std::size_t k) {
        // corner-vs-center derivative comparability and orbit distortion
        const OrbitRecord& center = trk.orbit(4);
        double comp = 0.0, distort = 0.0;
        for (std::size_t i = 0; i < 4; ++i) {
            const OrbitRecord& corner = trk.orbit(i);
            if (corner.alive_at(k) && center.alive_at(k))
                comp = std::max(comp, std::abs(corner.log_deriv[k] - center.log_deriv[k]));
            try {
                distort = std::max(distort, distortion_sum(trk.sample(i), make_family(fam.d, trk.sample(4)), k));
            } catch (const OrbitHitsCritical&) {
                distort = std::numeric_limits<double>::infinity();
            }
        }
        res.comparability = comp;
        res.distortion = distort;
    };

    auto any_escaped_by = [&trk](std::size_t k) {
        for (std::size_t i = 0; i < trk.n_samples(); ++i)
            if (trk.orbit(i).escaped() && trk.orbit(i).escape_index <= k) return true;
        return false;
    };

    for (std::size_t k = 1; k <= n_cap; ++k) {
        const ImageGeometry& g = trk.geometry(k);
        if (g.sample_escaped || any_escaped_by(k)) {
            res.kind = StartupKind::TrivialEscape;
            res.N = k;
            res.diam = g.diam;
            res.dist = g.dist;
            diagnostics_at(k);
            return res;
        }
        if (g.diam >= S) {
            res.kind = StartupKind::LargeScale;
            res.N = k;
            res.diam = g.diam;
            res.dist = g.dist;
            diagnostics_at(k);
            return res;
        }
        if (g.min_abs <= nbhd.delta()) {
            if (g.dist <= 0.0) {
                res.kind = StartupKind::Failed;
                res.N = k;
                res.diam = g.diam;
                res.reason = "image straddles the critical point";
                return res;
            }
            double ld = std::log(g.dist);
            if (g.diam >= 0.5 * g.dist / (ld * ld)) {
                res.kind = StartupKind::EssentialReturn;
                res.N = k;
                res.diam = g.diam;
                res.dist = g.dist;
                res.r = r_index(g.dist);
                diagnostics_at(k);
                return res;
            }
            // inessential set-return: the image is far smaller than its
            // distance to the critical point; keep iterating
        }
    }
    res.kind = StartupKind::Failed;
    res.N = n_cap;
    res.reason = "no decisive event within the iteration budget";
    return res;
}

BoundPeriod set_bound_period(SquareTracker& trk, std::size_t nu, double beta, std::size_t j_max) {
    const std::size_t m = trk.n_samples();
    for (std::size_t i = 1; i <= j_max; ++i) {
        trk.geometry(nu + i); // extends all sample orbits
        const double rhs_scale = std::exp(-beta * static_cast<double>(i));
        for (std::size_t a = 0; a < m; ++a) {
            if (!trk.orbit(a).alive_at(nu + i))
                return {i - 1, true};
            for (std::size_t b = 0; b < m; ++b) {
                const Complex& za = trk.orbit(a).points[nu + i];
                const Complex& zb = trk.orbit(b).points[i];
                if (std::abs(za - zb) > rhs_scale * std::abs(zb))
                    return {i - 1, false};
            }
        }
    }
    return {j_max, true};
}

InitialDeletion initial_deletion(PartitionTree& tree, const std::vector<std::int32_t>& leaves,
                                 const OrbitRecord& anchor, int d, std::size_t N, double C1) {
    if (N > anchor.last_index()) throw WindowBeyondOrbit("anchor orbit shorter than N");
    const double budget = std::log(C1);
    InitialDeletion out;
    for (std::int32_t l : leaves) {
        const SquareGeom& g = tree.node(l).geom;
        OrbitRecord orb = critical_orbit(make_family(d, g.center), N);
        if (orb.escaped() && orb.escape_index < N) {
            tree.node(l).status = SquareStatus::Escaped;
            out.escaped.push_back(l);
            out.escaped_area += tree.area(l);
            continue;
        }
        bool ok = true;
        for (std::size_t j = 1; j <= N && ok; ++j)
            ok = std::abs(orb.log_deriv[j] - anchor.log_deriv[j]) <= budget;
        if (ok) {
            out.kept.push_back(l);
            out.kept_area += tree.area(l);
        } else {
            tree.node(l).status = SquareStatus::DeletedAlpha;
            out.deleted.push_back(l);
            out.deleted_area += tree.area(l);
        }
    }
    return out;
}

namespace {

std::string csv_opt_int(long long v) { return v > 0 ? std::to_string(v) : std::string(); }

std::string csv_opt_double(double v) {
    if (std::isnan(v) || v < 0.0) return std::string();
    return fmt_double(v);
}

} // namespace

void write_ledger_csv(std::ostream& os, const std::vector<LedgerRow>& rows) {
    os << "step,node,time,event,r,p,ell,q,alpha_tilde,sup_alpha,gamma_under,area\n";
    for (const auto& r : rows) {
        os << r.step << ',' << r.node << ',' << r.time << ',' << r.event << ','
           << csv_opt_int(r.r) << ',' << csv_opt_int(static_cast<long long>(r.p)) << ','
           << csv_opt_double(r.ell) << ',' << csv_opt_double(r.q) << ','
           << (std::isnan(r.alpha_tilde) ? std::string() : fmt_double(r.alpha_tilde)) << ','
           << (std::isnan(r.sup_alpha) ? std::string() : fmt_double(r.sup_alpha)) << ','
           << (std::isnan(r.gamma_under) ? std::string() : fmt_double(r.gamma_under)) << ','
           << fmt_double(r.area) << '\n';
    }
}

std::string summary_to_json(const RunSummary& s, const RunConstants& rc) {
    nlohmann::ordered_json j;
    j["scenario"] = s.scenario;
    j["startup_kind"] = s.startup_kind;
    j["N"] = s.N;
    j["delta0"] = s.delta0;
    j["delta1"] = s.delta1;
    j["delta2"] = s.delta2;
    j["escaped_fraction"] = s.escaped_fraction;
    j["n_initial_leaves"] = s.n_initial_leaves;
    j["n_final_leaves"] = s.n_final_leaves;
    j["n_active"] = s.n_active;
    j["n_deleted_alpha"] = s.n_deleted_alpha;
    j["n_escaped"] = s.n_escaped;
    j["n_undetermined"] = s.n_undetermined;
    j["n_anomalous"] = s.n_anomalous;
    j["n_essential_events"] = s.n_essential_events;
    j["n_inessential_events"] = s.n_inessential_events;
    j["deletions_at_inessential"] = s.deletions_at_inessential;
    j["max_promotion_j"] = s.max_promotion_j;
    j["n_promoted"] = s.n_promoted;
    j["n_q_records"] = s.n_q_records;
    j["max_q_over_mr"] = s.max_q_over_mr;
    nlohmann::ordered_json c;
    c["d"] = rc.d;
    c["gamma_under"] = rc.gamma_under;
    c["gamma_H"] = rc.gamma_H;
    c["gamma_bar"] = rc.gamma_bar;
    c["alpha_nu0"] = rc.alpha_nu0;
    c["kappa"] = rc.kappa;
    c["kappa_prime"] = rc.kappa_prime;
    c["kappa_tilde"] = rc.kappa_tilde;
    c["gamma_I"] = rc.gamma_I;
    c["kappa_hat"] = rc.kappa_hat;
    c["gamma_C"] = rc.gamma_C;
    c["M_tilde"] = rc.M_tilde;
    c["alpha_cap"] = rc.alpha_cap;
    c["iota"] = rc.iota;
    c["C_tilde"] = rc.C_tilde;
    c["C1"] = rc.C1;
    c["feasible"] = rc.feasible;
    j["constants"] = c;
    return j.dump(2) + "\n";
}

namespace {

struct Lineage {
    std::int32_t node = 0;
    int j = 0;
    std::size_t nu = 0;
    int r = 0;
    double sup_alpha = 0.0;
    double alpha_tilde = 0.0;
    double gamma_under = 0.0;
};

LedgerRow& add_row(std::vector<LedgerRow>& rows, std::size_t& step, std::int32_t node,
                   std::size_t time, const char* event) {
    LedgerRow r;
    r.step = step++;
    r.node = node;
    r.time = time;
    r.event = event;
    rows.push_back(std::move(r));
    return rows.back();
}

} // namespace

RunResult run_exclusion(const ScenarioConfig& cfg) {
    cfg.nbhd.validate();
    const auto fam = make_family(cfg.d, cfg.c0);
    const double S = cfg.nbhd.large_scale();
    const double root_area = cfg.epsilon * cfg.epsilon;

    RunResult res;
    res.tree = PartitionTree(cfg.c0, cfg.epsilon);
    res.summary.scenario = cfg.name;

    res.startup = startup(fam, cfg.c0, cfg.epsilon, cfg.nbhd, cfg.n_max, cfg.sample_grid);
    res.summary.startup_kind = to_string(res.startup.kind);
    res.summary.N = res.startup.N;

    std::size_t step = 0;
    {
        LedgerRow& row = add_row(res.ledger, step, 0, res.startup.N, "startup");
        row.r = res.startup.r;
        row.area = root_area;
    }

    res.constants.d = cfg.d;
    res.constants.C_tilde = cfg.C_tilde;
    res.constants.C1 = cfg.C1;

    if (res.startup.kind != StartupKind::EssentialReturn) {
        res.summary.n_final_leaves = 1;
        if (res.startup.kind == StartupKind::Failed) {
            res.tree.node(0).status = SquareStatus::Undetermined;
            res.summary.n_undetermined = 1;
            add_row(res.ledger, step, 0, res.startup.N, "undetermined").area = root_area;
        } else {
            // a trivial escape or large-scale event makes the whole square good
            res.tree.node(0).status = SquareStatus::Escaped;
            res.summary.n_escaped = 1;
            res.summary.escaped_fraction = 1.0;
            LedgerRow& row = add_row(res.ledger, step, 0, res.startup.N, "escaped");
            row.q = static_cast<double>(res.startup.N);
            row.area = root_area;
        }
        res.tree.node(0).last_k = res.startup.N;
        return res;
    }

    const std::size_t N = res.startup.N;
    OrbitRecord anchor = critical_orbit(fam, cfg.n_max);

    RefineOutcome out;
    try {
        out = refine_at_essential_return(res.tree, 0, fam, N, cfg.nbhd, cfg.sample_grid,
                                         cfg.depth_limit, S);
    } catch (const DepthLimit&) {
        res.tree.node(0).status = SquareStatus::Anomalous;
        res.summary.n_anomalous = 1;
        res.summary.n_final_leaves = 1;
        add_row(res.ledger, step, 0, N, "anomalous").area = root_area;
        return res;
    }
    {
        LedgerRow& row = add_row(res.ledger, step, 0, N, "essential-return");
        row.r = res.startup.r;
        row.area = root_area;
    }
    res.summary.n_essential_events = 1;
    for (std::int32_t a : out.anomalous)
        add_row(res.ledger, step, a, N, "anomalous").area = res.tree.area(a);

    InitialDeletion keep = initial_deletion(res.tree, out.leaves, anchor, cfg.d, N, cfg.C1);
    for (std::int32_t l : keep.deleted)
        add_row(res.ledger, step, l, N, "initial-deletion").area = res.tree.area(l);
    for (std::int32_t l : keep.escaped)
        add_row(res.ledger, step, l, N, "escaped").area = res.tree.area(l);
    res.summary.n_initial_leaves = out.leaves.size();
    res.summary.delta0 = std::min(1.0, keep.deleted_area / root_area);

    // measured ingredients for the derived constants
    const double gu0 = initial_gamma_under(anchor, N);
    const double gbar = lyapunov_summary(anchor, cfg.d, 0.1).gamma_bar_trivial;
    const double gH = cfg.gamma_H > 0.0 ? cfg.gamma_H : gu0;

    std::vector<Lineage> stack;
    stack.reserve(keep.kept.size());
    double alpha_meas = 0.0;
    for (std::int32_t l : keep.kept) {
        SquareTracker trk(res.tree.node(l).geom, fam, cfg.sample_grid);
        Lineage lin;
        lin.node = l;
        lin.nu = N;
        lin.sup_alpha = trk.sup_alpha(N);
        lin.alpha_tilde = lin.sup_alpha;
        lin.gamma_under = gu0;
        double dist = trk.geometry(N).dist;
        lin.r = dist > 0.0 && dist < 1.0 ? r_index(dist) : res.startup.r;
        alpha_meas = std::max(alpha_meas, lin.sup_alpha);
        stack.push_back(lin);
    }

    bool have_constants = false;
    if (cfg.alpha > 0.0) {
        // explicit recurrence override: unsatisfiable constants abort the run
        res.constants = derive_constants(cfg.d, gu0, gH, std::max(gbar, gu0), cfg.alpha,
                                         cfg.kappa_prime, cfg.C_tilde, cfg.C1);
        check_feasibility(res.constants);
        have_constants = true;
    } else if (gu0 > 0.0 && gH > 0.0 && alpha_meas >= 0.0) {
        try {
            res.constants = derive_constants(cfg.d, gu0, gH, std::max(gbar, gu0), alpha_meas,
                                             cfg.kappa_prime, cfg.C_tilde, cfg.C1);
            have_constants = true;
        } catch (const InvalidConstants&) {
        }
    }
    if (!have_constants) {
        res.constants.gamma_under = gu0;
        res.constants.gamma_H = gH;
        res.constants.gamma_bar = gbar;
        res.constants.alpha_nu0 = alpha_meas;
        res.constants.kappa_prime = cfg.kappa_prime > 0.0 ? cfg.kappa_prime : 0.95;
        res.constants.feasible = false;
    }
    const RunConstants& rc = res.constants;
    const double gH_eff = gH > 0.0 ? gH : 0.0;
    const double iota_eff = (have_constants && rc.iota > 0.0) ? std::min(rc.iota, 1.0) : 1.0;

    double alpha_deleted_area = 0.0;

    std::size_t cursor = 0;
    while (cursor < stack.size()) {
        const Lineage lin = stack[cursor++];
        res.summary.max_promotion_j = std::max(res.summary.max_promotion_j, lin.j);

        bool promoted = promotion_done(lin.alpha_tilde, lin.gamma_under, cfg.C_tilde);
        std::size_t m0 = lin.nu;
        if (promoted) {
            LedgerRow& row = add_row(res.ledger, step, lin.node, lin.nu, "promoted");
            row.alpha_tilde = lin.alpha_tilde;
            row.gamma_under = lin.gamma_under;
            row.area = res.tree.area(lin.node);
            ++res.summary.n_promoted;
        }

        SquareTracker trk(res.tree.node(lin.node).geom, fam, cfg.sample_grid);
        if (lin.nu + 1 >= cfg.n_max) {
            res.tree.node(lin.node).status = promoted ? SquareStatus::Active : SquareStatus::Undetermined;
            if (!promoted) {
                add_row(res.ledger, step, lin.node, lin.nu, "undetermined").area = res.tree.area(lin.node);
                ++res.summary.n_undetermined;
            }
            continue;
        }
        BoundPeriod bp = set_bound_period(trk, lin.nu, cfg.nbhd.beta, cfg.n_max - lin.nu - 1);

        const std::size_t scan_end = promoted
            ? std::min<std::size_t>(cfg.n_max - 1,
                                    static_cast<std::size_t>(std::ceil((1.0 + iota_eff) * static_cast<double>(m0))))
            : cfg.n_max - 1;

        std::size_t k = lin.nu + bp.p + 1;
        bool settled = false;
        while (k <= scan_end) {
            const ImageGeometry& g = trk.geometry(k);
            if (g.sample_escaped || g.diam >= S) {
                res.tree.node(lin.node).status = SquareStatus::Escaped;
                res.tree.node(lin.node).last_k = k;
                LedgerRow& row = add_row(res.ledger, step, lin.node, k, "escaped");
                row.r = lin.r;
                row.q = static_cast<double>(k - lin.nu);
                row.area = res.tree.area(lin.node);
                res.q_records.push_back(QRecord{lin.node, lin.nu, lin.r, k - lin.nu});
                ++res.summary.n_escaped;
                settled = true;
                break;
            }
            if (g.min_abs <= cfg.nbhd.delta()) {
                ReturnKind kind = classify_return_set(trk, k, cfg.nbhd);
                int rr = g.dist > 0.0 && g.dist < 1.0 ? r_index(g.dist) : 0;
                if (kind == ReturnKind::InessentialSet || promoted) {
                    BoundPeriod bp2 = k + 1 < cfg.n_max
                                          ? set_bound_period(trk, k, cfg.nbhd.beta, cfg.n_max - k - 1)
                                          : BoundPeriod{0, true};
                    LedgerRow& row = add_row(res.ledger, step, lin.node, k,
                                             kind == ReturnKind::InessentialSet ? "inessential-return"
                                                                                : "essential-return");
                    row.r = rr;
                    row.p = bp2.p;
                    row.area = res.tree.area(lin.node);
                    if (kind == ReturnKind::InessentialSet)
                        ++res.summary.n_inessential_events;
                    else
                        ++res.summary.n_essential_events;
                    k += bp2.p + 1;
                    continue;
                }

                // essential set-return mid-promotion: refine, delete, promote
                const double ell = static_cast<double>(k) - static_cast<double>(lin.nu + bp.p + 1);
                const double at_next = promote_alpha_tilde(lin.sup_alpha, lin.nu, k, rc.kappa_prime);
                const double gu_next = promote_gamma_under(lin.gamma_under, gH_eff, lin.nu, k, ell);

                if (res.tree.size() > cfg.max_leaves) {
                    res.tree.node(lin.node).status = SquareStatus::Undetermined;
                    add_row(res.ledger, step, lin.node, k, "undetermined").area = res.tree.area(lin.node);
                    ++res.summary.n_undetermined;
                    settled = true;
                    break;
                }

                RefineOutcome split;
                try {
                    split = refine_at_essential_return(res.tree, lin.node, fam, k, cfg.nbhd,
                                                       cfg.sample_grid, cfg.depth_limit, S);
                } catch (const DepthLimit&) {
                    res.tree.node(lin.node).status = SquareStatus::Anomalous;
                    add_row(res.ledger, step, lin.node, k, "anomalous").area = res.tree.area(lin.node);
                    ++res.summary.n_anomalous;
                    settled = true;
                    break;
                }
                {
                    LedgerRow& row = add_row(res.ledger, step, lin.node, k, "essential-return");
                    row.r = rr;
                    row.ell = ell;
                    row.alpha_tilde = at_next;
                    row.sup_alpha = lin.sup_alpha;
                    row.gamma_under = gu_next;
                    row.area = res.tree.area(lin.node);
                }
                ++res.summary.n_essential_events;
                for (std::int32_t a : split.anomalous) {
                    add_row(res.ledger, step, a, k, "anomalous").area = res.tree.area(a);
                    ++res.summary.n_anomalous;
                }

                DeletionRecord rec;
                rec.nu = k;
                rec.r = rr;
                rec.exposed_area = res.tree.area(lin.node);
                for (std::int32_t child : split.leaves) {
                    SquareTracker ct(res.tree.node(child).geom, fam, cfg.sample_grid);
                    const double sup_c = ct.sup_alpha(k);
                    if (sup_c > at_next) {
                        res.tree.node(child).status = SquareStatus::DeletedAlpha;
                        LedgerRow& row = add_row(res.ledger, step, child, k, "deleted-alpha");
                        row.alpha_tilde = at_next;
                        row.sup_alpha = sup_c;
                        row.area = res.tree.area(child);
                        rec.deleted_area += res.tree.area(child);
                        alpha_deleted_area += res.tree.area(child);
                        continue;
                    }
                    Lineage next;
                    next.node = child;
                    next.j = lin.j + 1;
                    next.nu = k;
                    double cd = ct.geometry(k).dist;
                    next.r = cd > 0.0 && cd < 1.0 ? r_index(cd) : rr;
                    next.sup_alpha = sup_c;
                    next.alpha_tilde = at_next;
                    next.gamma_under = gu_next;
                    stack.push_back(next);
                }
                res.deletions.push_back(rec);
                settled = true;
                break;
            }
            ++k;
        }
        if (!settled) {
            if (promoted) {
                res.tree.node(lin.node).status = SquareStatus::Active;
                res.tree.node(lin.node).last_k = scan_end;
            } else {
                res.tree.node(lin.node).status = SquareStatus::Undetermined;
                res.tree.node(lin.node).last_k = scan_end;
                add_row(res.ledger, step, lin.node, scan_end, "undetermined").area = res.tree.area(lin.node);
                ++res.summary.n_undetermined;
            }
        }
    }

    // quadtree child areas are computed independently per node, so the sum
    // over thousands of leaves can overshoot the root area by a few ulps
    res.summary.delta1 = std::min(1.0, alpha_deleted_area / root_area);
    res.summary.delta2 = 1.0 - (1.0 - res.summary.delta0) * (1.0 - res.summary.delta1);

    auto leaves = res.tree.leaves();
    res.summary.n_final_leaves = leaves.size();
    res.summary.n_active = res.summary.n_deleted_alpha = res.summary.n_escaped = 0;
    res.summary.n_undetermined = res.summary.n_anomalous = 0;
    double escaped_area = 0.0;
    for (std::int32_t l : leaves) {
        switch (res.tree.node(l).status) {
            case SquareStatus::Active: ++res.summary.n_active; break;
            case SquareStatus::DeletedAlpha: ++res.summary.n_deleted_alpha; break;
            case SquareStatus::Escaped:
                ++res.summary.n_escaped;
                escaped_area += res.tree.area(l);
                break;
            case SquareStatus::Undetermined: ++res.summary.n_undetermined; break;
            case SquareStatus::Anomalous: ++res.summary.n_anomalous; break;
        }
    }
    res.summary.escaped_fraction = std::min(1.0, escaped_area / root_area);
    res.summary.n_q_records = res.q_records.size();
    if (rc.M_tilde > 0.0)
        for (const auto& qr : res.q_records)
            res.summary.max_q_over_mr = std::max(
                res.summary.max_q_over_mr,
                static_cast<double>(qr.q) / (rc.M_tilde * std::max(1, qr.r)));
    return res;
}

} // namespace celab
