#include "celab/partition.hpp"

#include "celab/errors.hpp"
#include "celab/format.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace celab {

const char* to_string(SquareStatus s) {
    switch (s) {
        case SquareStatus::Active: return "active";
        case SquareStatus::DeletedAlpha: return "deleted-alpha";
        case SquareStatus::Escaped: return "escaped";
        case SquareStatus::Undetermined: return "undetermined";
        case SquareStatus::Anomalous: return "anomalous";
    }
    return "?";
}

std::vector<Complex> square_samples(const SquareGeom& geom, int sample_grid) {
    const double h = geom.side / 2.0;
    std::vector<Complex> out;
    out.reserve(5 + (sample_grid >= 2 ? static_cast<std::size_t>(sample_grid) * sample_grid : 0));
    out.push_back(geom.center + Complex{-h, h});
    out.push_back(geom.center + Complex{h, h});
    out.push_back(geom.center + Complex{-h, -h});
    out.push_back(geom.center + Complex{h, -h});
    out.push_back(geom.center);
    if (sample_grid >= 2) {
        for (int j = 0; j < sample_grid; ++j) {
            // rows from the top edge down, columns left to right
            double ty = static_cast<double>(j) / (sample_grid - 1);
            double y = geom.center.imag() + h - geom.side * ty;
            for (int i = 0; i < sample_grid; ++i) {
                double tx = static_cast<double>(i) / (sample_grid - 1);
                out.emplace_back(geom.center.real() - h + geom.side * tx, y);
            }
        }
    } else if (sample_grid == 1) {
        out.push_back(geom.center);
    }
    return out;
}

namespace {

ImageGeometry geometry_of_points(const std::vector<const Complex*>& pts, bool some_escaped) {
    ImageGeometry g;
    g.sample_escaped = some_escaped;
    if (pts.empty()) return g;
    double min_abs = std::numeric_limits<double>::infinity();
    double diam = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        min_abs = std::min(min_abs, std::abs(*pts[i]));
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            diam = std::max(diam, std::abs(*pts[i] - *pts[j]));
    }
    g.diam = diam;
    g.min_abs = min_abs;
    g.dist = std::max(0.0, min_abs - diam / 2.0);
    return g;
}

// the partition rule at a single time, given the image geometry there
bool rule_holds(const ImageGeometry& g, const CriticalNeighborhoods& nbhd, double S) {
    if (g.sample_escaped) return false;
    if (g.min_abs <= nbhd.delta()) {
        if (g.dist <= 0.0) return g.diam == 0.0;
        double ld = std::log(g.dist);
        return g.diam <= g.dist / (ld * ld);
    }
    return g.diam <= S;
}

} // namespace

ImageGeometry image_geometry(const SquareGeom& geom, const FamilyParams& fam, std::size_t k, int sample_grid) {
    SquareTracker trk(geom, fam, sample_grid);
    return trk.geometry(k);
}

SquareTracker::SquareTracker(SquareGeom geom, const FamilyParams& fam, int sample_grid)
    : geom_(geom), fam_(fam), samples_(square_samples(geom, sample_grid)) {
    orbits_.reserve(samples_.size());
    for (const auto& c : samples_) orbits_.push_back(critical_orbit(make_family(fam_.d, c), 0));
    geom_cache_.push_back(ImageGeometry{}); // xi_0 = 0 for every sample
}

const ImageGeometry& SquareTracker::geometry(std::size_t k) {
    while (geom_cache_.size() <= k) {
        std::size_t next = geom_cache_.size();
        std::vector<const Complex*> alive;
        alive.reserve(orbits_.size());
        bool some_escaped = false;
        for (std::size_t i = 0; i < orbits_.size(); ++i) {
            OrbitRecord& orb = orbits_[i];
            if (orb.last_index() < next && !orb.escaped())
                extend_orbit(orb, make_family(fam_.d, samples_[i]), next);
            if (orb.alive_at(next))
                alive.push_back(&orb.points[next]);
            else
                some_escaped = true;
        }
        geom_cache_.push_back(geometry_of_points(alive, some_escaped));
    }
    return geom_cache_[k];
}

double SquareTracker::sup_alpha(std::size_t k) {
    geometry(k);
    // recurrence depth at k itself, -log|xi_k(c)| / k (deletion-rule semantics)
    double sup = -std::numeric_limits<double>::infinity();
    for (const auto& orb : orbits_)
        if (orb.alive_at(k))
            sup = std::max(sup, -std::log(std::abs(orb.points[k])) / static_cast<double>(k));
    return sup;
}

double SquareTracker::inf_gamma(std::size_t k) {
    geometry(k);
    // derivative exponent through k itself, L_k / k (CE-window semantics)
    double inf = std::numeric_limits<double>::infinity();
    for (const auto& orb : orbits_)
        if (orb.alive_at(k)) inf = std::min(inf, orb.log_deriv[k] / static_cast<double>(k));
    return inf;
}

bool SquareTracker::is_partition_element(std::size_t k, const CriticalNeighborhoods& nbhd, double S) {
    if (first_violation_ != 0 && first_violation_ <= k) return false;
    for (std::size_t j = checked_upto_ + 1; j <= k; ++j) {
        if (!rule_holds(geometry(j), nbhd, S)) {
            first_violation_ = j;
            return false;
        }
        checked_upto_ = j;
    }
    return true;
}

ReturnKind classify_return_set(SquareTracker& trk, std::size_t k, const CriticalNeighborhoods& nbhd) {
    const ImageGeometry& g = trk.geometry(k);
    if (g.dist <= 0.0) return ReturnKind::EssentialSet;
    double ld = std::log(g.dist);
    return g.diam >= 0.5 * g.dist / (ld * ld) ? ReturnKind::EssentialSet : ReturnKind::InessentialSet;
}

PartitionTree::PartitionTree(Complex c0, double side) {
    TreeNode root;
    root.geom = SquareGeom{c0, side};
    nodes_.push_back(root);
}

std::array<std::int32_t, 4> PartitionTree::split(std::int32_t i) {
    if (!is_leaf(i)) return node(i).child;
    const TreeNode parent = node(i); // copy: push_back invalidates references
    const double h = parent.geom.side / 2.0, q = parent.geom.side / 4.0;
    const Complex offs[4] = {{-q, q}, {q, q}, {-q, -q}, {q, -q}}; // NW, NE, SW, SE
    std::array<std::int32_t, 4> kids{};
    for (int j = 0; j < 4; ++j) {
        TreeNode child;
        child.geom = SquareGeom{parent.geom.center + offs[j], h};
        child.depth = parent.depth + 1;
        child.parent = i;
        child.status = parent.status;
        child.last_k = parent.last_k;
        kids[static_cast<std::size_t>(j)] = static_cast<std::int32_t>(nodes_.size());
        nodes_.push_back(child);
    }
    nodes_[static_cast<std::size_t>(i)].child = kids;
    return kids;
}

std::vector<std::int32_t> PartitionTree::leaves_under(std::int32_t i) const {
    std::vector<std::int32_t> out, stack{i};
    while (!stack.empty()) {
        std::int32_t n = stack.back();
        stack.pop_back();
        if (is_leaf(n)) {
            out.push_back(n);
            continue;
        }
        const auto& c = node(n).child;
        for (int j = 3; j >= 0; --j) stack.push_back(c[static_cast<std::size_t>(j)]);
    }
    return out;
}

std::vector<std::int32_t> PartitionTree::leaves() const { return leaves_under(root()); }

double PartitionTree::area(std::int32_t i) const {
    double s = node(i).geom.side;
    return s * s;
}

void PartitionTree::dump_jsonl(std::ostream& os) const {
    for (std::int32_t l : leaves()) {
        const TreeNode& n = node(l);
        os << "{\"center_re\":" << fmt_double(n.geom.center.real())
           << ",\"center_im\":" << fmt_double(n.geom.center.imag())
           << ",\"side\":" << fmt_double(n.geom.side)
           << ",\"depth\":" << n.depth
           << ",\"status\":\"" << to_string(n.status)
           << "\",\"last_k\":" << n.last_k << "}\n";
    }
}

RefineOutcome refine_at_essential_return(PartitionTree& tree, std::int32_t node,
                                         const FamilyParams& fam, std::size_t k,
                                         const CriticalNeighborhoods& nbhd,
                                         int sample_grid, int depth_limit, double S) {
    RefineOutcome out;
    std::vector<std::int32_t> stack{node};
    while (!stack.empty()) {
        std::int32_t i = stack.back();
        stack.pop_back();
        SquareTracker trk(tree.node(i).geom, fam, sample_grid);
        if (trk.is_partition_element(k, nbhd, S)) {
            tree.node(i).last_k = k;
            const ImageGeometry& g = trk.geometry(k);
            if (g.min_abs <= nbhd.delta_prime() && g.dist > 0.0) {
                double ld = std::log(g.dist);
                if (g.diam < 0.25 * (0.5 * g.dist / (ld * ld))) {
                    tree.node(i).status = SquareStatus::Anomalous;
                    out.anomalous.push_back(i);
                    continue;
                }
            }
            out.leaves.push_back(i);
            continue;
        }
        if (tree.node(i).depth >= depth_limit) {
            if (i == node)
                throw DepthLimit("refinement budget exhausted before any split");
            tree.node(i).last_k = k;
            tree.node(i).status = SquareStatus::Anomalous;
            out.anomalous.push_back(i);
            continue;
        }
        auto kids = tree.split(i);
        for (int j = 3; j >= 0; --j) stack.push_back(kids[static_cast<std::size_t>(j)]);
    }
    return out;
}

} // namespace celab
