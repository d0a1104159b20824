#pragma once

#include "celab/dynamics.hpp"
#include "celab/returns.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace celab {

enum class SquareStatus : std::uint8_t {
    Active,
    DeletedAlpha,
    Escaped,
    Undetermined,
    Anomalous,
};

const char* to_string(SquareStatus s);

// Axis-aligned parameter square: side `side`, centred at `center`.
struct SquareGeom {
    Complex center;
    double side = 0.0;
};

// 4 corners (NW, NE, SW, SE), the center, then a g x g lattice including the
// edges when g >= 2. Duplicates are kept; min/max statistics ignore them.
std::vector<Complex> square_samples(const SquareGeom& geom, int sample_grid);

struct ImageGeometry {
    double diam = 0.0;
    double min_abs = 0.0; // min |xi_k| over live samples
    // max(0, min_abs - diam/2): a conservative lower bound for the distance
    // of the image set from the critical point
    double dist = 0.0;
    bool sample_escaped = false; // some sample escaped before k
};

// One-shot geometry of xi_k over the sample set (recomputes the orbits).
ImageGeometry image_geometry(const SquareGeom& geom, const FamilyParams& fam, std::size_t k, int sample_grid);

// Incremental per-square bookkeeping: sample orbits and per-step geometry are
// cached, so advancing from k-1 to k costs O(samples).
class SquareTracker {
public:
    SquareTracker(SquareGeom geom, const FamilyParams& fam, int sample_grid);

    const SquareGeom& geom() const { return geom_; }
    const FamilyParams& family() const { return fam_; }
    std::size_t n_samples() const { return samples_.size(); }
    const Complex& sample(std::size_t i) const { return samples_[i]; }
    const OrbitRecord& orbit(std::size_t i) const { return orbits_[i]; }

    const ImageGeometry& geometry(std::size_t k);

    // sup / inf of the exponent profiles over the sample set at time k
    double sup_alpha(std::size_t k);
    double inf_gamma(std::size_t k);

    // true iff for every 1 <= j <= k the image satisfies the partition rule:
    //   diam <= dist/(log dist)^2 when the image meets U, else diam <= S.
    // Images straddling 0 (dist = 0) always fail, sample escape fails.
    bool is_partition_element(std::size_t k, const CriticalNeighborhoods& nbhd, double S);

private:
    SquareGeom geom_;
    FamilyParams fam_;
    std::vector<Complex> samples_;
    std::vector<OrbitRecord> orbits_;
    std::vector<ImageGeometry> geom_cache_; // index k, [0] present
    std::size_t checked_upto_ = 0;          // partition rule verified through here
    std::size_t first_violation_ = 0;       // 0 = none seen
};

// pre: the image meets U' at time k (its conservative dist is < delta').
// EssentialSet iff diam >= (1/2) dist / (log dist)^2 (straddling counts).
ReturnKind classify_return_set(SquareTracker& trk, std::size_t k, const CriticalNeighborhoods& nbhd);

struct TreeNode {
    SquareGeom geom;
    int depth = 0;
    std::int32_t parent = -1;
    std::array<std::int32_t, 4> child{-1, -1, -1, -1};
    SquareStatus status = SquareStatus::Active;
    std::size_t last_k = 0;
};

// Quadtree over a root square Q(c0, epsilon); splits are deterministic
// (NW, NE, SW, SE) and nodes are only appended, so indices are stable.
class PartitionTree {
public:
    PartitionTree(Complex c0, double side);

    std::int32_t root() const { return 0; }
    std::size_t size() const { return nodes_.size(); }
    const TreeNode& node(std::int32_t i) const { return nodes_[static_cast<std::size_t>(i)]; }
    TreeNode& node(std::int32_t i) { return nodes_[static_cast<std::size_t>(i)]; }
    bool is_leaf(std::int32_t i) const { return node(i).child[0] < 0; }

    std::array<std::int32_t, 4> split(std::int32_t i);

    // leaves in depth-first NW,NE,SW,SE order (deterministic)
    std::vector<std::int32_t> leaves() const;
    std::vector<std::int32_t> leaves_under(std::int32_t i) const;

    double area(std::int32_t i) const;

    // one JSON object per leaf: center_re, center_im, side, depth, status, last_k
    void dump_jsonl(std::ostream& os) const;

private:
    std::vector<TreeNode> nodes_;
};

struct RefineOutcome {
    std::vector<std::int32_t> leaves;    // partition elements at time k
    std::vector<std::int32_t> anomalous; // depth-capped or overshot below the essential floor
};

// Splits `node` until every leaf is a partition element at time k. Leaves
// overshooting below a quarter of the essential floor (1/2) dist/(log dist)^2
// and leaves still failing at depth_limit are flagged Anomalous.
// throws DepthLimit if depth_limit does not allow a single split.
RefineOutcome refine_at_essential_return(PartitionTree& tree, std::int32_t node,
                                         const FamilyParams& fam, std::size_t k,
                                         const CriticalNeighborhoods& nbhd,
                                         int sample_grid, int depth_limit, double S);

} // namespace celab
