#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "vidtext/edge_analysis.hpp"

namespace vidtext {

/// Quadtree node. `density` is the fraction of set bits inside `box`.
struct Block {
    Box box;
    double density = 0.0;
    int depth = 0;
    friend bool operator==(const Block&, const Block&) = default;
};

/// Merged group of dense leaves, expressed in the later frame of its pair.
struct CandidateRegion {
    int frame_index = 0;
    Box box;
    double density = 0.0;
    int source_leaves = 0;
    friend bool operator==(const CandidateRegion&, const CandidateRegion&) = default;
};

enum class SplitRule {
    /// Split while the block holds more set bits than one dense minimum-size
    /// block (count > T * min_size^2).
    EdgeMass,
    /// Split while the block density exceeds T.
    Literal,
};

enum class BinarizationMode {
    PerFrame,
    JointPair,
};

struct LocalizationConfig {
    double split_threshold = 0.10;
    int min_block = 8;
    double density_eps = 0.15;
    SplitRule split_rule = SplitRule::EdgeMass;
    BinarizationMode binarization = BinarizationMode::PerFrame;
};

/// Set-bit counts over a mask, queried per rectangle in O(1).
class IntegralMask {
public:
    explicit IntegralMask(const BinaryFrame& mask);
    [[nodiscard]] std::int64_t count(const Box& box) const;
    [[nodiscard]] int width() const { return width_; }
    [[nodiscard]] int height() const { return height_; }

private:
    int width_;
    int height_;
    std::vector<std::int64_t> sums_;
};

/// Fraction of set bits inside `box`.
[[nodiscard]] double block_edge_density(const BinaryFrame& diff, const Box& box);

/// Recursive 4-way subdivision of the whole frame. Odd extents split as
/// floor/ceil halves, children in TL, TR, BL, BR order. Returns the terminal
/// blocks whose density exceeds `threshold`, in depth-first order.
[[nodiscard]] std::vector<Block> quadtree_split(const BinaryFrame& diff, double threshold, int min_size,
                                                SplitRule rule = SplitRule::EdgeMass);

/// True iff the rectangles share a boundary segment at least one pixel long.
[[nodiscard]] bool blocks_adjacent(const Box& a, const Box& b);

/// Groups adjacent leaves whose densities differ by at most `density_eps`.
/// One region per connected component, sorted by (y, x, w, h). `frame_index`
/// is left at 0 for the caller to fill in.
[[nodiscard]] std::vector<CandidateRegion> merge_blocks(const std::vector<Block>& leaves, double density_eps);

/// Intermediate products of one frame pair, kept for stage dumps and for the
/// filtering stage.
struct PairAnalysis {
    EdgeFrame prev_edges;
    EdgeFrame next_edges;
    BinaryFrame prev_mask;
    BinaryFrame next_mask;
    BinaryFrame difference;
    std::vector<Block> leaves;
    std::vector<CandidateRegion> regions;
};

[[nodiscard]] PairAnalysis analyze_pair(const GrayFrame& prev, const GrayFrame& next, const LocalizationConfig& config);

/// sobel -> binarize -> difference -> split -> merge; regions carry next.index().
[[nodiscard]] std::vector<CandidateRegion> localize_candidates(const GrayFrame& prev, const GrayFrame& next,
                                                               const LocalizationConfig& config);

}  // namespace vidtext
