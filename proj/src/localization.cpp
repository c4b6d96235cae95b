#include "vidtext/localization.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vidtext {

IntegralMask::IntegralMask(const BinaryFrame& mask)
    : width_(mask.width()), height_(mask.height()),
      sums_(static_cast<std::size_t>(width_ + 1) * static_cast<std::size_t>(height_ + 1), 0) {
    const auto stride = static_cast<std::size_t>(width_ + 1);
    for (int y = 0; y < height_; ++y) {
        std::int64_t row = 0;
        for (int x = 0; x < width_; ++x) {
            row += mask.at(x, y) != 0;
            sums_[(y + 1) * stride + (x + 1)] = sums_[y * stride + (x + 1)] + row;
        }
    }
}

std::int64_t IntegralMask::count(const Box& b) const {
    const auto stride = static_cast<std::size_t>(width_ + 1);
    const auto at = [&](int x, int y) { return sums_[static_cast<std::size_t>(y) * stride + static_cast<std::size_t>(x)]; };
    return at(b.right(), b.bottom()) - at(b.x, b.bottom()) - at(b.right(), b.y) + at(b.x, b.y);
}

double block_edge_density(const BinaryFrame& diff, const Box& box) {
    if (box.w <= 0 || box.h <= 0) {
        throw ContractError("block_edge_density: zero-area box");
    }
    if (!box.inside(diff.width(), diff.height())) {
        throw ContractError("block_edge_density: box outside frame");
    }
    std::int64_t n = 0;
    for (int y = box.y; y < box.bottom(); ++y) {
        for (int x = box.x; x < box.right(); ++x) n += diff.at(x, y) != 0;
    }
    return static_cast<double>(n) / static_cast<double>(box.area());
}

namespace {

struct Splitter {
    const IntegralMask& integral;
    double threshold;
    int min_size;
    SplitRule rule;
    std::vector<Block>& out;

    void visit(const Box& box, int depth) {
        const std::int64_t n = integral.count(box);
        const double density = static_cast<double>(n) / static_cast<double>(box.area());
        const bool big_enough = std::min(box.w, box.h) >= 2 * min_size;
        bool split = false;
        if (big_enough) {
            if (rule == SplitRule::Literal) {
                split = density > threshold;
            } else {
                split = static_cast<double>(n) > threshold * static_cast<double>(min_size) * min_size;
            }
        }
        if (!split) {
            if (density > threshold) out.push_back(Block{box, density, depth});
            return;
        }
        const int w0 = box.w / 2;
        const int h0 = box.h / 2;
        const int w1 = box.w - w0;
        const int h1 = box.h - h0;
        visit(Box{box.x, box.y, w0, h0}, depth + 1);
        visit(Box{box.x + w0, box.y, w1, h0}, depth + 1);
        visit(Box{box.x, box.y + h0, w0, h1}, depth + 1);
        visit(Box{box.x + w0, box.y + h0, w1, h1}, depth + 1);
    }
};

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
    std::size_t find(std::size_t i) {
        while (parent_[i] != i) {
            parent_[i] = parent_[parent_[i]];
            i = parent_[i];
        }
        return i;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent_[b] = a;
    }

private:
    std::vector<std::size_t> parent_;
};

}  // namespace

std::vector<Block> quadtree_split(const BinaryFrame& diff, double threshold, int min_size, SplitRule rule) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw ContractError("quadtree_split: threshold must lie in (0,1)");
    }
    if (min_size < 2) {
        throw ContractError("quadtree_split: min_size must be >= 2");
    }
    const IntegralMask integral(diff);
    std::vector<Block> leaves;
    Splitter{integral, threshold, min_size, rule, leaves}.visit(diff.bounds(), 0);
    return leaves;
}

bool blocks_adjacent(const Box& a, const Box& b) {
    const int overlap_y = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
    const int overlap_x = std::min(a.right(), b.right()) - std::max(a.x, b.x);
    if ((a.right() == b.x || b.right() == a.x) && overlap_y >= 1) return true;
    if ((a.bottom() == b.y || b.bottom() == a.y) && overlap_x >= 1) return true;
    return false;
}

std::vector<CandidateRegion> merge_blocks(const std::vector<Block>& leaves, double density_eps) {
    const std::size_t n = leaves.size();
    DisjointSets sets(n);

    // Leaves sorted by x so the adjacency scan can stop once boxes are too far right.
    std::vector<std::size_t> by_x(n);
    std::iota(by_x.begin(), by_x.end(), 0);
    std::sort(by_x.begin(), by_x.end(), [&](std::size_t a, std::size_t b) {
        return leaves[a].box.x < leaves[b].box.x || (leaves[a].box.x == leaves[b].box.x && a < b);
    });
    for (std::size_t ii = 0; ii < n; ++ii) {
        const Block& a = leaves[by_x[ii]];
        for (std::size_t jj = ii + 1; jj < n; ++jj) {
            const Block& b = leaves[by_x[jj]];
            if (b.box.x > a.box.right()) break;
            if (std::abs(a.density - b.density) <= density_eps && blocks_adjacent(a.box, b.box)) {
                sets.unite(by_x[ii], by_x[jj]);
            }
        }
    }

    std::vector<CandidateRegion> regions;
    std::vector<long> slot(n, -1);
    std::vector<double> mass;
    std::vector<std::int64_t> area;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t root = sets.find(i);
        if (slot[root] < 0) {
            slot[root] = static_cast<long>(regions.size());
            regions.push_back(CandidateRegion{0, leaves[i].box, 0.0, 0});
            mass.push_back(0.0);
            area.push_back(0);
        }
        const auto k = static_cast<std::size_t>(slot[root]);
        CandidateRegion& r = regions[k];
        r.box = bounding_union(r.box, leaves[i].box);
        r.source_leaves += 1;
        mass[k] += leaves[i].density * static_cast<double>(leaves[i].box.area());
        area[k] += leaves[i].box.area();
    }
    for (std::size_t k = 0; k < regions.size(); ++k) {
        regions[k].density = mass[k] / static_cast<double>(area[k]);
    }
    std::sort(regions.begin(), regions.end(),
              [](const CandidateRegion& a, const CandidateRegion& b) { return raster_less(a.box, b.box); });
    return regions;
}

PairAnalysis analyze_pair(const GrayFrame& prev, const GrayFrame& next, const LocalizationConfig& config) {
    if (!prev.same_size(next)) {
        throw ContractError("localize: frames " + std::to_string(prev.index()) + " and " +
                            std::to_string(next.index()) + " differ in size");
    }
    EdgeFrame prev_edges = sobel_edge_map(prev);
    EdgeFrame next_edges = sobel_edge_map(next);
    BinaryFrame prev_mask;
    BinaryFrame next_mask;
    if (config.binarization == BinarizationMode::JointPair) {
        BinaryPair pair = binarize_pair_jointly(prev_edges, next_edges);
        prev_mask = std::move(pair.prev);
        next_mask = std::move(pair.next);
    } else {
        prev_mask = binarize(prev_edges);
        next_mask = binarize(next_edges);
    }
    BinaryFrame difference = edge_pair_difference(prev_mask, next_mask);
    std::vector<Block> leaves =
        quadtree_split(difference, config.split_threshold, config.min_block, config.split_rule);
    std::vector<CandidateRegion> regions = merge_blocks(leaves, config.density_eps);
    for (CandidateRegion& r : regions) r.frame_index = next.index();
    return PairAnalysis{std::move(prev_edges), std::move(next_edges), std::move(prev_mask), std::move(next_mask),
                        std::move(difference), std::move(leaves), std::move(regions)};
}

std::vector<CandidateRegion> localize_candidates(const GrayFrame& prev, const GrayFrame& next,
                                                 const LocalizationConfig& config) {
    return analyze_pair(prev, next, config).regions;
}

}  // namespace vidtext
