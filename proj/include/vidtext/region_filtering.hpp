#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "vidtext/edge_analysis.hpp"
#include "vidtext/localization.hpp"

namespace vidtext {

/// Straight segment in normal form: rho = x cos(theta) + y sin(theta), with
/// extremities measured along the line direction (-sin(theta), cos(theta)).
/// `Scalar` is double in the pipeline; the invariance checks instantiate it
/// with an exact rational type.
template <typename Scalar>
struct BasicLineSegment {
    int theta = 0;  // degrees, [0, 180)
    Scalar rho{};
    Scalar start_t{};
    Scalar end_t{};

    [[nodiscard]] Scalar length() const { return end_t - start_t; }
};

/// Line Segment Texture Feature over the dominant-orientation segment family.
template <typename Scalar>
struct BasicLstf {
    std::vector<Scalar> delta_r;  // gaps between successive rho values (regularity)
    std::vector<int> theta;       // orientations (directionality)
    std::vector<Scalar> r;        // lengths (similarity)
    std::vector<Scalar> dist;     // start offsets from the earliest start (alignment)

    [[nodiscard]] std::size_t segment_count() const { return r.size(); }
};

using LineSegment = BasicLineSegment<double>;
using Lstf = BasicLstf<double>;

/// Dominant orientation bin: the one holding most segments, ties to the smaller angle.
template <typename Scalar>
[[nodiscard]] std::optional<int> dominant_orientation(std::span<const BasicLineSegment<Scalar>> segments) {
    std::map<int, int> votes;
    for (const auto& s : segments) ++votes[s.theta];
    std::optional<int> best;
    int best_count = 0;
    for (const auto& [theta, count] : votes) {
        if (count > best_count) {
            best = theta;
            best_count = count;
        }
    }
    return best;
}

/// Builds the feature from the dominant family. Collinear pieces (same theta
/// and rho) are fused into one segment spanning them before orientations are
/// counted, so a line broken at stroke junctions counts once. Returns nullopt
/// when fewer than two distinct lines share the dominant orientation.
template <typename Scalar>
[[nodiscard]] std::optional<BasicLstf<Scalar>> extract_lstf(std::span<const BasicLineSegment<Scalar>> segments) {
    std::vector<BasicLineSegment<Scalar>> fused(segments.begin(), segments.end());
    std::sort(fused.begin(), fused.end(), [](const auto& a, const auto& b) {
        if (a.theta != b.theta) return a.theta < b.theta;
        if (a.rho < b.rho) return true;
        if (b.rho < a.rho) return false;
        return a.start_t < b.start_t;
    });
    std::vector<BasicLineSegment<Scalar>> all_lines;
    for (const auto& s : fused) {
        if (!all_lines.empty() && all_lines.back().theta == s.theta && all_lines.back().rho == s.rho) {
            all_lines.back().start_t = std::min(all_lines.back().start_t, s.start_t);
            all_lines.back().end_t = std::max(all_lines.back().end_t, s.end_t);
        } else {
            all_lines.push_back(s);
        }
    }
    const std::optional<int> theta = dominant_orientation(std::span<const BasicLineSegment<Scalar>>(all_lines));
    if (!theta) return std::nullopt;

    std::vector<BasicLineSegment<Scalar>> lines;
    for (const auto& s : all_lines) {
        if (s.theta == *theta) lines.push_back(s);
    }
    if (lines.size() < 2) return std::nullopt;

    Scalar first_start = lines.front().start_t;
    for (const auto& s : lines) first_start = std::min(first_start, s.start_t);

    BasicLstf<Scalar> f;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i > 0) f.delta_r.push_back(lines[i].rho - lines[i - 1].rho);
        f.theta.push_back(lines[i].theta);
        f.r.push_back(lines[i].length());
        f.dist.push_back(lines[i].start_t - first_start);
    }
    return f;
}

/// Normalized deviation of the gaps from their mean for sorted positions.
/// With `printed_mean_gap` the mean gap is taken as (last - 1 - first)/(ns - 1)
/// instead of (last - first)/(ns - 1). Returns nullopt for fewer than two
/// positions or a zero mean gap.
template <typename Scalar>
[[nodiscard]] std::optional<Scalar> regularity_of_positions(std::span<const Scalar> positions,
                                                            bool printed_mean_gap = false) {
    if (positions.size() < 2) return std::nullopt;
    const Scalar one(1);
    const Scalar intervals(static_cast<long>(positions.size() - 1));
    Scalar span = positions.back() - positions.front();
    if (printed_mean_gap) span = span - one;
    const Scalar mean_gap = span / intervals;
    if (!(Scalar(0) < mean_gap)) return std::nullopt;
    Scalar sum(0);
    for (std::size_t i = 0; i + 1 < positions.size(); ++i) {
        Scalar dev = (positions[i + 1] - positions[i]) - mean_gap;
        if (dev < Scalar(0)) dev = Scalar(0) - dev;
        sum = sum + dev;
    }
    return sum / (intervals * mean_gap);
}

/// Regularity R of a feature: positions are rebuilt from its gaps.
template <typename Scalar>
[[nodiscard]] std::optional<Scalar> regularity(const BasicLstf<Scalar>& lstf, bool printed_mean_gap = false) {
    std::vector<Scalar> positions{Scalar(0)};
    for (const Scalar& d : lstf.delta_r) positions.push_back(positions.back() + d);
    return regularity_of_positions<Scalar>(positions, printed_mean_gap);
}

struct HoughConfig {
    int vote_min = 8;
    int gap_tol = 2;
    int len_min = 4;
};

/// Progressive (theta, rho) Hough transform on a mask crop.
///
/// The on-pixels of a cell are traced along its line and cut into runs whose
/// inter-pixel gaps are at most `gap_tol` missing pixels; runs with extent at
/// least `len_min` qualify. A cell with `vote_min` live votes scores its best
/// run as (pixels present - pixels missing over the extent). The best-scoring
/// cell (ties: smaller theta, then smaller rho) emits all its qualifying runs,
/// their pixels leave the accumulator, and the rest are rescored. Scoring by
/// run quality rather than raw votes keeps a short stroke in its own bin when
/// a slightly tilted cell could reach one stray pixel across a gap.
/// Parallel pieces in the same theta bin whose rho values are within one bin
/// and whose extents are at most `gap_tol` apart are then fused (thick strokes).
[[nodiscard]] std::vector<LineSegment> hough_line_segments(const BinaryFrame& mask, const HoughConfig& config = {});

/// Zhang-Suen skeleton. Thick edge strokes (a 2-px line has a 4-px Sobel
/// footprint) collapse to 1-px centre lines, so a stroke votes for a single
/// accumulator cell instead of a fan of slightly tilted ones.
[[nodiscard]] BinaryFrame thin_mask(const BinaryFrame& mask);

/// Clears skeleton branch points (pixels with three or more 8-neighbours), so
/// strokes come apart from the box outline they join.
[[nodiscard]] BinaryFrame prune_branch_points(const BinaryFrame& skeleton);

/// Two dominant histogram peaks, P1 < P2 by position.
struct PeakPair {
    int p1 = 0;
    int p2 = 0;
    [[nodiscard]] int distance() const { return p2 - p1; }
};

/// The two local maxima with the largest counts at least `min_separation`
/// levels apart. nullopt when the histogram has no such pair.
[[nodiscard]] std::optional<PeakPair> histogram_peaks(const Histogram& histogram, int min_separation = 8);
[[nodiscard]] std::optional<PeakPair> histogram_peaks(std::span<const std::uint8_t> gray, int min_separation = 8);

struct ContrastResult {
    bool pass = false;
    int peak_distance = 0;
};

/// Pass iff the peak distance exceeds sigma; a degenerate histogram fails with distance 0.
[[nodiscard]] ContrastResult contrast_filter(const GrayFrame& frame, const Box& box, double sigma,
                                             int min_separation = 8);

struct LstfResult {
    bool pass = false;
    std::optional<double> regularity;  // raw, unclamped
};

/// Pass iff min(R, 1) <= r_max; insufficient structure or a zero mean gap fails.
[[nodiscard]] LstfResult lstf_filter(std::span<const LineSegment> segments, double r_max,
                                     bool printed_mean_gap = false);

enum class RejectionStage { None, Size, Contrast, Lstf };

[[nodiscard]] std::string_view to_string(RejectionStage stage);

struct FilterVerdict {
    CandidateRegion region;
    int contrast_peak_distance = 0;
    std::optional<double> regularity;
    bool accepted = false;
    RejectionStage rejection_stage = RejectionStage::None;
};

struct FilterConfig {
    int min_region_w = 16;
    int min_region_h = 8;
    double sigma = 110.0;
    double r_max = 0.2;
    int peak_separation = 8;
    HoughConfig hough;
    bool printed_mean_gap = false;
    bool thin_edges = true;  // skeletonize the edge crop before the Hough transform
    bool use_contrast = true;
    bool use_lstf = true;
};

[[nodiscard]] BinaryFrame crop_mask(const BinaryFrame& mask, const Box& box);

/// Runs size -> contrast -> LSTF on each candidate. `edge_mask` is the
/// binarized edge map of `frame`; when absent it is computed per frame.
[[nodiscard]] std::vector<FilterVerdict> filter_regions(const std::vector<CandidateRegion>& candidates,
                                                        const GrayFrame& frame, const FilterConfig& config,
                                                        const BinaryFrame* edge_mask = nullptr);

}  // namespace vidtext
