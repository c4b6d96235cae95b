#pragma once

#include <array>
#include <cstdint>

#include "vidtext/frame_io.hpp"

namespace vidtext {

struct EdgeTag;
struct BinaryTag;

/// Gradient magnitudes, non-negative. Frames from sobel_edge_map carry a zero 1-pixel border.
using EdgeFrame = Raster<double, EdgeTag>;
/// Edge mask with values 0 or 1.
using BinaryFrame = Raster<std::uint8_t, BinaryTag>;

using Histogram = std::array<std::uint64_t, 256>;

/// 3x3 Sobel gradient magnitude sqrt(fx^2 + fy^2). Requires a frame of at least 3x3.
[[nodiscard]] EdgeFrame sobel_edge_map(const GrayFrame& frame);

/// Threshold t maximizing between-class variance of [0..t] vs [t+1..255].
///
/// Candidates are restricted to the occupied range [lowest nonzero bin, highest
/// nonzero bin] and ties go to the smallest t, so a single-level histogram
/// returns that level. Throws DegenerateInputError on an all-zero histogram.
[[nodiscard]] int otsu_threshold(const Histogram& histogram);

/// Magnitudes rescaled so the frame maximum maps to 255, rounded to integers.
[[nodiscard]] GrayFrame quantize_magnitudes(const EdgeFrame& edges, double scale_max);

/// Per-frame Otsu binarization: bit = 1 iff quantized magnitude > threshold.
[[nodiscard]] BinaryFrame binarize(const EdgeFrame& edges);

/// Binarizes an edge pair against a shared scale and threshold computed from
/// both frames together.
struct BinaryPair {
    BinaryFrame prev;
    BinaryFrame next;
};
[[nodiscard]] BinaryPair binarize_pair_jointly(const EdgeFrame& prev, const EdgeFrame& next);

/// Newly appeared edges: next AND NOT prev. The result carries next's index.
[[nodiscard]] BinaryFrame edge_pair_difference(const BinaryFrame& prev, const BinaryFrame& next);

[[nodiscard]] std::int64_t popcount(const BinaryFrame& mask);

/// 0/1 mask scaled to 0/255 for PGM dumps.
[[nodiscard]] std::vector<std::uint8_t> mask_to_gray(const BinaryFrame& mask);
/// Edge magnitudes scaled to 0..255 for PGM dumps.
[[nodiscard]] std::vector<std::uint8_t> edges_to_gray(const EdgeFrame& edges);

}  // namespace vidtext
