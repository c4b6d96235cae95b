#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vidtext/errors.hpp"
#include "vidtext/geometry.hpp"

namespace vidtext {

/// Row-major 2-D raster tagged with the ordinal of the frame it came from.
///
/// `Tag` keeps rasters with the same element type (gray levels vs. edge bits)
/// from being mixed up at call sites.
template <typename T, typename Tag>
class Raster {
public:
    using value_type = T;

    Raster() = default;

    Raster(int width, int height, int index, T fill = T{})
        : width_(checked_dim(width)), height_(checked_dim(height)), index_(index),
          data_(static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_), fill) {}

    Raster(int width, int height, int index, std::vector<T> data)
        : width_(checked_dim(width)), height_(checked_dim(height)), index_(index), data_(std::move(data)) {
        if (data_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_)) {
            throw ContractError("raster data length does not match width x height");
        }
    }

    [[nodiscard]] int width() const { return width_; }
    [[nodiscard]] int height() const { return height_; }
    [[nodiscard]] int index() const { return index_; }
    [[nodiscard]] Box bounds() const { return Box{0, 0, width_, height_}; }

    [[nodiscard]] const T& at(int x, int y) const { return data_[offset(x, y)]; }
    T& at(int x, int y) { return data_[offset(x, y)]; }

    [[nodiscard]] std::span<const T> pixels() const { return data_; }
    std::span<T> pixels() { return data_; }

    [[nodiscard]] bool same_size(int w, int h) const { return width_ == w && height_ == h; }
    template <typename U, typename G>
    [[nodiscard]] bool same_size(const Raster<U, G>& o) const {
        return width_ == o.width() && height_ == o.height();
    }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    static int checked_dim(int v) {
        if (v < 1) throw ContractError("raster dimensions must be >= 1");
        return v;
    }
    [[nodiscard]] std::size_t offset(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    int index_ = 0;
    std::vector<T> data_;
};

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    friend constexpr bool operator==(const Rgb&, const Rgb&) = default;
};

struct RgbTag;
struct GrayTag;

using RgbFrame = Raster<Rgb, RgbTag>;
using GrayFrame = Raster<std::uint8_t, GrayTag>;

/// HSV with hue stored as degrees / 360, so every component lies in [0, 1].
struct HsvPixel {
    double h = 0.0;
    double s = 0.0;
    double v = 0.0;
    friend constexpr bool operator==(const HsvPixel&, const HsvPixel&) = default;
};

/// Loads `pattern`-named frames (printf-style, one integer field such as
/// "frame_%06d.png") from `directory`, ordered by that number.
///
/// Files may be PNG or binary PPM (P6); the format is sniffed from the
/// header, not the extension. Numbering must be gap-free; the returned
/// frames carry indices 0..n-1.
[[nodiscard]] std::vector<RgbFrame> load_frame_sequence(const std::filesystem::path& directory,
                                                        std::string_view pattern = "frame_%06d.png");

/// Decodes one PNG or P6 file.
[[nodiscard]] RgbFrame load_image(const std::filesystem::path& file, int index = 0);

/// BT.601 luma, rounded and clamped.
[[nodiscard]] GrayFrame to_grayscale(const RgbFrame& frame);

/// Hexcone conversion of components in [0, 1]. Achromatic input gives h = s = 0.
[[nodiscard]] HsvPixel rgb_to_hsv(double r, double g, double b);

void write_png(const std::filesystem::path& file, const RgbFrame& frame);
void write_png(const std::filesystem::path& file, const GrayFrame& frame);
void write_ppm(const std::filesystem::path& file, const RgbFrame& frame);
void write_pgm(const std::filesystem::path& file, int width, int height, std::span<const std::uint8_t> gray);

/// Expands a printf-style integer template ("frame_%06d.png") for `n`.
[[nodiscard]] std::string format_frame_name(std::string_view pattern, int n);

[[nodiscard]] RgbFrame crop(const RgbFrame& frame, const Box& box);

}  // namespace vidtext
