#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "vidtext/edge_analysis.hpp"
#include "vidtext/frame_io.hpp"

namespace vidtext::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        const auto base = std::filesystem::temp_directory_path();
        do {
            path_ = base / ("vidtext-test-" + std::to_string(rd()));
        } while (std::filesystem::exists(path_));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline GrayFrame gray_frame(int w, int h, std::uint8_t level, int index = 0) { return GrayFrame(w, h, index, level); }

inline RgbFrame rgb_frame(int w, int h, Rgb colour, int index = 0) { return RgbFrame(w, h, index, colour); }

template <typename T, typename Tag>
void fill(Raster<T, Tag>& r, const Box& b, T value) {
    for (int y = b.y; y < b.bottom(); ++y) {
        for (int x = b.x; x < b.right(); ++x) r.at(x, y) = value;
    }
}

/// Dark band with bright vertical strokes every `period` px, like the generator's pseudo-text.
inline void paint_stroke_band(GrayFrame& g, const Box& band, int period = 11, int stroke_w = 2,
                              std::uint8_t fill_level = 25, std::uint8_t stroke_level = 250) {
    fill(g, band, fill_level);
    for (int x = band.x + period / 2; x + stroke_w + period / 2 <= band.right(); x += period) {
        fill(g, Box{x, band.y, stroke_w, band.h}, stroke_level);
    }
}

inline BinaryFrame random_mask(std::mt19937_64& rng, int w, int h, double p, int index = 0) {
    std::bernoulli_distribution bit(p);
    BinaryFrame m(w, h, index, 0);
    for (auto& v : m.pixels()) v = bit(rng) ? 1 : 0;
    return m;
}

}  // namespace vidtext::testing
