#pragma once

#include <algorithm>
#include <cstdint>
#include <ostream>

namespace vidtext {

/// Axis-aligned pixel rectangle; (x, y) is the top-left corner.
struct Box {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    [[nodiscard]] constexpr std::int64_t area() const { return static_cast<std::int64_t>(w) * h; }
    [[nodiscard]] constexpr int right() const { return x + w; }
    [[nodiscard]] constexpr int bottom() const { return y + h; }
    [[nodiscard]] constexpr bool empty() const { return w <= 0 || h <= 0; }

    [[nodiscard]] constexpr bool contains(const Box& o) const {
        return o.x >= x && o.y >= y && o.right() <= right() && o.bottom() <= bottom();
    }

    [[nodiscard]] constexpr bool inside(int width, int height) const {
        return x >= 0 && y >= 0 && w >= 1 && h >= 1 && right() <= width && bottom() <= height;
    }

    friend constexpr bool operator==(const Box&, const Box&) = default;
};

[[nodiscard]] constexpr Box intersect(const Box& a, const Box& b) {
    const int x0 = std::max(a.x, b.x);
    const int y0 = std::max(a.y, b.y);
    const int x1 = std::min(a.right(), b.right());
    const int y1 = std::min(a.bottom(), b.bottom());
    if (x1 <= x0 || y1 <= y0) {
        return Box{x0, y0, 0, 0};
    }
    return Box{x0, y0, x1 - x0, y1 - y0};
}

[[nodiscard]] constexpr Box bounding_union(const Box& a, const Box& b) {
    const int x0 = std::min(a.x, b.x);
    const int y0 = std::min(a.y, b.y);
    const int x1 = std::max(a.right(), b.right());
    const int y1 = std::max(a.bottom(), b.bottom());
    return Box{x0, y0, x1 - x0, y1 - y0};
}

[[nodiscard]] constexpr std::int64_t intersection_area(const Box& a, const Box& b) {
    const Box i = intersect(a, b);
    return i.empty() ? 0 : i.area();
}

[[nodiscard]] inline double iou(const Box& a, const Box& b) {
    const std::int64_t inter = intersection_area(a, b);
    const std::int64_t uni = a.area() + b.area() - inter;
    return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

/// Orders boxes by (y, x, w, h).
[[nodiscard]] constexpr bool raster_less(const Box& a, const Box& b) {
    if (a.y != b.y) return a.y < b.y;
    if (a.x != b.x) return a.x < b.x;
    if (a.w != b.w) return a.w < b.w;
    return a.h < b.h;
}

inline std::ostream& operator<<(std::ostream& os, const Box& b) {
    return os << '(' << b.x << ',' << b.y << ',' << b.w << ',' << b.h << ')';
}

}  // namespace vidtext
