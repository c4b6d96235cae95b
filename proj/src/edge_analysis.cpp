#include "vidtext/edge_analysis.hpp"

#include <algorithm>
#include <cmath>

namespace vidtext {

EdgeFrame sobel_edge_map(const GrayFrame& frame) {
    const int w = frame.width();
    const int h = frame.height();
    if (w < 3 || h < 3) {
        throw ContractError("sobel_edge_map needs a frame of at least 3x3");
    }
    EdgeFrame out(w, h, frame.index(), 0.0);
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            const int a = frame.at(x - 1, y - 1);
            const int b = frame.at(x, y - 1);
            const int c = frame.at(x + 1, y - 1);
            const int d = frame.at(x - 1, y);
            const int f = frame.at(x + 1, y);
            const int g = frame.at(x - 1, y + 1);
            const int k = frame.at(x, y + 1);
            const int l = frame.at(x + 1, y + 1);
            const int fx = (c + 2 * f + l) - (a + 2 * d + g);
            const int fy = (g + 2 * k + l) - (a + 2 * b + c);
            out.at(x, y) = std::sqrt(static_cast<double>(fx * fx + fy * fy));
        }
    }
    return out;
}

namespace {

// Compares x1^2/d1 against x2^2/d2 exactly while it fits in 128 bits.
int compare_scores(__int128 x1, __int128 d1, __int128 x2, __int128 d2, bool exact) {
    if (exact) {
        const __int128 lhs = x1 * x1 * d2;
        const __int128 rhs = x2 * x2 * d1;
        return lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
    }
    const long double a = static_cast<long double>(x1) * static_cast<long double>(x1) / static_cast<long double>(d1);
    const long double b = static_cast<long double>(x2) * static_cast<long double>(x2) / static_cast<long double>(d2);
    return a < b ? -1 : (a > b ? 1 : 0);
}

}  // namespace

int otsu_threshold(const Histogram& histogram) {
    int lo = -1;
    int hi = -1;
    std::int64_t total = 0;
    std::int64_t weighted = 0;
    for (int i = 0; i < 256; ++i) {
        const auto n = static_cast<std::int64_t>(histogram[i]);
        if (n == 0) continue;
        if (lo < 0) lo = i;
        hi = i;
        total += n;
        weighted += n * i;
    }
    if (lo < 0) {
        throw DegenerateInputError("otsu_threshold: histogram is empty");
    }

    // sigma_b^2 * N^2 = (S0*N - S*n0)^2 / (n0*n1); N^2 is common to all t.
    const bool exact = total <= 400'000;
    int best_t = lo;
    __int128 best_x = 0;
    __int128 best_d = 1;
    bool have_best = false;
    std::int64_t n0 = 0;
    std::int64_t s0 = 0;
    for (int t = lo; t <= hi; ++t) {
        n0 += static_cast<std::int64_t>(histogram[t]);
        s0 += static_cast<std::int64_t>(histogram[t]) * t;
        const std::int64_t n1 = total - n0;
        __int128 x = 0;
        __int128 d = 1;
        if (n0 > 0 && n1 > 0) {
            x = static_cast<__int128>(s0) * total - static_cast<__int128>(weighted) * n0;
            d = static_cast<__int128>(n0) * n1;
        }
        if (!have_best || compare_scores(x, d, best_x, best_d, exact) > 0) {
            best_t = t;
            best_x = x;
            best_d = d;
            have_best = true;
        }
    }
    return best_t;
}

GrayFrame quantize_magnitudes(const EdgeFrame& edges, double scale_max) {
    GrayFrame q(edges.width(), edges.height(), edges.index(), 0);
    if (scale_max <= 0.0) return q;
    auto src = edges.pixels();
    auto dst = q.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const long v = std::lround(src[i] * 255.0 / scale_max);
        dst[i] = static_cast<std::uint8_t>(std::clamp<long>(v, 0, 255));
    }
    return q;
}

namespace {

double max_magnitude(const EdgeFrame& edges) {
    double m = 0.0;
    for (double v : edges.pixels()) {
        if (v < 0.0 || !std::isfinite(v)) throw ContractError("edge magnitudes must be finite and >= 0");
        m = std::max(m, v);
    }
    return m;
}

void accumulate(Histogram& hist, const GrayFrame& q) {
    for (std::uint8_t v : q.pixels()) ++hist[v];
}

BinaryFrame threshold_mask(const GrayFrame& q, int t) {
    BinaryFrame out(q.width(), q.height(), q.index(), 0);
    auto src = q.pixels();
    auto dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > t ? 1 : 0;
    return out;
}

}  // namespace

BinaryFrame binarize(const EdgeFrame& edges) {
    const double mx = max_magnitude(edges);
    if (mx == 0.0) {
        return BinaryFrame(edges.width(), edges.height(), edges.index(), 0);
    }
    const GrayFrame q = quantize_magnitudes(edges, mx);
    Histogram hist{};
    accumulate(hist, q);
    return threshold_mask(q, otsu_threshold(hist));
}

BinaryPair binarize_pair_jointly(const EdgeFrame& prev, const EdgeFrame& next) {
    if (!prev.same_size(next)) {
        throw ContractError("binarize_pair_jointly: frame sizes differ");
    }
    const double mx = std::max(max_magnitude(prev), max_magnitude(next));
    if (mx == 0.0) {
        return {BinaryFrame(prev.width(), prev.height(), prev.index(), 0),
                BinaryFrame(next.width(), next.height(), next.index(), 0)};
    }
    const GrayFrame qp = quantize_magnitudes(prev, mx);
    const GrayFrame qn = quantize_magnitudes(next, mx);
    Histogram hist{};
    accumulate(hist, qp);
    accumulate(hist, qn);
    const int t = otsu_threshold(hist);
    return {threshold_mask(qp, t), threshold_mask(qn, t)};
}

BinaryFrame edge_pair_difference(const BinaryFrame& prev, const BinaryFrame& next) {
    if (!prev.same_size(next)) {
        throw ContractError("edge_pair_difference: frame sizes differ");
    }
    if (next.index() != prev.index() + 1) {
        throw ContractError("edge_pair_difference: frames " + std::to_string(prev.index()) + " and " +
                            std::to_string(next.index()) + " are not consecutive");
    }
    BinaryFrame out(next.width(), next.height(), next.index(), 0);
    auto a = prev.pixels();
    auto b = next.pixels();
    auto d = out.pixels();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = (b[i] != 0 && a[i] == 0) ? 1 : 0;
    return out;
}

std::int64_t popcount(const BinaryFrame& mask) {
    std::int64_t n = 0;
    for (std::uint8_t v : mask.pixels()) n += v != 0;
    return n;
}

std::vector<std::uint8_t> mask_to_gray(const BinaryFrame& mask) {
    std::vector<std::uint8_t> out(mask.pixels().size());
    std::transform(mask.pixels().begin(), mask.pixels().end(), out.begin(),
                   [](std::uint8_t v) -> std::uint8_t { return v ? 255 : 0; });
    return out;
}

std::vector<std::uint8_t> edges_to_gray(const EdgeFrame& edges) {
    const GrayFrame q = quantize_magnitudes(edges, max_magnitude(edges));
    return {q.pixels().begin(), q.pixels().end()};
}

}  // namespace vidtext
