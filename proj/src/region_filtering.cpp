#include "vidtext/region_filtering.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <limits>
#include <numeric>
#include <queue>

namespace vidtext {

namespace {

struct TrigTable {
    std::array<double, 180> cos{};
    std::array<double, 180> sin{};
    TrigTable() {
        for (int t = 0; t < 180; ++t) {
            const double rad = t * std::numbers::pi / 180.0;
            cos[t] = std::cos(rad);
            sin[t] = std::sin(rad);
        }
    }
};

const TrigTable& trig() {
    static const TrigTable table;
    return table;
}

struct Cell {
    int score;
    int theta;
    int rho_index;
};

struct CellOrder {
    // priority_queue pops the "largest": higher score, then smaller theta, then smaller rho.
    bool operator()(const Cell& a, const Cell& b) const {
        if (a.score != b.score) return a.score < b.score;
        if (a.theta != b.theta) return a.theta > b.theta;
        return a.rho_index > b.rho_index;
    }
};

constexpr int kNoRun = std::numeric_limits<int>::min();

struct Point {
    int x;
    int y;
};

std::vector<LineSegment> fuse_parallel(std::vector<LineSegment> raw, int gap_tol) {
    std::sort(raw.begin(), raw.end(), [](const LineSegment& a, const LineSegment& b) {
        if (a.theta != b.theta) return a.theta < b.theta;
        if (a.rho != b.rho) return a.rho < b.rho;
        return a.start_t < b.start_t;
    });
    const std::size_t n = raw.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n && raw[j].theta == raw[i].theta; ++j) {
            if (raw[j].rho - raw[i].rho > 1.0) break;
            const double gap = std::max(raw[i].start_t, raw[j].start_t) - std::min(raw[i].end_t, raw[j].end_t);
            if (gap <= gap_tol) {
                const std::size_t a = find(i);
                const std::size_t b = find(j);
                parent[std::max(a, b)] = std::min(a, b);
            }
        }
    }
    struct Group {
        LineSegment seg;
        double rho_min;
        double rho_max;
    };
    std::vector<Group> groups;
    std::vector<long> slot(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t root = find(i);
        if (slot[root] < 0) {
            slot[root] = static_cast<long>(groups.size());
            groups.push_back(Group{raw[i], raw[i].rho, raw[i].rho});
            continue;
        }
        Group& g = groups[static_cast<std::size_t>(slot[root])];
        g.seg.start_t = std::min(g.seg.start_t, raw[i].start_t);
        g.seg.end_t = std::max(g.seg.end_t, raw[i].end_t);
        g.rho_min = std::min(g.rho_min, raw[i].rho);
        g.rho_max = std::max(g.rho_max, raw[i].rho);
    }
    std::vector<LineSegment> out;
    out.reserve(groups.size());
    for (Group& g : groups) {
        g.seg.rho = 0.5 * (g.rho_min + g.rho_max);
        out.push_back(g.seg);
    }
    return out;
}

}  // namespace

std::vector<LineSegment> hough_line_segments(const BinaryFrame& mask, const HoughConfig& config) {
    const TrigTable& tr = trig();
    std::vector<Point> points;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (mask.at(x, y)) points.push_back(Point{x, y});
        }
    }
    if (points.empty()) return {};

    const int offset = mask.width() + mask.height();
    const int bins = 2 * offset + 1;
    const std::size_t np = points.size();
    const auto cell_of = [bins](int t, int b) { return static_cast<std::size_t>(t) * bins + b; };

    // bin_of[theta * np + p] = rho index of point p at orientation theta.
    std::vector<int> bin_of(180 * np);
    std::vector<int> votes(static_cast<std::size_t>(180) * bins, 0);
    for (int t = 0; t < 180; ++t) {
        for (std::size_t p = 0; p < np; ++p) {
            const double rho = points[p].x * tr.cos[t] + points[p].y * tr.sin[t];
            const int b = static_cast<int>(std::lround(rho)) + offset;
            bin_of[t * np + p] = b;
            ++votes[cell_of(t, b)];
        }
    }

    // Per-orientation buckets: points grouped by rho bin (CSR layout).
    std::vector<int> start(static_cast<std::size_t>(180) * (bins + 1), 0);
    std::vector<int> members(180 * np);
    for (int t = 0; t < 180; ++t) {
        int* s = &start[static_cast<std::size_t>(t) * (bins + 1)];
        for (int b = 0; b < bins; ++b) s[b + 1] = s[b] + votes[cell_of(t, b)];
        std::vector<int> fill(s, s + bins);
        for (std::size_t p = 0; p < np; ++p) {
            members[t * np + static_cast<std::size_t>(fill[bin_of[t * np + p]]++)] = static_cast<int>(p);
        }
    }

    std::vector<char> alive(np, 1);
    std::vector<std::pair<double, int>> on_line;

    // Alive pixels of a cell sorted along the line, split into runs whose
    // consecutive pixels are at most gap_tol missing pixels apart.
    struct Run {
        std::size_t begin;
        std::size_t end;
    };
    std::vector<Run> runs;
    const auto trace = [&](int theta, int b) {
        const double c = tr.cos[theta];
        const double s = tr.sin[theta];
        on_line.clear();
        runs.clear();
        const int* s0 = &start[static_cast<std::size_t>(theta) * (bins + 1)];
        for (int k = s0[b]; k < s0[b + 1]; ++k) {
            const int p = members[static_cast<std::size_t>(theta) * np + static_cast<std::size_t>(k)];
            if (alive[static_cast<std::size_t>(p)]) on_line.emplace_back(-points[p].x * s + points[p].y * c, p);
        }
        std::sort(on_line.begin(), on_line.end());
        const double per_step = std::max(std::abs(c), std::abs(s));
        const double max_jump = (config.gap_tol + 1) / per_step + 1e-9;
        int best = kNoRun;
        std::size_t run_begin = 0;
        for (std::size_t i = 1; i <= on_line.size(); ++i) {
            if (i < on_line.size() && on_line[i].first - on_line[i - 1].first <= max_jump) continue;
            const double extent = on_line[i - 1].first - on_line[run_begin].first;
            if (extent >= config.len_min) {
                runs.push_back(Run{run_begin, i});
                // Pixels present minus pixels missing over the run's extent.
                const int present = static_cast<int>(i - run_begin);
                const int expected = static_cast<int>(std::lround(extent * per_step)) + 1;
                best = std::max(best, 2 * present - expected);
            }
            run_begin = i;
        }
        return best;
    };

    std::vector<int> score(static_cast<std::size_t>(180) * bins, kNoRun);
    std::priority_queue<Cell, std::vector<Cell>, CellOrder> queue;
    const auto rescore = [&](int t, int b) {
        const std::size_t cell = cell_of(t, b);
        score[cell] = votes[cell] >= config.vote_min ? trace(t, b) : kNoRun;
        if (score[cell] != kNoRun) queue.push(Cell{score[cell], t, b});
    };
    for (int t = 0; t < 180; ++t) {
        for (int b = 0; b < bins; ++b) {
            if (votes[cell_of(t, b)] >= config.vote_min) rescore(t, b);
        }
    }

    std::vector<LineSegment> raw;
    std::vector<char> touched(static_cast<std::size_t>(180) * bins, 0);
    std::vector<std::pair<int, int>> touched_cells;
    while (!queue.empty()) {
        const Cell top = queue.top();
        queue.pop();
        if (score[cell_of(top.theta, top.rho_index)] != top.score) continue;  // stale entry

        (void)trace(top.theta, top.rho_index);
        touched_cells.clear();
        for (const Run& r : runs) {
            raw.push_back(LineSegment{top.theta, static_cast<double>(top.rho_index - offset), on_line[r.begin].first,
                                      on_line[r.end - 1].first});
            for (std::size_t k = r.begin; k < r.end; ++k) {
                const auto p = static_cast<std::size_t>(on_line[k].second);
                alive[p] = 0;
                for (int t = 0; t < 180; ++t) {
                    const int b = bin_of[t * np + p];
                    const std::size_t cell = cell_of(t, b);
                    --votes[cell];
                    if (!touched[cell]) {
                        touched[cell] = 1;
                        touched_cells.emplace_back(t, b);
                    }
                }
            }
        }
        for (const auto& [t, b] : touched_cells) {
            touched[cell_of(t, b)] = 0;
            if (score[cell_of(t, b)] != kNoRun) rescore(t, b);
        }
    }
    return fuse_parallel(std::move(raw), config.gap_tol);
}

BinaryFrame prune_branch_points(const BinaryFrame& skeleton) {
    const int w = skeleton.width();
    const int h = skeleton.height();
    BinaryFrame out = skeleton;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!skeleton.at(x, y)) continue;
            int neighbours = 0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = x + dx;
                    const int ny = y + dy;
                    if ((dx || dy) && nx >= 0 && ny >= 0 && nx < w && ny < h && skeleton.at(nx, ny)) ++neighbours;
                }
            }
            if (neighbours >= 3) out.at(x, y) = 0;
        }
    }
    return out;
}

BinaryFrame thin_mask(const BinaryFrame& mask) {
    const int w = mask.width();
    const int h = mask.height();
    BinaryFrame img(w, h, mask.index(), 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) img.at(x, y) = mask.at(x, y) ? 1 : 0;
    }
    const auto px = [&](int x, int y) -> int {
        return (x >= 0 && y >= 0 && x < w && y < h) ? img.at(x, y) : 0;
    };
    std::vector<std::pair<int, int>> doomed;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int pass = 0; pass < 2; ++pass) {
            doomed.clear();
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    if (!img.at(x, y)) continue;
                    // Neighbours P2..P9, clockwise from north.
                    const int n[8] = {px(x, y - 1), px(x + 1, y - 1), px(x + 1, y), px(x + 1, y + 1),
                                      px(x, y + 1), px(x - 1, y + 1), px(x - 1, y), px(x - 1, y - 1)};
                    int count = 0;
                    int transitions = 0;
                    for (int k = 0; k < 8; ++k) {
                        count += n[k];
                        transitions += (n[k] == 0 && n[(k + 1) % 8] == 1);
                    }
                    if (count < 2 || count > 6 || transitions != 1) continue;
                    const bool keep = pass == 0 ? (n[0] * n[2] * n[4] != 0 || n[2] * n[4] * n[6] != 0)
                                                : (n[0] * n[2] * n[6] != 0 || n[0] * n[4] * n[6] != 0);
                    if (!keep) doomed.emplace_back(x, y);
                }
            }
            for (const auto& [x, y] : doomed) img.at(x, y) = 0;
            changed = changed || !doomed.empty();
        }
    }
    return img;
}

std::optional<PeakPair> histogram_peaks(const Histogram& hist, int min_separation) {
    std::vector<int> maxima;
    for (int i = 0; i < 256; ++i) {
        if (hist[i] == 0) continue;
        const std::uint64_t left = i > 0 ? hist[i - 1] : 0;
        const std::uint64_t right = i < 255 ? hist[i + 1] : 0;
        // A plateau contributes its first bin only.
        if (hist[i] > left && hist[i] >= right) maxima.push_back(i);
    }
    std::stable_sort(maxima.begin(), maxima.end(), [&](int a, int b) { return hist[a] > hist[b]; });
    if (maxima.empty()) return std::nullopt;
    const int first = maxima.front();
    for (std::size_t k = 1; k < maxima.size(); ++k) {
        if (std::abs(maxima[k] - first) >= min_separation) {
            return PeakPair{std::min(first, maxima[k]), std::max(first, maxima[k])};
        }
    }
    return std::nullopt;
}

std::optional<PeakPair> histogram_peaks(std::span<const std::uint8_t> gray, int min_separation) {
    Histogram hist{};
    for (std::uint8_t v : gray) ++hist[v];
    return histogram_peaks(hist, min_separation);
}

ContrastResult contrast_filter(const GrayFrame& frame, const Box& box, double sigma, int min_separation) {
    if (!box.inside(frame.width(), frame.height())) {
        throw ContractError("contrast_filter: region outside frame");
    }
    Histogram hist{};
    for (int y = box.y; y < box.bottom(); ++y) {
        for (int x = box.x; x < box.right(); ++x) ++hist[frame.at(x, y)];
    }
    const std::optional<PeakPair> peaks = histogram_peaks(hist, min_separation);
    if (!peaks) return ContrastResult{false, 0};
    return ContrastResult{peaks->distance() > sigma, peaks->distance()};
}

LstfResult lstf_filter(std::span<const LineSegment> segments, double r_max, bool printed_mean_gap) {
    const std::optional<Lstf> feature = extract_lstf(segments);
    if (!feature) return LstfResult{false, std::nullopt};
    const std::optional<double> r = regularity(*feature, printed_mean_gap);
    if (!r) return LstfResult{false, std::nullopt};
    return LstfResult{std::min(*r, 1.0) <= r_max, r};
}

std::string_view to_string(RejectionStage stage) {
    switch (stage) {
        case RejectionStage::None: return "none";
        case RejectionStage::Size: return "size";
        case RejectionStage::Contrast: return "contrast";
        case RejectionStage::Lstf: return "lstf";
    }
    return "none";
}

BinaryFrame crop_mask(const BinaryFrame& mask, const Box& box) {
    if (!box.inside(mask.width(), mask.height())) {
        throw ContractError("crop_mask: box outside mask");
    }
    BinaryFrame out(box.w, box.h, mask.index(), 0);
    for (int y = 0; y < box.h; ++y) {
        for (int x = 0; x < box.w; ++x) out.at(x, y) = mask.at(box.x + x, box.y + y);
    }
    return out;
}

std::vector<FilterVerdict> filter_regions(const std::vector<CandidateRegion>& candidates, const GrayFrame& frame,
                                          const FilterConfig& config, const BinaryFrame* edge_mask) {
    std::optional<BinaryFrame> own_mask;
    if (edge_mask == nullptr && config.use_lstf) {
        own_mask = binarize(sobel_edge_map(frame));
        edge_mask = &*own_mask;
    }
    if (edge_mask != nullptr && !edge_mask->same_size(frame)) {
        throw ContractError("filter_regions: edge mask and frame differ in size");
    }

    std::vector<FilterVerdict> verdicts;
    verdicts.reserve(candidates.size());
    for (const CandidateRegion& c : candidates) {
        if (c.frame_index != frame.index()) {
            throw ContractError("filter_regions: candidate from frame " + std::to_string(c.frame_index) +
                                " checked against frame " + std::to_string(frame.index()));
        }
        FilterVerdict v{c, 0, std::nullopt, false, RejectionStage::None};
        if (c.box.w < config.min_region_w || c.box.h < config.min_region_h) {
            v.rejection_stage = RejectionStage::Size;
            verdicts.push_back(v);
            continue;
        }
        if (config.use_contrast) {
            const ContrastResult cf = contrast_filter(frame, c.box, config.sigma, config.peak_separation);
            v.contrast_peak_distance = cf.peak_distance;
            if (!cf.pass) {
                v.rejection_stage = RejectionStage::Contrast;
                verdicts.push_back(v);
                continue;
            }
        }
        if (config.use_lstf) {
            BinaryFrame crop = crop_mask(*edge_mask, c.box);
            if (config.thin_edges) crop = prune_branch_points(thin_mask(crop));
            const std::vector<LineSegment> segments = hough_line_segments(crop, config.hough);
            const LstfResult lf = lstf_filter(segments, config.r_max, config.printed_mean_gap);
            v.regularity = lf.regularity;
            if (!lf.pass) {
                v.rejection_stage = RejectionStage::Lstf;
                verdicts.push_back(v);
                continue;
            }
        }
        v.accepted = true;
        verdicts.push_back(v);
    }
    return verdicts;
}

}  // namespace vidtext
