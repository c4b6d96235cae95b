#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "vidtext/evaluation.hpp"
#include "vidtext/region_filtering.hpp"

using namespace vidtext;
using namespace vidtext::testing;

namespace {

LineSegment seg(int theta, double rho, double start = 0.0, double end = 10.0) { return {theta, rho, start, end}; }

std::optional<double> regularity_at(std::vector<double> positions) {
    return regularity_of_positions<double>(positions);
}

std::vector<int> accepted_indices(const std::vector<FilterVerdict>& v) {
    std::vector<int> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i].accepted) out.push_back(static_cast<int>(i));
    }
    return out;
}

}  // namespace

TEST(Peaks, TwoSpikes) {
    Histogram h{};
    h[10] = 50;
    h[200] = 50;
    const auto p = histogram_peaks(h);
    ASSERT_TRUE(p);
    EXPECT_EQ(p->p1, 10);
    EXPECT_EQ(p->p2, 200);
    EXPECT_EQ(p->distance(), 190);
}

TEST(Peaks, UnimodalIsDegenerate) {
    Histogram h{};
    h[128] = 400;
    EXPECT_FALSE(histogram_peaks(h));
}

TEST(Peaks, TopTwoByCount) {
    Histogram h{};
    h[20] = 100;
    h[140] = 90;
    h[240] = 95;
    const auto p = histogram_peaks(h);
    ASSERT_TRUE(p);
    EXPECT_EQ(p->p1, 20);
    EXPECT_EQ(p->p2, 240);
}

TEST(Peaks, AdjacentNoisePeaksAreTooClose) {
    Histogram h{};
    h[100] = 50;
    h[102] = 49;
    EXPECT_FALSE(histogram_peaks(h, 8));
    EXPECT_TRUE(histogram_peaks(h, 2));
}

TEST(Contrast, Examples) {
    GrayFrame g = gray_frame(20, 10, 10);
    fill(g, Box{0, 0, 10, 10}, std::uint8_t{200});
    const ContrastResult high = contrast_filter(g, g.bounds(), 110.0);
    EXPECT_TRUE(high.pass);
    EXPECT_EQ(high.peak_distance, 190);

    GrayFrame m = gray_frame(20, 10, 100);
    fill(m, Box{0, 0, 10, 10}, std::uint8_t{150});
    const ContrastResult low = contrast_filter(m, m.bounds(), 110.0);
    EXPECT_FALSE(low.pass);
    EXPECT_EQ(low.peak_distance, 50);

    const ContrastResult flat = contrast_filter(gray_frame(20, 10, 90), Box{0, 0, 20, 10}, 110.0);
    EXPECT_FALSE(flat.pass);
    EXPECT_EQ(flat.peak_distance, 0);
}

TEST(Hough, BlankMask) { EXPECT_TRUE(hough_line_segments(BinaryFrame(32, 32, 0, 0)).empty()); }

TEST(Hough, SingleVerticalStroke) {
    BinaryFrame m(32, 32, 0, 0);
    fill(m, Box{12, 5, 1, 21}, std::uint8_t{1});
    const auto segs = hough_line_segments(m);
    ASSERT_EQ(segs.size(), 1u);
    EXPECT_LE(std::min(segs[0].theta, 180 - segs[0].theta), 1);
    EXPECT_NEAR(segs[0].length(), 20.0, 1.0);
    EXPECT_NEAR(segs[0].rho, 12.0, 1.0);
}

TEST(Hough, RenderedStrokeEdgeCrop) {
    GrayFrame g = gray_frame(40, 30, 25);
    fill(g, Box{19, 5, 2, 20}, std::uint8_t{250});
    const BinaryFrame edges = binarize(sobel_edge_map(g));
    // The filter's view: skeleton of the 4-px edge footprint. Thinning eats a
    // few pixels at each end.
    const auto segs = hough_line_segments(prune_branch_points(thin_mask(edges)));
    ASSERT_EQ(segs.size(), 1u);
    EXPECT_EQ(segs[0].theta, 0);
    EXPECT_NEAR(segs[0].rho, 19.5, 0.5);
    EXPECT_GE(segs[0].length(), 14.0);
    EXPECT_LE(segs[0].length(), 21.0);
}

TEST(Hough, ThreeParallelStrokes) {
    BinaryFrame m(32, 32, 0, 0);
    for (int x : {5, 15, 25}) fill(m, Box{x, 4, 1, 20}, std::uint8_t{1});
    const auto segs = hough_line_segments(m);
    ASSERT_EQ(segs.size(), 3u);
    const double expected[] = {5, 15, 25};
    for (int i = 0; i < 3; ++i) {
        EXPECT_EQ(segs[i].theta, segs[0].theta);
        EXPECT_NEAR(segs[i].rho, expected[i], 1.0);
    }
}

TEST(Hough, HorizontalLineUsesNinetyDegrees) {
    BinaryFrame m(32, 32, 0, 0);
    fill(m, Box{3, 9, 24, 1}, std::uint8_t{1});
    const auto segs = hough_line_segments(m);
    ASSERT_EQ(segs.size(), 1u);
    // A 24-pixel row votes equally at 89, 90 and 91 degrees; the tie goes low.
    EXPECT_EQ(segs[0].theta, 89);
    EXPECT_NEAR(segs[0].length(), 23.0, 0.01);
    EXPECT_DOUBLE_EQ(segs[0].rho, 9.0);
}

TEST(Hough, GapToleranceSplitsRuns) {
    BinaryFrame m(16, 40, 0, 0);
    fill(m, Box{7, 0, 1, 10}, std::uint8_t{1});
    fill(m, Box{7, 12, 1, 10}, std::uint8_t{1});  // 2 missing pixels: one run
    fill(m, Box{7, 26, 1, 10}, std::uint8_t{1});  // 4 missing: separate
    const auto segs = hough_line_segments(m);
    ASSERT_EQ(segs.size(), 2u);
    EXPECT_DOUBLE_EQ(segs[0].start_t, 0.0);
    EXPECT_DOUBLE_EQ(segs[0].end_t, 21.0);
    EXPECT_DOUBLE_EQ(segs[1].start_t, 26.0);
}

TEST(Hough, ThickStrokeFusesIntoOneSegment) {
    BinaryFrame m(24, 30, 0, 0);
    fill(m, Box{10, 2, 2, 24}, std::uint8_t{1});
    const auto segs = hough_line_segments(m);
    ASSERT_EQ(segs.size(), 1u);
    EXPECT_DOUBLE_EQ(segs[0].rho, 10.5);
}

TEST(Hough, MatchesProgressiveOracleOnRandomMasks) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 40; ++trial) {
        const int w = 8 + static_cast<int>(rng() % 25);
        const int h = 8 + static_cast<int>(rng() % 25);
        BinaryFrame m = random_mask(rng, w, h, 0.03 + 0.01 * (trial % 5));
        const int lines = static_cast<int>(rng() % 4);
        for (int k = 0; k < lines; ++k) {
            if (rng() % 2) {
                fill(m, Box{static_cast<int>(rng() % w), 0, 1, h}, std::uint8_t{1});
            } else {
                fill(m, Box{0, static_cast<int>(rng() % h), w, 1}, std::uint8_t{1});
            }
        }
        const HoughConfig cfg;
        const auto got = hough_line_segments(m, cfg);
        const auto want = hough_oracle(m, cfg);
        ASSERT_EQ(got.size(), want.size()) << "trial " << trial;
        for (std::size_t i = 0; i < got.size(); ++i) {
            EXPECT_LE(std::abs(got[i].theta - want[i].theta), 1);
            EXPECT_LE(std::abs(got[i].rho - want[i].rho), 1.0);
            EXPECT_NEAR(got[i].start_t, want[i].start_t, 1e-9);
            EXPECT_NEAR(got[i].end_t, want[i].end_t, 1e-9);
        }
    }
}

TEST(Thinning, ThickBarsCollapseToOnePixel) {
    BinaryFrame m(20, 30, 0, 0);
    fill(m, Box{6, 3, 4, 24}, std::uint8_t{1});
    const BinaryFrame t = thin_mask(m);
    for (int y = 6; y < 24; ++y) {
        int row = 0;
        for (int x = 0; x < 20; ++x) row += t.at(x, y);
        EXPECT_EQ(row, 1) << "row " << y;
    }
    EXPECT_EQ(thin_mask(t), t);
}

TEST(Thinning, BranchPointsSplitAJunction) {
    // A T: bar along row 2, stem down column 5.
    BinaryFrame m(11, 12, 0, 0);
    fill(m, Box{0, 2, 11, 1}, std::uint8_t{1});
    fill(m, Box{5, 3, 1, 8}, std::uint8_t{1});
    const BinaryFrame p = prune_branch_points(m);
    EXPECT_EQ(p.at(5, 2), 0);
    EXPECT_EQ(p.at(4, 2), 0);
    EXPECT_EQ(p.at(6, 2), 0);
    EXPECT_EQ(p.at(5, 3), 0);
    EXPECT_EQ(p.at(5, 4), 1);
    EXPECT_EQ(p.at(0, 2), 1);
    EXPECT_EQ(p.at(5, 10), 1);
    // Plain lines have no branch points.
    BinaryFrame line(9, 9, 0, 0);
    fill(line, Box{1, 4, 7, 1}, std::uint8_t{1});
    EXPECT_EQ(prune_branch_points(line), line);
}

TEST(Lstf, UniformSpacing) {
    const std::vector<LineSegment> s{seg(0, 0), seg(0, 10), seg(0, 20), seg(0, 30)};
    const auto f = extract_lstf<double>(s);
    ASSERT_TRUE(f);
    EXPECT_EQ(f->delta_r, (std::vector<double>{10, 10, 10}));
    EXPECT_EQ(f->segment_count(), 4u);
    EXPECT_EQ(regularity(*f), 0.0);
}

TEST(Lstf, SingleSegmentIsInsufficient) {
    const std::vector<LineSegment> s{seg(0, 3)};
    EXPECT_FALSE(extract_lstf<double>(s));
    EXPECT_FALSE(extract_lstf<double>(std::vector<LineSegment>{}));
}

TEST(Lstf, DominantOrientationByMajority) {
    std::vector<LineSegment> s;
    for (int i = 0; i < 5; ++i) s.push_back(seg(90, 4.0 * i));
    s.push_back(seg(0, 1));
    s.push_back(seg(0, 9));
    const auto f = extract_lstf<double>(s);
    ASSERT_TRUE(f);
    EXPECT_EQ(f->segment_count(), 5u);
    EXPECT_EQ(f->theta, std::vector<int>(5, 90));
}

TEST(Lstf, TieGoesToSmallerAngle) {
    const std::vector<LineSegment> s{seg(120, 0), seg(120, 5), seg(30, 0), seg(30, 7)};
    EXPECT_EQ(dominant_orientation<double>(s), 30);
}

TEST(Lstf, LengthsAndAlignment) {
    const std::vector<LineSegment> s{seg(0, 20, 4, 10), seg(0, 0, 2, 12), seg(0, 10, 3, 8)};
    const auto f = extract_lstf<double>(s);
    ASSERT_TRUE(f);
    EXPECT_EQ(f->r, (std::vector<double>{10, 5, 6}));
    EXPECT_EQ(f->dist, (std::vector<double>{0, 1, 2}));
}

TEST(Lstf, CollinearPiecesFuse) {
    const std::vector<LineSegment> s{seg(0, 0, 0, 5), seg(0, 0, 8, 12), seg(0, 10)};
    const auto f = extract_lstf<double>(s);
    ASSERT_TRUE(f);
    EXPECT_EQ(f->r, (std::vector<double>{12, 10}));
}

TEST(Regularity, HandCases) {
    EXPECT_EQ(regularity_at({0, 10, 20, 30}), 0.0);
    EXPECT_NEAR(*regularity_at({0, 5, 20, 30}), 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(*regularity_at({0, 1, 100}), 0.98, 1e-12);
    EXPECT_FALSE(regularity_at({7}));
    EXPECT_FALSE(regularity_at({4, 4, 4}));
}

TEST(Regularity, PrintedMeanGapVariant) {
    const std::vector<double> p{0, 10, 20, 30};
    const auto r = regularity_of_positions<double>(p, true);
    ASSERT_TRUE(r);
    // Mean gap 29/3, each gap deviates by 1/3.
    EXPECT_NEAR(*r, 1.0 / 29.0, 1e-12);
}

TEST(Regularity, ZeroExactlyForEqualGaps) {
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 200; ++trial) {
        const Rational gap(static_cast<long>(1 + rng() % 40), static_cast<long>(1 + rng() % 7));
        const Rational start(static_cast<long>(rng() % 100) - 50);
        std::vector<Rational> p{start};
        const int n = 2 + static_cast<int>(rng() % 10);
        for (int i = 1; i < n; ++i) p.push_back(p.back() + gap);
        EXPECT_EQ(*regularity_of_positions<Rational>(p), Rational(0));
        if (n >= 3) {
            p.back() += Rational(1, 3);
            EXPECT_GT(*regularity_of_positions<Rational>(p), Rational(0));
        }
    }
}

TEST(LstfFilter, Examples) {
    const std::vector<LineSegment> regular{seg(0, 0), seg(0, 10), seg(0, 20), seg(0, 30)};
    const LstfResult pass = lstf_filter(regular, 0.2);
    EXPECT_TRUE(pass.pass);
    EXPECT_EQ(pass.regularity, 0.0);

    const std::vector<LineSegment> uneven{seg(0, 0), seg(0, 5), seg(0, 20), seg(0, 30)};
    const LstfResult fail = lstf_filter(uneven, 0.2);
    EXPECT_FALSE(fail.pass);
    EXPECT_NEAR(*fail.regularity, 1.0 / 3.0, 1e-12);

    const std::vector<LineSegment> single{seg(0, 0)};
    EXPECT_FALSE(lstf_filter(single, 0.2).pass);
    EXPECT_FALSE(lstf_filter(single, 0.2).regularity);
}

TEST(LstfFilter, ThresholdUsesClampedValue) {
    const std::vector<LineSegment> wild{seg(0, 0), seg(0, 1), seg(0, 2), seg(0, 100)};
    const LstfResult r = lstf_filter(wild, 1.0);
    ASSERT_TRUE(r.regularity);
    EXPECT_GT(*r.regularity, 1.0);
    EXPECT_TRUE(r.pass);
}

TEST(FilterRegions, TinyCandidateFailsAtSize) {
    const GrayFrame g = gray_frame(64, 64, 0, 1);
    const std::vector<CandidateRegion> c{{1, Box{3, 3, 4, 4}, 0.5, 1}};
    const auto v = filter_regions(c, g, FilterConfig{});
    ASSERT_EQ(v.size(), 1u);
    EXPECT_FALSE(v[0].accepted);
    EXPECT_EQ(v[0].rejection_stage, RejectionStage::Size);
}

TEST(FilterRegions, LowContrastFailsAtContrast) {
    GrayFrame g = gray_frame(96, 48, 120, 1);
    paint_stroke_band(g, Box{8, 12, 80, 18}, 11, 2, 110, 160);
    const std::vector<CandidateRegion> c{{1, Box{8, 12, 80, 18}, 0.3, 4}};
    const auto v = filter_regions(c, g, FilterConfig{});
    EXPECT_EQ(v[0].rejection_stage, RejectionStage::Contrast);
    EXPECT_EQ(v[0].contrast_peak_distance, 50);
}

TEST(FilterRegions, StrokeBandIsAccepted) {
    GrayFrame next = gray_frame(176, 144, 175, 1);
    const Box band{22, 40, 132, 18};
    paint_stroke_band(next, band);
    const std::vector<CandidateRegion> exact{{1, band, 0.3, 1}};
    const auto v = filter_regions(exact, next, FilterConfig{});
    EXPECT_TRUE(v[0].accepted) << to_string(v[0].rejection_stage);
    EXPECT_EQ(v[0].region.box, band);
}

TEST(FilterRegions, RenderedBandSurvivesLocalization) {
    SynthSpec spec;
    spec.frame_count = 3;
    spec.classes.push_back(SynthClass{"cap", "Caption", Rgb{30, 60, 220}, 8, 16});
    SynthEvent e;
    e.first_frame = 1;
    e.last_frame = 2;
    e.box = Box{44, 226, 264, 18};
    e.class_id = "cap";
    spec.events.push_back(e);
    const SyntheticCorpus corpus = generate_synthetic_corpus(spec, 7);
    const GrayFrame prev = to_grayscale(corpus.frames[0]);
    const GrayFrame next = to_grayscale(corpus.frames[1]);
    const auto verdicts = filter_regions(localize_candidates(prev, next, LocalizationConfig{}), next, FilterConfig{});
    bool found = false;
    for (const FilterVerdict& v : verdicts) {
        EXPECT_EQ(v.accepted, v.rejection_stage == RejectionStage::None);
        if (!v.accepted) continue;
        EXPECT_LE(*v.regularity, 0.2);
        found = found || intersection_area(v.region.box, e.box) >= e.box.area() * 85 / 100;
    }
    EXPECT_TRUE(found);
}

TEST(FilterRegions, IrregularDiagonalPatchFailsAtLstf) {
    GrayFrame g = gray_frame(120, 80, 20, 1);
    const Box patch{10, 10, 96, 48};
    // Bright diagonal bars at uneven offsets along x + y.
    for (int y = patch.y; y < patch.bottom(); ++y) {
        for (int x = patch.x; x < patch.right(); ++x) {
            const int d = (x + y) % 97;
            for (int off : {3, 9, 33, 41, 78}) {
                if (d >= off && d < off + 3) g.at(x, y) = 240;
            }
        }
    }
    const std::vector<CandidateRegion> c{{1, patch, 0.3, 6}};
    const auto v = filter_regions(c, g, FilterConfig{});
    ASSERT_EQ(v.size(), 1u);
    EXPECT_GT(v[0].contrast_peak_distance, 110);
    EXPECT_EQ(v[0].rejection_stage, RejectionStage::Lstf);
}

TEST(FilterRegions, DroppingStagesOnlyGrowsTheAcceptedSet) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 6; ++trial) {
        GrayFrame prev(128, 96, 0);
        for (auto& p : prev.pixels()) p = static_cast<std::uint8_t>(100 + rng() % 40);
        GrayFrame next(128, 96, 1, std::vector<std::uint8_t>(prev.pixels().begin(), prev.pixels().end()));
        paint_stroke_band(next, Box{8, 8 + trial * 4, 100, 16}, 9 + trial % 3);
        for (int k = 0; k < 300; ++k) next.at(static_cast<int>(rng() % 128), static_cast<int>(rng() % 96)) = 255;
        const auto candidates = localize_candidates(prev, next, LocalizationConfig{});

        FilterConfig all;
        FilterConfig no_contrast = all;
        no_contrast.use_contrast = false;
        FilterConfig no_lstf = all;
        no_lstf.use_lstf = false;
        FilterConfig size_only = no_lstf;
        size_only.use_contrast = false;

        const auto a = accepted_indices(filter_regions(candidates, next, all));
        const auto b = accepted_indices(filter_regions(candidates, next, no_contrast));
        const auto c = accepted_indices(filter_regions(candidates, next, no_lstf));
        const auto d = accepted_indices(filter_regions(candidates, next, size_only));
        EXPECT_TRUE(std::includes(b.begin(), b.end(), a.begin(), a.end()));
        EXPECT_TRUE(std::includes(c.begin(), c.end(), a.begin(), a.end()));
        EXPECT_TRUE(std::includes(d.begin(), d.end(), b.begin(), b.end()));
        EXPECT_TRUE(std::includes(d.begin(), d.end(), c.begin(), c.end()));
    }
}

TEST(CropMask, CopiesBitsAndKeepsIndex) {
    std::mt19937_64 rng(1);
    const BinaryFrame m = random_mask(rng, 10, 10, 0.5, 6);
    const BinaryFrame c = crop_mask(m, Box{2, 3, 4, 5});
    EXPECT_EQ(c.index(), 6);
    EXPECT_EQ(c.at(3, 4), m.at(5, 7));
}
