// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Usage: vidtext_acceptance <benchmark-dir>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "vidtext/pipeline.hpp"

namespace fs = std::filesystem;
using namespace vidtext;
using namespace vidtext::testing;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* pattern, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

// Histograms with a mix of shapes: a few spikes, dense noise, symmetric pairs (ties), mostly empty.
Histogram random_histogram(std::mt19937_64& rng, int trial) {
    Histogram h{};
    std::uint64_t budget = 1 + rng() % 400000;
    switch (trial % 4) {
        case 0: {
            const int spikes = 1 + static_cast<int>(rng() % 6);
            for (int k = 0; k < spikes; ++k) h[rng() % 256] += 1 + budget / spikes;
            break;
        }
        case 1:
            for (auto& c : h) c = rng() % (1 + budget / 256);
            break;
        case 2: {
            const int a = static_cast<int>(rng() % 128);
            const int b = 255 - static_cast<int>(rng() % 64);
            const std::uint64_t n = 1 + rng() % 1000;
            h[a] = n;
            h[b] = n;
            if (rng() % 2) h[(a + b) / 2] = rng() % 3;
            break;
        }
        default: {
            const int lo = static_cast<int>(rng() % 200);
            for (int i = lo; i < lo + 40 && i < 256; ++i) h[i] = rng() % 50;
            h[lo] += 1;
            break;
        }
    }
    return h;
}

Outcome criterion_otsu() {
    std::mt19937_64 rng(1001);
    std::vector<Histogram> hs;
    for (int i = 0; i < 1000; ++i) hs.push_back(random_histogram(rng, i));
    const auto t0 = std::chrono::steady_clock::now();
    int mismatches = 0;
    for (const Histogram& h : hs) mismatches += otsu_threshold(h) != otsu_oracle(h);
    const double s = seconds_since(t0);
    return {mismatches == 0 && s < 5.0, fmt("1000 histograms, %d mismatches, %.2f s", mismatches, s)};
}

Outcome criterion_quadtree() {
    std::mt19937_64 rng(2002);
    const auto t0 = std::chrono::steady_clock::now();
    int split_bad = 0;
    int merge_bad = 0;
    std::size_t leaves_total = 0;
    for (int trial = 0; trial < 200; ++trial) {
        BinaryFrame m = random_mask(rng, 64, 64, 0.01 * (trial % 25), 1);
        const int blobs = static_cast<int>(rng() % 4);
        for (int k = 0; k < blobs; ++k) {
            const int w = 4 + static_cast<int>(rng() % 30);
            const int h = 4 + static_cast<int>(rng() % 20);
            const Box b{static_cast<int>(rng() % (64 - w)), static_cast<int>(rng() % (64 - h)), w, h};
            std::bernoulli_distribution bit(0.2 + 0.1 * k);
            for (int y = b.y; y < b.bottom(); ++y) {
                for (int x = b.x; x < b.right(); ++x) m.at(x, y) = bit(rng) ? 1 : m.at(x, y);
            }
        }
        const auto leaves = quadtree_split(m, 0.1, 8);
        leaves_total += leaves.size();
        split_bad += leaves != quadtree_oracle(m, 0.1, 8, SplitRule::EdgeMass);
        merge_bad += merge_blocks(leaves, 0.15) != merge_oracle(leaves, 0.15);
    }
    const double s = seconds_since(t0);
    return {split_bad == 0 && merge_bad == 0 && s < 10.0,
            fmt("200 masks, %zu leaves, split mismatches %d, merge mismatches %d, %.2f s", leaves_total, split_bad,
                merge_bad, s)};
}

using RSeg = BasicLineSegment<Rational>;

// Dominant family of 2..8 lines plus fewer segments at other angles.
std::vector<RSeg> random_segment_list(std::mt19937_64& rng) {
    const auto q = [&](long span) {
        return Rational(static_cast<long>(rng() % static_cast<unsigned long>(span)) - span / 2,
                        static_cast<long>(1 + rng() % 8));
    };
    const int theta = static_cast<int>(rng() % 180);
    const int n = 2 + static_cast<int>(rng() % 7);
    std::vector<RSeg> s;
    for (int i = 0; i < n; ++i) {
        const Rational start = q(200);
        // Offsets of 500 per line keep the family's rho values distinct.
        const Rational length(static_cast<long>(1 + rng() % 60), static_cast<long>(1 + rng() % 4));
        s.push_back(RSeg{theta, Rational(500L * i) + q(400), start, start + length});
    }
    if (rng() % 3 == 0) s.push_back(RSeg{theta, s[0].rho, s[0].end_t + 1, s[0].end_t + 5});  // collinear piece
    const int others = static_cast<int>(rng() % static_cast<unsigned>(n - 1));
    for (int i = 0; i < others; ++i) {
        const int t = static_cast<int>((theta + 1 + rng() % 179) % 180);
        const Rational start = q(200);
        s.push_back(RSeg{t, q(400), start, start + 3});
    }
    std::shuffle(s.begin(), s.end(), rng);
    return s;
}

Outcome criterion_lstf_invariance() {
    std::mt19937_64 rng(3003);
    const Rational alphas[] = {Rational(1, 2), Rational(2), Rational(37, 10)};
    int failures = 0;
    int checked = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const std::vector<RSeg> s = random_segment_list(rng);
        const auto base = extract_lstf<Rational>(s);
        if (!base) {
            ++failures;
            continue;
        }
        const int shift = 1 + static_cast<int>(rng() % 179);
        std::vector<RSeg> rotated = s;
        for (RSeg& g : rotated) g.theta = (g.theta + shift) % 180;
        const auto rot = extract_lstf<Rational>(rotated);
        bool ok = rot && rot->delta_r == base->delta_r && rot->r == base->r && rot->dist == base->dist &&
                  rot->theta.size() == base->theta.size();
        for (std::size_t i = 0; ok && i < base->theta.size(); ++i) ok = rot->theta[i] == (base->theta[i] + shift) % 180;
        ++checked;

        for (const Rational& a : alphas) {
            std::vector<RSeg> scaled = s;
            for (RSeg& g : scaled) {
                g.rho *= a;
                g.start_t *= a;
                g.end_t *= a;
            }
            const auto sc = extract_lstf<Rational>(scaled);
            ok = ok && sc && sc->theta == base->theta && sc->r.size() == base->r.size() &&
                 sc->delta_r.size() == base->delta_r.size();
            for (std::size_t i = 0; ok && i < base->r.size(); ++i) {
                ok = sc->r[i] == base->r[i] * a && sc->dist[i] == base->dist[i] * a;
            }
            for (std::size_t i = 0; ok && i < base->delta_r.size(); ++i) ok = sc->delta_r[i] == base->delta_r[i] * a;
            ++checked;
        }
        failures += !ok;
    }
    return {failures == 0, fmt("500 lists, %d transformed extractions compared exactly, %d failures", checked,
                               failures)};
}

Outcome criterion_regularity() {
    std::mt19937_64 rng(4004);
    int bad = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 12);
        const double gap = 1.0 + static_cast<double>(rng() % 50);
        const double start = static_cast<double>(rng() % 200) - 100.0;
        std::vector<double> p;
        for (int i = 0; i < n; ++i) p.push_back(start + gap * i);
        bad += regularity_of_positions<double>(p) != 0.0;
        std::vector<Rational> q;
        const Rational rgap(static_cast<long>(1 + rng() % 90), static_cast<long>(1 + rng() % 9));
        const Rational qstart(static_cast<long>(rng() % 50));
        for (int i = 0; i < n; ++i) q.push_back(qstart + rgap * i);
        bad += *regularity_of_positions<Rational>(q) != Rational(0);
    }
    const std::vector<double> hand{0, 5, 20, 30};
    const double r_hand = *regularity_of_positions<double>(hand);
    const bool hand_ok = std::fabs(r_hand - 1.0 / 3.0) <= 1e-12;

    double worst = 0.0;
    std::uniform_real_distribution<double> u(0.0, 100.0);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> p;
        const int n = 3 + static_cast<int>(rng() % 10);
        for (int i = 0; i < n; ++i) p.push_back(u(rng));
        std::sort(p.begin(), p.end());
        const auto r = regularity_of_positions<double>(p);
        if (!r) continue;
        const double shift = u(rng) * 10.0 - 500.0;
        const double alpha = 0.05 + u(rng) / 10.0;
        std::vector<double> moved;
        std::vector<double> scaled;
        for (double v : p) {
            moved.push_back(v + shift);
            scaled.push_back(v * alpha);
        }
        worst = std::max({worst, std::fabs(*regularity_of_positions<double>(moved) - *r),
                          std::fabs(*regularity_of_positions<double>(scaled) - *r)});
    }
    return {bad == 0 && hand_ok && worst <= 1e-12,
            fmt("equal-gap nonzero %d, R{0,5,20,30} = %.15f, worst invariance error %.2e", bad, r_hand, worst)};
}

Outcome criterion_metrics() {
    std::mt19937_64 rng(5005);
    double worst = 0.0;
    int out_of_range = 0;
    for (int table = 0; table < 100; ++table) {
        std::vector<GroundTruthRegion> truth;
        const int nt = static_cast<int>(rng() % 12);
        for (int k = 0; k < nt; ++k) {
            truth.push_back({0, 20, Box{static_cast<int>(rng() % 300), static_cast<int>(rng() % 260), 40, 16},
                             rng() % 4 ? std::optional<std::string>(rng() % 2 ? "a" : "b") : std::nullopt});
        }
        std::vector<Anchor> det;
        const int nd = static_cast<int>(rng() % 14);
        for (int k = 0; k < nd; ++k) {
            if (nt > 0 && rng() % 2) {
                const GroundTruthRegion& g = truth[rng() % static_cast<unsigned>(nt)];
                det.push_back({rng() % 3 ? g.class_id : std::optional<std::string>("a"),
                               static_cast<int>(rng() % 25), g.box, std::nullopt});
            } else {
                det.push_back({std::nullopt, static_cast<int>(rng() % 25),
                               Box{static_cast<int>(rng() % 300), static_cast<int>(rng() % 260), 40, 16},
                               std::nullopt});
            }
        }
        const EvalReport r = evaluate(det, truth, true);
        const auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
        out_of_range += !in_unit(r.detection.recall) + !in_unit(r.detection.precision) +
                        !in_unit(r.detection.false_alarm);
        if (r.detected_total > 0) worst = std::max(worst, std::fabs(r.detection.precision + r.detection.false_alarm - 1));
        if (r.identification && r.identification->txti) {
            out_of_range += !in_unit(*r.identification->txti) + !in_unit(*r.identification->txtni);
            worst = std::max(worst, std::fabs(*r.identification->txti + *r.identification->txtni - 1));
        }
    }
    const DetectionMetrics hand = detection_metrics(9, 10, 10);
    const bool hand_ok = hand.recall == 0.9 && hand.precision == 0.9 && hand.false_alarm == 0.1;
    return {worst <= 1e-12 && out_of_range == 0 && hand_ok,
            fmt("100 tables, worst identity error %.2e, %d out of range, 9/1/10 -> (%.17g, %.17g, %.17g)", worst,
                out_of_range, hand.recall, hand.precision, hand.false_alarm)};
}

Outcome criterion_classification() {
    // Two sub-regions beside a caption band.
    GrammarDescriptor g;
    g.frame_w = 200;
    g.frame_h = 120;
    const Rgb tab{190, 40, 60};
    const Rgb logo{250, 210, 20};
    RgbFrame frame = rgb_frame(200, 120, Rgb{100, 110, 120}, 5);
    fill(frame, Box{4, 80, 14, 20}, tab);
    fill(frame, Box{180, 80, 12, 12}, logo);
    g.classes.push_back(build_grammar_entry(frame, "cap", "Caption", Box{24, 80, 150, 20},
                                            {Box{4, 80, 14, 20}, Box{180, 80, 12, 12}}));
    const Detection det{5, Box{24, 80, 150, 20}, 0.3, 200, 0.05};

    const double d0 = mean_class_distance(g.classes[0], frame);
    const ClassifiedRegion exact = classify_region(det, g, frame);
    bool ok = d0 == 0.0 && exact.class_id == "cap";

    // Darken the tab step by step until the distance passes alpha.
    RgbFrame perturbed = frame;
    double d = 0.0;
    int step = 0;
    for (; step < 255 && d <= g.alpha; ++step) {
        const auto v = static_cast<std::uint8_t>(std::max(0, 190 - 2 * step));
        fill(perturbed, Box{4, 80, 14, 20}, Rgb{v, 40, 60});
        d = mean_class_distance(g.classes[0], perturbed);
    }
    ok = ok && d > g.alpha && !classify_region(det, g, perturbed).class_id;

    // At exactly alpha == D the region classifies; one ulp below it does not.
    GrammarDescriptor at = g;
    at.alpha = d;
    GrammarDescriptor below = g;
    below.alpha = std::nextafter(d, 0.0);
    const ClassifiedRegion on = classify_region(det, at, perturbed);
    const ClassifiedRegion off = classify_region(det, below, perturbed);
    ok = ok && on.class_id == "cap" && on.mean_distance == d && !off.class_id && off.mean_distance == d;
    return {ok, fmt("D(exact) = %g; tab darkened %d steps gives D = %.6f > alpha %.2f; boundary at D: %s/%s", d0,
                    step, d, g.alpha, on.class_id ? "classified" : "unclassified",
                    off.class_id ? "classified" : "unclassified")};
}

struct ClipResult {
    std::size_t frames = 0;
    std::size_t truth = 0;
    std::size_t detected = 0;
    std::size_t correct = 0;
    std::size_t extracted = 0;
    std::size_t identified = 0;
};

Outcome criterion_benchmark(const fs::path& bench) {
    const auto t0 = std::chrono::steady_clock::now();
    ClipResult total;
    std::string per_clip;
    for (const char* name : {"flat", "gradient", "noise"}) {
        const PipelineConfig cfg = load_pipeline_config(bench / (std::string(name) + "_config.json"));
        const SyntheticCorpus corpus = generate_synthetic_corpus(read_synth_spec(cfg.synth_spec), cfg.seed);
        PipelineConfig single = cfg;
        single.workers = 1;
        const std::vector<ClassifiedRegion> records = detect_frames(corpus.frames, single);
        const std::vector<Anchor> detected = anchors_of(records, single.toc);
        const Correspondence c = match_detections(detected, corpus.truth, single.min_intersection);

        std::vector<Detection> dets;
        for (const ClassifiedRegion& r : records) dets.push_back(r.region);
        const auto classified = anchors_of(classify_all(dets, corpus.grammar, corpus.frames), single.toc);
        const IdentificationMetrics id = identification_metrics(classified, corpus.truth, single.min_intersection);

        total.frames += corpus.frames.size();
        total.truth += corpus.truth.size();
        total.detected += detected.size();
        total.correct += c.correct();
        total.extracted += id.extracted;
        total.identified += id.identified;
        per_clip += fmt(" %s %zu/%zu", name, c.correct(), corpus.truth.size());
    }
    const double s = seconds_since(t0);
    const DetectionMetrics m = detection_metrics(total.correct, total.detected, total.truth);
    const IdentificationMetrics id = identification_metrics(total.identified, total.extracted);
    const double txti = id.txti.value_or(0.0);
    const bool ok = total.frames == 200 && total.truth == 12 && m.recall >= 0.90 && m.false_alarm <= 0.10 &&
                    txti >= 0.90 && s < 120.0;
    return {ok, fmt("%zu frames, %zu events (%s ); recall %.3f, precision %.3f, false alarm %.3f, TxTI %.3f, %.1f s",
                    total.frames, total.truth, per_clip.c_str(), m.recall, m.precision, m.false_alarm, txti, s)};
}

Outcome criterion_throughput(const fs::path& bench, const fs::path& scratch) {
    PipelineConfig cfg = load_pipeline_config(bench / "noise_config.json");
    write_corpus(generate_synthetic_corpus(read_synth_spec(cfg.synth_spec), cfg.seed), scratch / "corpus");
    cfg.frames_dir = scratch / "corpus/frames";
    cfg.out_dir = scratch / "run";
    cfg.workers = 1;
    (void)run_detect(cfg);
    const nlohmann::json manifest = nlohmann::json::parse(slurp(cfg.out_dir / "manifest_detect.json"));
    const double rate = manifest.at("pairs_per_second").get<double>();
    return {rate >= 2.0, fmt("%d pairs at 352x288, %.1f pairs/s (manifest)", manifest.at("pairs").get<int>(), rate)};
}

Outcome criterion_determinism(const fs::path& bench, const fs::path& scratch) {
    const char* files[] = {"detections.json", "classified.json", "toc.json", "toc.html", "report.json"};
    int compared = 0;
    int differing = 0;
    std::string which;
    for (const char* name : {"flat", "gradient", "noise"}) {
        PipelineConfig cfg = load_pipeline_config(bench / (std::string(name) + "_config.json"));
        const fs::path corpus = scratch / name / "corpus";
        cfg.out_dir = corpus;
        (void)run_synth(cfg);
        cfg.frames_dir = corpus / "frames";
        cfg.grammar = corpus / "grammar.json";
        cfg.truth = corpus / "truth.json";
        for (int workers : {1, 4}) {
            cfg.workers = workers;
            cfg.out_dir = scratch / name / ("w" + std::to_string(workers));
            (void)run_detect(cfg);
            (void)run_classify(cfg);
            (void)run_eval(cfg);
        }
        for (const char* f : files) {
            ++compared;
            if (slurp(scratch / name / "w1" / f) != slurp(scratch / name / "w4" / f)) {
                ++differing;
                which += std::string(" ") + name + "/" + f;
            }
        }
    }
    return {differing == 0, fmt("workers 1 vs 4, %d files compared, %d differ%s", compared, differing, which.c_str())};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: vidtext_acceptance <benchmark-dir>\n";
        return 2;
    }
    const fs::path bench = argv[1];
    TempDir scratch;

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"otsu oracle equivalence", criterion_otsu},
        {"quadtree and merge oracle equivalence", criterion_quadtree},
        {"LSTF rotation and scale invariance", criterion_lstf_invariance},
        {"regularity", criterion_regularity},
        {"metric identities", criterion_metrics},
        {"classification threshold boundary", criterion_classification},
        {"synthetic benchmark", [&] { return criterion_benchmark(bench); }},
        {"detect throughput", [&] { return criterion_throughput(bench, scratch / "throughput"); }},
        {"determinism across worker counts", [&] { return criterion_determinism(bench, scratch / "determinism"); }},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first << " -- "
                  << o.detail << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
