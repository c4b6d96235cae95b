#include "vidtext/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <thread>

#include <spdlog/spdlog.h>

namespace vidtext {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string>& dump_stage_names() {
    static const std::vector<std::string> names{"edges", "binary", "diff", "leaves", "verdicts"};
    return names;
}

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) return {};
    const fs::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError("config: unknown key '" + key + "' in " + where);
    }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: '" + std::string(key) + "' in " + where + " has the wrong type");
    }
}

SplitRule split_rule_from(const std::string& s) {
    if (s == "edge_mass") return SplitRule::EdgeMass;
    if (s == "literal") return SplitRule::Literal;
    throw ConfigError("config: split_rule must be 'edge_mass' or 'literal', got '" + s + "'");
}

BinarizationMode binarization_from(const std::string& s) {
    if (s == "per_frame") return BinarizationMode::PerFrame;
    if (s == "joint_pair") return BinarizationMode::JointPair;
    throw ConfigError("config: binarization must be 'per_frame' or 'joint_pair', got '" + s + "'");
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void write_manifest(const PipelineConfig& config, const std::string& stage, json extra) {
    json m{{"tool", "vidtext"}, {"version", kToolVersion}, {"stage", stage}, {"config_hash", config_hash(config)}};
    m.update(extra);
    write_json(config.out_dir / ("manifest_" + stage + ".json"), m);
}

json box_json(const Box& b) { return json{{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }

std::vector<RgbFrame> load_frames(const PipelineConfig& config) {
    if (config.frames_dir.empty()) throw ConfigError("config: frames_dir is not set");
    std::vector<RgbFrame> frames = load_frame_sequence(config.frames_dir, config.frame_pattern);
    spdlog::info("loaded {} frames from {}", frames.size(), config.frames_dir.string());
    return frames;
}

GrammarDescriptor load_effective_grammar(const PipelineConfig& config) {
    if (config.grammar.empty()) throw ConfigError("config: grammar is not set");
    GrammarDescriptor g = load_grammar(config.grammar);
    if (config.alpha) g.alpha = *config.alpha;
    if (config.overlap_min) g.overlap_min = *config.overlap_min;
    validate_grammar(g);
    return g;
}

struct PairResult {
    std::vector<Block> leaves;
    std::vector<FilterVerdict> verdicts;
    std::exception_ptr error;
};

void dump_pair_images(const PipelineConfig& config, const PairAnalysis& a) {
    const fs::path root = config.out_dir / "dumps";
    const std::string name = format_frame_name("frame_%06d.pgm", a.difference.index());
    const int w = a.difference.width();
    const int h = a.difference.height();
    if (config.dump_stages.contains("edges")) write_pgm(root / "edges" / name, w, h, edges_to_gray(a.next_edges));
    if (config.dump_stages.contains("binary")) write_pgm(root / "binary" / name, w, h, mask_to_gray(a.next_mask));
    if (config.dump_stages.contains("diff")) write_pgm(root / "diff" / name, w, h, mask_to_gray(a.difference));
}

}  // namespace

PipelineConfig config_from_json(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    reject_unknown(j,
                   {"frames_dir", "frame_pattern", "grammar", "out_dir", "truth", "synth_spec", "video_id", "workers",
                    "seed", "dump_stages", "localization", "filtering", "classification", "toc", "evaluation"},
                   "config");
    PipelineConfig c;
    std::string s;
    if (read(j, "frames_dir", s, "config"), !s.empty()) c.frames_dir = resolve(base_dir, s);
    s.clear();
    if (read(j, "grammar", s, "config"), !s.empty()) c.grammar = resolve(base_dir, s);
    s.clear();
    if (read(j, "out_dir", s, "config"), !s.empty()) c.out_dir = resolve(base_dir, s);
    s.clear();
    if (read(j, "truth", s, "config"), !s.empty()) c.truth = resolve(base_dir, s);
    s.clear();
    if (read(j, "synth_spec", s, "config"), !s.empty()) c.synth_spec = resolve(base_dir, s);
    read(j, "frame_pattern", c.frame_pattern, "config");
    read(j, "video_id", c.video_id, "config");
    read(j, "workers", c.workers, "config");
    read(j, "seed", c.seed, "config");
    std::vector<std::string> stages;
    read(j, "dump_stages", stages, "config");
    for (const std::string& st : stages) c.dump_stages.insert(st);

    if (j.contains("localization")) {
        const json& l = j.at("localization");
        reject_unknown(l, {"split_threshold", "min_block", "density_eps", "split_rule", "binarization"},
                       "localization");
        read(l, "split_threshold", c.localization.split_threshold, "localization");
        read(l, "min_block", c.localization.min_block, "localization");
        read(l, "density_eps", c.localization.density_eps, "localization");
        std::string rule;
        if (read(l, "split_rule", rule, "localization"), !rule.empty()) c.localization.split_rule = split_rule_from(rule);
        std::string mode;
        if (read(l, "binarization", mode, "localization"), !mode.empty()) {
            c.localization.binarization = binarization_from(mode);
        }
    }
    if (j.contains("filtering")) {
        const json& f = j.at("filtering");
        reject_unknown(f,
                       {"sigma", "r_max", "min_region_w", "min_region_h", "peak_separation", "printed_mean_gap",
                        "thin_edges", "use_contrast", "use_lstf", "hough"},
                       "filtering");
        read(f, "sigma", c.filtering.sigma, "filtering");
        read(f, "r_max", c.filtering.r_max, "filtering");
        read(f, "min_region_w", c.filtering.min_region_w, "filtering");
        read(f, "min_region_h", c.filtering.min_region_h, "filtering");
        read(f, "peak_separation", c.filtering.peak_separation, "filtering");
        read(f, "printed_mean_gap", c.filtering.printed_mean_gap, "filtering");
        read(f, "thin_edges", c.filtering.thin_edges, "filtering");
        read(f, "use_contrast", c.filtering.use_contrast, "filtering");
        read(f, "use_lstf", c.filtering.use_lstf, "filtering");
        if (f.contains("hough")) {
            const json& h = f.at("hough");
            reject_unknown(h, {"vote_min", "gap_tol", "len_min"}, "filtering.hough");
            read(h, "vote_min", c.filtering.hough.vote_min, "filtering.hough");
            read(h, "gap_tol", c.filtering.hough.gap_tol, "filtering.hough");
            read(h, "len_min", c.filtering.hough.len_min, "filtering.hough");
        }
    }
    if (j.contains("classification")) {
        const json& k = j.at("classification");
        reject_unknown(k, {"alpha", "overlap_min"}, "classification");
        if (k.contains("alpha") && !k.at("alpha").is_null()) {
            double a = 0;
            read(k, "alpha", a, "classification");
            c.alpha = a;
        }
        if (k.contains("overlap_min") && !k.at("overlap_min").is_null()) {
            double o = 0;
            read(k, "overlap_min", o, "classification");
            c.overlap_min = o;
        }
    }
    if (j.contains("toc")) {
        const json& t = j.at("toc");
        reject_unknown(t, {"gap_max", "iou_min", "thumbnails"}, "toc");
        read(t, "gap_max", c.toc.gap_max, "toc");
        read(t, "iou_min", c.toc.iou_min, "toc");
        read(t, "thumbnails", c.toc.thumbnails, "toc");
    }
    if (j.contains("evaluation")) {
        const json& e = j.at("evaluation");
        reject_unknown(e, {"min_intersection"}, "evaluation");
        read(e, "min_intersection", c.min_intersection, "evaluation");
    }
    validate_config(c);
    return c;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(j, fs::absolute(path).parent_path());
}

json config_to_json(const PipelineConfig& c) {
    const auto& l = c.localization;
    const auto& f = c.filtering;
    return json{
        {"frames_dir", c.frames_dir.string()},
        {"frame_pattern", c.frame_pattern},
        {"grammar", c.grammar.string()},
        {"out_dir", c.out_dir.string()},
        {"truth", c.truth.string()},
        {"synth_spec", c.synth_spec.string()},
        {"video_id", c.video_id},
        {"seed", c.seed},
        {"dump_stages", std::vector<std::string>(c.dump_stages.begin(), c.dump_stages.end())},
        {"localization",
         {{"split_threshold", l.split_threshold},
          {"min_block", l.min_block},
          {"density_eps", l.density_eps},
          {"split_rule", l.split_rule == SplitRule::EdgeMass ? "edge_mass" : "literal"},
          {"binarization", l.binarization == BinarizationMode::PerFrame ? "per_frame" : "joint_pair"}}},
        {"filtering",
         {{"sigma", f.sigma},
          {"r_max", f.r_max},
          {"min_region_w", f.min_region_w},
          {"min_region_h", f.min_region_h},
          {"peak_separation", f.peak_separation},
          {"printed_mean_gap", f.printed_mean_gap},
          {"thin_edges", f.thin_edges},
          {"use_contrast", f.use_contrast},
          {"use_lstf", f.use_lstf},
          {"hough", {{"vote_min", f.hough.vote_min}, {"gap_tol", f.hough.gap_tol}, {"len_min", f.hough.len_min}}}}},
        {"classification",
         {{"alpha", c.alpha ? json(*c.alpha) : json(nullptr)},
          {"overlap_min", c.overlap_min ? json(*c.overlap_min) : json(nullptr)}}},
        {"toc", {{"gap_max", c.toc.gap_max}, {"iou_min", c.toc.iou_min}, {"thumbnails", c.toc.thumbnails}}},
        {"evaluation", {{"min_intersection", c.min_intersection}}},
    };
}

void validate_config(const PipelineConfig& c) {
    const auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
    const auto& l = c.localization;
    const auto& f = c.filtering;
    if (!(l.split_threshold > 0.0 && l.split_threshold < 1.0)) fail("split_threshold must lie in (0, 1)");
    if (l.min_block < 2) fail("min_block must be >= 2");
    if (!(l.density_eps >= 0.0 && l.density_eps <= 1.0)) fail("density_eps must lie in [0, 1]");
    if (!(f.sigma >= 0.0 && f.sigma <= 255.0)) fail("sigma must lie in [0, 255]");
    if (!(f.r_max >= 0.0 && f.r_max <= 1.0)) fail("r_max must lie in [0, 1]");
    if (f.min_region_w < 1 || f.min_region_h < 1) fail("min_region_w and min_region_h must be >= 1");
    if (f.peak_separation < 1) fail("peak_separation must be >= 1");
    if (f.hough.vote_min < 2 || f.hough.gap_tol < 0 || f.hough.len_min < 1) fail("hough settings out of range");
    if (c.alpha && !(*c.alpha > 0.0)) fail("alpha must be > 0");
    if (c.overlap_min && !(*c.overlap_min > 0.0 && *c.overlap_min <= 1.0)) fail("overlap_min must lie in (0, 1]");
    if (c.toc.gap_max < 0) fail("gap_max must be >= 0");
    if (!(c.toc.iou_min > 0.0 && c.toc.iou_min <= 1.0)) fail("iou_min must lie in (0, 1]");
    if (!(c.min_intersection > 0.0 && c.min_intersection <= 1.0)) fail("min_intersection must lie in (0, 1]");
    if (c.workers < 1) fail("workers must be >= 1");
    for (const std::string& s : c.dump_stages) {
        const auto& names = dump_stage_names();
        if (std::find(names.begin(), names.end(), s) == names.end()) fail("unknown dump stage '" + s + "'");
    }
}

std::string config_hash(const PipelineConfig& config) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : config_to_json(config).dump()) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<ClassifiedRegion> detect_frames(const std::vector<RgbFrame>& frames, const PipelineConfig& config,
                                            DetectSummary* summary) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<GrayFrame> gray;
    gray.reserve(frames.size());
    for (const RgbFrame& f : frames) gray.push_back(to_grayscale(f));
    for (std::size_t i = 1; i < gray.size(); ++i) {
        if (!gray[i].same_size(gray[0])) {
            throw ContractError("frame " + std::to_string(i) + " differs in size from frame 0");
        }
    }

    const std::size_t pairs = gray.size() > 1 ? gray.size() - 1 : 0;
    const bool dump_images = config.dump_stages.contains("edges") || config.dump_stages.contains("binary") ||
                             config.dump_stages.contains("diff");
    if (dump_images) {
        for (const char* s : {"edges", "binary", "diff"}) {
            if (config.dump_stages.contains(s)) ensure_dir(config.out_dir / "dumps" / s);
        }
    }

    std::vector<PairResult> results(pairs);
    std::atomic<std::size_t> next{0};
    const auto work = [&] {
        for (std::size_t p = next++; p < pairs; p = next++) {
            try {
                PairAnalysis a = analyze_pair(gray[p], gray[p + 1], config.localization);
                if (dump_images) dump_pair_images(config, a);
                results[p].verdicts = filter_regions(a.regions, gray[p + 1], config.filtering, &a.next_mask);
                results[p].leaves = std::move(a.leaves);
            } catch (...) {
                results[p].error = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(config.workers), std::max<std::size_t>(pairs, 1));
    if (threads <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
    }

    std::vector<ClassifiedRegion> records;
    json leaves_dump = json::array();
    json verdicts_dump = json::array();
    std::size_t candidates = 0;
    for (std::size_t p = 0; p < pairs; ++p) {
        if (results[p].error) std::rethrow_exception(results[p].error);
        const int frame = static_cast<int>(p + 1);
        candidates += results[p].verdicts.size();
        for (const FilterVerdict& v : results[p].verdicts) {
            if (v.accepted) {
                records.push_back(unclassified_record(Detection{v.region.frame_index, v.region.box, v.region.density,
                                                                v.contrast_peak_distance, v.regularity}));
            }
            verdicts_dump.push_back(json{{"frame", frame},
                                         {"box", box_json(v.region.box)},
                                         {"density", v.region.density},
                                         {"contrast_peak_distance", v.contrast_peak_distance},
                                         {"regularity", v.regularity ? json(*v.regularity) : json(nullptr)},
                                         {"accepted", v.accepted},
                                         {"rejected_by", std::string(to_string(v.rejection_stage))}});
        }
        if (config.dump_stages.contains("leaves")) {
            json leaves = json::array();
            for (const Block& b : results[p].leaves) {
                leaves.push_back(json{{"box", box_json(b.box)}, {"density", b.density}, {"depth", b.depth}});
            }
            leaves_dump.push_back(json{{"frame", frame}, {"leaves", std::move(leaves)}});
        }
    }
    if (config.dump_stages.contains("leaves")) {
        ensure_dir(config.out_dir / "dumps");
        write_json(config.out_dir / "dumps" / "leaves.json", leaves_dump);
    }
    if (config.dump_stages.contains("verdicts")) {
        ensure_dir(config.out_dir / "dumps");
        write_json(config.out_dir / "dumps" / "verdicts.json", verdicts_dump);
    }

    if (summary) {
        summary->frames = frames.size();
        summary->pairs = pairs;
        summary->candidates = candidates;
        summary->accepted = records.size();
        summary->seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    return records;
}

DetectSummary run_detect(const PipelineConfig& config) {
    validate_config(config);
    const std::vector<RgbFrame> frames = load_frames(config);
    ensure_dir(config.out_dir);
    DetectSummary summary;
    const std::vector<ClassifiedRegion> records = detect_frames(frames, config, &summary);
    write_detections(config.out_dir / "detections.json", records);
    const double rate = summary.seconds > 0.0 ? static_cast<double>(summary.pairs) / summary.seconds : 0.0;
    spdlog::info("detect: {} pairs, {} candidates, {} accepted, {:.2f} pairs/s", summary.pairs, summary.candidates,
                 summary.accepted, rate);
    write_manifest(config, "detect",
                   json{{"frames", summary.frames},
                        {"pairs", summary.pairs},
                        {"workers", config.workers},
                        {"seconds", summary.seconds},
                        {"pairs_per_second", rate},
                        {"accepted", summary.accepted}});
    return summary;
}

std::vector<Anchor> anchors_of(const std::vector<ClassifiedRegion>& records, const TocConfig& toc) {
    return deduplicate_anchors(records, toc.gap_max, toc.iou_min);
}

namespace {

Toc make_toc(const std::vector<ClassifiedRegion>& classified, const GrammarDescriptor& grammar,
             const PipelineConfig& config, const std::vector<RgbFrame>* frames) {
    Toc toc = build_toc(classified, grammar, config.toc, config.video_id);
    if (config.toc.thumbnails) {
        if (frames == nullptr) throw ContractError("thumbnails need the frames");
        write_thumbnails(toc, *frames, config.out_dir);
    }
    render_outputs(toc, config.out_dir);
    return toc;
}

}  // namespace

std::vector<ClassifiedRegion> run_classify(const PipelineConfig& config) {
    validate_config(config);
    const GrammarDescriptor grammar = load_effective_grammar(config);
    const std::vector<RgbFrame> frames = load_frames(config);
    require_frame_size(grammar, frames.front().width(), frames.front().height());
    const std::vector<ClassifiedRegion> records = read_detections(config.out_dir / "detections.json");
    std::vector<Detection> detections;
    detections.reserve(records.size());
    for (const ClassifiedRegion& r : records) detections.push_back(r.region);
    const std::vector<ClassifiedRegion> classified = classify_all(detections, grammar, frames);
    write_detections(config.out_dir / "classified.json", classified);
    const Toc toc = make_toc(classified, grammar, config, &frames);
    std::size_t labelled = 0;
    for (const ClassifiedRegion& c : classified) labelled += c.class_id.has_value();
    spdlog::info("classify: {} of {} regions labelled, {} toc entries", labelled, classified.size(),
                 toc.entries.size());
    write_manifest(config, "classify", json{{"regions", classified.size()}, {"labelled", labelled}});
    return classified;
}

Toc run_toc(const PipelineConfig& config) {
    validate_config(config);
    const GrammarDescriptor grammar = load_effective_grammar(config);
    const std::vector<ClassifiedRegion> classified = read_detections(config.out_dir / "classified.json");
    std::vector<RgbFrame> frames;
    if (config.toc.thumbnails) frames = load_frames(config);
    const Toc toc = make_toc(classified, grammar, config, config.toc.thumbnails ? &frames : nullptr);
    write_manifest(config, "toc", json{{"entries", toc.entries.size()}});
    return toc;
}

EvalReport run_eval(const PipelineConfig& config) {
    validate_config(config);
    if (config.truth.empty()) throw ConfigError("config: truth is not set");
    const std::vector<GroundTruthRegion> truth = read_truth(config.truth);
    const std::vector<Anchor> detected = anchors_of(read_detections(config.out_dir / "detections.json"), config.toc);
    const Correspondence c = match_detections(detected, truth, config.min_intersection);

    EvalReport report;
    report.detection = detection_metrics(c);
    report.ground_truth_total = truth.size();
    report.detected_total = detected.size();
    report.correct = c.correct();
    report.wrong = c.wrong();
    const fs::path classified_path = config.out_dir / "classified.json";
    if (fs::exists(classified_path)) {
        const std::vector<Anchor> classified = anchors_of(read_detections(classified_path), config.toc);
        report.identification = identification_metrics(classified, truth, config.min_intersection);
    }
    write_json(config.out_dir / "report.json", report_to_json(report));
    write_manifest(config, "eval", json{{"truth", truth.size()}, {"anchors", detected.size()}});
    return report;
}

SyntheticCorpus run_synth(const PipelineConfig& config) {
    validate_config(config);
    if (config.synth_spec.empty()) throw ConfigError("config: synth_spec is not set");
    SyntheticCorpus corpus = generate_synthetic_corpus(read_synth_spec(config.synth_spec), config.seed);
    write_corpus(corpus, config.out_dir);
    write_manifest(config, "synth", json{{"frames", corpus.frames.size()}, {"events", corpus.truth.size()}});
    spdlog::info("synth: {} frames, {} events written to {}", corpus.frames.size(), corpus.truth.size(),
                 config.out_dir.string());
    return corpus;
}

}  // namespace vidtext
