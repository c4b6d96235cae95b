#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vidtext/evaluation.hpp"
#include "vidtext/region_filtering.hpp"

namespace vidtext {

inline constexpr const char* kToolVersion = "1.0.0";

/// Everything a run needs. Paths read from a config file are resolved against
/// the directory holding that file.
struct PipelineConfig {
    std::filesystem::path frames_dir;
    std::string frame_pattern = "frame_%06d.png";
    std::filesystem::path grammar;
    std::filesystem::path out_dir = "out";
    std::filesystem::path truth;
    std::filesystem::path synth_spec;
    std::string video_id = "video";
    int workers = 1;
    std::uint64_t seed = 1;
    std::set<std::string> dump_stages;

    LocalizationConfig localization;
    FilterConfig filtering;
    std::optional<double> alpha;        // overrides the grammar file
    std::optional<double> overlap_min;  // overrides the grammar file
    TocConfig toc;
    double min_intersection = 0.85;
};

/// Dump stage names accepted by --dump-stage; "all" selects every one.
[[nodiscard]] const std::vector<std::string>& dump_stage_names();

[[nodiscard]] PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
[[nodiscard]] PipelineConfig load_pipeline_config(const std::filesystem::path& path);
[[nodiscard]] nlohmann::json config_to_json(const PipelineConfig& config);

/// Throws ConfigError naming the first out-of-domain value.
void validate_config(const PipelineConfig& config);

/// 64-bit FNV-1a over the canonical JSON of the effective config.
[[nodiscard]] std::string config_hash(const PipelineConfig& config);

struct DetectSummary {
    std::size_t frames = 0;
    std::size_t pairs = 0;
    std::size_t candidates = 0;
    std::size_t accepted = 0;
    double seconds = 0.0;
};

/// Localize and filter every consecutive pair; writes detections.json.
DetectSummary run_detect(const PipelineConfig& config);

/// Classifies detections.json against the grammar; writes classified.json,
/// toc.json and toc.html.
std::vector<ClassifiedRegion> run_classify(const PipelineConfig& config);

/// Rebuilds toc.json and toc.html from classified.json.
Toc run_toc(const PipelineConfig& config);

/// Scores detections.json (and classified.json when present) against the
/// ground truth; writes report.json.
EvalReport run_eval(const PipelineConfig& config);

/// Renders the generator spec into out_dir.
SyntheticCorpus run_synth(const PipelineConfig& config);

/// In-memory detect over already decoded frames; `workers` threads share the pairs.
[[nodiscard]] std::vector<ClassifiedRegion> detect_frames(const std::vector<RgbFrame>& frames,
                                                          const PipelineConfig& config,
                                                          DetectSummary* summary = nullptr);

/// Anchors of a detections or classified file, deduplicated with the TOC rule.
[[nodiscard]] std::vector<Anchor> anchors_of(const std::vector<ClassifiedRegion>& records, const TocConfig& toc);

}  // namespace vidtext
