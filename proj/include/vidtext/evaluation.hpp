#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vidtext/toc_builder.hpp"

namespace vidtext {

struct GroundTruthRegion {
    int first_frame = 0;
    int last_frame = 0;  // inclusive
    Box box;
    std::optional<std::string> class_id;
    friend bool operator==(const GroundTruthRegion&, const GroundTruthRegion&) = default;
};

[[nodiscard]] nlohmann::json truth_to_json(const std::vector<GroundTruthRegion>& truth);
[[nodiscard]] std::vector<GroundTruthRegion> truth_from_json(const nlohmann::json& j);
[[nodiscard]] std::vector<GroundTruthRegion> read_truth(const std::filesystem::path& path);
void write_truth(const std::filesystem::path& path, const std::vector<GroundTruthRegion>& truth);

/// area(D & G) / area(G).
[[nodiscard]] double truth_coverage(const Box& detected, const Box& truth);

struct Correspondence {
    std::size_t detection_count = 0;
    std::size_t truth_count = 0;
    std::vector<std::optional<std::size_t>> truth_of;  // per detection
    std::vector<double> ratio_of;                      // per detection; 0 when unmatched

    [[nodiscard]] std::size_t correct() const;
    [[nodiscard]] std::size_t wrong() const { return detection_count - correct(); }
};

/// A detection can match a truth region when its frame lies in the truth span
/// and it covers at least `min_intersection` of the truth box. Pairs are taken
/// greedily by descending coverage, ties by detection (frame, x, y, w, h) and
/// then truth order; each side is used at most once.
[[nodiscard]] Correspondence match_detections(const std::vector<Anchor>& detections,
                                              const std::vector<GroundTruthRegion>& truth,
                                              double min_intersection = 0.85);

struct DetectionMetrics {
    double recall = 0.0;
    double precision = 0.0;
    double false_alarm = 0.0;
};

/// Empty truth gives recall 1; no detections give precision 1, false alarm 0.
[[nodiscard]] DetectionMetrics detection_metrics(std::size_t correct, std::size_t detected_total,
                                                 std::size_t truth_total);
[[nodiscard]] DetectionMetrics detection_metrics(const Correspondence& c);

struct IdentificationMetrics {
    std::size_t extracted = 0;   // every anchor of the classified run
    std::size_t identified = 0;  // matched to a truth region and given its class
    std::optional<double> txti;  // absent when nothing was extracted
    std::optional<double> txtni;
};

[[nodiscard]] IdentificationMetrics identification_metrics(std::size_t identified, std::size_t extracted);

/// An anchor counts as identified when it matched a truth region that has a
/// class and carries that same class.
[[nodiscard]] IdentificationMetrics identification_metrics(const std::vector<Anchor>& classified,
                                                           const std::vector<GroundTruthRegion>& truth,
                                                           double min_intersection = 0.85);

struct EvalReport {
    DetectionMetrics detection;
    std::optional<IdentificationMetrics> identification;
    std::size_t ground_truth_total = 0;
    std::size_t detected_total = 0;
    std::size_t correct = 0;
    std::size_t wrong = 0;
};

[[nodiscard]] EvalReport evaluate(const std::vector<Anchor>& anchors, const std::vector<GroundTruthRegion>& truth,
                                  bool with_identification, double min_intersection = 0.85);

[[nodiscard]] nlohmann::json report_to_json(const EvalReport& report);
[[nodiscard]] std::string format_report_table(const EvalReport& report);

// Synthetic corpus -----------------------------------------------------------

enum class BackgroundStyle { Flat, Gradient, Noise, TiledPhoto };

struct SynthClass {
    std::string id;
    std::string label;
    Rgb marker{170, 0, 0};  // tab colour, or the band fill colour when an event has no tab
    int margin = 8;         // class region = union of the class's bands grown by this much
    int probe_width = 16;   // width of the sampled patch when there is no tab
};

struct SynthEvent {
    int first_frame = 0;
    int last_frame = 0;
    Box box;
    std::optional<std::string> class_id;
    int stroke_period = 11;
    int stroke_width = 2;
    int tab_width = 0;  // plain marker-coloured tab at the left end; 0 for none
    int padding = 0;     // fill rows above and below the strokes
    Rgb fill{25, 25, 25};
    Rgb stroke{250, 250, 250};
};

struct SynthSpec {
    int width = 352;
    int height = 288;
    int frame_count = 200;
    BackgroundStyle background = BackgroundStyle::Flat;
    int base_gray = 175;
    int noise_amplitude = 24;
    std::string video_id = "synthetic";
    std::string channel = "synthetic";
    std::string program = "synthetic";
    std::vector<SynthClass> classes;
    std::vector<SynthEvent> events;
};

struct SyntheticCorpus {
    std::vector<RgbFrame> frames;
    std::vector<GroundTruthRegion> truth;
    GrammarDescriptor grammar;
};

/// Throws ValidationError naming the offending event or field.
void validate_synth_spec(const SynthSpec& spec);
[[nodiscard]] SynthSpec synth_spec_from_json(const nlohmann::json& j);
[[nodiscard]] SynthSpec read_synth_spec(const std::filesystem::path& path);

/// Static background plus stroke-grid bands shown over each event's span.
/// A classed event paints its class marker colour, rescaled to the fill's
/// luminance, over its tab or, without a tab, over the whole band; either way
/// the gray-level image is the same as with the plain fill. The grammar
/// samples each class at the tab (or the left `probe_width` columns of the
/// band) in the first frame of its first event.
[[nodiscard]] SyntheticCorpus generate_synthetic_corpus(const SynthSpec& spec, std::uint64_t seed);

/// Writes frames (frame_%06d.png), truth.json and grammar.json into `dir`.
void write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

}  // namespace vidtext
