#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vidtext/grammar.hpp"

namespace vidtext {

/// Accepted text region as written by the detect stage.
struct Detection {
    int frame = 0;
    Box box;
    double density = 0.0;
    int contrast_peak_distance = 0;
    std::optional<double> regularity;
    friend bool operator==(const Detection&, const Detection&) = default;
};

enum class MappingCase {
    Equality,
    Covering,
    PartialOverlap,
    Disjunction,
    /// Classification has not run yet (detect-stage output).
    Unmapped,
};

[[nodiscard]] std::string_view to_string(MappingCase c);
[[nodiscard]] MappingCase mapping_case_from_string(std::string_view s);

struct SpatialMapping {
    MappingCase kind = MappingCase::Unmapped;
    double overlap_ratio = 0.0;  // area(A & B) / area(B)
    friend bool operator==(const SpatialMapping&, const SpatialMapping&) = default;
};

struct ClassifiedRegion {
    Detection region;
    std::optional<std::string> class_id;
    std::optional<double> mean_distance;
    SpatialMapping mapping;
    Box final_box;
    friend bool operator==(const ClassifiedRegion&, const ClassifiedRegion&) = default;
};

/// Relation of a detected box B to a class region A.
[[nodiscard]] SpatialMapping spatial_mapping(const Box& detected, const Box& class_region);

/// Euclidean distance between two HSV triples.
[[nodiscard]] double subregion_distance(const HsvPixel& a, const HsvPixel& b);

/// Mean over the class sub-regions of the distance between the stored colour
/// and the colour found at the same place in `frame`.
[[nodiscard]] double mean_class_distance(const TextClass& cls, const RgbFrame& frame);

/// Index of the smallest distance (first one on ties) when it is <= alpha.
/// Empty entries are classes that did not qualify spatially.
[[nodiscard]] std::optional<std::size_t> pick_class(std::span<const std::optional<double>> distances, double alpha);

[[nodiscard]] bool spatially_qualifies(const SpatialMapping& m, double overlap_min);

/// `frame` must be the frame the detection was reported in.
[[nodiscard]] ClassifiedRegion classify_region(const Detection& region, const GrammarDescriptor& grammar,
                                               const RgbFrame& frame);

/// `frames[i]` must hold frame index i. Output is ordered by (frame, x, y).
[[nodiscard]] std::vector<ClassifiedRegion> classify_all(const std::vector<Detection>& regions,
                                                         const GrammarDescriptor& grammar,
                                                         const std::vector<RgbFrame>& frames);

/// Detect-stage record: no class, Unmapped, final box = detected box.
[[nodiscard]] ClassifiedRegion unclassified_record(const Detection& d);

[[nodiscard]] nlohmann::json detections_to_json(const std::vector<ClassifiedRegion>& records);
[[nodiscard]] std::vector<ClassifiedRegion> detections_from_json(const nlohmann::json& j);
void write_detections(const std::filesystem::path& path, const std::vector<ClassifiedRegion>& records);
[[nodiscard]] std::vector<ClassifiedRegion> read_detections(const std::filesystem::path& path);

}  // namespace vidtext
