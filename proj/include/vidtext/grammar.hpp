#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "vidtext/frame_io.hpp"

namespace vidtext {

/// Colour invariant: a rectangle and its dominant HSV.
struct SubRegionFeature {
    Box box;
    HsvPixel hsv;
    friend bool operator==(const SubRegionFeature&, const SubRegionFeature&) = default;
};

/// A caption type: where it is placed and which colour patches identify it.
/// Sub-regions may sit next to the class region rather than inside it.
struct TextClass {
    std::string id;
    std::string label;
    Box region;
    std::vector<SubRegionFeature> subregions;
    friend bool operator==(const TextClass&, const TextClass&) = default;
};

struct GrammarDescriptor {
    std::string channel;
    std::string program;
    int frame_w = 0;
    int frame_h = 0;
    std::vector<TextClass> classes;
    double alpha = 0.15;
    double overlap_min = 0.8;
    friend bool operator==(const GrammarDescriptor&, const GrammarDescriptor&) = default;

    [[nodiscard]] const TextClass* find(const std::string& id) const;
};

/// Per-component mean of the HSV values over `box`. Hue is averaged as a plain
/// scalar, so boxes mixing hues near 0 and 1 average towards 0.5.
[[nodiscard]] HsvPixel dominant_hsv(const RgbFrame& frame, const Box& box);

/// Throws ValidationError naming the offending class or field.
void validate_grammar(const GrammarDescriptor& grammar);

[[nodiscard]] GrammarDescriptor grammar_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json grammar_to_json(const GrammarDescriptor& grammar);

[[nodiscard]] GrammarDescriptor load_grammar(const std::filesystem::path& path);
void save_grammar(const std::filesystem::path& path, const GrammarDescriptor& grammar);

/// Samples each sub-region's dominant colour from an exemplar frame.
[[nodiscard]] TextClass build_grammar_entry(const RgbFrame& frame, std::string id, std::string label,
                                            const Box& class_box, const std::vector<Box>& subregion_boxes);

/// Throws SizeMismatchError with both sizes when the frame does not match the
/// reference size the grammar was authored for.
void require_frame_size(const GrammarDescriptor& grammar, int width, int height);

}  // namespace vidtext
