#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vidtext/classification.hpp"

namespace vidtext {

/// One text appearance: the first frame it was seen in and where.
struct Anchor {
    std::optional<std::string> class_id;
    int frame = 0;
    Box box;
    std::optional<std::string> thumbnail;  // relative to the output directory
    friend bool operator==(const Anchor&, const Anchor&) = default;
};

struct TocEntry {
    std::string class_id;
    std::string class_label;
    std::vector<Anchor> anchors;
    friend bool operator==(const TocEntry&, const TocEntry&) = default;
};

struct Toc {
    std::string video_id;
    std::vector<TocEntry> entries;
    std::vector<Anchor> unclassified;
    friend bool operator==(const Toc&, const Toc&) = default;
};

struct TocConfig {
    int gap_max = 25;
    double iou_min = 0.7;
    bool thumbnails = false;
};

/// Collapses repeated sightings of the same text. A region joins an earlier
/// anchor of the same class (or of no class) when its final box has IoU >=
/// `iou_min` with the anchor box and it comes at most `gap_max` frames after
/// the anchor was last seen. Input must be ordered by frame; anchors come out
/// in creation order, which is ascending frame.
[[nodiscard]] std::vector<Anchor> deduplicate_anchors(const std::vector<ClassifiedRegion>& classified, int gap_max,
                                                      double iou_min);

/// Groups deduplicated anchors by grammar class, in grammar declaration order.
/// Throws ValidationError for a class id the grammar does not declare.
[[nodiscard]] Toc build_toc(const std::vector<ClassifiedRegion>& classified, const GrammarDescriptor& grammar,
                            const TocConfig& config, std::string video_id = "video");

/// Writes a PNG crop per anchor under out_dir/thumbs and records its relative path.
void write_thumbnails(Toc& toc, const std::vector<RgbFrame>& frames, const std::filesystem::path& out_dir);

[[nodiscard]] nlohmann::json toc_to_json(const Toc& toc);
[[nodiscard]] Toc toc_from_json(const nlohmann::json& j);
[[nodiscard]] std::string render_html(const Toc& toc);

/// Writes out_dir/toc.json and out_dir/toc.html.
void render_outputs(const Toc& toc, const std::filesystem::path& out_dir);

[[nodiscard]] Toc read_toc(const std::filesystem::path& path);

}  // namespace vidtext
