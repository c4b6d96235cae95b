#include "vidtext/classification.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace vidtext {

using nlohmann::json;

std::string_view to_string(MappingCase c) {
    switch (c) {
        case MappingCase::Equality: return "equality";
        case MappingCase::Covering: return "covering";
        case MappingCase::PartialOverlap: return "partial_overlap";
        case MappingCase::Disjunction: return "disjunction";
        case MappingCase::Unmapped: return "none";
    }
    return "none";
}

MappingCase mapping_case_from_string(std::string_view s) {
    for (MappingCase c : {MappingCase::Equality, MappingCase::Covering, MappingCase::PartialOverlap,
                          MappingCase::Disjunction, MappingCase::Unmapped}) {
        if (to_string(c) == s) return c;
    }
    throw ValidationError("unknown mapping '" + std::string(s) + "'");
}

SpatialMapping spatial_mapping(const Box& detected, const Box& class_region) {
    const std::int64_t inter = intersection_area(detected, class_region);
    const double ratio = detected.area() > 0 ? static_cast<double>(inter) / static_cast<double>(detected.area()) : 0.0;
    if (detected == class_region) return {MappingCase::Equality, 1.0};
    if (class_region.contains(detected)) return {MappingCase::Covering, 1.0};
    if (inter > 0) return {MappingCase::PartialOverlap, ratio};
    return {MappingCase::Disjunction, 0.0};
}

double subregion_distance(const HsvPixel& a, const HsvPixel& b) {
    const double dh = a.h - b.h;
    const double ds = a.s - b.s;
    const double dv = a.v - b.v;
    return std::sqrt(dh * dh + ds * ds + dv * dv);
}

double mean_class_distance(const TextClass& cls, const RgbFrame& frame) {
    if (cls.subregions.empty()) {
        throw ContractError("mean_class_distance: class '" + cls.id + "' has no sub-regions");
    }
    double sum = 0.0;
    for (const SubRegionFeature& sr : cls.subregions) sum += subregion_distance(sr.hsv, dominant_hsv(frame, sr.box));
    return sum / static_cast<double>(cls.subregions.size());
}

std::optional<std::size_t> pick_class(std::span<const std::optional<double>> distances, double alpha) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < distances.size(); ++i) {
        if (!distances[i]) continue;
        if (!best || *distances[i] < *distances[*best]) best = i;
    }
    if (best && *distances[*best] <= alpha) return best;
    return std::nullopt;
}

bool spatially_qualifies(const SpatialMapping& m, double overlap_min) {
    switch (m.kind) {
        case MappingCase::Equality:
        case MappingCase::Covering: return true;
        case MappingCase::PartialOverlap: return m.overlap_ratio >= overlap_min;
        default: return false;
    }
}

ClassifiedRegion classify_region(const Detection& region, const GrammarDescriptor& grammar, const RgbFrame& frame) {
    if (region.frame != frame.index()) {
        throw ContractError("classify_region: detection from frame " + std::to_string(region.frame) +
                            " given frame " + std::to_string(frame.index()));
    }
    require_frame_size(grammar, frame.width(), frame.height());

    std::vector<SpatialMapping> mappings;
    std::vector<std::optional<double>> distances;
    for (const TextClass& cls : grammar.classes) {
        const SpatialMapping m = spatial_mapping(region.box, cls.region);
        mappings.push_back(m);
        distances.push_back(spatially_qualifies(m, grammar.overlap_min)
                                ? std::optional<double>(mean_class_distance(cls, frame))
                                : std::nullopt);
    }

    ClassifiedRegion out{region, std::nullopt, std::nullopt, {MappingCase::Disjunction, 0.0}, region.box};

    // Report the spatially closest class when nothing qualifies; otherwise the
    // colour-closest qualifying one.
    std::optional<std::size_t> nearest;
    for (std::size_t i = 0; i < distances.size(); ++i) {
        if (distances[i] && (!nearest || *distances[i] < *distances[*nearest])) nearest = i;
    }
    if (!nearest) {
        for (std::size_t i = 0; i < mappings.size(); ++i) {
            if (mappings[i].overlap_ratio > out.mapping.overlap_ratio) {
                out.mapping = mappings[i];
            }
        }
        return out;
    }
    out.mapping = mappings[*nearest];
    out.mean_distance = distances[*nearest];
    if (pick_class(distances, grammar.alpha)) {
        const TextClass& cls = grammar.classes[*nearest];
        out.class_id = cls.id;
        if (out.mapping.kind == MappingCase::Equality || out.mapping.kind == MappingCase::Covering) {
            out.final_box = cls.region;
        }
    }
    return out;
}

std::vector<ClassifiedRegion> classify_all(const std::vector<Detection>& regions, const GrammarDescriptor& grammar,
                                           const std::vector<RgbFrame>& frames) {
    std::vector<ClassifiedRegion> out;
    out.reserve(regions.size());
    for (const Detection& d : regions) {
        if (d.frame < 0 || static_cast<std::size_t>(d.frame) >= frames.size()) {
            throw ContractError("classify_all: detection references missing frame " + std::to_string(d.frame));
        }
        out.push_back(classify_region(d, grammar, frames[static_cast<std::size_t>(d.frame)]));
    }
    std::stable_sort(out.begin(), out.end(), [](const ClassifiedRegion& a, const ClassifiedRegion& b) {
        if (a.region.frame != b.region.frame) return a.region.frame < b.region.frame;
        if (a.region.box.x != b.region.box.x) return a.region.box.x < b.region.box.x;
        return a.region.box.y < b.region.box.y;
    });
    return out;
}

ClassifiedRegion unclassified_record(const Detection& d) {
    return ClassifiedRegion{d, std::nullopt, std::nullopt, {MappingCase::Unmapped, 0.0}, d.box};
}

namespace {

json box_json(const Box& b) { return json{{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }

Box box_from(const json& j) {
    return Box{j.at("x").get<int>(), j.at("y").get<int>(), j.at("w").get<int>(), j.at("h").get<int>()};
}

template <typename T>
json nullable(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

}  // namespace

json detections_to_json(const std::vector<ClassifiedRegion>& records) {
    json arr = json::array();
    for (const ClassifiedRegion& r : records) {
        arr.push_back(json{
            {"frame", r.region.frame},
            {"box", box_json(r.region.box)},
            {"class", nullable(r.class_id)},
            {"mean_distance", nullable(r.mean_distance)},
            {"mapping", std::string(to_string(r.mapping.kind))},
            {"overlap_ratio", r.mapping.overlap_ratio},
            {"final_box", box_json(r.final_box)},
            {"stage_scores",
             {{"density", r.region.density},
              {"contrast_peak_distance", r.region.contrast_peak_distance},
              {"regularity", nullable(r.region.regularity)}}},
        });
    }
    return arr;
}

std::vector<ClassifiedRegion> detections_from_json(const json& j) {
    if (!j.is_array()) throw ValidationError("detections: expected a JSON array");
    std::vector<ClassifiedRegion> out;
    try {
        for (const json& e : j) {
            ClassifiedRegion r;
            r.region.frame = e.at("frame").get<int>();
            r.region.box = box_from(e.at("box"));
            r.class_id = optional_from<std::string>(e, "class");
            r.mean_distance = optional_from<double>(e, "mean_distance");
            r.mapping.kind = mapping_case_from_string(e.value("mapping", std::string("none")));
            r.mapping.overlap_ratio = e.value("overlap_ratio", 0.0);
            r.final_box = e.contains("final_box") ? box_from(e.at("final_box")) : r.region.box;
            if (e.contains("stage_scores")) {
                const json& s = e.at("stage_scores");
                r.region.density = s.value("density", 0.0);
                r.region.contrast_peak_distance = s.value("contrast_peak_distance", 0);
                r.region.regularity = optional_from<double>(s, "regularity");
            }
            out.push_back(std::move(r));
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("detections: malformed entry: ") + e.what());
    }
    return out;
}

void write_detections(const std::filesystem::path& path, const std::vector<ClassifiedRegion>& records) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << detections_to_json(records).dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<ClassifiedRegion> read_detections(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open detections file " + path.string());
    try {
        return detections_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ValidationError("detections: " + path.string() + " is not valid JSON: " + e.what());
    }
}

}  // namespace vidtext
