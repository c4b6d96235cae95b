#include "vidtext/grammar.hpp"

#include <fstream>
#include <map>
#include <set>

namespace vidtext {

using nlohmann::json;

const TextClass* GrammarDescriptor::find(const std::string& id) const {
    for (const TextClass& c : classes) {
        if (c.id == id) return &c;
    }
    return nullptr;
}

HsvPixel dominant_hsv(const RgbFrame& frame, const Box& box) {
    if (box.w < 1 || box.h < 1) {
        throw ContractError("dominant_hsv: zero-area box");
    }
    if (!box.inside(frame.width(), frame.height())) {
        throw ContractError("dominant_hsv: box outside frame");
    }
    // Summing per distinct colour in key order makes the result independent of
    // pixel order, bit for bit.
    std::map<std::uint32_t, std::int64_t> counts;
    for (int y = box.y; y < box.bottom(); ++y) {
        for (int x = box.x; x < box.right(); ++x) {
            const Rgb p = frame.at(x, y);
            ++counts[(static_cast<std::uint32_t>(p.r) << 16) | (static_cast<std::uint32_t>(p.g) << 8) | p.b];
        }
    }
    const auto n = static_cast<double>(box.area());
    HsvPixel mean{0.0, 0.0, 0.0};
    for (const auto& [key, count] : counts) {
        const HsvPixel c = rgb_to_hsv(((key >> 16) & 0xFF) / 255.0, ((key >> 8) & 0xFF) / 255.0, (key & 0xFF) / 255.0);
        const double wgt = static_cast<double>(count) / n;
        mean.h += wgt * c.h;
        mean.s += wgt * c.s;
        mean.v += wgt * c.v;
    }
    return mean;
}

namespace {

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

void check_rect(const Box& b, const GrammarDescriptor& g, const std::string& what) {
    if (!b.inside(g.frame_w, g.frame_h)) {
        throw ValidationError("grammar: " + what + " rectangle " + std::to_string(b.x) + "," + std::to_string(b.y) +
                              "," + std::to_string(b.w) + "," + std::to_string(b.h) + " is outside the " +
                              std::to_string(g.frame_w) + "x" + std::to_string(g.frame_h) + " frame");
    }
}

template <typename T>
T field(const json& j, const char* name, const std::string& where) {
    if (!j.is_object() || !j.contains(name)) {
        throw ValidationError("grammar: missing field '" + std::string(name) + "' in " + where);
    }
    try {
        return j.at(name).get<T>();
    } catch (const json::exception&) {
        throw ValidationError("grammar: field '" + std::string(name) + "' in " + where + " has the wrong type");
    }
}

Box box_field(const json& j, const std::string& where) {
    return Box{field<int>(j, "x", where), field<int>(j, "y", where), field<int>(j, "w", where),
               field<int>(j, "h", where)};
}

json box_json(const Box& b) { return json{{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }

}  // namespace

void validate_grammar(const GrammarDescriptor& g) {
    if (g.frame_w < 1 || g.frame_h < 1) throw ValidationError("grammar: frame_w and frame_h must be positive");
    if (!(g.alpha > 0.0)) throw ValidationError("grammar: alpha must be > 0");
    if (!(g.overlap_min > 0.0 && g.overlap_min <= 1.0)) {
        throw ValidationError("grammar: overlap_min must lie in (0, 1]");
    }
    std::set<std::string> seen;
    for (const TextClass& c : g.classes) {
        if (c.id.empty()) throw ValidationError("grammar: class with empty id");
        if (!seen.insert(c.id).second) throw ValidationError("grammar: duplicate class id '" + c.id + "'");
        check_rect(c.region, g, "class '" + c.id + "' region");
        if (c.subregions.empty()) throw ValidationError("grammar: class '" + c.id + "' has no sub-regions");
        for (const SubRegionFeature& sr : c.subregions) {
            check_rect(sr.box, g, "class '" + c.id + "' sub-region");
            if (!in_unit(sr.hsv.h) || !in_unit(sr.hsv.s) || !in_unit(sr.hsv.v)) {
                throw ValidationError("grammar: class '" + c.id + "' has an hsv component outside [0, 1]");
            }
        }
    }
}

GrammarDescriptor grammar_from_json(const json& j) {
    GrammarDescriptor g;
    g.channel = field<std::string>(j, "channel", "descriptor");
    g.program = field<std::string>(j, "program", "descriptor");
    g.frame_w = field<int>(j, "frame_w", "descriptor");
    g.frame_h = field<int>(j, "frame_h", "descriptor");
    g.alpha = field<double>(j, "alpha", "descriptor");
    g.overlap_min = field<double>(j, "overlap_min", "descriptor");
    const json classes = field<json>(j, "classes", "descriptor");
    if (!classes.is_array()) throw ValidationError("grammar: field 'classes' must be an array");
    for (const json& jc : classes) {
        TextClass c;
        c.id = field<std::string>(jc, "id", "class");
        const std::string where = "class '" + c.id + "'";
        c.label = field<std::string>(jc, "label", where);
        c.region = box_field(field<json>(jc, "region", where), where + " region");
        const json subs = field<json>(jc, "subregions", where);
        if (!subs.is_array()) throw ValidationError("grammar: 'subregions' of " + where + " must be an array");
        for (const json& js : subs) {
            SubRegionFeature sr;
            sr.box = box_field(js, where + " sub-region");
            const auto hsv = field<std::vector<double>>(js, "hsv", where + " sub-region");
            if (hsv.size() != 3) throw ValidationError("grammar: 'hsv' of " + where + " needs 3 components");
            sr.hsv = HsvPixel{hsv[0], hsv[1], hsv[2]};
            c.subregions.push_back(sr);
        }
        g.classes.push_back(std::move(c));
    }
    validate_grammar(g);
    return g;
}

json grammar_to_json(const GrammarDescriptor& g) {
    json classes = json::array();
    for (const TextClass& c : g.classes) {
        json subs = json::array();
        for (const SubRegionFeature& sr : c.subregions) {
            json js = box_json(sr.box);
            js["hsv"] = {sr.hsv.h, sr.hsv.s, sr.hsv.v};
            subs.push_back(std::move(js));
        }
        classes.push_back(
            json{{"id", c.id}, {"label", c.label}, {"region", box_json(c.region)}, {"subregions", std::move(subs)}});
    }
    return json{{"channel", g.channel}, {"program", g.program}, {"frame_w", g.frame_w},
                {"frame_h", g.frame_h}, {"alpha", g.alpha},     {"overlap_min", g.overlap_min},
                {"classes", std::move(classes)}};
}

GrammarDescriptor load_grammar(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open grammar file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("grammar: " + path.string() + " is not valid JSON: " + e.what());
    }
    return grammar_from_json(j);
}

void save_grammar(const std::filesystem::path& path, const GrammarDescriptor& grammar) {
    validate_grammar(grammar);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write grammar file " + path.string());
    out << grammar_to_json(grammar).dump(2) << '\n';
    if (!out) throw IoError("failed writing grammar file " + path.string());
}

TextClass build_grammar_entry(const RgbFrame& frame, std::string id, std::string label, const Box& class_box,
                              const std::vector<Box>& subregion_boxes) {
    if (subregion_boxes.empty()) {
        throw ValidationError("grammar: class '" + id + "' needs at least one sub-region");
    }
    if (!class_box.inside(frame.width(), frame.height())) {
        throw ContractError("build_grammar_entry: class region outside frame");
    }
    TextClass c{std::move(id), std::move(label), class_box, {}};
    for (const Box& b : subregion_boxes) c.subregions.push_back(SubRegionFeature{b, dominant_hsv(frame, b)});
    return c;
}

void require_frame_size(const GrammarDescriptor& grammar, int width, int height) {
    if (grammar.frame_w != width || grammar.frame_h != height) {
        throw SizeMismatchError("grammar was authored for " + std::to_string(grammar.frame_w) + "x" +
                                std::to_string(grammar.frame_h) + " frames but the frames are " +
                                std::to_string(width) + "x" + std::to_string(height));
    }
}

}  // namespace vidtext
