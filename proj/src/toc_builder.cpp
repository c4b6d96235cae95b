#include "vidtext/toc_builder.hpp"

#include <fstream>
#include <sstream>

namespace vidtext {

using nlohmann::json;

std::vector<Anchor> deduplicate_anchors(const std::vector<ClassifiedRegion>& classified, int gap_max,
                                        double iou_min) {
    std::vector<Anchor> anchors;
    std::vector<int> last_seen;
    for (std::size_t i = 0; i < classified.size(); ++i) {
        const ClassifiedRegion& r = classified[i];
        if (i > 0 && r.region.frame < classified[i - 1].region.frame) {
            throw ContractError("deduplicate_anchors: input is not ordered by frame");
        }
        bool joined = false;
        for (std::size_t a = 0; a < anchors.size(); ++a) {
            if (anchors[a].class_id != r.class_id) continue;
            if (r.region.frame - last_seen[a] > gap_max) continue;
            if (iou(anchors[a].box, r.final_box) < iou_min) continue;
            last_seen[a] = r.region.frame;
            joined = true;
            break;
        }
        if (!joined) {
            anchors.push_back(Anchor{r.class_id, r.region.frame, r.final_box, std::nullopt});
            last_seen.push_back(r.region.frame);
        }
    }
    return anchors;
}

Toc build_toc(const std::vector<ClassifiedRegion>& classified, const GrammarDescriptor& grammar,
              const TocConfig& config, std::string video_id) {
    Toc toc;
    toc.video_id = std::move(video_id);
    const std::vector<Anchor> anchors = deduplicate_anchors(classified, config.gap_max, config.iou_min);
    for (const Anchor& a : anchors) {
        if (a.class_id && grammar.find(*a.class_id) == nullptr) {
            throw ValidationError("toc: class '" + *a.class_id + "' is not declared in the grammar");
        }
        if (!a.class_id) toc.unclassified.push_back(a);
    }
    for (const TextClass& cls : grammar.classes) {
        TocEntry entry{cls.id, cls.label, {}};
        for (const Anchor& a : anchors) {
            if (a.class_id == cls.id) entry.anchors.push_back(a);
        }
        if (!entry.anchors.empty()) toc.entries.push_back(std::move(entry));
    }
    return toc;
}

namespace {

void thumb_for(Anchor& a, const std::string& stem, const std::vector<RgbFrame>& frames,
               const std::filesystem::path& out_dir) {
    if (a.frame < 0 || static_cast<std::size_t>(a.frame) >= frames.size()) {
        throw ContractError("write_thumbnails: anchor references missing frame " + std::to_string(a.frame));
    }
    const std::string rel = "thumbs/" + stem + "_" + std::to_string(a.frame) + "_" + std::to_string(a.box.x) + "_" +
                            std::to_string(a.box.y) + ".png";
    write_png(out_dir / rel, crop(frames[static_cast<std::size_t>(a.frame)], a.box));
    a.thumbnail = rel;
}

}  // namespace

void write_thumbnails(Toc& toc, const std::vector<RgbFrame>& frames, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir / "thumbs", ec);
    if (ec) throw IoError("cannot create " + (out_dir / "thumbs").string() + ": " + ec.message());
    for (TocEntry& e : toc.entries) {
        for (Anchor& a : e.anchors) thumb_for(a, e.class_id, frames, out_dir);
    }
    for (Anchor& a : toc.unclassified) thumb_for(a, "unclassified", frames, out_dir);
}

namespace {

json anchor_json(const Anchor& a) {
    return json{{"frame", a.frame},
                {"box", {{"x", a.box.x}, {"y", a.box.y}, {"w", a.box.w}, {"h", a.box.h}}},
                {"thumb", a.thumbnail ? json(*a.thumbnail) : json(nullptr)}};
}

Anchor anchor_from(const json& j, std::optional<std::string> class_id) {
    Anchor a;
    a.class_id = std::move(class_id);
    a.frame = j.at("frame").get<int>();
    const json& b = j.at("box");
    a.box = Box{b.at("x").get<int>(), b.at("y").get<int>(), b.at("w").get<int>(), b.at("h").get<int>()};
    if (j.contains("thumb") && !j.at("thumb").is_null()) a.thumbnail = j.at("thumb").get<std::string>();
    return a;
}

std::string escape_html(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

void anchor_rows(std::ostringstream& html, const std::vector<Anchor>& anchors) {
    html << "<table>\n<tr><th>frame</th><th>box</th><th>thumbnail</th></tr>\n";
    for (const Anchor& a : anchors) {
        html << "<tr><td>" << a.frame << "</td><td>" << a.box.x << ", " << a.box.y << ", " << a.box.w << " x "
             << a.box.h << "</td><td>";
        if (a.thumbnail) html << "<img src=\"" << escape_html(*a.thumbnail) << "\" alt=\"frame " << a.frame << "\">";
        html << "</td></tr>\n";
    }
    html << "</table>\n";
}

}  // namespace

json toc_to_json(const Toc& toc) {
    json entries = json::array();
    for (const TocEntry& e : toc.entries) {
        json anchors = json::array();
        for (const Anchor& a : e.anchors) anchors.push_back(anchor_json(a));
        entries.push_back(json{{"class", e.class_id}, {"label", e.class_label}, {"anchors", std::move(anchors)}});
    }
    json unclassified = json::array();
    for (const Anchor& a : toc.unclassified) unclassified.push_back(anchor_json(a));
    return json{{"video", toc.video_id}, {"entries", std::move(entries)}, {"unclassified", std::move(unclassified)}};
}

Toc toc_from_json(const json& j) {
    Toc toc;
    try {
        toc.video_id = j.at("video").get<std::string>();
        for (const json& e : j.at("entries")) {
            TocEntry entry{e.at("class").get<std::string>(), e.at("label").get<std::string>(), {}};
            for (const json& a : e.at("anchors")) entry.anchors.push_back(anchor_from(a, entry.class_id));
            toc.entries.push_back(std::move(entry));
        }
        for (const json& a : j.at("unclassified")) toc.unclassified.push_back(anchor_from(a, std::nullopt));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("toc: malformed document: ") + e.what());
    }
    return toc;
}

std::string render_html(const Toc& toc) {
    std::ostringstream html;
    html << "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>"
         << escape_html(toc.video_id) << " contents</title>\n"
         << "<style>body{font-family:sans-serif}table{border-collapse:collapse}"
            "td,th{border:1px solid #999;padding:2px 6px}img{max-height:48px}</style>\n"
         << "</head>\n<body>\n<h1>" << escape_html(toc.video_id) << "</h1>\n";
    for (const TocEntry& e : toc.entries) {
        html << "<section class=\"toc-class\" id=\"class-" << escape_html(e.class_id) << "\">\n<h2>"
             << escape_html(e.class_label) << " <small>(" << escape_html(e.class_id) << ")</small></h2>\n";
        anchor_rows(html, e.anchors);
        html << "</section>\n";
    }
    if (!toc.unclassified.empty()) {
        html << "<section class=\"toc-unclassified\">\n<h2>Unclassified</h2>\n";
        anchor_rows(html, toc.unclassified);
        html << "</section>\n";
    }
    html << "</body>\n</html>\n";
    return html.str();
}

void render_outputs(const Toc& toc, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    const auto write = [](const std::filesystem::path& p, const std::string& text) {
        std::ofstream out(p);
        if (!out) throw IoError("cannot write " + p.string());
        out << text;
        if (!out) throw IoError("failed writing " + p.string());
    };
    write(out_dir / "toc.json", toc_to_json(toc).dump(2) + "\n");
    write(out_dir / "toc.html", render_html(toc));
}

Toc read_toc(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return toc_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ValidationError("toc: " + path.string() + " is not valid JSON: " + e.what());
    }
}

}  // namespace vidtext
