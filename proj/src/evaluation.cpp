#include "vidtext/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace vidtext {

using nlohmann::json;

namespace {

json box_json(const Box& b) { return json{{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }

Box box_from(const json& j) {
    return Box{j.at("x").get<int>(), j.at("y").get<int>(), j.at("w").get<int>(), j.at("h").get<int>()};
}

json parse_file(const std::filesystem::path& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw IoError(std::string("cannot open ") + what + " " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string(what) + " " + path.string() + " is not valid JSON: " + e.what());
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

json truth_to_json(const std::vector<GroundTruthRegion>& truth) {
    json arr = json::array();
    for (const GroundTruthRegion& g : truth) {
        arr.push_back(json{{"first_frame", g.first_frame},
                           {"last_frame", g.last_frame},
                           {"box", box_json(g.box)},
                           {"class", g.class_id ? json(*g.class_id) : json(nullptr)}});
    }
    return arr;
}

std::vector<GroundTruthRegion> truth_from_json(const json& j) {
    if (!j.is_array()) throw ValidationError("ground truth: expected a JSON array");
    std::vector<GroundTruthRegion> out;
    try {
        for (const json& e : j) {
            GroundTruthRegion g;
            g.first_frame = e.at("first_frame").get<int>();
            g.last_frame = e.at("last_frame").get<int>();
            g.box = box_from(e.at("box"));
            if (e.contains("class") && !e.at("class").is_null()) g.class_id = e.at("class").get<std::string>();
            if (g.first_frame > g.last_frame) {
                throw ValidationError("ground truth: entry " + std::to_string(out.size()) +
                                      " has first_frame after last_frame");
            }
            if (g.box.w < 1 || g.box.h < 1) {
                throw ValidationError("ground truth: entry " + std::to_string(out.size()) + " has an empty box");
            }
            out.push_back(std::move(g));
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("ground truth: malformed entry: ") + e.what());
    }
    return out;
}

std::vector<GroundTruthRegion> read_truth(const std::filesystem::path& path) {
    return truth_from_json(parse_file(path, "ground truth"));
}

void write_truth(const std::filesystem::path& path, const std::vector<GroundTruthRegion>& truth) {
    write_text(path, truth_to_json(truth).dump(2) + "\n");
}

double truth_coverage(const Box& detected, const Box& truth) {
    if (truth.area() <= 0) return 0.0;
    return static_cast<double>(intersection_area(detected, truth)) / static_cast<double>(truth.area());
}

std::size_t Correspondence::correct() const {
    return static_cast<std::size_t>(std::count_if(truth_of.begin(), truth_of.end(), [](const auto& t) { return t.has_value(); }));
}

Correspondence match_detections(const std::vector<Anchor>& detections, const std::vector<GroundTruthRegion>& truth,
                                double min_intersection) {
    struct Pair {
        double ratio;
        std::size_t d;
        std::size_t t;
    };
    std::vector<Pair> pairs;
    for (std::size_t d = 0; d < detections.size(); ++d) {
        for (std::size_t t = 0; t < truth.size(); ++t) {
            const int f = detections[d].frame;
            if (f < truth[t].first_frame || f > truth[t].last_frame) continue;
            const double r = truth_coverage(detections[d].box, truth[t].box);
            if (r >= min_intersection) pairs.push_back(Pair{r, d, t});
        }
    }
    const auto key = [&](std::size_t d) {
        const Anchor& a = detections[d];
        return std::make_tuple(a.frame, a.box.x, a.box.y, a.box.w, a.box.h);
    };
    std::sort(pairs.begin(), pairs.end(), [&](const Pair& a, const Pair& b) {
        if (a.ratio != b.ratio) return a.ratio > b.ratio;
        if (key(a.d) != key(b.d)) return key(a.d) < key(b.d);
        return a.t < b.t;
    });

    Correspondence c;
    c.detection_count = detections.size();
    c.truth_count = truth.size();
    c.truth_of.assign(detections.size(), std::nullopt);
    c.ratio_of.assign(detections.size(), 0.0);
    std::vector<char> truth_used(truth.size(), 0);
    for (const Pair& p : pairs) {
        if (c.truth_of[p.d] || truth_used[p.t]) continue;
        c.truth_of[p.d] = p.t;
        c.ratio_of[p.d] = p.ratio;
        truth_used[p.t] = 1;
    }
    return c;
}

DetectionMetrics detection_metrics(std::size_t correct, std::size_t detected_total, std::size_t truth_total) {
    if (correct > detected_total || correct > truth_total) {
        throw ContractError("detection_metrics: more correct detections than detections or truths");
    }
    DetectionMetrics m;
    m.recall = truth_total == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(truth_total);
    if (detected_total == 0) {
        m.precision = 1.0;
        m.false_alarm = 0.0;
    } else {
        m.precision = static_cast<double>(correct) / static_cast<double>(detected_total);
        m.false_alarm = static_cast<double>(detected_total - correct) / static_cast<double>(detected_total);
    }
    return m;
}

DetectionMetrics detection_metrics(const Correspondence& c) {
    return detection_metrics(c.correct(), c.detection_count, c.truth_count);
}

IdentificationMetrics identification_metrics(std::size_t identified, std::size_t extracted) {
    if (identified > extracted) throw ContractError("identification_metrics: identified exceeds extracted");
    IdentificationMetrics m;
    m.extracted = extracted;
    m.identified = identified;
    if (extracted > 0) {
        m.txti = static_cast<double>(identified) / static_cast<double>(extracted);
        m.txtni = static_cast<double>(extracted - identified) / static_cast<double>(extracted);
    }
    return m;
}

IdentificationMetrics identification_metrics(const std::vector<Anchor>& classified,
                                             const std::vector<GroundTruthRegion>& truth, double min_intersection) {
    const Correspondence c = match_detections(classified, truth, min_intersection);
    std::size_t identified = 0;
    for (std::size_t d = 0; d < classified.size(); ++d) {
        if (!c.truth_of[d]) continue;
        const GroundTruthRegion& g = truth[*c.truth_of[d]];
        if (g.class_id && classified[d].class_id == g.class_id) ++identified;
    }
    return identification_metrics(identified, classified.size());
}

EvalReport evaluate(const std::vector<Anchor>& anchors, const std::vector<GroundTruthRegion>& truth,
                    bool with_identification, double min_intersection) {
    const Correspondence c = match_detections(anchors, truth, min_intersection);
    EvalReport r;
    r.detection = detection_metrics(c);
    r.ground_truth_total = truth.size();
    r.detected_total = anchors.size();
    r.correct = c.correct();
    r.wrong = c.wrong();
    if (with_identification) r.identification = identification_metrics(anchors, truth, min_intersection);
    return r;
}

json report_to_json(const EvalReport& r) {
    json j{{"recall", r.detection.recall},
           {"precision", r.detection.precision},
           {"false_alarm", r.detection.false_alarm},
           {"txti", nullptr},
           {"txtni", nullptr},
           {"counts",
            {{"ground_truth_total", r.ground_truth_total},
             {"detected_total", r.detected_total},
             {"correct", r.correct},
             {"wrong", r.wrong},
             {"extracted", nullptr},
             {"identified", nullptr}}}};
    if (r.identification) {
        if (r.identification->txti) j["txti"] = *r.identification->txti;
        if (r.identification->txtni) j["txtni"] = *r.identification->txtni;
        j["counts"]["extracted"] = r.identification->extracted;
        j["counts"]["identified"] = r.identification->identified;
    }
    return j;
}

std::string format_report_table(const EvalReport& r) {
    const auto pct = [](std::optional<double> v) {
        if (!v) return std::string("     n/a");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%7.2f%%", 100.0 * *v);
        return std::string(buf);
    };
    std::ostringstream os;
    os << "metric        value\n";
    os << "recall       " << pct(r.detection.recall) << '\n';
    os << "precision    " << pct(r.detection.precision) << '\n';
    os << "false_alarm  " << pct(r.detection.false_alarm) << '\n';
    os << "txti         " << pct(r.identification ? r.identification->txti : std::nullopt) << '\n';
    os << "txtni        " << pct(r.identification ? r.identification->txtni : std::nullopt) << '\n';
    os << "truth " << r.ground_truth_total << "  detected " << r.detected_total << "  correct " << r.correct
       << "  wrong " << r.wrong;
    if (r.identification) {
        os << "  extracted " << r.identification->extracted << "  identified " << r.identification->identified;
    }
    os << '\n';
    return os.str();
}

// Synthetic corpus -----------------------------------------------------------

namespace {

std::string event_name(std::size_t i) { return "event " + std::to_string(i); }

BackgroundStyle background_from(const std::string& s) {
    if (s == "flat") return BackgroundStyle::Flat;
    if (s == "gradient") return BackgroundStyle::Gradient;
    if (s == "noise") return BackgroundStyle::Noise;
    if (s == "tiled-photo") return BackgroundStyle::TiledPhoto;
    throw ValidationError("synth spec: unknown background '" + s + "'");
}

Rgb rgb_from(const json& j, const std::string& where) {
    const auto v = j.get<std::vector<int>>();
    if (v.size() != 3) throw ValidationError("synth spec: " + where + " needs 3 components");
    for (int c : v) {
        if (c < 0 || c > 255) throw ValidationError("synth spec: " + where + " component out of [0, 255]");
    }
    return Rgb{static_cast<std::uint8_t>(v[0]), static_cast<std::uint8_t>(v[1]), static_cast<std::uint8_t>(v[2])};
}

std::uint8_t clamp_byte(double v) { return static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255)); }

int luma(const Rgb& c) { return std::lround(0.299 * c.r + 0.587 * c.g + 0.114 * c.b); }

// Marker colour scaled so that its BT.601 luma equals `target`.
Rgb iso_luminant(const Rgb& marker, int target) {
    Rgb best = marker;
    int best_err = 1 << 30;
    for (int s = 0; s <= 4 * 255; ++s) {
        const double k = s / 255.0;
        const Rgb c{clamp_byte(marker.r * k), clamp_byte(marker.g * k), clamp_byte(marker.b * k)};
        const int err = std::abs(luma(c) - target);
        if (err < best_err) {
            best = c;
            best_err = err;
            if (err == 0) break;
        }
    }
    return best;
}

RgbFrame make_background(const SynthSpec& spec, std::mt19937_64& rng) {
    RgbFrame bg(spec.width, spec.height, 0, Rgb{});
    const auto gray = [](double v) {
        const std::uint8_t g = clamp_byte(v);
        return Rgb{g, g, g};
    };
    switch (spec.background) {
        case BackgroundStyle::Flat:
            for (Rgb& p : bg.pixels()) p = gray(spec.base_gray);
            break;
        case BackgroundStyle::Gradient:
            for (int y = 0; y < spec.height; ++y) {
                for (int x = 0; x < spec.width; ++x) {
                    const double u = static_cast<double>(x) / std::max(1, spec.width - 1);
                    const double v = static_cast<double>(y) / std::max(1, spec.height - 1);
                    bg.at(x, y) = gray(spec.base_gray - 25.0 + 40.0 * u + 20.0 * v);
                }
            }
            break;
        case BackgroundStyle::Noise: {
            std::uniform_int_distribution<int> noise(-spec.noise_amplitude, spec.noise_amplitude);
            for (Rgb& p : bg.pixels()) p = gray(spec.base_gray + noise(rng));
            break;
        }
        case BackgroundStyle::TiledPhoto: {
            // A smooth colour tile made of a few random waves, repeated over the frame.
            constexpr int tile = 48;
            std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
            std::uniform_int_distribution<int> freq(1, 3);
            std::array<std::array<double, 4>, 3> waves{};
            for (auto& w : waves) w = {static_cast<double>(freq(rng)), static_cast<double>(freq(rng)), phase(rng), 0.0};
            for (int y = 0; y < spec.height; ++y) {
                for (int x = 0; x < spec.width; ++x) {
                    const double u = 2.0 * std::numbers::pi * (x % tile) / tile;
                    const double v = 2.0 * std::numbers::pi * (y % tile) / tile;
                    double ch[3];
                    for (int c = 0; c < 3; ++c) {
                        ch[c] = spec.base_gray + 30.0 * std::sin(waves[c][0] * u + waves[c][1] * v + waves[c][2]);
                    }
                    bg.at(x, y) = Rgb{clamp_byte(ch[0]), clamp_byte(ch[1]), clamp_byte(ch[2])};
                }
            }
            break;
        }
    }
    return bg;
}

// The patch the grammar samples: the tab, or the left end of the band when there is none.
Box probe_box(const SynthEvent& e, int probe_width) {
    return Box{e.box.x, e.box.y, e.tab_width > 0 ? e.tab_width : std::min(probe_width, e.box.w), e.box.h};
}

void paint_band(RgbFrame& frame, const SynthEvent& e, const Rgb& marker) {
    const Rgb body = e.tab_width > 0 ? e.fill : marker;
    for (int y = e.box.y; y < e.box.bottom(); ++y) {
        for (int x = e.box.x; x < e.box.right(); ++x) frame.at(x, y) = body;
    }
    for (int y = e.box.y; y < e.box.bottom(); ++y) {
        for (int x = e.box.x; x < e.box.x + e.tab_width; ++x) frame.at(x, y) = marker;
    }
    const int first = e.box.x + e.tab_width + e.stroke_period / 2;
    for (int xs = first; xs + e.stroke_width + e.stroke_period / 2 <= e.box.right(); xs += e.stroke_period) {
        for (int y = e.box.y + e.padding; y < e.box.bottom() - e.padding; ++y) {
            for (int x = xs; x < xs + e.stroke_width; ++x) frame.at(x, y) = e.stroke;
        }
    }
}

}  // namespace

void validate_synth_spec(const SynthSpec& spec) {
    if (spec.width < 3 || spec.height < 3) throw ValidationError("synth spec: frame must be at least 3x3");
    if (spec.frame_count < 1) throw ValidationError("synth spec: frame_count must be >= 1");
    if (spec.noise_amplitude < 0) throw ValidationError("synth spec: noise_amplitude must be >= 0");
    std::map<std::string, int> class_ids;
    for (const SynthClass& c : spec.classes) {
        if (c.id.empty()) throw ValidationError("synth spec: class with empty id");
        if (++class_ids[c.id] > 1) throw ValidationError("synth spec: duplicate class id '" + c.id + "'");
        if (c.margin < 0) throw ValidationError("synth spec: class '" + c.id + "' has a negative margin");
        if (c.probe_width < 1) throw ValidationError("synth spec: class '" + c.id + "' needs probe_width >= 1");
    }
    for (std::size_t i = 0; i < spec.events.size(); ++i) {
        const SynthEvent& e = spec.events[i];
        const std::string name = event_name(i);
        if (!e.box.inside(spec.width, spec.height)) {
            throw ValidationError("synth spec: " + name + " box lies outside the " + std::to_string(spec.width) +
                                  "x" + std::to_string(spec.height) + " frame");
        }
        if (e.first_frame < 0 || e.last_frame < e.first_frame || e.last_frame >= spec.frame_count) {
            throw ValidationError("synth spec: " + name + " frame span is not inside [0, frame_count)");
        }
        if (e.class_id && !class_ids.contains(*e.class_id)) {
            throw ValidationError("synth spec: " + name + " uses undeclared class '" + *e.class_id + "'");
        }
        if (e.stroke_width < 1 || e.stroke_period <= e.stroke_width) {
            throw ValidationError("synth spec: " + name + " needs 1 <= stroke_width < stroke_period");
        }
        if (e.tab_width < 0 || e.tab_width >= e.box.w) {
            throw ValidationError("synth spec: " + name + " tab must be narrower than the band");
        }
        if (e.padding < 0 || 2 * e.padding >= e.box.h) {
            throw ValidationError("synth spec: " + name + " padding leaves no room for strokes");
        }
    }
}

SynthSpec synth_spec_from_json(const json& j) {
    SynthSpec s;
    try {
        s.width = j.value("width", s.width);
        s.height = j.value("height", s.height);
        s.frame_count = j.value("frame_count", s.frame_count);
        s.background = background_from(j.value("background", std::string("flat")));
        s.base_gray = j.value("base_gray", s.base_gray);
        s.noise_amplitude = j.value("noise_amplitude", s.noise_amplitude);
        s.video_id = j.value("video_id", s.video_id);
        s.channel = j.value("channel", s.channel);
        s.program = j.value("program", s.program);
        for (const json& jc : j.value("classes", json::array())) {
            SynthClass c;
            c.id = jc.at("id").get<std::string>();
            c.label = jc.value("label", c.id);
            if (jc.contains("marker")) c.marker = rgb_from(jc.at("marker"), "marker of class '" + c.id + "'");
            c.margin = jc.value("margin", c.margin);
            c.probe_width = jc.value("probe_width", c.probe_width);
            s.classes.push_back(std::move(c));
        }
        for (const json& je : j.value("events", json::array())) {
            SynthEvent e;
            const std::string name = event_name(s.events.size());
            e.first_frame = je.at("first_frame").get<int>();
            e.last_frame = je.at("last_frame").get<int>();
            e.box = box_from(je.at("box"));
            if (je.contains("class") && !je.at("class").is_null()) e.class_id = je.at("class").get<std::string>();
            e.stroke_period = je.value("stroke_period", e.stroke_period);
            e.stroke_width = je.value("stroke_width", e.stroke_width);
            e.tab_width = je.value("tab_width", e.tab_width);
            e.padding = je.value("padding", e.padding);
            if (je.contains("fill")) e.fill = rgb_from(je.at("fill"), name + " fill");
            if (je.contains("stroke")) e.stroke = rgb_from(je.at("stroke"), name + " stroke");
            s.events.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("synth spec: ") + e.what());
    }
    validate_synth_spec(s);
    return s;
}

SynthSpec read_synth_spec(const std::filesystem::path& path) {
    return synth_spec_from_json(parse_file(path, "synth spec"));
}

SyntheticCorpus generate_synthetic_corpus(const SynthSpec& spec, std::uint64_t seed) {
    validate_synth_spec(spec);
    std::mt19937_64 rng(seed);
    const RgbFrame background = make_background(spec, rng);

    std::map<std::string, Rgb> marker_of;
    for (const SynthClass& c : spec.classes) marker_of[c.id] = c.marker;
    std::vector<Rgb> marker_colour;
    for (const SynthEvent& e : spec.events) {
        marker_colour.push_back(e.class_id ? iso_luminant(marker_of[*e.class_id], luma(e.fill)) : e.fill);
    }

    SyntheticCorpus corpus;
    corpus.frames.reserve(static_cast<std::size_t>(spec.frame_count));
    for (int f = 0; f < spec.frame_count; ++f) {
        RgbFrame frame(spec.width, spec.height, f, std::vector<Rgb>(background.pixels().begin(), background.pixels().end()));
        for (std::size_t i = 0; i < spec.events.size(); ++i) {
            const SynthEvent& e = spec.events[i];
            if (f >= e.first_frame && f <= e.last_frame) paint_band(frame, e, marker_colour[i]);
        }
        corpus.frames.push_back(std::move(frame));
    }

    for (const SynthEvent& e : spec.events) {
        corpus.truth.push_back(GroundTruthRegion{e.first_frame, e.last_frame, e.box, e.class_id});
    }

    GrammarDescriptor& g = corpus.grammar;
    g.channel = spec.channel;
    g.program = spec.program;
    g.frame_w = spec.width;
    g.frame_h = spec.height;
    for (const SynthClass& c : spec.classes) {
        const SynthEvent* first = nullptr;
        Box region;
        for (const SynthEvent& e : spec.events) {
            if (e.class_id != c.id) continue;
            region = first ? bounding_union(region, e.box) : e.box;
            if (!first || e.first_frame < first->first_frame) first = &e;
        }
        if (!first) continue;  // a class without events has no exemplar to sample
        const Box grown{region.x - c.margin, region.y - c.margin, region.w + 2 * c.margin, region.h + 2 * c.margin};
        const Box clamped = intersect(grown, Box{0, 0, spec.width, spec.height});
        const RgbFrame& exemplar = corpus.frames[static_cast<std::size_t>(first->first_frame)];
        g.classes.push_back(build_grammar_entry(exemplar, c.id, c.label, clamped, {probe_box(*first, c.probe_width)}));
    }
    validate_grammar(g);
    return corpus;
}

void write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir / "frames", ec);
    if (ec) throw IoError("cannot create " + (dir / "frames").string() + ": " + ec.message());
    for (const RgbFrame& f : corpus.frames) {
        write_png(dir / "frames" / format_frame_name("frame_%06d.png", f.index()), f);
    }
    write_truth(dir / "truth.json", corpus.truth);
    save_grammar(dir / "grammar.json", corpus.grammar);
}

}  // namespace vidtext
