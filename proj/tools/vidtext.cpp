// vidtext: superimposed-text detection, classification and indexing for frame sequences.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "vidtext/pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kUnexpected = 1, kIo = 2, kInvalid = 3, kUsage = 4 };

struct Overrides {
    std::string frames;
    std::string grammar;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::vector<std::string> dump_stages;
    std::optional<double> split_threshold;
    std::optional<double> sigma;
    std::optional<double> r_max;
    std::optional<double> alpha;
    std::optional<double> overlap_min;
};

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("vidtext");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* level = std::getenv("VIDTEXT_LOG")) {
        const auto parsed = spdlog::level::from_str(level);
        if (parsed != spdlog::level::off || std::string(level) == "off") spdlog::set_level(parsed);
    }
}

vidtext::PipelineConfig effective_config(const std::string& path, const Overrides& o) {
    vidtext::PipelineConfig c = vidtext::load_pipeline_config(path);
    if (!o.frames.empty()) c.frames_dir = o.frames;
    if (!o.grammar.empty()) c.grammar = o.grammar;
    if (!o.out.empty()) c.out_dir = o.out;
    if (o.seed) c.seed = *o.seed;
    if (o.workers) c.workers = *o.workers;
    for (const std::string& s : o.dump_stages) {
        if (s == "all") {
            for (const std::string& n : vidtext::dump_stage_names()) c.dump_stages.insert(n);
        } else {
            c.dump_stages.insert(s);
        }
    }
    if (o.split_threshold) c.localization.split_threshold = *o.split_threshold;
    if (o.sigma) c.filtering.sigma = *o.sigma;
    if (o.r_max) c.filtering.r_max = *o.r_max;
    if (o.alpha) c.alpha = *o.alpha;
    if (o.overlap_min) c.overlap_min = *o.overlap_min;
    vidtext::validate_config(c);
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();

    CLI::App app{"Detect, classify and index superimposed video text"};
    app.require_subcommand(1);
    std::string config_path;
    Overrides o;
    app.add_option("--config", config_path, "Pipeline config (JSON)")->required();
    app.add_option("--frames", o.frames, "Frames directory");
    app.add_option("--grammar", o.grammar, "Grammar file");
    app.add_option("--out", o.out, "Output directory");
    app.add_option("--seed", o.seed, "Generator seed");
    app.add_option("--workers", o.workers, "Worker threads for the detect stage")->check(CLI::PositiveNumber);
    app.add_option("--dump-stage", o.dump_stages, "Intermediate stage to dump: edges, binary, diff, leaves, verdicts, all");
    app.add_option("--split-threshold", o.split_threshold, "Quadtree density threshold T");
    app.add_option("--sigma", o.sigma, "Contrast filter peak distance");
    app.add_option("--r-max", o.r_max, "Maximum stroke regularity R");
    app.add_option("--alpha", o.alpha, "Classification distance threshold");
    app.add_option("--overlap-min", o.overlap_min, "Partial-overlap acceptance ratio");
    app.fallthrough();

    auto* detect = app.add_subcommand("detect", "Localize and filter text regions in every frame pair");
    auto* classify = app.add_subcommand("classify", "Classify detections with the grammar and write the TOC");
    auto* toc = app.add_subcommand("toc", "Rebuild the TOC from classified detections");
    auto* eval = app.add_subcommand("eval", "Score detections against ground truth");
    auto* synth = app.add_subcommand("synth", "Render a synthetic corpus from a generator spec");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        const vidtext::PipelineConfig config = effective_config(config_path, o);
        if (detect->parsed()) {
            const vidtext::DetectSummary s = vidtext::run_detect(config);
            std::cout << "detect: " << s.pairs << " pairs, " << s.accepted << " regions accepted\n";
        } else if (classify->parsed()) {
            const auto classified = vidtext::run_classify(config);
            std::cout << "classify: " << classified.size() << " regions\n";
        } else if (toc->parsed()) {
            const vidtext::Toc t = vidtext::run_toc(config);
            std::cout << "toc: " << t.entries.size() << " entries\n";
        } else if (eval->parsed()) {
            std::cout << vidtext::format_report_table(vidtext::run_eval(config));
        } else if (synth->parsed()) {
            const vidtext::SyntheticCorpus c = vidtext::run_synth(config);
            std::cout << "synth: " << c.frames.size() << " frames, " << c.truth.size() << " events\n";
        }
    } catch (const vidtext::IoError& e) {
        std::cerr << "vidtext: I/O error: " << e.what() << '\n';
        return kIo;
    } catch (const vidtext::ConfigError& e) {
        std::cerr << "vidtext: configuration error: " << e.what() << '\n';
        return kUsage;
    } catch (const vidtext::SizeMismatchError& e) {
        std::cerr << "vidtext: frame size mismatch: " << e.what() << '\n';
        return kInvalid;
    } catch (const vidtext::Error& e) {
        std::cerr << "vidtext: invalid input: " << e.what() << '\n';
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "vidtext: unexpected error: " << e.what() << '\n';
        return kUnexpected;
    }
    return kOk;
}
