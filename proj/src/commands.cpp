#include "promptplan/commands.hpp"

#include "promptplan/errors.hpp"
#include "promptplan/png.hpp"
#include "promptplan/rng.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace promptplan {

namespace fs = std::filesystem;

namespace {

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string csv_safe(std::string text) {
    for (auto& c : text) {
        if (c == ',' || c == '\n' || c == '\r') {
            c = ';';
        }
    }
    return text;
}

std::vector<std::string> split(const std::string& line, char sep, std::size_t max_fields) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (out.size() + 1 < max_fields) {
        const auto pos = line.find(sep, start);
        if (pos == std::string::npos) {
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    out.push_back(line.substr(start));
    return out;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error("cannot create " + dir.string() + ": " + ec.message());
    }
}

std::string join_ids(const std::set<std::string>& ids) {
    std::string out;
    for (const auto& id : ids) {
        out += (out.empty() ? "" : ", ") + id;
    }
    return out;
}

nlohmann::json config_to_json(const PipelineConfig& c) {
    return {{"mode", std::string(to_string(c.mode))},
            {"coarse", c.coarse_grid.points_per_side},
            {"dense", c.dense_grid.points_per_side},
            {"sparse", c.sparse_grid.points_per_side},
            {"nms_iou", c.nms_iou_threshold},
            {"high_conf", c.high_conf_threshold},
            {"det_floor", c.detection_conf_floor},
            {"min_area", c.min_mask_area}};
}

PipelineConfig config_from_json(const nlohmann::json& j) {
    PipelineConfig c;
    const auto mode = parse_mode(j.at("mode").get<std::string>());
    if (!mode) {
        throw std::invalid_argument("manifest has unknown mode " + j.at("mode").dump());
    }
    c.mode = *mode;
    c.coarse_grid.points_per_side = j.at("coarse").get<int>();
    c.dense_grid.points_per_side = j.at("dense").get<int>();
    c.sparse_grid.points_per_side = j.at("sparse").get<int>();
    c.nms_iou_threshold = j.at("nms_iou").get<double>();
    c.high_conf_threshold = j.at("high_conf").get<double>();
    c.detection_conf_floor = j.at("det_floor").get<double>();
    c.min_mask_area = j.at("min_area").get<std::size_t>();
    return c;
}

std::array<std::uint8_t, 3> palette_color(std::size_t index) {
    // Hue stepped by the golden ratio, full saturation, high value.
    const double hue = std::fmod(0.13 + 0.618033988749895 * static_cast<double>(index), 1.0) * 6.0;
    const int sector = static_cast<int>(hue);
    const double f = hue - sector;
    const double v = 235.0;
    const double p = 40.0;
    const double q = v - (v - p) * f;
    const double t = p + (v - p) * f;
    double r = v;
    double g = t;
    double b = p;
    switch (sector % 6) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
    }
    return {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)};
}

void init_logging() {
    if (!spdlog::get("promptplan")) {
        auto logger = spdlog::stderr_color_mt("promptplan");
        spdlog::set_default_logger(logger);
    }
    spdlog::set_pattern("[%H:%M:%S] [%l] %v");
    spdlog::set_level(spdlog::level::info);
    if (const char* level = std::getenv("PROMPTPLAN_LOG"); level != nullptr && *level != '\0') {
        spdlog::set_level(spdlog::level::from_str(level));
    }
}

// Flat "key = value" lines; '#' starts a comment. Keys are long option
// names without the leading dashes. Only options absent from the command
// line are filled in.
void apply_config_file(CLI::App& app, const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw CLI::ValidationError("--config", "cannot read " + path.string());
    }
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const auto eq = line.find('=');
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        if (trim(line).empty()) {
            continue;
        }
        if (eq == std::string::npos) {
            throw CLI::ValidationError("--config", fmt::format("{}:{}: expected key = value", path.string(), line_no));
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        CLI::Option* opt = nullptr;
        try {
            opt = app.get_option("--" + key);
        } catch (const CLI::OptionNotFound&) {
            throw CLI::ValidationError("--config", fmt::format("{}:{}: unknown key '{}'", path.string(), line_no, key));
        }
        if (opt->count() == 0) {
            opt->add_result(value);
            opt->run_callback();
        }
    }
}

} // namespace

// ---------------------------------------------------------------- synth

int cmd_synth(const SynthOptions& o) {
    if (o.n_scenes < 0 || o.min_instances < 0 || o.max_instances < o.min_instances || o.width < 1 || o.height < 1) {
        spdlog::error("synth: invalid arguments");
        return kExitUsage;
    }
    ensure_dir(o.out_dir);
    nlohmann::json scenes = nlohmann::json::array();
    int failures = 0;
    for (int i = 0; i < o.n_scenes; ++i) {
        const std::uint64_t seed = mix_seed(o.seed, static_cast<std::uint64_t>(i));
        Rng rng(seed);
        const int n = rng.uniform_int(o.min_instances, o.max_instances);
        const std::string id = fmt::format("scene_{:04d}", i);
        try {
            auto scene = synth_scene(o.width, o.height, n, seed);
            scene.image_id = id;
            const std::string file = id + ".json";
            save_scene(scene, o.out_dir / file);
            scenes.push_back({{"image_id", id}, {"file", file}, {"instances", n}});
        } catch (const GenerationFailure& e) {
            spdlog::error("scene {}: {}", id, e.what());
            ++failures;
        }
    }
    nlohmann::json index{{"generator",
                          {{"tool", "promptplan"},
                           {"version", kToolVersion},
                           {"n_scenes", o.n_scenes},
                           {"width", o.width},
                           {"height", o.height},
                           {"min_instances", o.min_instances},
                           {"max_instances", o.max_instances},
                           {"seed", o.seed}}},
                         {"scenes", scenes}};
    write_file_atomic(o.out_dir / "index.json", index.dump(2) + "\n");
    spdlog::info("wrote {} scenes to {}", scenes.size(), o.out_dir.string());
    return failures == 0 ? kExitOk : kExitRuntime;
}

// ------------------------------------------------------------------ run

nlohmann::json make_manifest(const RunOptions& o) {
    nlohmann::json backend;
    if (o.backend.kind == BackendSpec::Kind::oracle) {
        backend = {{"kind", "oracle"}, {"recall", o.backend.recall}, {"seed", o.backend.seed}};
    } else {
        backend = {{"kind", "external"},
                   {"command", o.backend.external.command},
                   {"tcp", o.backend.external.tcp_endpoint},
                   {"timeout_ms", o.backend.external.timeout.count()}};
    }
    return {{"tool", "promptplan"},
            {"version", kToolVersion},
            {"timestamp", utc_timestamp()},
            {"config", config_to_json(o.config)},
            {"backend", backend},
            {"fixtures", fs::absolute(o.fixtures).lexically_normal().string()},
            {"out", fs::absolute(o.out_dir).lexically_normal().string()},
            {"jobs", o.jobs}};
}

RunOptions options_from_manifest(const nlohmann::json& m) {
    RunOptions o;
    o.config = config_from_json(m.at("config"));
    const auto& b = m.at("backend");
    const auto kind = b.at("kind").get<std::string>();
    if (kind == "oracle") {
        o.backend.kind = BackendSpec::Kind::oracle;
        o.backend.recall = b.at("recall").get<double>();
        o.backend.seed = b.at("seed").get<std::uint64_t>();
    } else if (kind == "external") {
        o.backend.kind = BackendSpec::Kind::external;
        o.backend.external.command = b.value("command", std::string{});
        o.backend.external.tcp_endpoint = b.value("tcp", std::string{});
        o.backend.external.timeout = std::chrono::milliseconds(b.value("timeout_ms", 30000LL));
    } else {
        throw std::invalid_argument("manifest has unknown backend kind '" + kind + "'");
    }
    o.fixtures = m.at("fixtures").get<std::string>();
    o.out_dir = m.at("out").get<std::string>();
    o.jobs = m.value("jobs", 0);
    return o;
}

int cmd_run(const RunOptions& o) {
    try {
        o.config.validate();
    } catch (const std::invalid_argument& e) {
        spdlog::error("run: {}", e.what());
        return kExitUsage;
    }
    if (o.backend.kind == BackendSpec::Kind::oracle && !(o.backend.recall >= 0.0 && o.backend.recall <= 1.0)) {
        spdlog::error("run: --recall must be in [0,1]");
        return kExitUsage;
    }
    if (o.backend.kind == BackendSpec::Kind::external && o.backend.external.command.empty() &&
        o.backend.external.tcp_endpoint.empty()) {
        spdlog::error("run: the external backend needs --external-cmd or --external-tcp");
        return kExitUsage;
    }

    const auto scenes = load_fixtures(o.fixtures);
    ensure_dir(o.out_dir);
    spdlog::info("running {} over {} scenes", to_string(o.config.mode), scenes.size());
    const auto outcomes = run_batch(scenes, o.config, o.backend, o.jobs);

    std::string predictions;
    std::string stats =
        "image_id,status,seconds,segmenter_calls,detector_calls,box_prompts,round1_prompts,round2_prompts,"
        "sparse_prompts,error\n";
    std::size_t failed = 0;
    for (const auto& out : outcomes) {
        stats += fmt::format("{},{},{:.6f},{},{},{},{},{},{},{}\n", out.image_id, out.ok ? "ok" : "failed",
                             out.stats.wall_time, out.stats.segmenter_calls, out.stats.detector_calls,
                             out.prompts.box, out.prompts.round1, out.prompts.round2, out.prompts.sparse,
                             csv_safe(out.error));
        if (!out.ok) {
            ++failed;
            continue;
        }
        for (const auto& entry : out.masks) {
            PredictionRecord rec{out.image_id, entry.result.score, entry.category_id,
                                 std::string(to_string(entry.provenance)), entry.result.mask};
            predictions += prediction_to_json(rec).dump();
            predictions += '\n';
        }
    }
    write_file_atomic(o.out_dir / "predictions.jsonl", predictions);
    write_file_atomic(o.out_dir / "stats.csv", stats);
    write_file_atomic(o.out_dir / "manifest.json", make_manifest(o).dump(2) + "\n");
    spdlog::info("{} images processed, {} failed; outputs in {}", outcomes.size() - failed, failed,
                 o.out_dir.string());
    return failed == 0 ? kExitOk : kExitRuntime;
}

// ----------------------------------------------------------------- eval

std::vector<ImageOutcome> load_run_outcomes(const fs::path& run_dir) {
    std::ifstream in(run_dir / "stats.csv");
    if (!in) {
        throw Error("cannot open " + (run_dir / "stats.csv").string());
    }
    std::vector<ImageOutcome> outcomes;
    std::unordered_map<std::string, std::size_t> by_id;
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto f = split(line, ',', 10);
        if (f.size() != 10) {
            throw Error("malformed stats.csv row: " + line);
        }
        ImageOutcome o;
        o.image_id = f[0];
        o.ok = f[1] == "ok";
        o.stats.wall_time = std::stod(f[2]);
        o.stats.segmenter_calls = std::stoull(f[3]);
        o.stats.detector_calls = std::stoull(f[4]);
        o.prompts.box = std::stoull(f[5]);
        o.prompts.round1 = std::stoull(f[6]);
        o.prompts.round2 = std::stoull(f[7]);
        o.prompts.sparse = std::stoull(f[8]);
        o.error = f[9];
        by_id.emplace(o.image_id, outcomes.size());
        outcomes.push_back(std::move(o));
    }

    std::set<std::string> orphans;
    for (auto& rec : read_predictions(run_dir / "predictions.jsonl")) {
        const auto it = by_id.find(rec.image_id);
        if (it == by_id.end()) {
            orphans.insert(rec.image_id);
            continue;
        }
        auto provenance = parse_provenance(rec.provenance);
        if (!provenance) {
            throw Error("unknown provenance '" + rec.provenance + "' in predictions");
        }
        outcomes[it->second].masks.push_back({{std::move(rec.mask), rec.score}, *provenance, rec.category_id});
    }
    if (!orphans.empty()) {
        throw Error("predictions for images missing from stats.csv: " + join_ids(orphans));
    }
    return outcomes;
}

namespace {

nlohmann::json read_manifest(const fs::path& run_dir) {
    return nlohmann::json::parse(read_text_file(run_dir / "manifest.json"));
}

EvalReport evaluate_run(const fs::path& run_dir, const fs::path& fixtures_override, const EvalOptions& options) {
    const auto manifest = read_manifest(run_dir);
    const fs::path fixtures =
        fixtures_override.empty() ? fs::path(manifest.at("fixtures").get<std::string>()) : fixtures_override;
    const auto scenes = load_fixtures(fixtures);
    const auto outcomes = load_run_outcomes(run_dir);

    std::set<std::string> known;
    for (const auto& s : scenes) {
        known.insert(s.image_id);
    }
    std::set<std::string> missing;
    for (const auto& o : outcomes) {
        if (!known.contains(o.image_id)) {
            missing.insert(o.image_id);
        }
    }
    if (!missing.empty()) {
        throw Error("run references image ids absent from fixtures " + fixtures.string() + ": " + join_ids(missing));
    }
    EvalReport report = aggregate_report(outcomes, scenes, options);
    report.mode = manifest.at("config").at("mode").get<std::string>();
    return report;
}

} // namespace

int cmd_eval(const EvalCommandOptions& o) {
    EvalReport report;
    try {
        report = evaluate_run(o.run_dir, o.fixtures, EvalOptions{o.track, o.matched_miou});
    } catch (const MissingCategory& e) {
        spdlog::error("eval: {}", e.what());
        return kExitUsage;
    }
    const fs::path out = o.out_dir.empty() ? o.run_dir : o.out_dir;
    ensure_dir(out);
    write_file_atomic(out / "report.json", report_to_json(report).dump(2) + "\n");
    write_file_atomic(out / "report.csv", report_csv_header() + "\n" + report_csv_row(report) + "\n");
    spdlog::info("{}: AR={} mIoU={} AP={} ({} images, {} skipped)", report.mode,
                 report.ar ? fmt::format("{:.4f}", *report.ar) : "-",
                 report.miou ? fmt::format("{:.4f}", *report.miou) : "-",
                 report.ap ? fmt::format("{:.4f}", *report.ap) : "-", report.images_evaluated, report.images_skipped);
    return kExitOk;
}

// --------------------------------------------------------------- report

std::string render_overlay(int width, int height, std::span<const OverlayMask> masks) {
    const std::size_t n = static_cast<std::size_t>(width) * height;
    std::vector<std::uint8_t> rgb(n * 3, 30);
    for (std::size_t k = 0; k < masks.size(); ++k) {
        const auto color = palette_color(k);
        const auto& mask = *masks[k].mask;
        for (std::size_t i = 0; i < n; ++i) {
            if (!mask.get_unchecked(i)) {
                continue;
            }
            for (int c = 0; c < 3; ++c) {
                rgb[i * 3 + c] = static_cast<std::uint8_t>((rgb[i * 3 + c] * 45 + color[c] * 55) / 100);
            }
        }
    }
    for (const auto& m : masks) {
        if (!m.outlined) {
            continue;
        }
        const auto& mask = *m.mask;
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * width + x;
                if (!mask.get_unchecked(i)) {
                    continue;
                }
                const bool edge = x == 0 || y == 0 || x == width - 1 || y == height - 1 || !mask.get_unchecked(i - 1) ||
                                  !mask.get_unchecked(i + 1) || !mask.get_unchecked(i - width) ||
                                  !mask.get_unchecked(i + width);
                if (edge) {
                    rgb[i * 3] = rgb[i * 3 + 1] = rgb[i * 3 + 2] = 255;
                }
            }
        }
    }
    return encode_png_rgb(width, height, rgb);
}

int cmd_report(const ReportOptions& o) {
    ensure_dir(o.out_dir);
    std::string table = report_csv_header() + "\n";
    for (const auto& run_dir : o.run_dirs) {
        EvalReport report;
        if (fs::exists(run_dir / "report.json")) {
            report = report_from_json(nlohmann::json::parse(read_text_file(run_dir / "report.json")));
        } else {
            report = evaluate_run(run_dir, o.fixtures, EvalOptions{});
        }
        table += report_csv_row(report) + "\n";

        const auto manifest = read_manifest(run_dir);
        const fs::path fixtures =
            o.fixtures.empty() ? fs::path(manifest.at("fixtures").get<std::string>()) : o.fixtures;
        const auto scenes = load_fixtures(fixtures);
        const auto outcomes = load_run_outcomes(run_dir);
        std::unordered_map<std::string, const ImageOutcome*> by_id;
        for (const auto& out : outcomes) {
            by_id.emplace(out.image_id, &out);
        }
        std::string run_name = fs::absolute(run_dir).lexically_normal().filename().string();
        if (run_name.empty()) {
            run_name = fs::absolute(run_dir).lexically_normal().parent_path().filename().string();
        }
        const fs::path overlay_dir = o.out_dir / "overlays" / run_name;
        ensure_dir(overlay_dir);
        int written = 0;
        for (const auto& scene : scenes) {
            if (o.max_overlays >= 0 && written >= o.max_overlays) {
                break;
            }
            const auto it = by_id.find(scene.image_id);
            if (it == by_id.end()) {
                continue;
            }
            std::vector<OverlayMask> layers;
            for (const auto& entry : it->second->masks) {
                layers.push_back({&entry.result.mask, entry.provenance == Provenance::box_prompt});
            }
            write_file_atomic(overlay_dir / (scene.image_id + ".png"),
                              render_overlay(scene.width, scene.height, layers));
            ++written;
        }
    }
    write_file_atomic(o.out_dir / "comparison.csv", table);
    spdlog::info("wrote {} ({} runs)", (o.out_dir / "comparison.csv").string(), o.run_dirs.size());
    return kExitOk;
}

// ------------------------------------------------------------------ CLI

int run_cli(int argc, char** argv) {
    init_logging();

    CLI::App app{"promptplan: detector-guided and sparse-point prompting pipelines with evaluation.\n"
                 "Log verbosity: PROMPTPLAN_LOG=trace|debug|info|warn|error|off"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    // synth
    SynthOptions synth;
    std::string synth_out;
    auto* synth_cmd = app.add_subcommand("synth", "Generate deterministic synthetic scene fixtures");
    synth_cmd->add_option("--n", synth.n_scenes, "Number of scenes")->capture_default_str();
    synth_cmd->add_option("--width", synth.width, "Image width")->capture_default_str();
    synth_cmd->add_option("--height", synth.height, "Image height")->capture_default_str();
    synth_cmd->add_option("--min-instances", synth.min_instances)->capture_default_str();
    synth_cmd->add_option("--max-instances", synth.max_instances)->capture_default_str();
    synth_cmd->add_option("--seed", synth.seed)->capture_default_str();
    synth_cmd->add_option("--out", synth_out, "Output directory")->required();

    // run
    RunOptions run;
    std::string mode_text = "hybrid";
    std::string backend_text = "oracle";
    std::string fixtures_text;
    std::string run_out;
    std::string manifest_path;
    std::string config_path;
    double timeout_s = 30.0;
    int coarse = run.config.coarse_grid.points_per_side;
    int dense = run.config.dense_grid.points_per_side;
    int sparse = run.config.sparse_grid.points_per_side;
    auto* run_cmd = app.add_subcommand("run", "Run a pipeline mode over a fixture set");
    run_cmd->footer("--config FILE holds flat 'key = value' lines using the long option names without dashes\n"
                    "(e.g. 'nms-iou = 0.6'). Precedence: command line > config file > defaults.");
    run_cmd->add_option("--mode", mode_text, "hierarchical | boxes_only | hybrid")
        ->check(CLI::IsMember({"hierarchical", "boxes_only", "boxes-only", "hybrid"}))
        ->capture_default_str();
    run_cmd->add_option("--backend", backend_text, "oracle | external")
        ->check(CLI::IsMember({"oracle", "external"}))
        ->capture_default_str();
    run_cmd->add_option("--external-cmd", run.backend.external.command, "Command launching an external backend");
    run_cmd->add_option("--external-tcp", run.backend.external.tcp_endpoint, "host:port of an external backend");
    run_cmd->add_option("--timeout", timeout_s, "Per-request timeout for external backends (s)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    run_cmd->add_option("--recall", run.backend.recall, "Oracle detector recall")->capture_default_str();
    run_cmd->add_option("--seed", run.backend.seed, "Oracle detector seed")->capture_default_str();
    run_cmd->add_option("--coarse", coarse, "Hierarchical round-1 points per side")->capture_default_str();
    run_cmd->add_option("--dense", dense, "Hierarchical round-2 points per side")->capture_default_str();
    run_cmd->add_option("--sparse", sparse, "Hybrid uncovered-region points per side")->capture_default_str();
    run_cmd->add_option("--nms-iou", run.config.nms_iou_threshold, "Mask NMS IoU threshold")->capture_default_str();
    run_cmd->add_option("--high-conf", run.config.high_conf_threshold, "Hierarchical round-1 keep threshold")
        ->capture_default_str();
    run_cmd->add_option("--det-floor", run.config.detection_conf_floor, "Detection confidence floor")
        ->capture_default_str();
    run_cmd->add_option("--min-area", run.config.min_mask_area, "Minimum mask area (pixels)")->capture_default_str();
    run_cmd->add_option("--jobs", run.jobs, "Worker count (0 = available parallelism)")->capture_default_str();
    run_cmd->add_option("--fixtures", fixtures_text, "Fixture directory (with index.json)");
    run_cmd->add_option("--out", run_out, "Output directory");
    run_cmd->add_option("--manifest", manifest_path, "Re-run from a manifest.json (other flags ignored except --out)");
    run_cmd->add_option("--config", config_path, "Flat key = value config file");

    // eval
    EvalCommandOptions eval;
    std::string eval_run;
    std::string eval_fixtures;
    std::string eval_out;
    std::string track_text = "both";
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a run directory");
    eval_cmd->add_option("--run", eval_run, "Run directory")->required();
    eval_cmd->add_option("--fixtures", eval_fixtures, "Fixture directory (default: from the run manifest)");
    eval_cmd->add_option("--track", track_text, "detector | class_agnostic | both")
        ->check(CLI::IsMember({"detector", "class_agnostic", "both"}))
        ->capture_default_str();
    eval_cmd->add_flag("--matched-miou", eval.matched_miou, "Also report mIoU over pairs matched at IoU 0.5");
    eval_cmd->add_option("--out", eval_out, "Report directory (default: the run directory)");

    // report
    ReportOptions report;
    std::vector<std::string> report_runs;
    std::string report_out;
    std::string report_fixtures;
    auto* report_cmd = app.add_subcommand("report", "Build a comparison table and overlays from runs");
    report_cmd->add_option("runs", report_runs, "Run directories")->required();
    report_cmd->add_option("--out", report_out, "Output directory")->required();
    report_cmd->add_option("--fixtures", report_fixtures, "Fixture directory (default: from each manifest)");
    report_cmd->add_option("--max-overlays", report.max_overlays, "Overlays per run (negative = all)")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
        if (run_cmd->parsed() && !config_path.empty()) {
            apply_config_file(*run_cmd, config_path);
        }
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (synth_cmd->parsed()) {
            synth.out_dir = synth_out;
            return cmd_synth(synth);
        }
        if (run_cmd->parsed()) {
            if (!manifest_path.empty()) {
                auto from = options_from_manifest(nlohmann::json::parse(read_text_file(manifest_path)));
                if (!run_out.empty()) {
                    from.out_dir = run_out;
                }
                return cmd_run(from);
            }
            if (fixtures_text.empty() || run_out.empty()) {
                spdlog::error("run: --fixtures and --out are required (or --manifest)");
                return kExitUsage;
            }
            run.config.mode = *parse_mode(mode_text);
            run.config.coarse_grid.points_per_side = coarse;
            run.config.dense_grid.points_per_side = dense;
            run.config.sparse_grid.points_per_side = sparse;
            run.backend.kind = backend_text == "oracle" ? BackendSpec::Kind::oracle : BackendSpec::Kind::external;
            run.backend.external.timeout = std::chrono::milliseconds(static_cast<long long>(timeout_s * 1000));
            run.fixtures = fixtures_text;
            run.out_dir = run_out;
            return cmd_run(run);
        }
        if (eval_cmd->parsed()) {
            eval.run_dir = eval_run;
            eval.fixtures = eval_fixtures;
            eval.out_dir = eval_out;
            eval.track = *parse_track(track_text);
            return cmd_eval(eval);
        }
        if (report_cmd->parsed()) {
            report.run_dirs.assign(report_runs.begin(), report_runs.end());
            report.out_dir = report_out;
            report.fixtures = report_fixtures;
            return cmd_report(report);
        }
    } catch (const std::invalid_argument& e) {
        spdlog::error("{}", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitRuntime;
    }
    return kExitUsage;
}

} // namespace promptplan
