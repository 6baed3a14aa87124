#pragma once

#include "promptplan/batch.hpp"
#include "promptplan/eval.hpp"
#include "promptplan/io.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace promptplan {

inline constexpr const char* kToolVersion = "0.1.0";

// Stable exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

struct SynthOptions {
    int n_scenes = 1;
    int width = 256;
    int height = 256;
    int min_instances = 5;
    int max_instances = 20;
    std::uint64_t seed = 0;
    std::filesystem::path out_dir;
};

// Writes scene_NNNN.json files plus index.json.
int cmd_synth(const SynthOptions& options);

struct RunOptions {
    PipelineConfig config;
    BackendSpec backend;
    std::filesystem::path fixtures;
    std::filesystem::path out_dir;
    int jobs = 0;
};

// Writes predictions.jsonl, stats.csv and manifest.json into out_dir.
int cmd_run(const RunOptions& options);

nlohmann::json make_manifest(const RunOptions& options);
RunOptions options_from_manifest(const nlohmann::json& manifest);

struct EvalCommandOptions {
    std::filesystem::path run_dir;
    std::filesystem::path fixtures; // empty: taken from the run manifest
    Track track = Track::both;
    bool matched_miou = false;
    std::filesystem::path out_dir; // empty: run_dir
};

// Writes report.json and report.csv.
int cmd_eval(const EvalCommandOptions& options);

// Rebuilds per-image outcomes from a run directory's predictions.jsonl and stats.csv.
std::vector<ImageOutcome> load_run_outcomes(const std::filesystem::path& run_dir);

struct ReportOptions {
    std::vector<std::filesystem::path> run_dirs;
    std::filesystem::path out_dir;
    std::filesystem::path fixtures; // empty: from each run manifest
    int max_overlays = -1;          // per run; negative = all scenes
};

// Writes comparison.csv and overlays/<run>/<image_id>.png.
int cmd_report(const ReportOptions& options);

struct OverlayMask {
    const BinaryMask* mask = nullptr;
    bool outlined = false;
};

// PNG of the masks tinted over a dark background, in a colour fixed by
// each mask's position; outlined masks get a white boundary.
std::string render_overlay(int width, int height, std::span<const OverlayMask> masks);

// Full command-line entry point; returns the process exit code.
int run_cli(int argc, char** argv);

} // namespace promptplan
