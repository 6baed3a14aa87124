#pragma once

#include "promptplan/rle.hpp"
#include "promptplan/scene.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace promptplan {

using json = nlohmann::json;

// {"size": [height, width], "counts": [...]}
json rle_to_json(const RleMask& rle);
// Structural problems and invariant violations both raise MalformedRle.
RleMask rle_from_json(const json& j);

json mask_to_json(const BinaryMask& mask);
BinaryMask mask_from_json(const json& j);

json scene_to_json(const SceneAnnotation& scene);
SceneAnnotation scene_from_json(const json& j);

SceneAnnotation load_scene(const std::filesystem::path& path);
void save_scene(const SceneAnnotation& scene, const std::filesystem::path& path);

/// One mask of a prediction file.
struct PredictionRecord {
    std::string image_id;
    double score = 0.0;
    std::optional<int> category_id;
    std::string provenance;
    BinaryMask mask;
};

json prediction_to_json(const PredictionRecord& p);
PredictionRecord prediction_from_json(const json& j);

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);

// Fixture directory: index.json listing scene files in order.
std::vector<SceneAnnotation> load_fixtures(const std::filesystem::path& dir);

std::string read_text_file(const std::filesystem::path& path);

// Writes to a sibling temp file then renames over the destination.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

} // namespace promptplan
