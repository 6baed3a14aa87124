#include "promptplan/io.hpp"

#include "promptplan/errors.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>
#include <system_error>

namespace promptplan {

namespace fs = std::filesystem;

json rle_to_json(const RleMask& rle) {
    return json{{"size", {rle.height, rle.width}}, {"counts", rle.counts}};
}

RleMask rle_from_json(const json& j) {
    if (!j.is_object() || !j.contains("size") || !j.contains("counts")) {
        throw MalformedRle("RLE object needs \"size\" and \"counts\"");
    }
    const auto& size = j.at("size");
    if (!size.is_array() || size.size() != 2 || !size[0].is_number_integer() || !size[1].is_number_integer()) {
        throw MalformedRle("RLE \"size\" must be [height, width]");
    }
    const auto& counts = j.at("counts");
    if (counts.is_string()) {
        throw MalformedRle("compressed RLE strings are not supported");
    }
    if (!counts.is_array()) {
        throw MalformedRle("RLE \"counts\" must be an array of integers");
    }
    RleMask rle;
    const auto h = size[0].get<std::int64_t>();
    const auto w = size[1].get<std::int64_t>();
    if (h < 1 || w < 1 || h > INT32_MAX || w > INT32_MAX) {
        throw MalformedRle("RLE size out of range");
    }
    rle.height = static_cast<int>(h);
    rle.width = static_cast<int>(w);
    rle.counts.reserve(counts.size());
    for (const auto& c : counts) {
        if (!c.is_number_integer() || c.get<std::int64_t>() < 0) {
            throw MalformedRle("RLE counts must be non-negative integers");
        }
        rle.counts.push_back(c.get<std::uint64_t>());
    }
    validate_rle(rle);
    return rle;
}

json mask_to_json(const BinaryMask& mask) { return rle_to_json(encode_rle(mask)); }

BinaryMask mask_from_json(const json& j) { return decode_rle(rle_from_json(j)); }

json scene_to_json(const SceneAnnotation& scene) {
    json instances = json::array();
    for (const auto& inst : scene.instances) {
        instances.push_back({{"category_id", inst.category_id}, {"rle", mask_to_json(inst.mask)}});
    }
    return json{{"image_id", scene.image_id},
                {"width", scene.width},
                {"height", scene.height},
                {"instances", std::move(instances)}};
}

SceneAnnotation scene_from_json(const json& j) {
    SceneAnnotation scene;
    const auto& id = j.at("image_id");
    scene.image_id = id.is_string() ? id.get<std::string>() : id.dump();
    scene.width = j.at("width").get<int>();
    scene.height = j.at("height").get<int>();
    for (const auto& inst : j.at("instances")) {
        scene.instances.push_back({mask_from_json(inst.at("rle")), inst.at("category_id").get<int>()});
    }
    scene.validate();
    return scene;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

SceneAnnotation load_scene(const fs::path& path) {
    try {
        return scene_from_json(json::parse(read_text_file(path)));
    } catch (const json::exception& e) {
        throw Error("bad scene file " + path.string() + ": " + e.what());
    }
}

void save_scene(const SceneAnnotation& scene, const fs::path& path) {
    write_file_atomic(path, scene_to_json(scene).dump() + "\n");
}

json prediction_to_json(const PredictionRecord& p) {
    json j{{"image_id", p.image_id}, {"score", p.score}};
    j["category_id"] = p.category_id ? json(*p.category_id) : json(nullptr);
    j["provenance"] = p.provenance;
    j["rle"] = mask_to_json(p.mask);
    return j;
}

PredictionRecord prediction_from_json(const json& j) {
    const auto& id = j.at("image_id");
    std::optional<int> category;
    if (j.contains("category_id") && !j.at("category_id").is_null()) {
        category = j.at("category_id").get<int>();
    }
    return PredictionRecord{id.is_string() ? id.get<std::string>() : id.dump(), j.at("score").get<double>(),
                            category, j.value("provenance", std::string{}), mask_from_json(j.at("rle"))};
}

std::vector<PredictionRecord> read_predictions(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    std::vector<PredictionRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            out.push_back(prediction_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw Error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<SceneAnnotation> load_fixtures(const fs::path& dir) {
    const fs::path index_path = dir / "index.json";
    json index;
    try {
        index = json::parse(read_text_file(index_path));
    } catch (const json::exception& e) {
        throw Error("bad fixture index " + index_path.string() + ": " + e.what());
    }
    std::vector<SceneAnnotation> scenes;
    for (const auto& entry : index.at("scenes")) {
        scenes.push_back(load_scene(dir / entry.at("file").get<std::string>()));
    }
    return scenes;
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write " + tmp.string());
        }
        out << contents;
        out.flush();
        if (!out) {
            throw Error("write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

} // namespace promptplan
