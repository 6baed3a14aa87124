#pragma once

#include "promptplan/mask.hpp"

#include <optional>
#include <string>
#include <variant>

namespace promptplan {

struct Detection {
    Box box;
    int category_id = 0;
    double score = 0.0;

    friend bool operator==(const Detection&, const Detection&) = default;
};

struct PointPrompt {
    double x = 0;
    double y = 0;

    friend bool operator==(const PointPrompt&, const PointPrompt&) = default;
};

struct DetectionRef {
    int category_id = 0;
    double score = 0.0;

    friend bool operator==(const DetectionRef&, const DetectionRef&) = default;
};

struct BoxPrompt {
    Box box;
    std::optional<DetectionRef> source;

    friend bool operator==(const BoxPrompt&, const BoxPrompt&) = default;
};

using Prompt = std::variant<BoxPrompt, PointPrompt>;

struct SegmentResult {
    BinaryMask mask;
    double score = 0.0;
};

// What a backend needs to identify an image: the id (or path) it is known
// by, plus the dimensions every returned mask must match.
struct ImageInfo {
    std::string image_id;
    int width = 0;
    int height = 0;
};

} // namespace promptplan
