#include "promptplan/prompts.hpp"

#include <algorithm>
#include <stdexcept>

namespace promptplan {

std::vector<PointPrompt> full_grid(GridSpec spec, int width, int height) {
    if (spec.points_per_side < 1) {
        throw std::invalid_argument("points_per_side must be >= 1");
    }
    if (width < 1 || height < 1) {
        throw std::invalid_argument("grid needs positive image dimensions");
    }
    const int n = spec.points_per_side;
    std::vector<PointPrompt> points;
    points.reserve(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            points.push_back({(i + 0.5) * width / n, (j + 0.5) * height / n});
        }
    }
    return points;
}

bool is_covered(const BinaryMask& coverage, const PointPrompt& p) {
    return coverage.test(pixel_x(p), pixel_y(p));
}

std::vector<PointPrompt> uncovered_grid(GridSpec spec, const BinaryMask& coverage) {
    auto points = full_grid(spec, coverage.width(), coverage.height());
    std::erase_if(points, [&](const PointPrompt& p) { return is_covered(coverage, p); });
    return points;
}

std::vector<BoxPrompt> boxes_from_detections(std::span<const Detection> detections, int width, int height,
                                             double confidence_floor) {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < detections.size(); ++i) {
        const auto& d = detections[i];
        if (d.score < confidence_floor) {
            continue;
        }
        if (!d.box.clamped(width, height).valid()) {
            continue;
        }
        order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return detections[a].score > detections[b].score; });

    std::vector<BoxPrompt> prompts;
    prompts.reserve(order.size());
    for (auto i : order) {
        const auto& d = detections[i];
        prompts.push_back({d.box.clamped(width, height), DetectionRef{d.category_id, d.score}});
    }
    return prompts;
}

} // namespace promptplan
