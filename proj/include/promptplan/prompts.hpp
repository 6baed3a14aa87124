#pragma once

#include "promptplan/mask.hpp"
#include "promptplan/types.hpp"

#include <span>
#include <vector>

namespace promptplan {

struct GridSpec {
    int points_per_side = 1;
};

inline constexpr double kDefaultDetectionFloor = 0.25;

// points_per_side^2 cell-centre points, row-major (y outer, x inner).
std::vector<PointPrompt> full_grid(GridSpec spec, int width, int height);

// The pixel a point prompt lands on: floor of its coordinates.
inline int pixel_x(const PointPrompt& p) { return static_cast<int>(p.x); }
inline int pixel_y(const PointPrompt& p) { return static_cast<int>(p.y); }

bool is_covered(const BinaryMask& coverage, const PointPrompt& p);

// full_grid points whose pixel is unset in coverage, in full_grid order.
std::vector<PointPrompt> uncovered_grid(GridSpec spec, const BinaryMask& coverage);

// Drops detections scoring below the floor or collapsing to nothing after
// clamping, then orders by descending score (stable on input order).
std::vector<BoxPrompt> boxes_from_detections(std::span<const Detection> detections, int width, int height,
                                             double confidence_floor = kDefaultDetectionFloor);

} // namespace promptplan
