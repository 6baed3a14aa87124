#pragma once

#include "promptplan/mask.hpp"
#include "promptplan/types.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace promptplan {

enum class SizeClass { small, medium, large };

inline constexpr std::size_t kSmallAreaLimit = 32 * 32;
inline constexpr std::size_t kMediumAreaLimit = 96 * 96;

// COCO object-size buckets: small < 32^2, medium < 96^2, large otherwise.
SizeClass size_class(std::size_t area);
std::string_view to_string(SizeClass size);

struct Instance {
    BinaryMask mask;
    int category_id = 0;
};

/// Ground-truth record for one image. Instance masks may overlap.
struct SceneAnnotation {
    std::string image_id;
    int width = 0;
    int height = 0;
    std::vector<Instance> instances;

    ImageInfo info() const { return {image_id, width, height}; }

    // Throws DimensionMismatch if an instance does not match the image.
    void validate() const;
};

inline constexpr std::array<int, 4> kSynthCategories{1, 2, 3, 4};
inline constexpr double kSynthMaxPairwiseIou = 0.3;

/// Deterministic scene of axis-aligned rectangles and digital ellipses.
///
/// Shapes are placed by rejection sampling until every pair of instance
/// masks has IoU <= kSynthMaxPairwiseIou; category ids cycle through
/// kSynthCategories. Throws GenerationFailure if an instance cannot be
/// placed within a bounded number of attempts.
SceneAnnotation synth_scene(int width, int height, int n_instances, std::uint64_t seed);

} // namespace promptplan
