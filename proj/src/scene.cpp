#include "promptplan/scene.hpp"

#include "promptplan/errors.hpp"
#include "promptplan/rng.hpp"

#include <algorithm>
#include <stdexcept>

namespace promptplan {

namespace {

constexpr int kAttemptsPerInstance = 500;

BinaryMask rectangle(int width, int height, int x0, int y0, int w, int h) {
    BinaryMask mask(width, height);
    for (int y = y0; y < y0 + h; ++y) {
        mask.fill_row(y, x0, x0 + w);
    }
    return mask;
}

// Pixel centres inside the ellipse inscribed in the box.
BinaryMask ellipse(int width, int height, int x0, int y0, int w, int h) {
    BinaryMask mask(width, height);
    const double cx = x0 + w / 2.0;
    const double cy = y0 + h / 2.0;
    const double rx = w / 2.0;
    const double ry = h / 2.0;
    for (int y = y0; y < y0 + h; ++y) {
        const double dy = (y + 0.5 - cy) / ry;
        for (int x = x0; x < x0 + w; ++x) {
            const double dx = (x + 0.5 - cx) / rx;
            if (dx * dx + dy * dy <= 1.0) {
                mask.set(x, y);
            }
        }
    }
    return mask;
}

} // namespace

SizeClass size_class(std::size_t area) {
    if (area < kSmallAreaLimit) {
        return SizeClass::small;
    }
    if (area < kMediumAreaLimit) {
        return SizeClass::medium;
    }
    return SizeClass::large;
}

std::string_view to_string(SizeClass size) {
    switch (size) {
    case SizeClass::small:
        return "small";
    case SizeClass::medium:
        return "medium";
    case SizeClass::large:
        return "large";
    }
    return "unknown";
}

void SceneAnnotation::validate() const {
    if (width < 1 || height < 1) {
        throw DimensionMismatch("scene " + image_id + " has non-positive dimensions");
    }
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const auto& m = instances[i].mask;
        if (m.width() != width || m.height() != height) {
            throw DimensionMismatch("scene " + image_id + ": instance " + std::to_string(i) +
                                    " mask does not match image dimensions");
        }
    }
}

SceneAnnotation synth_scene(int width, int height, int n_instances, std::uint64_t seed) {
    if (width < 1 || height < 1) {
        throw std::invalid_argument("synth_scene needs positive dimensions");
    }
    if (n_instances < 0) {
        throw std::invalid_argument("synth_scene needs n_instances >= 0");
    }
    SceneAnnotation scene{"synth_" + std::to_string(seed), width, height, {}};
    Rng rng(mix_seed(seed, 0x5ce9e));

    const int short_side = std::min(width, height);
    const int min_side = std::max(1, short_side / 16);
    const int max_side = std::max(min_side, short_side * 3 / 8);

    for (int k = 0; k < n_instances; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < kAttemptsPerInstance && !placed; ++attempt) {
            const int w = std::min(width, rng.uniform_int(min_side, max_side));
            const int h = std::min(height, rng.uniform_int(min_side, max_side));
            const int x0 = rng.uniform_int(0, width - w);
            const int y0 = rng.uniform_int(0, height - h);
            const bool round = rng.uniform() < 0.5;
            BinaryMask mask = round ? ellipse(width, height, x0, y0, w, h) : rectangle(width, height, x0, y0, w, h);

            const bool overlaps = std::any_of(scene.instances.begin(), scene.instances.end(),
                                              [&](const Instance& other) {
                                                  return iou(other.mask, mask) > kSynthMaxPairwiseIou;
                                              });
            if (overlaps) {
                continue;
            }
            const int category = kSynthCategories[static_cast<std::size_t>(k) % kSynthCategories.size()];
            scene.instances.push_back({std::move(mask), category});
            placed = true;
        }
        if (!placed) {
            throw GenerationFailure("could not place instance " + std::to_string(k) + " of " +
                                    std::to_string(n_instances) + " in " + std::to_string(width) + "x" +
                                    std::to_string(height) + " scene (seed " + std::to_string(seed) + ")");
        }
    }
    return scene;
}

} // namespace promptplan
