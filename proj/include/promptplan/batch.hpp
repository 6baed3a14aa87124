#pragma once

#include "promptplan/eval.hpp"
#include "promptplan/external.hpp"
#include "promptplan/pipeline.hpp"
#include "promptplan/scene.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace promptplan {

struct BackendSpec {
    enum class Kind { oracle, external };

    Kind kind = Kind::oracle;
    double recall = 1.0;    // oracle detector only
    std::uint64_t seed = 0; // oracle detector only
    ExternalOptions external;
};

// Seed the oracle detector uses for one image of a run.
std::uint64_t scene_seed(std::uint64_t run_seed, std::string_view image_id);

/// Runs config.mode over every scene with `jobs` workers (0 = hardware
/// concurrency). Results come back in scene order whatever the completion
/// order. A library Error on one image marks that outcome failed and the
/// batch moves on; external backends are owned one per worker.
std::vector<ImageOutcome> run_batch(std::span<const SceneAnnotation> scenes, const PipelineConfig& config,
                                    const BackendSpec& backend, int jobs = 1);

} // namespace promptplan
