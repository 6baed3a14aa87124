#include "promptplan/batch.hpp"

#include "promptplan/errors.hpp"
#include "promptplan/oracle.hpp"
#include "promptplan/rng.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>

namespace promptplan {

std::uint64_t scene_seed(std::uint64_t run_seed, std::string_view image_id) {
    return mix_seed(run_seed, fnv1a(image_id));
}

std::vector<ImageOutcome> run_batch(std::span<const SceneAnnotation> scenes, const PipelineConfig& config,
                                    const BackendSpec& backend, int jobs) {
    config.validate();
    std::vector<ImageOutcome> outcomes(scenes.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr fatal;
    std::mutex fatal_mutex;

    auto worker = [&] {
        std::unique_ptr<ExternalBackend> external;
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= scenes.size()) {
                return;
            }
            const auto& scene = scenes[i];
            auto& outcome = outcomes[i];
            outcome.image_id = scene.image_id;
            try {
                RunResult result;
                if (backend.kind == BackendSpec::Kind::oracle) {
                    OracleDetector detector(scene, backend.recall, scene_seed(backend.seed, scene.image_id));
                    OracleSegmenter segmenter(scene);
                    result = run_pipeline(scene.info(), &detector, segmenter, config);
                } else {
                    if (!external) {
                        external = std::make_unique<ExternalBackend>(backend.external);
                    }
                    result = run_pipeline(scene.info(), external.get(), *external, config);
                }
                outcome.masks = std::move(result.masks);
                outcome.stats = result.stats;
                outcome.prompts = result.prompts;
            } catch (const Error& e) {
                spdlog::error("image {} skipped: {}", scene.image_id, e.what());
                outcome.ok = false;
                outcome.error = e.what();
                outcome.masks.clear();
            } catch (...) {
                std::lock_guard lock(fatal_mutex);
                if (!fatal) {
                    fatal = std::current_exception();
                }
                next.store(scenes.size());
                return;
            }
        }
    };

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers =
        std::min<std::size_t>(jobs > 0 ? static_cast<std::size_t>(jobs) : hw, std::max<std::size_t>(1, scenes.size()));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(worker);
        }
    }
    if (fatal) {
        std::rethrow_exception(fatal);
    }
    return outcomes;
}

} // namespace promptplan
