#include "promptplan/pipeline.hpp"

#include "promptplan/errors.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <stdexcept>
#include <string>

namespace promptplan {

namespace {

using Clock = std::chrono::steady_clock;

void check_ratio(double value, const char* name) {
    if (!(value >= 0.0 && value <= 1.0)) {
        throw std::invalid_argument(std::string(name) + " must be in [0,1], got " + std::to_string(value));
    }
}

void check_grid(GridSpec grid, const char* name) {
    if (grid.points_per_side < 1) {
        throw std::invalid_argument(std::string(name) + " must be >= 1");
    }
}

/// Per-image bookkeeping shared by the three modes.
class Run {
  public:
    Run(const ImageInfo& image, Detector* detector, Segmenter& segmenter, const PipelineConfig& config)
        : image_(image), detector_(detector), segmenter_(segmenter), config_(config), start_(Clock::now()),
          seg_calls_before_(segmenter.segmenter_calls()),
          det_calls_before_(detector != nullptr ? detector->detector_calls() : 0) {
        config.validate();
        if (image.width < 1 || image.height < 1) {
            throw std::invalid_argument("image " + image.image_id + " has non-positive dimensions");
        }
    }

    std::vector<Detection> detect() { return detector_->detect(image_); }

    SegmentResult segment(const Prompt& prompt) {
        auto result = segmenter_.segment(image_, prompt);
        if (result.mask.width() != image_.width || result.mask.height() != image_.height) {
            throw ProtocolError("segmenter returned a " + std::to_string(result.mask.width()) + "x" +
                                std::to_string(result.mask.height()) + " mask for image " + image_.image_id);
        }
        return result;
    }

    bool big_enough(const SegmentResult& r) const { return r.mask.area() >= config_.min_mask_area; }

    // Box-prompt stage shared by boxes_only and hybrid; appends to masks.
    void box_stage(MaskCollection& masks) {
        const auto detections = detect();
        const auto prompts =
            boxes_from_detections(detections, image_.width, image_.height, config_.detection_conf_floor);
        for (const auto& prompt : prompts) {
            ++counts_.box;
            auto result = segment(prompt);
            if (big_enough(result)) {
                masks.push_back({std::move(result), Provenance::box_prompt, prompt.source->category_id});
            }
        }
    }

    // Point prompts that produce class-agnostic masks.
    void point_stage(std::span<const PointPrompt> points, Provenance provenance, std::uint64_t& counter,
                     MaskCollection& masks) {
        for (const auto& point : points) {
            ++counter;
            auto result = segment(point);
            if (big_enough(result)) {
                masks.push_back({std::move(result), provenance, std::nullopt});
            }
        }
    }

    RunResult finish(MaskCollection candidates) {
        RunResult out;
        out.masks = iou_nms(candidates, config_.nms_iou_threshold);
        out.prompts = counts_;
        out.stats.segmenter_calls = segmenter_.segmenter_calls() - seg_calls_before_;
        out.stats.detector_calls = detector_ != nullptr ? detector_->detector_calls() - det_calls_before_ : 0;
        out.stats.wall_time = std::chrono::duration<double>(Clock::now() - start_).count();
        spdlog::debug("{}: {} prompts, {} candidates, {} kept, {:.3f}s", image_.image_id, counts_.total(),
                      candidates.size(), out.masks.size(), out.stats.wall_time);
        return out;
    }

    PromptCounts& counts() { return counts_; }
    const ImageInfo& image() const { return image_; }
    const PipelineConfig& config() const { return config_; }

  private:
    const ImageInfo& image_;
    Detector* detector_;
    Segmenter& segmenter_;
    const PipelineConfig& config_;
    Clock::time_point start_;
    std::uint64_t seg_calls_before_;
    std::uint64_t det_calls_before_;
    PromptCounts counts_;
};

} // namespace

std::string_view to_string(Mode mode) {
    switch (mode) {
    case Mode::hierarchical:
        return "hierarchical";
    case Mode::boxes_only:
        return "boxes_only";
    case Mode::hybrid:
        return "hybrid";
    }
    return "unknown";
}

std::optional<Mode> parse_mode(std::string_view text) {
    if (text == "hierarchical") {
        return Mode::hierarchical;
    }
    if (text == "boxes_only" || text == "boxes-only") {
        return Mode::boxes_only;
    }
    if (text == "hybrid") {
        return Mode::hybrid;
    }
    return std::nullopt;
}

std::string_view to_string(Provenance provenance) {
    switch (provenance) {
    case Provenance::box_prompt:
        return "box";
    case Provenance::point_prompt_round1:
        return "round1";
    case Provenance::point_prompt_round2:
        return "round2";
    case Provenance::sparse_point:
        return "sparse";
    }
    return "unknown";
}

std::optional<Provenance> parse_provenance(std::string_view text) {
    for (auto p : {Provenance::box_prompt, Provenance::point_prompt_round1, Provenance::point_prompt_round2,
                   Provenance::sparse_point}) {
        if (to_string(p) == text) {
            return p;
        }
    }
    return std::nullopt;
}

void PipelineConfig::validate() const {
    check_grid(coarse_grid, "coarse_grid");
    check_grid(dense_grid, "dense_grid");
    check_grid(sparse_grid, "sparse_grid");
    check_ratio(nms_iou_threshold, "nms_iou_threshold");
    check_ratio(high_conf_threshold, "high_conf_threshold");
    check_ratio(detection_conf_floor, "detection_conf_floor");
}

RunResult run_boxes_only(const ImageInfo& image, Detector& detector, Segmenter& segmenter,
                         const PipelineConfig& config) {
    Run run(image, &detector, segmenter, config);
    MaskCollection candidates;
    run.box_stage(candidates);
    return run.finish(std::move(candidates));
}

RunResult run_hybrid(const ImageInfo& image, Detector& detector, Segmenter& segmenter, const PipelineConfig& config) {
    Run run(image, &detector, segmenter, config);
    MaskCollection candidates;
    run.box_stage(candidates);

    const BinaryMask coverage = coverage_of(candidates, image.width, image.height);
    const auto sparse = uncovered_grid(config.sparse_grid, coverage);
    run.point_stage(sparse, Provenance::sparse_point, run.counts().sparse, candidates);
    return run.finish(std::move(candidates));
}

RunResult run_hierarchical(const ImageInfo& image, Segmenter& segmenter, const PipelineConfig& config) {
    Run run(image, nullptr, segmenter, config);

    MaskCollection round1;
    run.point_stage(full_grid(config.coarse_grid, image.width, image.height), Provenance::point_prompt_round1,
                    run.counts().round1, round1);

    MaskCollection candidates;
    for (auto& entry : round1) {
        if (entry.result.score >= config.high_conf_threshold) {
            candidates.push_back(std::move(entry));
        }
    }
    const BinaryMask coverage = coverage_of(candidates, image.width, image.height);
    const auto dense = uncovered_grid(config.dense_grid, coverage);
    run.point_stage(dense, Provenance::point_prompt_round2, run.counts().round2, candidates);
    return run.finish(std::move(candidates));
}

RunResult run_pipeline(const ImageInfo& image, Detector* detector, Segmenter& segmenter, const PipelineConfig& config) {
    if (config.mode == Mode::hierarchical) {
        return run_hierarchical(image, segmenter, config);
    }
    if (detector == nullptr) {
        throw std::invalid_argument(std::string(to_string(config.mode)) + " mode needs a detector");
    }
    if (config.mode == Mode::boxes_only) {
        return run_boxes_only(image, *detector, segmenter, config);
    }
    return run_hybrid(image, *detector, segmenter, config);
}

} // namespace promptplan
