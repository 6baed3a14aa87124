#pragma once

#include "promptplan/backend.hpp"
#include "promptplan/prompts.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace promptplan {

enum class Mode { hierarchical, boxes_only, hybrid };

std::string_view to_string(Mode mode);
std::optional<Mode> parse_mode(std::string_view text);

struct PipelineConfig {
    Mode mode = Mode::hybrid;
    GridSpec coarse_grid{8};
    GridSpec dense_grid{32};
    GridSpec sparse_grid{16};
    double nms_iou_threshold = 0.7;
    double high_conf_threshold = 0.88;
    double detection_conf_floor = kDefaultDetectionFloor;
    std::size_t min_mask_area = 16;

    // Throws std::invalid_argument naming the offending field.
    void validate() const;
};

// Declaration order is the NMS tie-break order at equal score.
enum class Provenance { box_prompt, point_prompt_round1, point_prompt_round2, sparse_point };

std::string_view to_string(Provenance provenance);
std::optional<Provenance> parse_provenance(std::string_view text);

struct MaskEntry {
    SegmentResult result;
    Provenance provenance = Provenance::box_prompt;
    std::optional<int> category_id;
};

using MaskCollection = std::vector<MaskEntry>;

struct PromptCounts {
    std::uint64_t box = 0;
    std::uint64_t round1 = 0;
    std::uint64_t round2 = 0;
    std::uint64_t sparse = 0;

    std::uint64_t total() const { return box + round1 + round2 + sparse; }
};

struct RunResult {
    MaskCollection masks;
    BackendStats stats;
    PromptCounts prompts;
};

/// Greedy mask NMS.
///
/// Candidates are visited by descending score, then provenance order, then
/// input position; a candidate is kept iff its IoU with every kept mask is
/// <= threshold. Returns kept positions in visit order.
std::vector<std::size_t> iou_nms_indices(std::span<const MaskEntry> masks, double threshold);

// Kept entries in visit order, payloads untouched.
MaskCollection iou_nms(const MaskCollection& masks, double threshold);

// Union of all member masks; an empty collection gives an empty mask.
BinaryMask coverage_of(const MaskCollection& masks, int width, int height);

RunResult run_boxes_only(const ImageInfo& image, Detector& detector, Segmenter& segmenter,
                         const PipelineConfig& config);

RunResult run_hybrid(const ImageInfo& image, Detector& detector, Segmenter& segmenter, const PipelineConfig& config);

RunResult run_hierarchical(const ImageInfo& image, Segmenter& segmenter, const PipelineConfig& config);

// Dispatches on config.mode. The detector may be null for hierarchical runs.
RunResult run_pipeline(const ImageInfo& image, Detector* detector, Segmenter& segmenter, const PipelineConfig& config);

} // namespace promptplan
