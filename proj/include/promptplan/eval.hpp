#pragma once

#include "promptplan/pipeline.hpp"
#include "promptplan/scene.hpp"

#include <json.hpp>

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace promptplan {

// 0.50, 0.55, ..., 0.95
inline constexpr std::array<double, 10> kIouThresholds{0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95};
inline constexpr int kRecallSamples = 101;

struct Prediction {
    std::string image_id;
    BinaryMask mask;
    double score = 0.0;
    std::optional<int> category_id;
};

struct ApResult {
    // nullopt when no ground truth falls in the corresponding size range.
    std::optional<double> ap;
    std::optional<double> ap_small;
    std::optional<double> ap_medium;
    std::optional<double> ap_large;
};

/// COCO-style mask AP over IoU thresholds 0.50:0.05:0.95.
///
/// Per image and category, predictions are matched greedily in score order
/// to the best still-unmatched ground truth with IoU >= threshold.
/// Precision/recall curves are accumulated over images, made monotone and
/// sampled at 101 recall points, then averaged over thresholds and over the
/// categories present in the ground truth. Size-split APs ignore ground
/// truth outside the COCO area range (inclusive bounds 0, 32^2, 96^2) and
/// unmatched predictions outside it. No per-image detection cap is applied.
///
/// Throws MissingCategory if any prediction has no category_id, and Error
/// if a prediction names an image absent from gts.
ApResult eval_ap(std::span<const Prediction> predictions, std::span<const SceneAnnotation> gts);

struct ClassAgnosticResult {
    double ar = 0.0;
    double miou = 0.0;
    // Mean IoU over pairs matched at IoU >= 0.5; only computed on request.
    std::optional<double> miou_matched;
};

/// Category-blind coverage metrics.
///
/// mIoU is the mean, over every ground-truth instance, of the best IoU any
/// prediction on the same image reaches. AR averages recall over the ten
/// IoU thresholds; at each threshold, (gt, prediction) pairs with IoU >=
/// threshold are matched one-to-one greedily by descending IoU (ties by gt
/// then prediction position). Both are 0 when there is no ground truth.
ClassAgnosticResult eval_class_agnostic(std::span<const Prediction> predictions,
                                        std::span<const SceneAnnotation> gts, bool with_matched_miou = false);

enum class Track { detector, class_agnostic, both };

std::string_view to_string(Track track);
std::optional<Track> parse_track(std::string_view text);

struct ImageOutcome {
    std::string image_id;
    bool ok = true;
    std::string error;
    MaskCollection masks;
    BackendStats stats;
    PromptCounts prompts;
};

struct EvalReport {
    std::string mode;
    std::optional<double> ap;
    std::optional<double> ap_small;
    std::optional<double> ap_medium;
    std::optional<double> ap_large;
    std::optional<double> ar;
    std::optional<double> miou;
    std::optional<double> miou_matched;
    double seconds_per_image = 0.0;
    double calls_per_image = 0.0;
    double prompts_per_image = 0.0;
    double detector_calls_per_image = 0.0;
    std::size_t images_evaluated = 0;
    std::size_t images_skipped = 0;
};

struct EvalOptions {
    Track track = Track::both;
    bool matched_miou = false;
};

/// Means over successfully processed images; failed images are only counted.
/// The detector track uses category-tagged masks. With Track::both it is
/// left null when no mask carries a category; with Track::detector that
/// case raises MissingCategory.
EvalReport aggregate_report(std::span<const ImageOutcome> outcomes, std::span<const SceneAnnotation> gts,
                            const EvalOptions& options = {});

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

// Comparison-table layout: mode,AR,mIoU,AP,AP_s,AP_m,AP_l,time/img,calls/img
std::string report_csv_header();
std::string report_csv_row(const EvalReport& report);

} // namespace promptplan
