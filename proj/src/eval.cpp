#include "promptplan/eval.hpp"

#include "promptplan/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace promptplan {

namespace {

struct AreaRange {
    double lo;
    double hi;
};

constexpr std::array<AreaRange, 4> kAreaRanges{{
    {0.0, 1e10},
    {0.0, static_cast<double>(kSmallAreaLimit)},
    {static_cast<double>(kSmallAreaLimit), static_cast<double>(kMediumAreaLimit)},
    {static_cast<double>(kMediumAreaLimit), 1e10},
}};

bool outside(double area, const AreaRange& r) { return area < r.lo || area > r.hi; }

// Prediction positions grouped by ground-truth image, in input order.
std::vector<std::vector<std::size_t>> group_by_image(std::span<const Prediction> predictions,
                                                     std::span<const SceneAnnotation> gts) {
    std::unordered_map<std::string, std::size_t> image_index;
    for (std::size_t i = 0; i < gts.size(); ++i) {
        image_index.emplace(gts[i].image_id, i);
    }
    std::vector<std::vector<std::size_t>> groups(gts.size());
    std::set<std::string> unknown;
    for (std::size_t p = 0; p < predictions.size(); ++p) {
        const auto it = image_index.find(predictions[p].image_id);
        if (it == image_index.end()) {
            unknown.insert(predictions[p].image_id);
            continue;
        }
        groups[it->second].push_back(p);
    }
    if (!unknown.empty()) {
        std::string ids;
        for (const auto& id : unknown) {
            ids += (ids.empty() ? "" : ", ") + id;
        }
        throw Error("predictions reference images without ground truth: " + ids);
    }
    return groups;
}

// Per (category, area range, threshold) detection list pooled over images.
struct Accumulator {
    std::vector<double> scores;
    std::vector<bool> true_positive;
    std::size_t gt_count = 0; // non-ignored ground truth
};

double interpolated_ap(Accumulator& acc) {
    const std::size_t n = acc.scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return acc.scores[a] > acc.scores[b]; });

    std::vector<double> recall(n);
    std::vector<double> precision(n);
    std::size_t tp = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (acc.true_positive[order[k]]) {
            ++tp;
        }
        recall[k] = static_cast<double>(tp) / static_cast<double>(acc.gt_count);
        precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    }
    for (std::size_t k = n; k-- > 1;) {
        precision[k - 1] = std::max(precision[k - 1], precision[k]);
    }
    double sum = 0.0;
    for (int r = 0; r < kRecallSamples; ++r) {
        const double target = static_cast<double>(r) / (kRecallSamples - 1);
        const auto it = std::lower_bound(recall.begin(), recall.end(), target);
        if (it != recall.end()) {
            sum += precision[static_cast<std::size_t>(it - recall.begin())];
        }
    }
    return sum / kRecallSamples;
}

std::optional<double> mean_of(const std::vector<double>& values) {
    if (values.empty()) {
        return std::nullopt;
    }
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

std::string format_optional(const std::optional<double>& v) { return v ? fmt::format("{:.6f}", *v) : ""; }

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

std::optional<double> optional_from(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) {
        return std::nullopt;
    }
    return j.at(key).get<double>();
}

} // namespace

ApResult eval_ap(std::span<const Prediction> predictions, std::span<const SceneAnnotation> gts) {
    for (const auto& p : predictions) {
        if (!p.category_id) {
            throw MissingCategory("detector-based AP needs category ids; prediction on image " + p.image_id +
                                  " has none");
        }
    }
    const auto groups = group_by_image(predictions, gts);

    std::set<int> categories;
    for (const auto& scene : gts) {
        for (const auto& inst : scene.instances) {
            categories.insert(inst.category_id);
        }
    }

    // acc[category][area][threshold]
    std::map<int, std::array<std::array<Accumulator, kIouThresholds.size()>, kAreaRanges.size()>> acc;
    for (int c : categories) {
        acc[c];
    }

    for (std::size_t img = 0; img < gts.size(); ++img) {
        const auto& scene = gts[img];
        for (int c : categories) {
            std::vector<std::size_t> gt_idx;
            for (std::size_t g = 0; g < scene.instances.size(); ++g) {
                if (scene.instances[g].category_id == c) {
                    gt_idx.push_back(g);
                }
            }
            std::vector<std::size_t> dt_idx;
            for (auto p : groups[img]) {
                if (*predictions[p].category_id == c) {
                    dt_idx.push_back(p);
                }
            }
            std::stable_sort(dt_idx.begin(), dt_idx.end(), [&](std::size_t a, std::size_t b) {
                return predictions[a].score > predictions[b].score;
            });

            std::vector<std::vector<double>> ious(dt_idx.size(), std::vector<double>(gt_idx.size()));
            for (std::size_t d = 0; d < dt_idx.size(); ++d) {
                for (std::size_t g = 0; g < gt_idx.size(); ++g) {
                    ious[d][g] = iou(predictions[dt_idx[d]].mask, scene.instances[gt_idx[g]].mask);
                }
            }
            std::vector<double> gt_area(gt_idx.size());
            for (std::size_t g = 0; g < gt_idx.size(); ++g) {
                gt_area[g] = static_cast<double>(scene.instances[gt_idx[g]].mask.area());
            }
            std::vector<double> dt_area(dt_idx.size());
            for (std::size_t d = 0; d < dt_idx.size(); ++d) {
                dt_area[d] = static_cast<double>(predictions[dt_idx[d]].mask.area());
            }

            for (std::size_t a = 0; a < kAreaRanges.size(); ++a) {
                const auto& range = kAreaRanges[a];
                // Non-ignored ground truth first, as COCO does.
                std::vector<std::size_t> gt_order(gt_idx.size());
                std::iota(gt_order.begin(), gt_order.end(), std::size_t{0});
                std::stable_partition(gt_order.begin(), gt_order.end(),
                                      [&](std::size_t g) { return !outside(gt_area[g], range); });
                std::size_t valid_gt = 0;
                for (std::size_t g = 0; g < gt_idx.size(); ++g) {
                    valid_gt += outside(gt_area[g], range) ? 0 : 1;
                }

                for (std::size_t t = 0; t < kIouThresholds.size(); ++t) {
                    auto& bucket = acc[c][a][t];
                    bucket.gt_count += valid_gt;
                    std::vector<bool> gt_taken(gt_idx.size(), false);
                    for (std::size_t d = 0; d < dt_idx.size(); ++d) {
                        double best = std::min(kIouThresholds[t], 1.0 - 1e-10);
                        std::optional<std::size_t> match;
                        for (const auto g : gt_order) {
                            if (gt_taken[g]) {
                                continue;
                            }
                            if (match && !outside(gt_area[*match], range) && outside(gt_area[g], range)) {
                                break;
                            }
                            if (ious[d][g] < best) {
                                continue;
                            }
                            best = ious[d][g];
                            match = g;
                        }
                        bool ignored;
                        bool tp = false;
                        if (match) {
                            gt_taken[*match] = true;
                            ignored = outside(gt_area[*match], range);
                            tp = true;
                        } else {
                            ignored = outside(dt_area[d], range);
                        }
                        if (!ignored) {
                            bucket.scores.push_back(predictions[dt_idx[d]].score);
                            bucket.true_positive.push_back(tp);
                        }
                    }
                }
            }
        }
    }

    std::array<std::vector<double>, kAreaRanges.size()> per_area;
    for (auto& [category, by_area] : acc) {
        for (std::size_t a = 0; a < kAreaRanges.size(); ++a) {
            for (auto& bucket : by_area[a]) {
                if (bucket.gt_count == 0) {
                    continue;
                }
                per_area[a].push_back(interpolated_ap(bucket));
            }
        }
    }
    return ApResult{mean_of(per_area[0]), mean_of(per_area[1]), mean_of(per_area[2]), mean_of(per_area[3])};
}

ClassAgnosticResult eval_class_agnostic(std::span<const Prediction> predictions,
                                        std::span<const SceneAnnotation> gts, bool with_matched_miou) {
    const auto groups = group_by_image(predictions, gts);

    std::size_t total_gt = 0;
    double best_iou_sum = 0.0;
    std::array<std::size_t, kIouThresholds.size()> matched{};
    double matched_iou_sum = 0.0;
    std::size_t matched_pairs = 0;

    struct Pair {
        double iou;
        std::size_t gt;
        std::size_t pred;
    };

    for (std::size_t img = 0; img < gts.size(); ++img) {
        const auto& scene = gts[img];
        const auto& preds = groups[img];
        total_gt += scene.instances.size();

        std::vector<Pair> pairs;
        for (std::size_t g = 0; g < scene.instances.size(); ++g) {
            double best = 0.0;
            for (std::size_t k = 0; k < preds.size(); ++k) {
                const double v = iou(scene.instances[g].mask, predictions[preds[k]].mask);
                best = std::max(best, v);
                if (v >= kIouThresholds.front()) {
                    pairs.push_back({v, g, k});
                }
            }
            best_iou_sum += best;
        }
        std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
            if (a.iou != b.iou) {
                return a.iou > b.iou;
            }
            if (a.gt != b.gt) {
                return a.gt < b.gt;
            }
            return a.pred < b.pred;
        });

        for (std::size_t t = 0; t < kIouThresholds.size(); ++t) {
            std::vector<bool> gt_used(scene.instances.size(), false);
            std::vector<bool> pred_used(preds.size(), false);
            for (const auto& pair : pairs) {
                if (pair.iou < kIouThresholds[t]) {
                    break;
                }
                if (gt_used[pair.gt] || pred_used[pair.pred]) {
                    continue;
                }
                gt_used[pair.gt] = true;
                pred_used[pair.pred] = true;
                ++matched[t];
                if (t == 0) {
                    matched_iou_sum += pair.iou;
                    ++matched_pairs;
                }
            }
        }
    }

    ClassAgnosticResult out;
    if (total_gt > 0) {
        out.miou = best_iou_sum / static_cast<double>(total_gt);
        double recall_sum = 0.0;
        for (auto m : matched) {
            recall_sum += static_cast<double>(m) / static_cast<double>(total_gt);
        }
        out.ar = recall_sum / static_cast<double>(kIouThresholds.size());
    }
    if (with_matched_miou && matched_pairs > 0) {
        out.miou_matched = matched_iou_sum / static_cast<double>(matched_pairs);
    }
    return out;
}

std::string_view to_string(Track track) {
    switch (track) {
    case Track::detector:
        return "detector";
    case Track::class_agnostic:
        return "class_agnostic";
    case Track::both:
        return "both";
    }
    return "unknown";
}

std::optional<Track> parse_track(std::string_view text) {
    for (auto t : {Track::detector, Track::class_agnostic, Track::both}) {
        if (to_string(t) == text) {
            return t;
        }
    }
    return std::nullopt;
}

EvalReport aggregate_report(std::span<const ImageOutcome> outcomes, std::span<const SceneAnnotation> gts,
                            const EvalOptions& options) {
    std::unordered_map<std::string, const SceneAnnotation*> by_id;
    for (const auto& scene : gts) {
        by_id.emplace(scene.image_id, &scene);
    }
    std::set<std::string> missing;
    for (const auto& o : outcomes) {
        if (!by_id.contains(o.image_id)) {
            missing.insert(o.image_id);
        }
    }
    if (!missing.empty()) {
        std::string ids;
        for (const auto& id : missing) {
            ids += (ids.empty() ? "" : ", ") + id;
        }
        throw Error("no ground truth for images: " + ids);
    }

    EvalReport report;
    std::vector<SceneAnnotation> evaluated;
    std::vector<Prediction> all;
    std::vector<Prediction> tagged;
    double seconds = 0.0;
    double calls = 0.0;
    double prompts = 0.0;
    double detector_calls = 0.0;
    for (const auto& o : outcomes) {
        if (!o.ok) {
            ++report.images_skipped;
            continue;
        }
        ++report.images_evaluated;
        evaluated.push_back(*by_id.at(o.image_id));
        seconds += o.stats.wall_time;
        calls += static_cast<double>(o.stats.segmenter_calls);
        detector_calls += static_cast<double>(o.stats.detector_calls);
        prompts += static_cast<double>(o.prompts.total());
        for (const auto& entry : o.masks) {
            Prediction p{o.image_id, entry.result.mask, entry.result.score, entry.category_id};
            if (p.category_id) {
                tagged.push_back(p);
            }
            all.push_back(std::move(p));
        }
    }
    if (report.images_evaluated > 0) {
        const auto n = static_cast<double>(report.images_evaluated);
        report.seconds_per_image = seconds / n;
        report.calls_per_image = calls / n;
        report.prompts_per_image = prompts / n;
        report.detector_calls_per_image = detector_calls / n;
    }

    if (options.track != Track::class_agnostic) {
        if (tagged.empty() && options.track == Track::detector) {
            throw MissingCategory("detector track requested but no prediction carries a category_id");
        }
        if (!tagged.empty()) {
            const auto ap = eval_ap(tagged, evaluated);
            report.ap = ap.ap;
            report.ap_small = ap.ap_small;
            report.ap_medium = ap.ap_medium;
            report.ap_large = ap.ap_large;
        }
    }
    if (options.track != Track::detector) {
        const auto ca = eval_class_agnostic(all, evaluated, options.matched_miou);
        report.ar = ca.ar;
        report.miou = ca.miou;
        report.miou_matched = ca.miou_matched;
    }
    return report;
}

nlohmann::json report_to_json(const EvalReport& r) {
    return nlohmann::json{
        {"mode", r.mode},
        {"ap", optional_json(r.ap)},
        {"ap_small", optional_json(r.ap_small)},
        {"ap_medium", optional_json(r.ap_medium)},
        {"ap_large", optional_json(r.ap_large)},
        {"ar", optional_json(r.ar)},
        {"miou", optional_json(r.miou)},
        {"miou_matched", optional_json(r.miou_matched)},
        {"seconds_per_image", r.seconds_per_image},
        {"calls_per_image", r.calls_per_image},
        {"prompts_per_image", r.prompts_per_image},
        {"detector_calls_per_image", r.detector_calls_per_image},
        {"images_evaluated", r.images_evaluated},
        {"images_skipped", r.images_skipped},
        {"definitions",
         {{"ap", "COCO mask AP, IoU 0.50:0.05:0.95, 101-point interpolation, greedy score-ordered matching"},
          {"ar", "class-agnostic recall averaged over IoU 0.50:0.05:0.95, greedy one-to-one matching by IoU"},
          {"miou", "mean over ground-truth instances of the best IoU of any prediction on the same image"},
          {"miou_matched", "mean IoU over pairs matched at IoU >= 0.5 (optional)"},
          {"calls_per_image", "segmenter (mask decoder) calls per evaluated image"}}},
    };
}

EvalReport report_from_json(const nlohmann::json& j) {
    EvalReport r;
    r.mode = j.value("mode", std::string{});
    r.ap = optional_from(j, "ap");
    r.ap_small = optional_from(j, "ap_small");
    r.ap_medium = optional_from(j, "ap_medium");
    r.ap_large = optional_from(j, "ap_large");
    r.ar = optional_from(j, "ar");
    r.miou = optional_from(j, "miou");
    r.miou_matched = optional_from(j, "miou_matched");
    r.seconds_per_image = j.value("seconds_per_image", 0.0);
    r.calls_per_image = j.value("calls_per_image", 0.0);
    r.prompts_per_image = j.value("prompts_per_image", 0.0);
    r.detector_calls_per_image = j.value("detector_calls_per_image", 0.0);
    r.images_evaluated = j.value("images_evaluated", std::size_t{0});
    r.images_skipped = j.value("images_skipped", std::size_t{0});
    return r;
}

std::string report_csv_header() { return "mode,AR,mIoU,AP,AP_s,AP_m,AP_l,time/img,calls/img"; }

std::string report_csv_row(const EvalReport& r) {
    return fmt::format("{},{},{},{},{},{},{},{:.6f},{:.3f}", r.mode, format_optional(r.ar), format_optional(r.miou),
                       format_optional(r.ap), format_optional(r.ap_small), format_optional(r.ap_medium),
                       format_optional(r.ap_large), r.seconds_per_image, r.calls_per_image);
}

} // namespace promptplan
