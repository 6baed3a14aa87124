#include "promptplan/oracle.hpp"

#include "promptplan/errors.hpp"
#include "promptplan/prompts.hpp"
#include "promptplan/rng.hpp"

#include <limits>
#include <stdexcept>

namespace promptplan {

namespace {

void require_matching_image(const SceneAnnotation& scene, const ImageInfo& image) {
    if (image.width != scene.width || image.height != scene.height) {
        throw DimensionMismatch("oracle for scene " + scene.image_id + " asked about a " +
                                std::to_string(image.width) + "x" + std::to_string(image.height) + " image");
    }
}

std::optional<SegmentResult> smallest_containing_instance(const SceneAnnotation& scene, int x, int y) {
    std::optional<std::size_t> best;
    std::size_t best_area = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 0; i < scene.instances.size(); ++i) {
        const auto& mask = scene.instances[i].mask;
        if (!mask.test(x, y)) {
            continue;
        }
        const std::size_t a = mask.area();
        if (a < best_area) {
            best = i;
            best_area = a;
        }
    }
    if (!best) {
        return std::nullopt;
    }
    return SegmentResult{scene.instances[*best].mask, 1.0};
}

void check_point(const SceneAnnotation& scene, const PointPrompt& p) {
    if (!(p.x >= 0 && p.y >= 0 && p.x < scene.width && p.y < scene.height)) {
        throw std::out_of_range("point prompt outside scene " + scene.image_id);
    }
}

} // namespace

std::vector<Detection> oracle_detect(const SceneAnnotation& scene, double recall, std::uint64_t seed) {
    std::vector<Detection> out;
    for (std::size_t i = 0; i < scene.instances.size(); ++i) {
        Rng rng(mix_seed(seed, i));
        const double keep_draw = rng.uniform();
        const double score = 0.5 + 0.5 * rng.uniform();
        if (keep_draw >= recall) {
            continue;
        }
        const auto box = bbox_of(scene.instances[i].mask);
        if (!box) {
            continue;
        }
        out.push_back({*box, scene.instances[i].category_id, score});
    }
    return out;
}

SegmentResult oracle_segment_box(const SceneAnnotation& scene, const BoxPrompt& prompt) {
    std::optional<std::size_t> best;
    double best_iou = 0.0;
    for (std::size_t i = 0; i < scene.instances.size(); ++i) {
        const auto box = bbox_of(scene.instances[i].mask);
        if (!box) {
            continue;
        }
        const double v = box_iou(*box, prompt.box);
        if (v > best_iou) {
            best = i;
            best_iou = v;
        }
    }
    if (!best) {
        return {BinaryMask(scene.width, scene.height), 0.0};
    }
    return {scene.instances[*best].mask, best_iou};
}

BackgroundIndex::BackgroundIndex(const SceneAnnotation& scene)
    : width_(scene.width), height_(scene.height),
      labels_(static_cast<std::size_t>(scene.width) * scene.height, -1) {
    BinaryMask occupied(scene.width, scene.height);
    for (const auto& inst : scene.instances) {
        union_into(occupied, inst.mask);
    }
    const std::size_t n = labels_.size();
    std::vector<int> unlabelled(n);
    for (std::size_t i = 0; i < n; ++i) {
        unlabelled[i] = occupied.get_unchecked(i) ? 0 : 1;
    }

    std::vector<std::size_t> stack;
    int next = 0;
    for (std::size_t seed = 0; seed < n; ++seed) {
        if (!unlabelled[seed]) {
            continue;
        }
        unlabelled[seed] = 0;
        labels_[seed] = next;
        stack.push_back(seed);
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            const std::size_t x = i % width_;
            const std::size_t y = i / width_;
            auto visit = [&](std::size_t j) {
                if (unlabelled[j]) {
                    unlabelled[j] = 0;
                    labels_[j] = next;
                    stack.push_back(j);
                }
            };
            if (x > 0) visit(i - 1);
            if (x + 1 < static_cast<std::size_t>(width_)) visit(i + 1);
            if (y > 0) visit(i - width_);
            if (y + 1 < static_cast<std::size_t>(height_)) visit(i + width_);
        }
        ++next;
    }
    component_count_ = static_cast<std::size_t>(next);
}

std::optional<BinaryMask> BackgroundIndex::component_at(int x, int y) const {
    const int label = labels_.at(static_cast<std::size_t>(y) * width_ + x);
    if (label < 0) {
        return std::nullopt;
    }
    BinaryMask mask(width_, height_);
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] == label) {
            mask.set_unchecked(i);
        }
    }
    return mask;
}

SegmentResult oracle_segment_point(const SceneAnnotation& scene, const PointPrompt& prompt) {
    check_point(scene, prompt);
    const int x = pixel_x(prompt);
    const int y = pixel_y(prompt);
    if (auto hit = smallest_containing_instance(scene, x, y)) {
        return std::move(*hit);
    }
    return {*BackgroundIndex(scene).component_at(x, y), kBackgroundScore};
}

std::vector<Detection> OracleDetector::do_detect(const ImageInfo& image) {
    require_matching_image(scene_, image);
    return oracle_detect(scene_, recall_, seed_);
}

SegmentResult OracleSegmenter::do_segment(const ImageInfo& image, const Prompt& prompt) {
    require_matching_image(scene_, image);
    if (const auto* box = std::get_if<BoxPrompt>(&prompt)) {
        return oracle_segment_box(scene_, *box);
    }
    const auto& point = std::get<PointPrompt>(prompt);
    check_point(scene_, point);
    const int x = pixel_x(point);
    const int y = pixel_y(point);
    if (auto hit = smallest_containing_instance(scene_, x, y)) {
        return std::move(*hit);
    }
    if (!background_) {
        background_.emplace(scene_);
    }
    return {*background_->component_at(x, y), kBackgroundScore};
}

} // namespace promptplan
