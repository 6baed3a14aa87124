#include "promptplan/errors.hpp"
#include "promptplan/pipeline.hpp"

#include <algorithm>
#include <numeric>

namespace promptplan {

namespace {

struct Candidate {
    std::size_t index;
    std::size_t area;
    std::optional<Box> box;
};

bool boxes_disjoint(const std::optional<Box>& a, const std::optional<Box>& b) {
    if (!a || !b) {
        return true;
    }
    return a->x_max <= b->x_min || b->x_max <= a->x_min || a->y_max <= b->y_min || b->y_max <= a->y_min;
}

} // namespace

std::vector<std::size_t> iou_nms_indices(std::span<const MaskEntry> masks, double threshold) {
    std::vector<std::size_t> order(masks.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ea = masks[a];
        const auto& eb = masks[b];
        if (ea.result.score != eb.result.score) {
            return ea.result.score > eb.result.score;
        }
        return ea.provenance < eb.provenance;
    });

    std::vector<Candidate> kept;
    std::vector<std::size_t> out;
    for (const auto i : order) {
        const auto& mask = masks[i].result.mask;
        if (!masks.empty() && !mask.same_shape(masks[order.front()].result.mask)) {
            throw DimensionMismatch("NMS over masks of different dimensions");
        }
        Candidate cand{i, mask.area(), bbox_of(mask)};
        bool suppressed = false;
        for (const auto& k : kept) {
            // Zero overlap, or an area ratio that already bounds the IoU, cannot suppress.
            if (boxes_disjoint(cand.box, k.box)) {
                continue;
            }
            const auto lo = std::min(cand.area, k.area);
            const auto hi = std::max(cand.area, k.area);
            if (hi > 0 && static_cast<double>(lo) / static_cast<double>(hi) <= threshold) {
                // IoU <= lo/hi <= threshold
                continue;
            }
            if (iou(mask, masks[k.index].result.mask) > threshold) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) {
            kept.push_back(std::move(cand));
            out.push_back(i);
        }
    }
    return out;
}

MaskCollection iou_nms(const MaskCollection& masks, double threshold) {
    MaskCollection out;
    for (const auto i : iou_nms_indices(masks, threshold)) {
        out.push_back(masks[i]);
    }
    return out;
}

BinaryMask coverage_of(const MaskCollection& masks, int width, int height) {
    BinaryMask coverage(width, height);
    for (const auto& entry : masks) {
        union_into(coverage, entry.result.mask);
    }
    return coverage;
}

} // namespace promptplan
