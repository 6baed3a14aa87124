#pragma once

#include "promptplan/backend.hpp"
#include "promptplan/scene.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace promptplan {

inline constexpr double kBackgroundScore = 0.8;

// Each instance is detected with probability `recall`; the draw and the
// score in [0.5, 1.0) depend only on (seed, instance index).
std::vector<Detection> oracle_detect(const SceneAnnotation& scene, double recall, std::uint64_t seed);

// Instance whose bounding box best overlaps the prompt box (ties go to the
// lower index), scored by that box IoU. Empty mask with score 0 when no
// instance box overlaps the prompt at all.
SegmentResult oracle_segment_box(const SceneAnnotation& scene, const BoxPrompt& prompt);

// Smallest instance containing the point's pixel (score 1), else the
// 4-connected background component containing it (score kBackgroundScore).
SegmentResult oracle_segment_point(const SceneAnnotation& scene, const PointPrompt& prompt);

/// Connected components of the background (complement of every instance).
class BackgroundIndex {
  public:
    explicit BackgroundIndex(const SceneAnnotation& scene);

    // Component mask containing (x, y); nullopt if the pixel is inside an instance.
    std::optional<BinaryMask> component_at(int x, int y) const;

    std::size_t component_count() const { return component_count_; }

  private:
    int width_;
    int height_;
    std::vector<int> labels_; // row-major, -1 on instance pixels
    std::size_t component_count_ = 0;
};

class OracleDetector : public Detector {
  public:
    OracleDetector(const SceneAnnotation& scene, double recall, std::uint64_t seed)
        : scene_(scene), recall_(recall), seed_(seed) {}

  protected:
    std::vector<Detection> do_detect(const ImageInfo& image) override;

  private:
    const SceneAnnotation& scene_;
    double recall_;
    std::uint64_t seed_;
};

// Answers both prompt kinds from ground truth; background labelling is
// computed once per scene on first use.
class OracleSegmenter : public Segmenter {
  public:
    explicit OracleSegmenter(const SceneAnnotation& scene) : scene_(scene) {}

  protected:
    SegmentResult do_segment(const ImageInfo& image, const Prompt& prompt) override;

  private:
    const SceneAnnotation& scene_;
    std::optional<BackgroundIndex> background_;
};

} // namespace promptplan
