#pragma once

#include "promptplan/types.hpp"

#include <atomic>
#include <cstdint>
#include <vector>

namespace promptplan {

struct BackendStats {
    std::uint64_t segmenter_calls = 0;
    std::uint64_t detector_calls = 0;
    double wall_time = 0.0; // seconds
};

// Every public call is counted before it is forwarded to the implementation,
// so the counters reflect calls issued, including ones that later fail.
class Detector {
  public:
    virtual ~Detector() = default;

    std::vector<Detection> detect(const ImageInfo& image) {
        calls_.fetch_add(1, std::memory_order_relaxed);
        return do_detect(image);
    }

    std::uint64_t detector_calls() const { return calls_.load(std::memory_order_relaxed); }

  protected:
    virtual std::vector<Detection> do_detect(const ImageInfo& image) = 0;

  private:
    std::atomic<std::uint64_t> calls_{0};
};

class Segmenter {
  public:
    virtual ~Segmenter() = default;

    SegmentResult segment(const ImageInfo& image, const Prompt& prompt) {
        calls_.fetch_add(1, std::memory_order_relaxed);
        return do_segment(image, prompt);
    }

    std::uint64_t segmenter_calls() const { return calls_.load(std::memory_order_relaxed); }

  protected:
    virtual SegmentResult do_segment(const ImageInfo& image, const Prompt& prompt) = 0;

  private:
    std::atomic<std::uint64_t> calls_{0};
};

} // namespace promptplan
