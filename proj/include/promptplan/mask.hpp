#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace promptplan {

// Axis-aligned box in pixel coordinates, half-open on the max edges.
struct Box {
    double x_min = 0;
    double y_min = 0;
    double x_max = 0;
    double y_max = 0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    bool valid() const { return x_min < x_max && y_min < y_max; }
    double area() const { return valid() ? width() * height() : 0.0; }

    // Intersection with [0,width) x [0,height); may come back invalid.
    Box clamped(int image_width, int image_height) const;

    friend bool operator==(const Box&, const Box&) = default;
};

double box_iou(const Box& a, const Box& b);

/// Dense binary pixel grid.
///
/// Bits are packed row-major into 64-bit words (pixel (x, y) is bit
/// y * width + x). Bits past width * height in the last word are always
/// zero, so popcounts over whole words give exact areas.
class BinaryMask {
  public:
    BinaryMask(int width, int height);

    static BinaryMask filled(int width, int height);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

    // Checked access; throws std::out_of_range outside the grid.
    bool test(int x, int y) const;
    void set(int x, int y, bool value = true);

    // Unchecked access for hot loops inside the library.
    bool get_unchecked(std::size_t flat_index) const {
        return (words_[flat_index >> 6] >> (flat_index & 63)) & 1u;
    }
    void set_unchecked(std::size_t flat_index) { words_[flat_index >> 6] |= std::uint64_t{1} << (flat_index & 63); }

    // Sets pixels [x_begin, x_end) of row y.
    void fill_row(int y, int x_begin, int x_end);

    std::size_t area() const;
    bool empty() const;
    bool same_shape(const BinaryMask& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

    std::span<const std::uint64_t> words() const { return words_; }

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

  private:
    friend BinaryMask& union_into(BinaryMask&, const BinaryMask&);
    friend BinaryMask complement(const BinaryMask&);

    void clear_padding();

    int width_;
    int height_;
    std::vector<std::uint64_t> words_;
};

std::size_t intersection_area(const BinaryMask& a, const BinaryMask& b);
std::size_t union_area(const BinaryMask& a, const BinaryMask& b);

// |a & b| / |a | b|; two empty masks give 0. Throws DimensionMismatch.
double iou(const BinaryMask& a, const BinaryMask& b);

// Cellwise OR of source into target. Throws DimensionMismatch.
BinaryMask& union_into(BinaryMask& target, const BinaryMask& source);

BinaryMask complement(const BinaryMask& mask);

// Tight half-open bounding box of the set pixels; nullopt when empty.
std::optional<Box> bbox_of(const BinaryMask& mask);

} // namespace promptplan
