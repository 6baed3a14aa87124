#include "promptplan/mask.hpp"

#include "promptplan/errors.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>
#include <string>

namespace promptplan {

namespace {

std::size_t word_count(int width, int height) {
    return (static_cast<std::size_t>(width) * height + 63) / 64;
}

void require_same_shape(const BinaryMask& a, const BinaryMask& b) {
    if (!a.same_shape(b)) {
        throw DimensionMismatch("mask dimensions differ: " + std::to_string(a.width()) + "x" +
                                std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                                std::to_string(b.height()));
    }
}

} // namespace

Box Box::clamped(int image_width, int image_height) const {
    return Box{std::clamp(x_min, 0.0, static_cast<double>(image_width)),
               std::clamp(y_min, 0.0, static_cast<double>(image_height)),
               std::clamp(x_max, 0.0, static_cast<double>(image_width)),
               std::clamp(y_max, 0.0, static_cast<double>(image_height))};
}

double box_iou(const Box& a, const Box& b) {
    const double w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    if (w <= 0 || h <= 0) {
        return 0.0;
    }
    const double inter = w * h;
    const double uni = a.area() + b.area() - inter;
    return uni > 0 ? inter / uni : 0.0;
}

BinaryMask::BinaryMask(int width, int height) : width_(width), height_(height) {
    if (width < 1 || height < 1) {
        throw std::invalid_argument("mask dimensions must be positive, got " + std::to_string(width) + "x" +
                                    std::to_string(height));
    }
    words_.assign(word_count(width, height), 0);
}

BinaryMask BinaryMask::filled(int width, int height) {
    BinaryMask mask(width, height);
    std::fill(mask.words_.begin(), mask.words_.end(), ~std::uint64_t{0});
    mask.clear_padding();
    return mask;
}

void BinaryMask::clear_padding() {
    const std::size_t tail = pixel_count() & 63;
    if (tail != 0) {
        words_.back() &= (std::uint64_t{1} << tail) - 1;
    }
}

bool BinaryMask::test(int x, int y) const {
    if (x < 0 || y < 0 || x >= width_ || y >= height_) {
        throw std::out_of_range("pixel (" + std::to_string(x) + "," + std::to_string(y) + ") outside " +
                                std::to_string(width_) + "x" + std::to_string(height_) + " mask");
    }
    return get_unchecked(static_cast<std::size_t>(y) * width_ + x);
}

void BinaryMask::set(int x, int y, bool value) {
    if (x < 0 || y < 0 || x >= width_ || y >= height_) {
        throw std::out_of_range("pixel (" + std::to_string(x) + "," + std::to_string(y) + ") outside " +
                                std::to_string(width_) + "x" + std::to_string(height_) + " mask");
    }
    const std::size_t i = static_cast<std::size_t>(y) * width_ + x;
    const std::uint64_t bit = std::uint64_t{1} << (i & 63);
    if (value) {
        words_[i >> 6] |= bit;
    } else {
        words_[i >> 6] &= ~bit;
    }
}

void BinaryMask::fill_row(int y, int x_begin, int x_end) {
    if (y < 0 || y >= height_ || x_begin < 0 || x_end > width_ || x_begin > x_end) {
        throw std::out_of_range("row span outside mask");
    }
    const std::size_t base = static_cast<std::size_t>(y) * width_;
    for (std::size_t i = base + x_begin; i < base + x_end; ++i) {
        set_unchecked(i);
    }
}

std::size_t BinaryMask::area() const {
    std::size_t total = 0;
    for (auto w : words_) {
        total += std::popcount(w);
    }
    return total;
}

bool BinaryMask::empty() const {
    return std::all_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w == 0; });
}

std::size_t intersection_area(const BinaryMask& a, const BinaryMask& b) {
    require_same_shape(a, b);
    const auto wa = a.words();
    const auto wb = b.words();
    std::size_t total = 0;
    for (std::size_t i = 0; i < wa.size(); ++i) {
        total += std::popcount(wa[i] & wb[i]);
    }
    return total;
}

std::size_t union_area(const BinaryMask& a, const BinaryMask& b) {
    require_same_shape(a, b);
    const auto wa = a.words();
    const auto wb = b.words();
    std::size_t total = 0;
    for (std::size_t i = 0; i < wa.size(); ++i) {
        total += std::popcount(wa[i] | wb[i]);
    }
    return total;
}

double iou(const BinaryMask& a, const BinaryMask& b) {
    require_same_shape(a, b);
    const auto wa = a.words();
    const auto wb = b.words();
    std::size_t inter = 0;
    std::size_t uni = 0;
    for (std::size_t i = 0; i < wa.size(); ++i) {
        inter += std::popcount(wa[i] & wb[i]);
        uni += std::popcount(wa[i] | wb[i]);
    }
    if (uni == 0) {
        return 0.0;
    }
    return static_cast<double>(inter) / static_cast<double>(uni);
}

BinaryMask& union_into(BinaryMask& target, const BinaryMask& source) {
    require_same_shape(target, source);
    for (std::size_t i = 0; i < target.words_.size(); ++i) {
        target.words_[i] |= source.words_[i];
    }
    return target;
}

BinaryMask complement(const BinaryMask& mask) {
    BinaryMask out = mask;
    for (auto& w : out.words_) {
        w = ~w;
    }
    out.clear_padding();
    return out;
}

std::optional<Box> bbox_of(const BinaryMask& mask) {
    const auto words = mask.words();
    const auto width = static_cast<std::size_t>(mask.width());
    std::size_t x_lo = width;
    std::size_t x_hi = 0;
    std::size_t y_lo = static_cast<std::size_t>(mask.height());
    std::size_t y_hi = 0;
    bool any = false;
    for (std::size_t wi = 0; wi < words.size(); ++wi) {
        std::uint64_t w = words[wi];
        while (w != 0) {
            const std::size_t i = wi * 64 + std::countr_zero(w);
            w &= w - 1;
            const std::size_t x = i % width;
            const std::size_t y = i / width;
            x_lo = std::min(x_lo, x);
            x_hi = std::max(x_hi, x);
            y_lo = std::min(y_lo, y);
            y_hi = std::max(y_hi, y);
            any = true;
        }
    }
    if (!any) {
        return std::nullopt;
    }
    return Box{static_cast<double>(x_lo), static_cast<double>(y_lo), static_cast<double>(x_hi + 1),
               static_cast<double>(y_hi + 1)};
}

} // namespace promptplan
