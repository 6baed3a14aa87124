#include "promptplan/rle.hpp"

#include "promptplan/errors.hpp"

#include <string>

namespace promptplan {

RleMask encode_rle(const BinaryMask& mask) {
    RleMask rle{mask.width(), mask.height(), {}};
    const auto width = static_cast<std::size_t>(mask.width());
    const auto height = static_cast<std::size_t>(mask.height());

    bool current = false;
    std::uint64_t run = 0;
    for (std::size_t x = 0; x < width; ++x) {
        for (std::size_t y = 0; y < height; ++y) {
            const bool bit = mask.get_unchecked(y * width + x);
            if (bit != current) {
                rle.counts.push_back(run);
                run = 0;
                current = bit;
            }
            ++run;
        }
    }
    rle.counts.push_back(run);
    return rle;
}

void validate_rle(const RleMask& rle) {
    if (rle.width < 1 || rle.height < 1) {
        throw MalformedRle("RLE size must be positive, got " + std::to_string(rle.height) + "x" +
                           std::to_string(rle.width));
    }
    const std::uint64_t expected = static_cast<std::uint64_t>(rle.width) * static_cast<std::uint64_t>(rle.height);
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < rle.counts.size(); ++i) {
        if (i > 0 && rle.counts[i] == 0) {
            throw MalformedRle("zero-length run at position " + std::to_string(i));
        }
        sum += rle.counts[i];
        if (sum > expected) {
            break;
        }
    }
    if (sum != expected) {
        throw MalformedRle("RLE counts sum to " + std::to_string(sum) + ", expected " + std::to_string(expected));
    }
}

BinaryMask decode_rle(const RleMask& rle) {
    validate_rle(rle);
    BinaryMask mask(rle.width, rle.height);
    const auto width = static_cast<std::size_t>(rle.width);
    const auto height = static_cast<std::size_t>(rle.height);

    std::size_t pos = 0; // column-major position
    bool value = false;
    for (const auto run : rle.counts) {
        if (value) {
            for (std::size_t k = pos; k < pos + run; ++k) {
                const std::size_t x = k / height;
                const std::size_t y = k % height;
                mask.set_unchecked(y * width + x);
            }
        }
        pos += run;
        value = !value;
    }
    return mask;
}

} // namespace promptplan
