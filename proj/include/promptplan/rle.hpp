#pragma once

#include "promptplan/mask.hpp"

#include <cstdint>
#include <vector>

namespace promptplan {

/// Uncompressed COCO run-length encoding.
///
/// Pixels are traversed column-major (down each column, then to the next
/// column). Runs alternate unset/set starting with an unset run, so a mask
/// whose first pixel is set begins with a zero count.
struct RleMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint64_t> counts;

    friend bool operator==(const RleMask&, const RleMask&) = default;
};

RleMask encode_rle(const BinaryMask& mask);

// Throws MalformedRle if the counts do not describe a width x height mask.
BinaryMask decode_rle(const RleMask& rle);

// Checks the RleMask invariants without decoding. Throws MalformedRle.
void validate_rle(const RleMask& rle);

} // namespace promptplan
