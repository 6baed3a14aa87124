#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace promptplan {

// Encodes 8-bit RGB pixels (row-major, 3 bytes per pixel) as a PNG file
// image. Compression settings are fixed, so output is byte-deterministic.
std::string encode_png_rgb(int width, int height, std::span<const std::uint8_t> rgb);

} // namespace promptplan
