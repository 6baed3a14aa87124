#include "promptplan/png.hpp"

#include <png.h>

#include <stdexcept>

namespace promptplan {

std::string encode_png_rgb(int width, int height, std::span<const std::uint8_t> rgb) {
    if (width <= 0 || height <= 0 ||
        rgb.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3) {
        throw std::invalid_argument("encode_png_rgb: pixel buffer does not match dimensions");
    }
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = PNG_FORMAT_RGB;

    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, rgb.data(), 0, nullptr)) {
        throw std::runtime_error(std::string("png encode failed: ") + image.message);
    }
    std::string out(size, '\0');
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, rgb.data(), 0, nullptr)) {
        throw std::runtime_error(std::string("png encode failed: ") + image.message);
    }
    out.resize(size);
    return out;
}

} // namespace promptplan
