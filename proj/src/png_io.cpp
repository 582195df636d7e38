#include "lwinnn/png_io.hpp"

#include "lwinnn/binary_io.hpp"
#include "lwinnn/errors.hpp"

#include <algorithm>
#include <cstring>
#include <png.h>

namespace lwinnn {

Image8 read_png(const std::filesystem::path& path, std::uint32_t channels) {
    if (channels != 1 && channels != 3) {
        throw PreconditionError("read_png: channels must be 1 or 3");
    }
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str())) {
        throw IoError("cannot decode PNG " + path.string() + ": " + img.message);
    }
    img.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    Image8 out;
    out.height = img.height;
    out.width = img.width;
    out.channels = channels;
    out.pixels.resize(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
        png_image_free(&img);
        throw IoError("cannot decode PNG " + path.string() + ": " + img.message);
    }
    return out;
}

void write_png(const Image8& image, const std::filesystem::path& path) {
    if (image.channels != 1 && image.channels != 3) {
        throw PreconditionError("write_png: channels must be 1 or 3");
    }
    if (image.pixels.size() != std::size_t{image.height} * image.width * image.channels) {
        throw ShapeError("write_png: pixel buffer does not match image size");
    }
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    img.width = image.width;
    img.height = image.height;
    img.format = image.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    binio::write_atomically(path, [&](std::ostream& out) {
        png_alloc_size_t size = 0;
        if (!png_image_write_to_memory(&img, nullptr, &size, 0, image.pixels.data(), 0, nullptr)) {
            throw IoError("cannot encode PNG " + path.string() + ": " + img.message);
        }
        std::vector<char> buf(size);
        if (!png_image_write_to_memory(&img, buf.data(), &size, 0, image.pixels.data(), 0, nullptr)) {
            throw IoError("cannot encode PNG " + path.string() + ": " + img.message);
        }
        out.write(buf.data(), static_cast<std::streamsize>(size));
    });
}

std::size_t BinaryMask::positives() const {
    return static_cast<std::size_t>(std::count(values.begin(), values.end(), std::uint8_t{1}));
}

BinaryMask read_mask(const std::filesystem::path& path) {
    Image8 gray = read_png(path, 1);
    BinaryMask m;
    m.height = gray.height;
    m.width = gray.width;
    m.values.resize(gray.pixels.size());
    std::transform(gray.pixels.begin(), gray.pixels.end(), m.values.begin(),
                   [](std::uint8_t v) { return std::uint8_t{v != 0}; });
    return m;
}

void write_mask(const BinaryMask& mask, const std::filesystem::path& path) {
    Image8 gray{mask.height, mask.width, 1, {}};
    gray.pixels.resize(mask.values.size());
    std::transform(mask.values.begin(), mask.values.end(), gray.pixels.begin(),
                   [](std::uint8_t v) { return static_cast<std::uint8_t>(v ? 255 : 0); });
    write_png(gray, path);
}

} // namespace lwinnn
