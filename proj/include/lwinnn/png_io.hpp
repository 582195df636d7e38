#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace lwinnn {

/// 8-bit image, row-major, `channels` interleaved samples per pixel (1 or 3).
struct Image8 {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::uint32_t channels = 1;
    std::vector<std::uint8_t> pixels;
};

/// Decodes any PNG, converting to 8-bit gray (channels = 1) or RGB (channels = 3).
Image8 read_png(const std::filesystem::path& path, std::uint32_t channels);
void write_png(const Image8& image, const std::filesystem::path& path);

/// Ground-truth mask: nonzero gray value = anomalous pixel.
struct BinaryMask {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::vector<std::uint8_t> values; // 0 or 1

    std::size_t positives() const;
};

BinaryMask read_mask(const std::filesystem::path& path);
/// Writes 0/255 gray PNG.
void write_mask(const BinaryMask& mask, const std::filesystem::path& path);

} // namespace lwinnn
