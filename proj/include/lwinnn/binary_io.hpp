#pragma once

// Little-endian primitives shared by the bundle, map and bank containers.

#include "lwinnn/tensor.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <span>
#include <string>
#include <string_view>

namespace lwinnn::binio {

using Magic = std::array<char, 4>;

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    void magic(const Magic& m);
    void u8(std::uint8_t v);
    void u16(std::uint16_t v);
    void u32(std::uint32_t v);
    /// u16 length prefix followed by the raw bytes.
    void short_string(std::string_view s);
    void floats(std::span<const float> values);

private:
    std::ostream& out_;
};

class Reader {
public:
    Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    /// Throws FormatError when the magic does not match.
    void expect_magic(const Magic& m);
    std::uint8_t u8();
    std::uint16_t u16();
    std::uint32_t u32();
    std::string short_string();
    /// Throws CorruptionError when fewer than out.size() floats remain.
    void floats(std::span<float> out);
    /// Throws CorruptionError if any byte remains.
    void expect_end();

    const std::string& source() const noexcept { return source_; }

private:
    void exact(void* dst, std::size_t n);

    std::istream& in_;
    std::string source_;
};

/// Writes through a sibling temp file and renames it over `path`, so readers
/// never observe a half-written file. Throws IoError with path context.
void write_atomically(const std::filesystem::path& path,
                      const std::function<void(std::ostream&)>& body);

/// Opens `path` for binary reading or throws IoError.
std::ifstream open_for_read(const std::filesystem::path& path);

} // namespace lwinnn::binio
