#include "lwinnn/binary_io.hpp"

#include "lwinnn/errors.hpp"

#include <atomic>
#include <bit>
#include <cstdio>
#include <system_error>
#include <thread>
#include <unistd.h>
#include <vector>

namespace lwinnn::binio {

namespace {

constexpr std::size_t kFloatChunk = 1 << 16;

std::string magic_text(const Magic& m) { return std::string(m.data(), m.size()); }

} // namespace

void Writer::magic(const Magic& m) { out_.write(m.data(), static_cast<std::streamsize>(m.size())); }

void Writer::u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }

void Writer::u16(std::uint16_t v) {
    const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
    out_.write(b, 2);
}

void Writer::u32(std::uint32_t v) {
    const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                       static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out_.write(b, 4);
}

void Writer::short_string(std::string_view s) {
    if (s.size() > 0xffff) {
        throw ValidationError("string field longer than 65535 bytes");
    }
    u16(static_cast<std::uint16_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void Writer::floats(std::span<const float> values) {
    std::vector<char> buf;
    buf.reserve(std::min(values.size(), kFloatChunk) * 4);
    for (std::size_t start = 0; start < values.size(); start += kFloatChunk) {
        const std::size_t end = std::min(values.size(), start + kFloatChunk);
        buf.clear();
        for (std::size_t i = start; i < end; ++i) {
            const auto bits = std::bit_cast<std::uint32_t>(values[i]);
            buf.push_back(static_cast<char>(bits & 0xff));
            buf.push_back(static_cast<char>((bits >> 8) & 0xff));
            buf.push_back(static_cast<char>((bits >> 16) & 0xff));
            buf.push_back(static_cast<char>((bits >> 24) & 0xff));
        }
        out_.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
}

void Reader::exact(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
        throw FormatError(source_ + ": truncated header");
    }
}

void Reader::expect_magic(const Magic& m) {
    Magic got{};
    in_.read(got.data(), 4);
    if (in_.gcount() != 4 || got != m) {
        throw FormatError(source_ + ": bad magic, expected \"" + magic_text(m) + "\"");
    }
}

std::uint8_t Reader::u8() {
    unsigned char b = 0;
    exact(&b, 1);
    return b;
}

std::uint16_t Reader::u16() {
    unsigned char b[2];
    exact(b, 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t Reader::u32() {
    unsigned char b[4];
    exact(b, 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::string Reader::short_string() {
    const std::uint16_t n = u16();
    std::string s(n, '\0');
    if (n) {
        exact(s.data(), n);
    }
    return s;
}

void Reader::floats(std::span<float> out) {
    std::vector<unsigned char> buf;
    for (std::size_t start = 0; start < out.size(); start += kFloatChunk) {
        const std::size_t count = std::min(out.size() - start, kFloatChunk);
        buf.resize(count * 4);
        in_.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (static_cast<std::size_t>(in_.gcount()) != buf.size()) {
            const std::size_t got = start + static_cast<std::size_t>(in_.gcount()) / 4;
            throw CorruptionError(source_ + ": payload holds " + std::to_string(got) +
                                  " floats, dims declare " + std::to_string(out.size()));
        }
        for (std::size_t i = 0; i < count; ++i) {
            const unsigned char* b = &buf[i * 4];
            const std::uint32_t bits = static_cast<std::uint32_t>(b[0]) |
                                       (static_cast<std::uint32_t>(b[1]) << 8) |
                                       (static_cast<std::uint32_t>(b[2]) << 16) |
                                       (static_cast<std::uint32_t>(b[3]) << 24);
            out[start + i] = std::bit_cast<float>(bits);
        }
    }
}

void Reader::expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) {
        throw CorruptionError(source_ + ": trailing bytes after declared payload");
    }
}

std::ifstream open_for_read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string() + " for reading");
    }
    return in;
}

void write_atomically(const std::filesystem::path& path,
                      const std::function<void(std::ostream&)>& body) {
    static std::atomic<unsigned> counter{0};
    auto tmp = path;
    tmp += ".tmp-" + std::to_string(::getpid()) + "-" +
           std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()) % 100000) + "-" +
           std::to_string(counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot open " + tmp.string() + " for writing (target " + path.string() + ")");
        }
        try {
            body(out);
        } catch (...) {
            out.close();
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw;
        }
        out.flush();
        if (!out) {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw IoError("write failed for " + path.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::error_code ignored;
        std::filesystem::remove(tmp, ignored);
        throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

} // namespace lwinnn::binio
