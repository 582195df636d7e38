#pragma once

#include "lwinnn/window_search.hpp"

#include <filesystem>
#include <string>

namespace lwinnn {

inline constexpr std::uint32_t kBankVersion = 1;

// Bank file, little-endian: magic "LWNK", version u32, category (u16 length +
// UTF-8), embedding fingerprint (u16 length + UTF-8), N u32, C u32, H u32,
// W u32, then N*C*H*W float32 values row-major.

void write_bank(const EmbeddingBank& bank, const std::filesystem::path& path);
EmbeddingBank read_bank(const std::filesystem::path& path);

/// Reads only the fingerprint field.
std::string read_bank_fingerprint(const std::filesystem::path& path);

} // namespace lwinnn
