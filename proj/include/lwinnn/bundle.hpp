#pragma once

#include "lwinnn/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lwinnn {

enum class Label : std::uint8_t { normal = 0, anomalous = 1, unknown = 2 };

std::string_view to_string(Label label);
/// Accepts "normal", "anomalous", "unknown"; throws ValidationError otherwise.
Label parse_label(std::string_view text);

/// Raw per-layer feature maps for one image, as exported by the extractor.
///
/// Layers are (C_i, H_i, W_i), shallowest first, with H_i and W_i
/// non-increasing in i. `mask_path` is manifest-side metadata and is not
/// stored in the bundle file.
struct FeatureBundle {
    std::string image_id;
    std::uint32_t original_height = 0;
    std::uint32_t original_width = 0;
    std::vector<Tensor> layers;
    Label label = Label::unknown;
    std::optional<std::string> mask_path;

    friend bool operator==(const FeatureBundle&, const FeatureBundle&) = default;
};

/// Header fields of a bundle file, without the payload.
struct BundleHeader {
    std::string image_id;
    std::uint32_t original_height = 0;
    std::uint32_t original_width = 0;
    Label label = Label::unknown;
    std::vector<std::vector<std::size_t>> layer_dims;
};

inline constexpr std::uint32_t kBundleVersion = 1;

/// Throws ValidationError naming the first violated invariant.
void validate_bundle(const FeatureBundle& bundle);

FeatureBundle read_bundle(const std::filesystem::path& path);
BundleHeader read_bundle_header(const std::filesystem::path& path);
void write_bundle(const FeatureBundle& bundle, const std::filesystem::path& path);

/// A single-image float container ("LWNM") holding one or more 2D maps.
/// Shares the bundle layout; each map is stored as a (1, H, W) layer.
struct MapFile {
    std::string image_id;
    std::uint32_t original_height = 0;
    std::uint32_t original_width = 0;
    Label label = Label::unknown;
    std::vector<Tensor> maps; // rank-2 tensors

    friend bool operator==(const MapFile&, const MapFile&) = default;
};

MapFile read_map_file(const std::filesystem::path& path);
void write_map_file(const MapFile& file, const std::filesystem::path& path);

} // namespace lwinnn
