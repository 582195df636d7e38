#pragma once

#include "lwinnn/bundle.hpp"
#include "lwinnn/tensor.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lwinnn {

enum class Interpolation { bilinear, nearest };

std::string_view to_string(Interpolation mode);
/// Throws ConfigError for anything but "bilinear" / "nearest".
Interpolation parse_interpolation(std::string_view text);

struct EmbeddingConfig {
    bool pooling = true;
    std::size_t pool_kernel = 3;
    std::size_t pool_stride = 1;
    Interpolation interpolation = Interpolation::bilinear;
    /// Bundle layers to use, strictly increasing.
    std::vector<std::size_t> layer_indices{0, 1, 2};

    /// Throws ConfigError on kernel/stride < 1 or an empty/unsorted layer list.
    void validate() const;

    /// Canonical text identifying every setting that changes embedding values.
    /// Two configs produce comparable embeddings iff their fingerprints match.
    std::string fingerprint() const;

    friend bool operator==(const EmbeddingConfig&, const EmbeddingConfig&) = default;
};

/// One image's patch embedding, (C, H1, W1).
struct EmbeddingTensor {
    std::string image_id;
    std::uint32_t original_height = 0;
    std::uint32_t original_width = 0;
    Tensor values;

    std::size_t channels() const { return values.dim(0); }
    std::size_t height() const { return values.dim(1); }
    std::size_t width() const { return values.dim(2); }
};

/// Valid (unpadded) average pooling of a (C, H, W) map:
/// H' = (H - kernel) / stride + 1, likewise for W.
/// Throws PreconditionError if H or W is smaller than the kernel.
Tensor avg_pool(const Tensor& map, std::size_t kernel, std::size_t stride);

/// Resizes a (C, h, w) or (h, w) map to (height, width) using half-pixel
/// centres: src = (dst + 0.5) * (in / out) - 0.5, clamped to the edge.
/// Nearest picks the source cell containing the half-pixel centre.
/// Resizing to the same size returns an exact copy.
Tensor resize_map(const Tensor& map, std::size_t height, std::size_t width, Interpolation mode);

/// Pools (if enabled) every selected layer, resizes each to the first selected
/// layer's post-pool size, and concatenates along channels in layer order.
/// Throws ConfigError when the config does not fit the bundle.
EmbeddingTensor build_embedding(const FeatureBundle& bundle, const EmbeddingConfig& cfg);

} // namespace lwinnn
