#pragma once

#include "lwinnn/png_io.hpp"
#include "lwinnn/window_search.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace lwinnn {

enum class Aggregation { max_patch, knn_image };

std::string_view to_string(Aggregation aggregation);
Aggregation parse_aggregation(std::string_view text);

/// Full-resolution anomaly scores, (H0, W0).
struct PixelAnomalyMap {
    std::string image_id;
    Tensor pixels;
};

struct ImageScore {
    std::string image_id;
    float score = 0.0f;
    Aggregation aggregation = Aggregation::max_patch;
};

/// Largest patch score.
ImageScore image_score_max(const PatchScoreMap& map);

/// Mean whole-embedding L2 distance to the K nearest bank members.
/// Throws PreconditionError unless 1 <= K <= bank.size().
ImageScore image_score_knn(const EmbeddingTensor& test, const EmbeddingBank& bank, std::size_t k);

/// Bilinear upsampling with the same half-pixel convention as resize_map.
PixelAnomalyMap upsample_scores(const PatchScoreMap& map, std::size_t height, std::size_t width);

/// Normalised 1D Gaussian taps for offsets -r..r, r = ceil(4 * sigma).
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian blur with symmetric (edge-repeating) reflection at the
/// borders. The kernel sums to one, so constants are preserved, and the
/// reflection makes the operator mean-preserving as well.
PixelAnomalyMap gaussian_blur(const PixelAnomalyMap& map, double sigma);

/// Min-max normalised jet colour map of a 2D map. When `background` is given
/// it must match the map size and is alpha-blended under the colours.
Image8 render_heatmap(const Tensor& map, const Image8* background = nullptr, double alpha = 0.5);

} // namespace lwinnn
