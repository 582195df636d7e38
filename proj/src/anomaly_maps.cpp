#include "lwinnn/anomaly_maps.hpp"

#include "lwinnn/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace lwinnn {

namespace {

// Symmetric reflection: ... 2 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
    const auto period = static_cast<std::ptrdiff_t>(2 * n);
    std::ptrdiff_t m = i % period;
    if (m < 0) {
        m += period;
    }
    return m < static_cast<std::ptrdiff_t>(n) ? static_cast<std::size_t>(m)
                                              : static_cast<std::size_t>(period - 1 - m);
}

void blur_lines(const float* src, float* dst, std::size_t lines, std::size_t length, std::size_t line_stride,
                std::size_t elem_stride, const std::vector<double>& kernel) {
    const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
    std::vector<double> line(length);
    for (std::size_t l = 0; l < lines; ++l) {
        for (std::size_t i = 0; i < length; ++i) {
            line[i] = src[l * line_stride + i * elem_stride];
        }
        for (std::size_t i = 0; i < length; ++i) {
            double acc = 0.0;
            for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
                acc += kernel[static_cast<std::size_t>(k + radius)] *
                       line[reflect(static_cast<std::ptrdiff_t>(i) + k, length)];
            }
            dst[l * line_stride + i * elem_stride] = static_cast<float>(acc);
        }
    }
}

std::array<double, 3> jet(double v) {
    auto clamp01 = [](double x) { return std::clamp(x, 0.0, 1.0); };
    return {clamp01(1.5 - std::abs(4.0 * v - 3.0)), clamp01(1.5 - std::abs(4.0 * v - 2.0)),
            clamp01(1.5 - std::abs(4.0 * v - 1.0))};
}

} // namespace

std::string_view to_string(Aggregation aggregation) {
    return aggregation == Aggregation::max_patch ? "max_patch" : "knn_image";
}

Aggregation parse_aggregation(std::string_view text) {
    if (text == "max_patch") {
        return Aggregation::max_patch;
    }
    if (text == "knn_image") {
        return Aggregation::knn_image;
    }
    throw ConfigError("aggregation must be max_patch or knn_image, got \"" + std::string(text) + "\"");
}

ImageScore image_score_max(const PatchScoreMap& map) {
    const auto v = map.scores.data();
    if (v.empty()) {
        throw PreconditionError("image_score_max: empty score map");
    }
    return {map.image_id, *std::max_element(v.begin(), v.end()), Aggregation::max_patch};
}

ImageScore image_score_knn(const EmbeddingTensor& test, const EmbeddingBank& bank, std::size_t k) {
    if (bank.empty()) {
        throw PreconditionError("embedding bank is empty");
    }
    if (k < 1 || k > bank.size()) {
        throw PreconditionError("K must be in [1, " + std::to_string(bank.size()) + "], got " + std::to_string(k));
    }
    const std::size_t len = test.values.size();
    if (len * bank.size() != bank.tensor().size()) {
        throw ShapeError("test embedding \"" + test.image_id + "\" does not match the bank shape");
    }
    const auto q = test.values.data();
    const auto all = bank.tensor().data();
    std::vector<double> dist(bank.size());
    for (std::size_t m = 0; m < bank.size(); ++m) {
        const float* x = all.data() + m * len;
        double acc = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
            const double d = double{q[i]} - double{x[i]};
            acc += d * d;
        }
        dist[m] = std::sqrt(acc);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    const double mean = std::accumulate(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), 0.0) /
                        static_cast<double>(k);
    return {test.image_id, static_cast<float>(mean), Aggregation::knn_image};
}

PixelAnomalyMap upsample_scores(const PatchScoreMap& map, std::size_t height, std::size_t width) {
    return {map.image_id, resize_map(map.scores, height, width, Interpolation::bilinear)};
}

std::vector<double> gaussian_kernel(double sigma) {
    if (!(sigma > 0.0)) {
        throw PreconditionError("gaussian blur sigma must be > 0");
    }
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
        const double x = static_cast<double>(i);
        const double v = std::exp(-(x * x) / (2.0 * sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (double& v : k) {
        v /= sum;
    }
    return k;
}

PixelAnomalyMap gaussian_blur(const PixelAnomalyMap& map, double sigma) {
    if (map.pixels.rank() != 2) {
        throw PreconditionError("gaussian_blur expects a 2D map");
    }
    const auto kernel = gaussian_kernel(sigma);
    const std::size_t h = map.pixels.dim(0);
    const std::size_t w = map.pixels.dim(1);
    Tensor tmp({h, w});
    Tensor out({h, w});
    blur_lines(map.pixels.data().data(), tmp.data().data(), h, w, w, 1, kernel);
    blur_lines(tmp.data().data(), out.data().data(), w, h, 1, w, kernel);
    for (float& v : out.data()) {
        v = std::max(v, 0.0f);
    }
    return {map.image_id, std::move(out)};
}

Image8 render_heatmap(const Tensor& map, const Image8* background, double alpha) {
    if (map.rank() != 2) {
        throw PreconditionError("render_heatmap expects a 2D map");
    }
    const std::size_t h = map.dim(0);
    const std::size_t w = map.dim(1);
    if (background && (background->height != h || background->width != w)) {
        throw ShapeError("background image is " + std::to_string(background->height) + "x" +
                         std::to_string(background->width) + " but the map is " + std::to_string(h) + "x" +
                         std::to_string(w));
    }
    const auto v = map.data();
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double lo = *lo_it;
    const double range = double{*hi_it} - lo;

    Image8 out{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(w), 3, {}};
    out.pixels.resize(h * w * 3);
    for (std::size_t p = 0; p < h * w; ++p) {
        const double t = range > 0.0 ? (v[p] - lo) / range : 0.0;
        const auto rgb = jet(t);
        for (std::size_t ch = 0; ch < 3; ++ch) {
            double value = 255.0 * rgb[ch];
            if (background) {
                const double under = background->channels == 1 ? background->pixels[p]
                                                                : background->pixels[p * background->channels + ch];
                value = alpha * value + (1.0 - alpha) * under;
            }
            out.pixels[p * 3 + ch] = static_cast<std::uint8_t>(std::lround(std::clamp(value, 0.0, 255.0)));
        }
    }
    return out;
}

} // namespace lwinnn
