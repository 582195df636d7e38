#include "lwinnn/embedding.hpp"

#include "lwinnn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lwinnn {

namespace {

struct Tap {
    std::size_t lo = 0;
    std::size_t hi = 0;
    double frac = 0.0;
};

// Half-pixel-centre source taps for each destination index along one axis.
std::vector<Tap> bilinear_taps(std::size_t in, std::size_t out) {
    std::vector<Tap> taps(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t d = 0; d < out; ++d) {
        double src = (static_cast<double>(d) + 0.5) * scale - 0.5;
        src = std::max(src, 0.0);
        auto lo = static_cast<std::size_t>(std::floor(src));
        lo = std::min(lo, in - 1);
        taps[d] = {lo, std::min(lo + 1, in - 1), src - static_cast<double>(lo)};
    }
    return taps;
}

std::vector<std::size_t> nearest_taps(std::size_t in, std::size_t out) {
    std::vector<std::size_t> idx(out);
    for (std::size_t d = 0; d < out; ++d) {
        // floor((d + 0.5) * in / out) in exact integer arithmetic
        idx[d] = std::min((2 * d + 1) * in / (2 * out), in - 1);
    }
    return idx;
}

} // namespace

std::string_view to_string(Interpolation mode) {
    return mode == Interpolation::bilinear ? "bilinear" : "nearest";
}

Interpolation parse_interpolation(std::string_view text) {
    if (text == "bilinear") {
        return Interpolation::bilinear;
    }
    if (text == "nearest") {
        return Interpolation::nearest;
    }
    throw ConfigError("interpolation must be bilinear or nearest, got \"" + std::string(text) + "\"");
}

void EmbeddingConfig::validate() const {
    if (pool_kernel < 1 || pool_stride < 1) {
        throw ConfigError("pool_kernel and pool_stride must be >= 1");
    }
    if (layer_indices.empty()) {
        throw ConfigError("layer list must not be empty");
    }
    if (!std::is_sorted(layer_indices.begin(), layer_indices.end()) ||
        std::adjacent_find(layer_indices.begin(), layer_indices.end()) != layer_indices.end()) {
        throw ConfigError("layer indices must be strictly increasing");
    }
}

std::string EmbeddingConfig::fingerprint() const {
    std::ostringstream os;
    os << "embedding/v1;pooling=" << (pooling ? 1 : 0);
    if (pooling) {
        os << ";pool_kernel=" << pool_kernel << ";pool_stride=" << pool_stride;
    }
    os << ";interpolation=" << to_string(interpolation) << ";layers=";
    for (std::size_t i = 0; i < layer_indices.size(); ++i) {
        os << (i ? "," : "") << layer_indices[i];
    }
    return os.str();
}

Tensor avg_pool(const Tensor& map, std::size_t kernel, std::size_t stride) {
    if (map.rank() != 3) {
        throw PreconditionError("avg_pool expects a (C, H, W) map, got " + format_dims(map.dims()));
    }
    if (kernel < 1 || stride < 1) {
        throw PreconditionError("avg_pool: kernel and stride must be >= 1");
    }
    const std::size_t c = map.dim(0), h = map.dim(1), w = map.dim(2);
    if (h < kernel || w < kernel) {
        throw PreconditionError("avg_pool: spatial size " + std::to_string(h) + "x" + std::to_string(w) +
                                " is smaller than kernel " + std::to_string(kernel));
    }
    const std::size_t oh = (h - kernel) / stride + 1;
    const std::size_t ow = (w - kernel) / stride + 1;
    const auto area = static_cast<double>(kernel * kernel);
    Tensor out({c, oh, ow});
    const auto src = map.data();
    auto dst = out.data();
    for (std::size_t ch = 0; ch < c; ++ch) {
        const float* plane = src.data() + ch * h * w;
        float* oplane = dst.data() + ch * oh * ow;
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                double sum = 0.0;
                for (std::size_t ky = 0; ky < kernel; ++ky) {
                    const float* row = plane + (y * stride + ky) * w + x * stride;
                    for (std::size_t kx = 0; kx < kernel; ++kx) {
                        sum += row[kx];
                    }
                }
                // Double sum of a small window is exact, so a constant window divides back to its value.
                oplane[y * ow + x] = static_cast<float>(sum / area);
            }
        }
    }
    return out;
}

Tensor resize_map(const Tensor& map, std::size_t height, std::size_t width, Interpolation mode) {
    if (map.rank() != 2 && map.rank() != 3) {
        throw PreconditionError("resize_map expects a (C, h, w) or (h, w) map, got " + format_dims(map.dims()));
    }
    if (height < 1 || width < 1) {
        throw PreconditionError("resize_map: target size must be positive");
    }
    const bool planar = map.rank() == 2;
    const std::size_t c = planar ? 1 : map.dim(0);
    const std::size_t h = map.dim(planar ? 0 : 1);
    const std::size_t w = map.dim(planar ? 1 : 2);
    if (h == height && w == width) {
        return map;
    }

    std::vector<std::size_t> out_dims = planar ? std::vector<std::size_t>{height, width}
                                               : std::vector<std::size_t>{c, height, width};
    Tensor out(out_dims);
    const auto src = map.data();
    auto dst = out.data();

    if (mode == Interpolation::nearest) {
        const auto ys = nearest_taps(h, height);
        const auto xs = nearest_taps(w, width);
        for (std::size_t ch = 0; ch < c; ++ch) {
            const float* plane = src.data() + ch * h * w;
            float* oplane = dst.data() + ch * height * width;
            for (std::size_t y = 0; y < height; ++y) {
                for (std::size_t x = 0; x < width; ++x) {
                    oplane[y * width + x] = plane[ys[y] * w + xs[x]];
                }
            }
        }
        return out;
    }

    const auto ys = bilinear_taps(h, height);
    const auto xs = bilinear_taps(w, width);
    for (std::size_t ch = 0; ch < c; ++ch) {
        const float* plane = src.data() + ch * h * w;
        float* oplane = dst.data() + ch * height * width;
        for (std::size_t y = 0; y < height; ++y) {
            const Tap& ty = ys[y];
            const float* r0 = plane + ty.lo * w;
            const float* r1 = plane + ty.hi * w;
            for (std::size_t x = 0; x < width; ++x) {
                const Tap& tx = xs[x];
                // Lerp form: equal neighbours reproduce their value exactly.
                const double top = r0[tx.lo] + tx.frac * (double{r0[tx.hi]} - r0[tx.lo]);
                const double bottom = r1[tx.lo] + tx.frac * (double{r1[tx.hi]} - r1[tx.lo]);
                oplane[y * width + x] = static_cast<float>(top + ty.frac * (bottom - top));
            }
        }
    }
    return out;
}

EmbeddingTensor build_embedding(const FeatureBundle& bundle, const EmbeddingConfig& cfg) {
    cfg.validate();
    const std::string ctx = "bundle \"" + bundle.image_id + "\"";
    if (cfg.layer_indices.back() >= bundle.layers.size()) {
        throw ConfigError(ctx + " has " + std::to_string(bundle.layers.size()) + " layers but config selects layer " +
                          std::to_string(cfg.layer_indices.back()));
    }

    std::vector<Tensor> parts;
    parts.reserve(cfg.layer_indices.size());
    std::size_t total_channels = 0;
    for (std::size_t li : cfg.layer_indices) {
        const Tensor& layer = bundle.layers[li];
        if (layer.rank() != 3) {
            throw ConfigError(ctx + ": layer " + std::to_string(li) + " is not (C, H, W)");
        }
        Tensor t = layer;
        if (cfg.pooling) {
            if (layer.dim(1) < cfg.pool_kernel || layer.dim(2) < cfg.pool_kernel) {
                throw ConfigError(ctx + ": layer " + std::to_string(li) + " spatial size " +
                                  std::to_string(layer.dim(1)) + "x" + std::to_string(layer.dim(2)) +
                                  " is smaller than pool_kernel " + std::to_string(cfg.pool_kernel));
            }
            t = avg_pool(layer, cfg.pool_kernel, cfg.pool_stride);
        }
        if (!parts.empty()) {
            t = resize_map(t, parts.front().dim(1), parts.front().dim(2), cfg.interpolation);
        }
        total_channels += t.dim(0);
        parts.push_back(std::move(t));
    }

    const std::size_t h1 = parts.front().dim(1);
    const std::size_t w1 = parts.front().dim(2);
    std::vector<float> data;
    data.reserve(total_channels * h1 * w1);
    for (const Tensor& p : parts) {
        data.insert(data.end(), p.values().begin(), p.values().end());
    }
    return {bundle.image_id, bundle.original_height, bundle.original_width,
            Tensor({total_channels, h1, w1}, std::move(data))};
}

} // namespace lwinnn
