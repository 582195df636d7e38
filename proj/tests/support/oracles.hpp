#pragma once

// Brute-force reference implementations used only by tests.

#include "lwinnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <vector>

namespace oracle {

/// min over m, |dh| <= radius, |dw| <= radius (in bounds) of the L2 distance,
/// evaluated in double straight from (C, H, W) / (N, C, H, W) layouts.
/// radius < 0 means "every location" (global search).
inline std::vector<double> window_min_l2(const lwinnn::Tensor& test, const lwinnn::Tensor& bank, long radius) {
    const std::size_t n = bank.dim(0), c = bank.dim(1), h = bank.dim(2), w = bank.dim(3);
    std::vector<double> out(h * w);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t m = 0; m < n; ++m) {
                for (long a = 0; a < static_cast<long>(h); ++a) {
                    for (long b = 0; b < static_cast<long>(w); ++b) {
                        if (radius >= 0 && (std::labs(a - static_cast<long>(y)) > radius ||
                                            std::labs(b - static_cast<long>(x)) > radius)) {
                            continue;
                        }
                        double acc = 0.0;
                        for (std::size_t ch = 0; ch < c; ++ch) {
                            const double d = double{test[(ch * h + y) * w + x]} -
                                             double{bank[((m * c + ch) * h + static_cast<std::size_t>(a)) * w +
                                                         static_cast<std::size_t>(b)]};
                            acc += d * d;
                        }
                        best = std::min(best, std::sqrt(acc));
                    }
                }
            }
            out[y * w + x] = best;
        }
    }
    return out;
}

/// Half-pixel-centre bilinear value at destination (y, x) of an (in_h, in_w)
/// plane resized to (out_h, out_w), written out from the formula.
inline double bilinear_at(const std::vector<double>& plane, std::size_t in_h, std::size_t in_w, std::size_t out_h,
                          std::size_t out_w, std::size_t y, std::size_t x) {
    auto coord = [](std::size_t d, std::size_t in, std::size_t out) {
        double s = (static_cast<double>(d) + 0.5) * static_cast<double>(in) / static_cast<double>(out) - 0.5;
        s = std::clamp(s, 0.0, static_cast<double>(in - 1));
        return s;
    };
    const double sy = coord(y, in_h, out_h);
    const double sx = coord(x, in_w, out_w);
    const auto y0 = static_cast<std::size_t>(std::floor(sy));
    const auto x0 = static_cast<std::size_t>(std::floor(sx));
    const std::size_t y1 = std::min(y0 + 1, in_h - 1);
    const std::size_t x1 = std::min(x0 + 1, in_w - 1);
    const double fy = sy - static_cast<double>(y0);
    const double fx = sx - static_cast<double>(x0);
    const double v00 = plane[y0 * in_w + x0], v01 = plane[y0 * in_w + x1];
    const double v10 = plane[y1 * in_w + x0], v11 = plane[y1 * in_w + x1];
    return (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
}

/// Peak-normalised 2D truncated Gaussian evaluated directly: value at (dy, dx)
/// of exp(-(dy^2 + dx^2) / 2s^2) / sum over the (2r+1)^2 square.
inline double gaussian_2d(double sigma, long dy, long dx) {
    const long r = static_cast<long>(std::ceil(4.0 * sigma));
    if (std::labs(dy) > r || std::labs(dx) > r) {
        return 0.0;
    }
    double total = 0.0;
    for (long i = -r; i <= r; ++i) {
        for (long j = -r; j <= r; ++j) {
            total += std::exp(-static_cast<double>(i * i + j * j) / (2 * sigma * sigma));
        }
    }
    return std::exp(-static_cast<double>(dy * dy + dx * dx) / (2 * sigma * sigma)) / total;
}

/// Pairwise-counting AUROC: (#(pos > neg) + 0.5 #(pos == neg)) / (#pos #neg).
inline double auroc_pairwise(const std::vector<double>& scores, const std::vector<bool>& anomalous) {
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!anomalous[i]) {
            continue;
        }
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (anomalous[j]) {
                continue;
            }
            pairs += 1.0;
            if (scores[i] > scores[j]) {
                wins += 1.0;
            } else if (scores[i] == scores[j]) {
                wins += 0.5;
            }
        }
    }
    return wins / pairs;
}

/// Recursive 8-connected flood fill; labels in row-major first-encounter order.
inline void flood(const std::vector<std::uint8_t>& mask, std::vector<int>& labels, long h, long w, long y, long x,
                  int label) {
    if (y < 0 || x < 0 || y >= h || x >= w) {
        return;
    }
    const auto p = static_cast<std::size_t>(y * w + x);
    if (!mask[p] || labels[p]) {
        return;
    }
    labels[p] = label;
    for (long dy = -1; dy <= 1; ++dy) {
        for (long dx = -1; dx <= 1; ++dx) {
            if (dy || dx) {
                flood(mask, labels, h, w, y + dy, x + dx, label);
            }
        }
    }
}

inline std::vector<int> flood_fill_labels(const std::vector<std::uint8_t>& mask, long h, long w, int& count) {
    std::vector<int> labels(mask.size(), 0);
    count = 0;
    for (long y = 0; y < h; ++y) {
        for (long x = 0; x < w; ++x) {
            const auto p = static_cast<std::size_t>(y * w + x);
            if (mask[p] && !labels[p]) {
                flood(mask, labels, h, w, y, x, ++count);
            }
        }
    }
    return labels;
}

struct OracleImage {
    std::vector<double> scores;
    std::vector<std::uint8_t> mask; // empty = all negative
    long h = 0, w = 0;
};

/// AUPRO by exhaustive threshold enumeration: for each distinct score t
/// (descending), predicted = score >= t; PRO and FPR recounted from scratch.
/// Trapezoid to cap with linear interpolation at cap, divided by cap.
inline double aupro_exhaustive(const std::vector<OracleImage>& images, double cap) {
    std::set<double, std::greater<>> thresholds;
    for (const auto& img : images) {
        thresholds.insert(img.scores.begin(), img.scores.end());
    }
    struct Region {
        std::size_t image;
        std::vector<std::size_t> pixels;
    };
    std::vector<Region> regions;
    std::size_t negatives = 0;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const auto& img = images[i];
        if (img.mask.empty()) {
            negatives += img.scores.size();
            continue;
        }
        int count = 0;
        const auto labels = flood_fill_labels(img.mask, img.h, img.w, count);
        for (int r = 1; r <= count; ++r) {
            Region reg{i, {}};
            for (std::size_t p = 0; p < labels.size(); ++p) {
                if (labels[p] == r) {
                    reg.pixels.push_back(p);
                }
            }
            regions.push_back(std::move(reg));
        }
        negatives += static_cast<std::size_t>(std::count(img.mask.begin(), img.mask.end(), 0));
    }

    std::vector<std::pair<double, double>> curve{{0.0, 0.0}};
    for (double t : thresholds) {
        std::size_t fp = 0;
        for (const auto& img : images) {
            for (std::size_t p = 0; p < img.scores.size(); ++p) {
                const bool negative = img.mask.empty() || !img.mask[p];
                if (negative && img.scores[p] >= t) {
                    ++fp;
                }
            }
        }
        double pro = 0.0;
        for (const auto& reg : regions) {
            std::size_t hit = 0;
            for (std::size_t p : reg.pixels) {
                hit += images[reg.image].scores[p] >= t ? 1 : 0;
            }
            pro += static_cast<double>(hit) / static_cast<double>(reg.pixels.size());
        }
        curve.emplace_back(static_cast<double>(fp) / static_cast<double>(negatives),
                           pro / static_cast<double>(regions.size()));
    }

    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        auto [x0, y0] = curve[i - 1];
        auto [x1, y1] = curve[i];
        if (x0 >= cap) {
            break;
        }
        if (x1 > cap) {
            const double yc = y0 + (y1 - y0) * (cap - x0) / (x1 - x0);
            area += (cap - x0) * (y0 + yc) / 2;
            break;
        }
        area += (x1 - x0) * (y0 + y1) / 2;
    }
    return area / cap;
}

} // namespace oracle
