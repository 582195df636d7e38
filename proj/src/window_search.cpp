#include "lwinnn/window_search.hpp"

#include "lwinnn/errors.hpp"
#include "lwinnn/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lwinnn {

namespace {

constexpr float kInf = std::numeric_limits<float>::infinity();

struct Radius {
    std::ptrdiff_t rows = 0;
    std::ptrdiff_t cols = 0;
};

Radius search_radius(const SearchConfig& cfg, std::size_t height, std::size_t width) {
    switch (cfg.mode) {
    case SearchMode::per_location:
        return {0, 0};
    case SearchMode::global:
        return {static_cast<std::ptrdiff_t>(height) - 1, static_cast<std::ptrdiff_t>(width) - 1};
    case SearchMode::local_window:
        break;
    }
    const auto r = static_cast<std::ptrdiff_t>(cfg.window_size / 2);
    return {r, r};
}

// (C, H, W) -> (H, W, C) so each patch vector is contiguous.
std::vector<float> to_channel_last(std::span<const float> chw, std::size_t c, std::size_t h, std::size_t w) {
    std::vector<float> out(c * h * w);
    const std::size_t plane = h * w;
    for (std::size_t ch = 0; ch < c; ++ch) {
        const float* src = chw.data() + ch * plane;
        for (std::size_t p = 0; p < plane; ++p) {
            out[p * c + ch] = src[p];
        }
    }
    return out;
}

void check_compatible(const EmbeddingTensor& test, const EmbeddingBank& bank) {
    if (bank.empty()) {
        throw PreconditionError("embedding bank is empty");
    }
    if (test.values.rank() != 3 || test.channels() != bank.channels() || test.height() != bank.height() ||
        test.width() != bank.width()) {
        throw ShapeError("test embedding \"" + test.image_id + "\" has shape " + format_dims(test.values.dims()) +
                         " but the bank holds " +
                         format_dims(std::vector<std::size_t>{bank.channels(), bank.height(), bank.width()}));
    }
}

} // namespace

std::string_view to_string(SearchMode mode) {
    switch (mode) {
    case SearchMode::local_window:
        return "local_window";
    case SearchMode::per_location:
        return "per_location";
    case SearchMode::global:
        return "global";
    }
    return "local_window";
}

SearchMode parse_search_mode(std::string_view text) {
    if (text == "local_window") {
        return SearchMode::local_window;
    }
    if (text == "per_location") {
        return SearchMode::per_location;
    }
    if (text == "global") {
        return SearchMode::global;
    }
    throw ConfigError("search mode must be local_window, per_location or global, got \"" + std::string(text) + "\"");
}

void SearchConfig::validate() const {
    if (window_size < 1 || window_size % 2 == 0) {
        throw ConfigError("window size must be an odd integer >= 1, got " + std::to_string(window_size));
    }
}

EmbeddingBank::EmbeddingBank(Tensor stacked, std::string category, std::string fingerprint)
    : stacked_(std::move(stacked)), category_(std::move(category)), fingerprint_(std::move(fingerprint)) {
    if (stacked_.rank() != 4) {
        throw ShapeError("bank tensor must be (N, C, H, W), got " + format_dims(stacked_.dims()));
    }
    const std::size_t n = size(), c = channels(), h = height(), w = width();
    channel_last_.reserve(stacked_.size());
    for (std::size_t m = 0; m < n; ++m) {
        auto member = to_channel_last(stacked_.data().subspan(m * c * h * w, c * h * w), c, h, w);
        channel_last_.insert(channel_last_.end(), member.begin(), member.end());
    }
}

EmbeddingBank EmbeddingBank::from_embeddings(std::span<const EmbeddingTensor> members, std::string category,
                                             std::string fingerprint) {
    if (members.empty()) {
        throw ValidationError("cannot build an embedding bank from zero embeddings");
    }
    const auto& first = members.front().values.dims();
    std::vector<float> data;
    data.reserve(members.size() * members.front().values.size());
    for (const auto& e : members) {
        if (e.values.dims() != first) {
            throw ValidationError("embedding \"" + e.image_id + "\" has shape " + format_dims(e.values.dims()) +
                                  ", expected " + format_dims(first));
        }
        data.insert(data.end(), e.values.values().begin(), e.values.values().end());
    }
    Tensor stacked({members.size(), first[0], first[1], first[2]}, std::move(data));
    return EmbeddingBank(std::move(stacked), std::move(category), std::move(fingerprint));
}

std::span<const float> EmbeddingBank::patch(std::size_t m, std::size_t row, std::size_t col) const {
    const std::size_t c = channels();
    return std::span<const float>(channel_last_).subspan(((m * height() + row) * width() + col) * c, c);
}

float squared_distance(const float* a, const float* b, std::size_t channels) noexcept {
    float lane[8] = {};
    std::size_t k = 0;
    for (; k + 8 <= channels; k += 8) {
        for (std::size_t l = 0; l < 8; ++l) {
            const float d = a[k + l] - b[k + l];
            lane[l] += d * d;
        }
    }
    for (std::size_t l = 0; k < channels; ++k, ++l) {
        const float d = a[k] - b[k];
        lane[l] += d * d;
    }
    return ((lane[0] + lane[1]) + (lane[2] + lane[3])) + ((lane[4] + lane[5]) + (lane[6] + lane[7]));
}

std::vector<GridCoord> effective_window(const SearchConfig& cfg, std::size_t height, std::size_t width,
                                        std::size_t row, std::size_t col) {
    cfg.validate();
    if (row >= height || col >= width) {
        throw PreconditionError("effective_window: location outside the grid");
    }
    const Radius r = search_radius(cfg, height, width);
    const auto h = static_cast<std::ptrdiff_t>(row);
    const auto w = static_cast<std::ptrdiff_t>(col);
    const std::ptrdiff_t a0 = std::max<std::ptrdiff_t>(0, h - r.rows);
    const std::ptrdiff_t a1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(height) - 1, h + r.rows);
    const std::ptrdiff_t b0 = std::max<std::ptrdiff_t>(0, w - r.cols);
    const std::ptrdiff_t b1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(width) - 1, w + r.cols);
    std::vector<GridCoord> out;
    out.reserve(static_cast<std::size_t>((a1 - a0 + 1) * (b1 - b0 + 1)));
    for (std::ptrdiff_t a = a0; a <= a1; ++a) {
        for (std::ptrdiff_t b = b0; b <= b1; ++b) {
            out.push_back({static_cast<std::size_t>(a), static_cast<std::size_t>(b)});
        }
    }
    return out;
}

ChunkPlan plan_chunks(const SearchConfig& cfg, std::size_t tests, std::size_t train, std::size_t channels,
                      std::size_t height, std::size_t width) {
    const std::size_t plane = height * width * sizeof(float);
    const std::size_t per_test = channels * plane + plane; // channel-last copy + running minimum
    const std::size_t per_pair = plane;                    // one shifted distance slice
    tests = std::max<std::size_t>(tests, 1);
    train = std::max<std::size_t>(train, 1);
    if (cfg.memory_budget == 0) {
        return {tests, train, tests * per_test + tests * train * per_pair};
    }
    if (cfg.memory_budget < per_test + per_pair) {
        throw ConfigError("memory budget of " + std::to_string(cfg.memory_budget) +
                          " bytes cannot hold one test working set of " + std::to_string(per_test + per_pair) +
                          " bytes");
    }
    const std::size_t tc = std::min(tests, cfg.memory_budget / (per_test + per_pair));
    const std::size_t mc = std::min(train, (cfg.memory_budget - tc * per_test) / (tc * per_pair));
    return {tc, mc, tc * per_test + tc * mc * per_pair};
}

std::vector<PatchScoreMap> score_patches_batch(std::span<const EmbeddingTensor> tests, const EmbeddingBank& bank,
                                               const SearchConfig& cfg) {
    cfg.validate();
    if (bank.empty()) {
        throw PreconditionError("embedding bank is empty");
    }
    for (const auto& t : tests) {
        check_compatible(t, bank);
    }
    std::vector<PatchScoreMap> results;
    if (tests.empty()) {
        return results;
    }

    const std::size_t n_train = bank.size();
    const std::size_t c = bank.channels();
    const std::size_t h = bank.height();
    const std::size_t w = bank.width();
    const std::size_t plane = h * w;
    const ChunkPlan plan = plan_chunks(cfg, tests.size(), n_train, c, h, w);
    const Radius radius = search_radius(cfg, h, w);
    const auto sh = static_cast<std::ptrdiff_t>(h);
    const auto sw = static_cast<std::ptrdiff_t>(w);

    results.reserve(tests.size());
    for (std::size_t t0 = 0; t0 < tests.size(); t0 += plan.tests_per_chunk) {
        const std::size_t tc = std::min(plan.tests_per_chunk, tests.size() - t0);

        std::vector<std::vector<float>> queries(tc);
        parallel_for(tc, cfg.threads, [&](std::size_t i) {
            queries[i] = to_channel_last(tests[t0 + i].values.data(), c, h, w);
        });
        std::vector<float> running(tc * plane, kInf);

        for (std::size_t m0 = 0; m0 < n_train; m0 += plan.train_per_chunk) {
            const std::size_t mc = std::min(plan.train_per_chunk, n_train - m0);
            std::vector<float> slices(tc * mc * plane);

            for (std::ptrdiff_t dh = -radius.rows; dh <= radius.rows; ++dh) {
                for (std::ptrdiff_t dw = -radius.cols; dw <= radius.cols; ++dw) {
                    // Test rows/cols whose shifted partner (h + dh, w + dw) is on the grid.
                    const std::ptrdiff_t r0 = std::max<std::ptrdiff_t>(0, -dh);
                    const std::ptrdiff_t r1 = std::min(sh, sh - dh);
                    const std::ptrdiff_t q0 = std::max<std::ptrdiff_t>(0, -dw);
                    const std::ptrdiff_t q1 = std::min(sw, sw - dw);
                    if (r0 >= r1 || q0 >= q1) {
                        continue;
                    }
                    const auto rows = static_cast<std::size_t>(r1 - r0);
                    parallel_for(tc * rows, cfg.threads, [&](std::size_t item) {
                        const std::size_t i = item / rows;
                        const std::size_t row = static_cast<std::size_t>(r0) + item % rows;
                        const std::size_t src_row = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(row) + dh);
                        const float* query_row = queries[i].data() + row * w * c;
                        float* best = running.data() + i * plane + row * w;
                        for (std::size_t j = 0; j < mc; ++j) {
                            float* slice = slices.data() + (i * mc + j) * plane + row * w;
                            for (std::ptrdiff_t col = q0; col < q1; ++col) {
                                const auto src_col = static_cast<std::size_t>(col + dw);
                                slice[col] = squared_distance(query_row + static_cast<std::size_t>(col) * c,
                                                              bank.patch(m0 + j, src_row, src_col).data(), c);
                            }
                            for (std::ptrdiff_t col = q0; col < q1; ++col) {
                                best[col] = std::min(best[col], slice[col]);
                            }
                        }
                    });
                }
            }
        }

        for (std::size_t i = 0; i < tc; ++i) {
            std::vector<float> scores(plane);
            for (std::size_t p = 0; p < plane; ++p) {
                scores[p] = std::sqrt(running[i * plane + p]);
            }
            results.push_back({tests[t0 + i].image_id, Tensor({h, w}, std::move(scores))});
        }
    }
    return results;
}

PatchScoreMap score_patches(const EmbeddingTensor& test, const EmbeddingBank& bank, const SearchConfig& cfg) {
    return std::move(score_patches_batch(std::span<const EmbeddingTensor>(&test, 1), bank, cfg).front());
}

} // namespace lwinnn
