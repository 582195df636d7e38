#pragma once

#include "lwinnn/anomaly_maps.hpp"
#include "lwinnn/embedding.hpp"
#include "lwinnn/window_search.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lwinnn::cli {

inline constexpr std::size_t kDefaultMemoryBudget = std::size_t{256} << 20;
/// Bin count used by `pro_bins = on`.
inline constexpr std::size_t kDefaultProBins = 200;

/// Everything a fit/score/eval run needs besides file paths.
///
/// Config files are plain text, one `key = value` per line, '#' comments.
/// Keys: pooling, pool_kernel, pool_stride, interpolation, layers,
/// window_size, mode, memory_budget, aggregation, max_after_blur,
/// blur_sigma, knn_k, fpr_cap, pro_bins, max_train_samples, category,
/// threads.
struct RunConfig {
    EmbeddingConfig embedding;
    SearchConfig search{7, SearchMode::local_window, kDefaultMemoryBudget, 0};
    Aggregation aggregation = Aggregation::max_patch;
    /// Take the image max on the blurred pixel map instead of the patch map.
    bool max_after_blur = false;
    double blur_sigma = 4.0;
    std::size_t knn_k = 5;
    double fpr_cap = 0.3;
    /// 0 = exact thresholds; otherwise the number of evenly spaced bins ("on" = 200).
    std::size_t pro_bins = 0;
    /// 0 = use every train entry.
    std::size_t max_train_samples = 0;
    std::string category = "default";
    std::size_t threads = 0;

    /// Throws ConfigError on the first invalid field.
    void validate() const;
};

/// Sets one key; throws ConfigError for unknown keys or unparsable values.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

/// Applies every `key = value` line of `text` on top of `cfg`.
void apply_config_text(RunConfig& cfg, std::string_view text, std::string_view source = "config");

RunConfig load_config(const std::filesystem::path& path);

/// The setting for `key` rendered the way apply_setting accepts it.
std::string setting_value(const RunConfig& cfg, std::string_view key);

/// Thread count from --threads, else LWINN_THREADS, else 0 (auto).
std::size_t threads_from_environment(std::size_t flag_value, bool flag_given);

} // namespace lwinnn::cli
