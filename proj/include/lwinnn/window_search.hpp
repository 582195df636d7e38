#pragma once

#include "lwinnn/embedding.hpp"
#include "lwinnn/tensor.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lwinnn {

enum class SearchMode {
    local_window, ///< min over a centred window_size x window_size block of every train image
    per_location, ///< same location only; identical to local_window with window_size 1
    global,       ///< every location of every train image
};

std::string_view to_string(SearchMode mode);
SearchMode parse_search_mode(std::string_view text);

struct SearchConfig {
    /// Odd, >= 1. Ignored by per_location and global.
    std::size_t window_size = 7;
    SearchMode mode = SearchMode::local_window;
    /// Upper bound in bytes on the transient working set of a batch search; 0 = unbounded.
    std::size_t memory_budget = 0;
    /// Worker threads; 0 = hardware concurrency. Results never depend on it.
    std::size_t threads = 1;

    void validate() const;
};

/// Stacked train embeddings X_train, (N, C, H1, W1). Immutable once built.
class EmbeddingBank {
public:
    EmbeddingBank() = default;
    EmbeddingBank(Tensor stacked, std::string category, std::string fingerprint);

    /// Throws ValidationError if `members` is empty or shapes differ.
    static EmbeddingBank from_embeddings(std::span<const EmbeddingTensor> members, std::string category,
                                         std::string fingerprint);

    bool empty() const noexcept { return stacked_.empty(); }
    std::size_t size() const { return empty() ? 0 : stacked_.dim(0); }
    std::size_t channels() const { return stacked_.dim(1); }
    std::size_t height() const { return stacked_.dim(2); }
    std::size_t width() const { return stacked_.dim(3); }

    const Tensor& tensor() const noexcept { return stacked_; }
    const std::string& category() const noexcept { return category_; }
    const std::string& fingerprint() const noexcept { return fingerprint_; }

    /// Contiguous C-vector of member m at (row, col).
    std::span<const float> patch(std::size_t m, std::size_t row, std::size_t col) const;

private:
    Tensor stacked_;
    std::string category_;
    std::string fingerprint_;
    std::vector<float> channel_last_; // (N, H, W, C)
};

/// Per-location anomaly scores, (H1, W1), all finite and >= 0.
struct PatchScoreMap {
    std::string image_id;
    Tensor scores;
};

struct GridCoord {
    std::size_t row = 0;
    std::size_t col = 0;
    friend bool operator==(const GridCoord&, const GridCoord&) = default;
};

/// Squared L2 distance with a fixed summation structure: eight lanes, lane k
/// accumulating channels k, k+8, ... in order, lanes folded pairwise.
float squared_distance(const float* a, const float* b, std::size_t channels) noexcept;

/// In-bounds train coordinates compared against test location (row, col),
/// row-major. Interior points of a local window get window_size^2 entries.
std::vector<GridCoord> effective_window(const SearchConfig& cfg, std::size_t height, std::size_t width,
                                        std::size_t row, std::size_t col);

/// score(h, w) = min over members m and in-bounds window coordinates (a, b)
/// of ||test[:, h, w] - bank[m, :, a, b]||_2.
PatchScoreMap score_patches(const EmbeddingTensor& test, const EmbeddingBank& bank, const SearchConfig& cfg);

/// Same results as score_patches per image. Iterates window offsets, keeping
/// a running minimum of squared distances against shifted train slices, and
/// chunks tests and train members so the working set fits cfg.memory_budget.
std::vector<PatchScoreMap> score_patches_batch(std::span<const EmbeddingTensor> tests, const EmbeddingBank& bank,
                                               const SearchConfig& cfg);

/// How score_patches_batch splits a batch to respect the memory budget.
struct ChunkPlan {
    std::size_t tests_per_chunk = 0;
    std::size_t train_per_chunk = 0;
    std::size_t working_set_bytes = 0;
};

/// Throws ConfigError when the budget cannot hold one test's working set
/// (its (C, H1, W1) copy plus two H1 x W1 score buffers).
ChunkPlan plan_chunks(const SearchConfig& cfg, std::size_t tests, std::size_t train, std::size_t channels,
                      std::size_t height, std::size_t width);

} // namespace lwinnn
