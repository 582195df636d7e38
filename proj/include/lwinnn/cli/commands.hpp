#pragma once

#include "lwinnn/cli/run_config.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lwinnn::cli {

/// Process exit codes. Stable; documented in the README.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitManifest = 2,
    kExitOverwrite = 3,
    kExitFingerprint = 4,
    kExitMetric = 5,
};

struct FitOptions {
    std::filesystem::path train_manifest;
    std::filesystem::path bank;
    bool force = false;
};

struct ScoreOptions {
    std::filesystem::path test_manifest;
    std::filesystem::path bank;
    std::filesystem::path out_dir;
};

struct EvalOptions {
    std::filesystem::path scores_index;
    std::filesystem::path report;
    /// Defaults to <report>.curves.tsv
    std::optional<std::filesystem::path> curves;
};

/// One axis of an ablation sweep: a config key and the values it takes.
/// The key "normalization" is accepted and recorded without affecting the run.
struct SweepAxis {
    std::string key;
    std::vector<std::string> values;
};

/// Sweep text: one `key = v1 v2 ...` line per axis (whitespace-separated
/// values, '#' comments). Rows are the Cartesian product, last axis fastest.
std::vector<SweepAxis> parse_sweep(std::string_view text);

struct AblateOptions {
    std::filesystem::path train_manifest;
    std::filesystem::path test_manifest;
    std::vector<SweepAxis> sweep;
    std::filesystem::path table;
};

struct HeatmapOptions {
    std::filesystem::path map;
    std::optional<std::filesystem::path> image;
    std::filesystem::path out;
    double alpha = 0.5;
};

/// Scores index written by `score`: one row per test image.
struct ScoreRow {
    std::string image_id;
    float score = 0.0f;
    Label label = Label::unknown;
    std::filesystem::path map_path;                 // relative to the index directory
    std::optional<std::filesystem::path> mask_path; // absolute
};

std::vector<ScoreRow> read_scores_index(const std::filesystem::path& path);
void write_scores_index(const std::vector<ScoreRow>& rows, const std::filesystem::path& path);

int cmd_fit(const FitOptions& opts, const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_score(const ScoreOptions& opts, const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& opts, const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_ablate(const AblateOptions& opts, const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_heatmap(const HeatmapOptions& opts, std::ostream& out, std::ostream& err);

} // namespace lwinnn::cli
