#pragma once

#include "lwinnn/bundle.hpp"
#include "lwinnn/png_io.hpp"
#include "lwinnn/tensor.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lwinnn {

struct CurvePoint {
    double fpr = 0.0;
    double value = 0.0; // TPR for ROC, mean per-region overlap for PRO
};

struct LabeledScore {
    double score = 0.0;
    bool anomalous = false;
};

/// Mann-Whitney U / (#pos * #neg), ties counted as one half.
/// Throws MetricError unless both classes are present.
double auroc(std::span<const LabeledScore> samples);

/// ROC polyline from (0, 0) to (1, 1), one vertex per distinct score.
std::vector<CurvePoint> roc_curve(std::span<const LabeledScore> samples);

/// 8-connected regions of a binary mask. Labels are 1..count in order of
/// first encounter in a row-major scan; background is 0.
struct RegionLabels {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::vector<std::uint32_t> labels;
    std::vector<std::size_t> sizes; // sizes[r - 1] = pixel count of region r

    std::size_t count() const noexcept { return sizes.size(); }
};

RegionLabels connected_components(const BinaryMask& mask);

struct ScoredImage {
    std::string image_id;
    float score = 0.0f;
    Label label = Label::normal;
    std::optional<Tensor> pixel_map; // (H0, W0)
    std::optional<BinaryMask> mask;  // required when label is anomalous and a map is present
};

/// Test-set scores. Every image with a pixel map contributes to AUPRO; normal
/// images without a mask count as all-negative.
struct ScoredDataset {
    std::string category;
    std::vector<ScoredImage> images;
};

struct ProResult {
    double aupro = 0.0;
    std::vector<CurvePoint> points; // up to and including the point at fpr_cap
};

/// Area under the per-region-overlap curve on FPR in [0, fpr_cap], divided by
/// fpr_cap. bins = 0 uses every distinct pixel score as a threshold; bins > 0
/// uses that many evenly spaced thresholds between the max and min score.
/// Throws MetricError with no ground-truth region or no negative pixel.
ProResult aupro(const ScoredDataset& dataset, double fpr_cap = 0.3, std::size_t bins = 0);

/// Trapezoidal area under a polyline sorted by FPR, truncated at `cap` with an
/// interpolated end point, divided by cap.
double normalized_area(std::span<const CurvePoint> curve, double cap);

/// The points of `curve` up to cap, ending with an interpolated point at cap.
std::vector<CurvePoint> truncate_curve(std::span<const CurvePoint> curve, double cap);

struct EvalReport {
    std::string category;
    double auroc_image = 0.0;
    double aupro = 0.0;
    double fpr_cap = 0.3;
    std::size_t images = 0;
    std::size_t anomalous_images = 0;
    std::size_t regions = 0;
    std::vector<CurvePoint> roc_points;
    std::vector<CurvePoint> pro_points;
};

/// Throws MetricError when either metric is undefined on the data.
EvalReport evaluate(const ScoredDataset& dataset, double fpr_cap = 0.3, std::size_t bins = 0);

/// Key-value text followed by both curves; stable formatting for diffing.
std::string format_report(const EvalReport& report);
/// Tab-separated `curve fpr value` rows for plotting.
std::string format_curves(const EvalReport& report);

} // namespace lwinnn
