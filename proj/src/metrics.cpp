#include "lwinnn/metrics.hpp"

#include "lwinnn/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <numeric>
#include <sstream>

namespace lwinnn {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

struct PixelRecord {
    float score;
    std::uint32_t region; // 0 = negative pixel, else global region id (1-based)
};

} // namespace

double auroc(std::span<const LabeledScore> samples) {
    const auto positives = static_cast<std::size_t>(
        std::count_if(samples.begin(), samples.end(), [](const LabeledScore& s) { return s.anomalous; }));
    const std::size_t negatives = samples.size() - positives;
    if (positives == 0 || negatives == 0) {
        throw MetricError("AUROC needs at least one anomalous and one normal sample (got " +
                          std::to_string(positives) + " anomalous, " + std::to_string(negatives) + " normal)");
    }
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return samples[a].score < samples[b].score; });

    // U = sum of positive ranks - p(p+1)/2, ranks averaged over ties. Ranks
    // are half-integers, so every step is exact in double.
    double positive_rank_sum = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && samples[order[j]].score == samples[order[i]].score) {
            ++j;
        }
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            if (samples[order[k]].anomalous) {
                positive_rank_sum += avg_rank;
            }
        }
        i = j;
    }
    const double p = static_cast<double>(positives);
    const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
    return u / (p * static_cast<double>(negatives));
}

std::vector<CurvePoint> roc_curve(std::span<const LabeledScore> samples) {
    std::size_t positives = 0;
    for (const auto& s : samples) {
        positives += s.anomalous ? 1 : 0;
    }
    const std::size_t negatives = samples.size() - positives;
    if (positives == 0 || negatives == 0) {
        throw MetricError("ROC curve needs both classes");
    }
    std::vector<LabeledScore> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const LabeledScore& a, const LabeledScore& b) { return a.score > b.score; });
    std::vector<CurvePoint> curve{{0.0, 0.0}};
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j].score == sorted[i].score) {
            (sorted[j].anomalous ? tp : fp) += 1;
            ++j;
        }
        curve.push_back({static_cast<double>(fp) / static_cast<double>(negatives),
                         static_cast<double>(tp) / static_cast<double>(positives)});
        i = j;
    }
    return curve;
}

RegionLabels connected_components(const BinaryMask& mask) {
    RegionLabels out;
    out.height = mask.height;
    out.width = mask.width;
    const std::size_t h = mask.height;
    const std::size_t w = mask.width;
    if (mask.values.size() != h * w) {
        throw ShapeError("mask buffer does not match its dims");
    }
    out.labels.assign(h * w, 0);
    std::deque<std::size_t> queue;
    for (std::size_t start = 0; start < h * w; ++start) {
        if (!mask.values[start] || out.labels[start]) {
            continue;
        }
        const auto label = static_cast<std::uint32_t>(out.sizes.size() + 1);
        std::size_t size = 0;
        out.labels[start] = label;
        queue.push_back(start);
        while (!queue.empty()) {
            const std::size_t p = queue.front();
            queue.pop_front();
            ++size;
            const std::size_t y = p / w;
            const std::size_t x = p % w;
            for (std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
                for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
                    const std::ptrdiff_t ny = static_cast<std::ptrdiff_t>(y) + dy;
                    const std::ptrdiff_t nx = static_cast<std::ptrdiff_t>(x) + dx;
                    if (ny < 0 || nx < 0 || ny >= static_cast<std::ptrdiff_t>(h) ||
                        nx >= static_cast<std::ptrdiff_t>(w)) {
                        continue;
                    }
                    const std::size_t q = static_cast<std::size_t>(ny) * w + static_cast<std::size_t>(nx);
                    if (mask.values[q] && !out.labels[q]) {
                        out.labels[q] = label;
                        queue.push_back(q);
                    }
                }
            }
        }
        out.sizes.push_back(size);
    }
    return out;
}

double normalized_area(std::span<const CurvePoint> curve, double cap) {
    if (!(cap > 0.0)) {
        throw PreconditionError("FPR cap must be > 0");
    }
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        const CurvePoint& a = curve[i - 1];
        const CurvePoint& b = curve[i];
        if (a.fpr >= cap) {
            break;
        }
        if (b.fpr > cap) {
            const double at_cap = a.value + (b.value - a.value) * (cap - a.fpr) / (b.fpr - a.fpr);
            area += (cap - a.fpr) * (a.value + at_cap) / 2.0;
            break;
        }
        area += (b.fpr - a.fpr) * (a.value + b.value) / 2.0;
    }
    return area / cap;
}

std::vector<CurvePoint> truncate_curve(std::span<const CurvePoint> curve, double cap) {
    std::vector<CurvePoint> out;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (curve[i].fpr <= cap) {
            out.push_back(curve[i]);
            continue;
        }
        if (i > 0 && curve[i - 1].fpr < cap) {
            const CurvePoint& a = curve[i - 1];
            const CurvePoint& b = curve[i];
            out.push_back({cap, a.value + (b.value - a.value) * (cap - a.fpr) / (b.fpr - a.fpr)});
        }
        break;
    }
    return out;
}

ProResult aupro(const ScoredDataset& dataset, double fpr_cap, std::size_t bins) {
    if (!(fpr_cap > 0.0 && fpr_cap <= 1.0)) {
        throw PreconditionError("FPR cap must be in (0, 1]");
    }
    std::vector<PixelRecord> pixels;
    std::vector<std::size_t> region_sizes; // indexed by global region id - 1
    for (const auto& img : dataset.images) {
        if (!img.pixel_map) {
            continue;
        }
        const Tensor& map = *img.pixel_map;
        if (map.rank() != 2) {
            throw ShapeError("pixel map of \"" + img.image_id + "\" is not 2D");
        }
        if (!img.mask) {
            if (img.label == Label::anomalous) {
                throw MetricError("anomalous image \"" + img.image_id + "\" has no ground-truth mask");
            }
            for (float v : map.data()) {
                pixels.push_back({v, 0});
            }
            continue;
        }
        if (img.mask->height != map.dim(0) || img.mask->width != map.dim(1)) {
            throw ShapeError("mask of \"" + img.image_id + "\" does not match its pixel map size");
        }
        const RegionLabels regions = connected_components(*img.mask);
        if (img.label == Label::anomalous && regions.count() == 0) {
            throw MetricError("anomalous image \"" + img.image_id + "\" has an empty mask");
        }
        const auto offset = static_cast<std::uint32_t>(region_sizes.size());
        region_sizes.insert(region_sizes.end(), regions.sizes.begin(), regions.sizes.end());
        const auto v = map.data();
        for (std::size_t p = 0; p < v.size(); ++p) {
            pixels.push_back({v[p], regions.labels[p] ? regions.labels[p] + offset : 0});
        }
    }

    const std::size_t total_negatives = static_cast<std::size_t>(
        std::count_if(pixels.begin(), pixels.end(), [](const PixelRecord& r) { return r.region == 0; }));
    if (region_sizes.empty()) {
        throw MetricError("AUPRO needs at least one ground-truth region");
    }
    if (total_negatives == 0) {
        throw MetricError("AUPRO needs at least one negative pixel");
    }

    std::stable_sort(pixels.begin(), pixels.end(),
                     [](const PixelRecord& a, const PixelRecord& b) { return a.score > b.score; });

    const double region_count = static_cast<double>(region_sizes.size());
    double overlap_sum = 0.0; // sum over regions of |region ∩ predicted| / |region|
    std::size_t false_positives = 0;
    std::vector<CurvePoint> curve{{0.0, 0.0}};

    auto admit = [&](const PixelRecord& r) {
        if (r.region == 0) {
            ++false_positives;
        } else {
            overlap_sum += 1.0 / static_cast<double>(region_sizes[r.region - 1]);
        }
    };
    auto emit = [&] {
        curve.push_back({static_cast<double>(false_positives) / static_cast<double>(total_negatives),
                         overlap_sum / region_count});
    };

    if (bins == 0) {
        for (std::size_t i = 0; i < pixels.size();) {
            std::size_t j = i;
            while (j < pixels.size() && pixels[j].score == pixels[i].score) {
                admit(pixels[j++]);
            }
            emit();
            i = j;
        }
    } else {
        const double hi = pixels.front().score;
        const double lo = pixels.back().score;
        std::size_t next = 0;
        for (std::size_t b = 0; b < bins; ++b) {
            const double t = bins == 1 ? lo : hi - (hi - lo) * static_cast<double>(b) / static_cast<double>(bins - 1);
            while (next < pixels.size() && pixels[next].score >= t) {
                admit(pixels[next++]);
            }
            emit();
        }
        while (next < pixels.size()) {
            admit(pixels[next++]);
        }
        if (curve.back().fpr < 1.0) {
            emit();
        }
    }

    ProResult out;
    out.aupro = normalized_area(curve, fpr_cap);
    out.points = truncate_curve(curve, fpr_cap);
    return out;
}

EvalReport evaluate(const ScoredDataset& dataset, double fpr_cap, std::size_t bins) {
    EvalReport r;
    r.category = dataset.category;
    r.fpr_cap = fpr_cap;
    r.images = dataset.images.size();
    std::vector<LabeledScore> scores;
    for (const auto& img : dataset.images) {
        if (img.label == Label::unknown) {
            throw MetricError("image \"" + img.image_id + "\" has no label");
        }
        scores.push_back({img.score, img.label == Label::anomalous});
        if (img.label == Label::anomalous) {
            ++r.anomalous_images;
        }
        if (img.mask) {
            r.regions += connected_components(*img.mask).count();
        }
    }
    r.auroc_image = auroc(scores);
    r.roc_points = roc_curve(scores);
    const ProResult pro = aupro(dataset, fpr_cap, bins);
    r.aupro = pro.aupro;
    r.pro_points = pro.points;
    return r;
}

std::string format_report(const EvalReport& report) {
    std::ostringstream os;
    os << "category = " << report.category << '\n';
    os << "images = " << report.images << '\n';
    os << "anomalous_images = " << report.anomalous_images << '\n';
    os << "regions = " << report.regions << '\n';
    os << "auroc_image = " << fmt(report.auroc_image) << '\n';
    os << "aupro = " << fmt(report.aupro) << '\n';
    os << "fpr_cap = " << fmt(report.fpr_cap) << '\n';
    os << "roc_points =";
    for (const auto& p : report.roc_points) {
        os << ' ' << fmt(p.fpr) << ',' << fmt(p.value);
    }
    os << '\n';
    os << "pro_points =";
    for (const auto& p : report.pro_points) {
        os << ' ' << fmt(p.fpr) << ',' << fmt(p.value);
    }
    os << '\n';
    return os.str();
}

std::string format_curves(const EvalReport& report) {
    std::ostringstream os;
    os << "curve\tfpr\tvalue\n";
    for (const auto& p : report.roc_points) {
        os << "roc\t" << fmt(p.fpr) << '\t' << fmt(p.value) << '\n';
    }
    for (const auto& p : report.pro_points) {
        os << "pro\t" << fmt(p.fpr) << '\t' << fmt(p.value) << '\n';
    }
    return os.str();
}

} // namespace lwinnn
