#include "lwinnn/errors.hpp"
#include "lwinnn/metrics.hpp"

#include "oracles.hpp"
#include "synthetic.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace lwinnn;

namespace {

std::vector<LabeledScore> labeled(const std::vector<double>& scores, const std::vector<bool>& anomalous) {
    std::vector<LabeledScore> out;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out.push_back({scores[i], anomalous[i]});
    }
    return out;
}

BinaryMask mask_from(std::size_t h, std::size_t w, const std::vector<std::uint8_t>& v) {
    return {static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(w), v};
}

ScoredImage image(const std::string& id, const std::vector<double>& scores, std::size_t h, std::size_t w,
                  const std::vector<std::uint8_t>& mask) {
    ScoredImage img;
    img.image_id = id;
    img.pixel_map = Tensor({h, w}, std::vector<float>(scores.begin(), scores.end()));
    if (!mask.empty()) {
        img.label = Label::anomalous;
        img.mask = mask_from(h, w, mask);
    }
    return img;
}

std::vector<std::uint8_t> square(std::size_t h, std::size_t w, std::size_t y0, std::size_t x0, std::size_t side,
                                 std::vector<std::uint8_t> base = {}) {
    if (base.empty()) {
        base.assign(h * w, 0);
    }
    for (std::size_t y = y0; y < std::min(h, y0 + side); ++y) {
        for (std::size_t x = x0; x < std::min(w, x0 + side); ++x) {
            base[y * w + x] = 1;
        }
    }
    return base;
}

} // namespace

TEST(Auroc, SeparatedTiedAndFlipped) {
    EXPECT_EQ(auroc(labeled({0.1, 0.2, 0.8, 0.9}, {false, false, true, true})), 1.0);
    EXPECT_EQ(auroc(labeled({0.5, 0.5, 0.5}, {false, true, true})), 0.5);
    EXPECT_EQ(auroc(labeled({0.9, 0.8, 0.1}, {false, false, true})), 0.0);
    EXPECT_THROW(auroc(labeled({1, 2}, {true, true})), MetricError);
    EXPECT_THROW(auroc({}), MetricError);
}

TEST(Auroc, MatchesPairwiseCountingExactly) {
    synth::Rng rng(1);
    std::uniform_int_distribution<int> level(0, 6);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + trial % 29;
        std::vector<double> scores;
        std::vector<bool> labels;
        for (std::size_t i = 0; i < n; ++i) {
            scores.push_back(level(rng) * 0.25);
            labels.push_back(i % 2 == 0 ? (rng() % 2 == 0) : i == 1 || rng() % 3 == 0);
        }
        labels[0] = true;
        labels[1] = false;
        EXPECT_EQ(auroc(labeled(scores, labels)), oracle::auroc_pairwise(scores, labels));
    }
}

TEST(Auroc, InvariantToIncreasingTransformAndFlipsToComplement) {
    synth::Rng rng(2);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> scores, transformed;
    std::vector<bool> labels, flipped;
    for (int i = 0; i < 40; ++i) {
        scores.push_back(u(rng));
        transformed.push_back(std::exp(3 * scores.back()) - 7);
        labels.push_back(i % 3 == 0);
        flipped.push_back(i % 3 != 0);
    }
    const double a = auroc(labeled(scores, labels));
    EXPECT_EQ(a, auroc(labeled(transformed, labels)));
    EXPECT_NEAR(auroc(labeled(scores, flipped)), 1 - a, 1e-12);
}

TEST(RocCurve, MonotoneFromOriginToOne) {
    const auto samples = labeled({0.1, 0.4, 0.4, 0.8}, {false, true, false, true});
    const auto c = roc_curve(samples);
    ASSERT_GE(c.size(), 2u);
    EXPECT_EQ(c.front().fpr, 0.0);
    EXPECT_EQ(c.front().value, 0.0);
    EXPECT_EQ(c.back().fpr, 1.0);
    EXPECT_EQ(c.back().value, 1.0);
    for (std::size_t i = 1; i < c.size(); ++i) {
        EXPECT_GE(c[i].fpr, c[i - 1].fpr);
        EXPECT_GE(c[i].value, c[i - 1].value);
    }
    EXPECT_NEAR(normalized_area(c, 1.0), 0.875, 1e-12);
    EXPECT_NEAR(normalized_area(c, 1.0), auroc(samples), 1e-12);
}

TEST(ConnectedComponents, DiagonalNeighboursJoin) {
    const auto r = connected_components(mask_from(2, 2, {1, 0, 0, 1}));
    EXPECT_EQ(r.count(), 1u);
    EXPECT_EQ(r.sizes[0], 2u);
    EXPECT_EQ(connected_components(mask_from(3, 3, std::vector<std::uint8_t>(9, 0))).count(), 0u);
}

TEST(ConnectedComponents, MatchesFloodFill) {
    synth::Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::uint8_t> m(256);
        for (auto& v : m) {
            v = rng() % 100 < 30 ? 1 : 0;
        }
        int count = 0;
        const auto want = oracle::flood_fill_labels(m, 16, 16, count);
        const auto got = connected_components(mask_from(16, 16, m));
        ASSERT_EQ(got.count(), static_cast<std::size_t>(count));
        for (std::size_t p = 0; p < m.size(); ++p) {
            ASSERT_EQ(got.labels[p], static_cast<std::uint32_t>(want[p]));
        }
    }
}

TEST(Aupro, PerfectDetectorScoresOne) {
    const auto mask = square(12, 12, 2, 3, 4, square(12, 12, 8, 8, 2));
    std::vector<double> scores(mask.begin(), mask.end());
    ScoredDataset ds{"c", {image("a", scores, 12, 12, mask)}};
    EXPECT_NEAR(aupro(ds).aupro, 1.0, 1e-12);
}

TEST(Aupro, ConstantMapMatchesOracle) {
    const auto mask = square(16, 16, 4, 4, 5);
    const std::vector<double> scores(256, 0.5);
    ScoredDataset ds{"c", {image("a", scores, 16, 16, mask)}};
    oracle::OracleImage o{scores, mask, 16, 16};
    EXPECT_NEAR(aupro(ds).aupro, oracle::aupro_exhaustive({o}, 0.3), 1e-6);
}

TEST(Aupro, TwoImagesTwoRegionsMatchesOracle) {
    synth::Rng rng(4);
    std::uniform_real_distribution<double> u(0, 1);
    const auto m1 = square(12, 12, 1, 1, 3);
    const auto m2 = square(12, 12, 6, 5, 4);
    std::vector<double> s1(144), s2(144);
    for (std::size_t p = 0; p < 144; ++p) {
        s1[p] = u(rng) + 0.6 * m1[p];
        s2[p] = u(rng) + 0.6 * m2[p];
    }
    ScoredDataset ds{"c", {image("a", s1, 12, 12, m1), image("b", s2, 12, 12, m2)}};
    const double want = oracle::aupro_exhaustive({{s1, m1, 12, 12}, {s2, m2, 12, 12}}, 0.3);
    EXPECT_NEAR(aupro(ds).aupro, want, 1e-6);
}

TEST(Aupro, NormalImagesAddNegatives) {
    synth::Rng rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    const auto m = square(8, 8, 2, 2, 3);
    std::vector<double> s1(64), s2(64);
    for (std::size_t p = 0; p < 64; ++p) {
        s1[p] = u(rng) + 0.3 * m[p];
        s2[p] = u(rng);
    }
    ScoredDataset ds{"c", {image("a", s1, 8, 8, m), image("n", s2, 8, 8, {})}};
    const double want = oracle::aupro_exhaustive({{s1, m, 8, 8}, {s2, {}, 8, 8}}, 0.3);
    EXPECT_NEAR(aupro(ds).aupro, want, 1e-6);
}

TEST(Aupro, InvariantToIncreasingTransform) {
    synth::Rng rng(6);
    std::uniform_real_distribution<double> u(0, 1);
    const auto m = square(10, 10, 3, 3, 4);
    std::vector<double> s(100), t(100);
    for (std::size_t p = 0; p < 100; ++p) {
        s[p] = u(rng) + 0.4 * m[p];
        t[p] = s[p] * s[p] * s[p] + 2;
    }
    EXPECT_NEAR(aupro({"c", {image("a", s, 10, 10, m)}}).aupro, aupro({"c", {image("a", t, 10, 10, m)}}).aupro, 1e-9);
}

TEST(Aupro, FullCapSingleRegionEqualsPixelAuroc) {
    synth::Rng rng(7);
    std::uniform_real_distribution<double> u(0, 1);
    const auto m = square(9, 9, 2, 2, 5);
    std::vector<double> s(81);
    std::vector<bool> labels(81);
    for (std::size_t p = 0; p < 81; ++p) {
        s[p] = u(rng) + 0.3 * m[p];
        labels[p] = m[p] != 0;
    }
    EXPECT_NEAR(aupro({"c", {image("a", s, 9, 9, m)}}, 1.0).aupro, oracle::auroc_pairwise(s, labels), 1e-9);
}

TEST(Aupro, BinnedCurveApproximatesExact) {
    synth::Rng rng(8);
    std::uniform_real_distribution<double> u(0, 1);
    const auto m = square(16, 16, 4, 4, 6);
    std::vector<double> s(256);
    for (std::size_t p = 0; p < 256; ++p) {
        s[p] = u(rng) + 0.5 * m[p];
    }
    ScoredDataset ds{"c", {image("a", s, 16, 16, m)}};
    EXPECT_NEAR(aupro(ds, 0.3, 200).aupro, aupro(ds).aupro, 0.02);
}

TEST(Aupro, CurveEndsAtCap) {
    const auto m = square(6, 6, 1, 1, 2);
    std::vector<double> s(36);
    for (std::size_t p = 0; p < 36; ++p) {
        s[p] = static_cast<double>((p * 7) % 36);
    }
    const auto result = aupro({"c", {image("a", s, 6, 6, m)}});
    ASSERT_FALSE(result.points.empty());
    EXPECT_NEAR(result.points.back().fpr, 0.3, 1e-12);
    for (std::size_t i = 1; i < result.points.size(); ++i) {
        EXPECT_GE(result.points[i].fpr, result.points[i - 1].fpr);
    }
}

TEST(Aupro, UndefinedCasesAreMetricErrors) {
    ScoredDataset only_normal{"c", {image("n", std::vector<double>(16, 0.0), 4, 4, {})}};
    EXPECT_THROW(aupro(only_normal), MetricError);
    ScoredDataset all_positive{"c", {image("a", std::vector<double>(4, 1.0), 2, 2, {1, 1, 1, 1})}};
    EXPECT_THROW(aupro(all_positive), MetricError);
}

TEST(Evaluate, ReportHasBothMetricsAndCurves) {
    const auto m = square(8, 8, 2, 2, 3);
    std::vector<double> s(m.begin(), m.end());
    ScoredDataset ds{"bottle", {image("a", s, 8, 8, m), image("n", std::vector<double>(64, 0.0), 8, 8, {})}};
    ds.images[0].score = 2.0f;
    ds.images[1].score = 1.0f;
    const auto report = evaluate(ds);
    EXPECT_EQ(report.auroc_image, 1.0);
    EXPECT_NEAR(report.aupro, 1.0, 1e-12);
    EXPECT_EQ(report.images, 2u);
    EXPECT_EQ(report.anomalous_images, 1u);
    EXPECT_EQ(report.regions, 1u);
    const auto text = format_report(report);
    EXPECT_NE(text.find("auroc_image = 1"), std::string::npos) << text;
    EXPECT_NE(text.find("category = bottle"), std::string::npos) << text;
    EXPECT_EQ(format_curves(report).rfind("curve\tfpr\tvalue\n", 0), 0u);
}
