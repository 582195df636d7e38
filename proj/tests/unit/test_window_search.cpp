#include "lwinnn/bank_io.hpp"
#include "lwinnn/errors.hpp"
#include "lwinnn/window_search.hpp"

#include "oracles.hpp"
#include "synthetic.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace lwinnn;

namespace {

SearchConfig window(std::size_t delta, std::size_t threads = 1) {
    SearchConfig cfg;
    cfg.window_size = delta;
    cfg.threads = threads;
    return cfg;
}

void expect_matches_oracle(const EmbeddingTensor& test, const EmbeddingBank& bank, const SearchConfig& cfg,
                           long radius) {
    const auto got = score_patches(test, bank, cfg);
    const auto want = oracle::window_min_l2(test.values, bank.tensor(), radius);
    ASSERT_EQ(got.scores.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
        ASSERT_NEAR(got.scores[i], want[i], 1e-5) << "at " << i;
    }
}

} // namespace

TEST(EffectiveWindow, PerLocationIsSingleCell) {
    const auto w = effective_window(window(1), 8, 8, 3, 5);
    EXPECT_EQ(w, (std::vector<GridCoord>{{3, 5}}));
}

TEST(EffectiveWindow, CornerIsTruncated) {
    const auto w = effective_window(window(3), 8, 8, 0, 0);
    EXPECT_EQ(w, (std::vector<GridCoord>{{0, 0}, {0, 1}, {1, 0}, {1, 1}}));
}

TEST(EffectiveWindow, InteriorIsCentredBlock) {
    const auto w = effective_window(window(3), 8, 8, 4, 4);
    std::vector<GridCoord> expected;
    for (std::size_t a = 3; a <= 5; ++a) {
        for (std::size_t b = 3; b <= 5; ++b) {
            expected.push_back({a, b});
        }
    }
    EXPECT_EQ(w, expected);
}

TEST(EffectiveWindow, FiveWideReachesTwoCellsEachWay) {
    const auto w = effective_window(window(5), 62, 62, 30, 30);
    ASSERT_EQ(w.size(), 25u);
    EXPECT_EQ(w.front(), (GridCoord{28, 28}));
    EXPECT_EQ(w.back(), (GridCoord{32, 32}));
    SearchConfig global;
    global.mode = SearchMode::global;
    EXPECT_EQ(effective_window(global, 4, 5, 0, 0).size(), 20u);
}

TEST(ScorePatches, SelfMatchIsZeroInEveryMode) {
    synth::Rng rng(1);
    const auto bank = synth::random_bank(rng, 3, 5, 7, 6);
    const auto test = synth::bank_member(bank, 1);
    for (auto mode : {SearchMode::local_window, SearchMode::per_location, SearchMode::global}) {
        for (std::size_t delta : {1u, 3u, 5u}) {
            SearchConfig cfg = window(delta);
            cfg.mode = mode;
            const auto map = score_patches(test, bank, cfg);
            for (float s : map.scores.data()) {
                ASSERT_EQ(s, 0.0f);
            }
        }
    }
}

TEST(ScorePatches, MatchesBruteForceOnFixedInstance) {
    synth::Rng rng(2);
    const auto bank = synth::random_bank(rng, 3, 4, 8, 8);
    const auto test = synth::random_embedding(rng, 4, 8, 8);
    expect_matches_oracle(test, bank, window(3), 1);
}

TEST(ScorePatches, MatchesBruteForceOnRandomInstances) {
    synth::Rng rng(3);
    std::uniform_int_distribution<std::size_t> n_dist(1, 5), c_dist(1, 8), s_dist(1, 12);
    const std::size_t deltas[] = {1, 3, 5};
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = n_dist(rng), c = c_dist(rng), h = s_dist(rng), w = s_dist(rng);
        const auto bank = synth::random_bank(rng, n, c, h, w);
        const auto test = synth::random_embedding(rng, c, h, w);
        const std::size_t delta = deltas[trial % 3];
        expect_matches_oracle(test, bank, window(delta, 1 + trial % 4), static_cast<long>(delta / 2));
    }
}

TEST(ScorePatches, GlobalMatchesBruteForce) {
    synth::Rng rng(4);
    const auto bank = synth::random_bank(rng, 2, 3, 5, 9);
    const auto test = synth::random_embedding(rng, 3, 5, 9);
    SearchConfig cfg;
    cfg.mode = SearchMode::global;
    expect_matches_oracle(test, bank, cfg, -1);
}

TEST(ScorePatches, DeltaOneEqualsPerLocation) {
    synth::Rng rng(5);
    const auto bank = synth::random_bank(rng, 4, 6, 9, 7);
    const auto test = synth::random_embedding(rng, 6, 9, 7);
    SearchConfig per_location;
    per_location.mode = SearchMode::per_location;
    EXPECT_EQ(score_patches(test, bank, window(1)).scores, score_patches(test, bank, per_location).scores);
}

TEST(ScorePatches, LargeWindowEqualsGlobal) {
    synth::Rng rng(6);
    const auto bank = synth::random_bank(rng, 2, 5, 6, 8);
    const auto test = synth::random_embedding(rng, 5, 6, 8);
    SearchConfig global;
    global.mode = SearchMode::global;
    const auto want = score_patches(test, bank, global).scores;
    EXPECT_EQ(score_patches(test, bank, window(15)).scores, want);
    EXPECT_EQ(score_patches(test, bank, window(101)).scores, want);
}

TEST(ScorePatches, ScoresShrinkAsWindowGrows) {
    synth::Rng rng(7);
    const auto bank = synth::random_bank(rng, 3, 4, 10, 10);
    const auto test = synth::random_embedding(rng, 4, 10, 10);
    Tensor previous = score_patches(test, bank, window(1)).scores;
    for (std::size_t delta : {3u, 5u, 7u}) {
        const Tensor current = score_patches(test, bank, window(delta)).scores;
        for (std::size_t i = 0; i < current.size(); ++i) {
            ASSERT_LE(current[i], previous[i]);
        }
        previous = current;
    }
}

TEST(ScorePatches, ShiftByOneIsAbsorbedByThreeWideWindow) {
    synth::Rng rng(8);
    const auto bank = synth::random_bank(rng, 2, 6, 9, 9);
    const auto test = synth::shifted(synth::bank_member(bank, 0), 1, 0);
    const auto scores = score_patches(test, bank, window(3)).scores;
    for (std::size_t y = 1; y + 1 < 9; ++y) {
        for (std::size_t x = 0; x < 9; ++x) {
            EXPECT_EQ(scores[y * 9 + x], 0.0f) << y << "," << x;
        }
    }
    // The uncovered row holds fill values that match nothing.
    EXPECT_GT(scores[0], 0.0f);
}

TEST(ScorePatches, ShiftBeyondRadiusIsNotAbsorbed) {
    synth::Rng rng(9);
    const auto bank = synth::random_bank(rng, 1, 6, 12, 12);
    for (long t = 0; t <= 3; ++t) {
        const auto test = synth::shifted(synth::bank_member(bank, 0), t, -t);
        const auto five = score_patches(test, bank, window(5)).scores;
        bool all_zero = true;
        for (std::size_t y = 3; y < 9; ++y) {
            for (std::size_t x = 3; x < 9; ++x) {
                all_zero = all_zero && five[y * 12 + x] == 0.0f;
            }
        }
        EXPECT_EQ(all_zero, t <= 2) << "shift " << t;
    }
}

TEST(ScorePatches, ZeroOnlyWhereExactMatchExists) {
    synth::Rng rng(10);
    const auto bank = synth::random_bank(rng, 2, 3, 6, 6);
    auto test = synth::random_embedding(rng, 3, 6, 6);
    // Copy one bank vector into location (2, 3).
    const auto patch = bank.patch(1, 3, 3);
    for (std::size_t c = 0; c < 3; ++c) {
        test.values[(c * 6 + 2) * 6 + 3] = patch[c];
    }
    const auto scores = score_patches(test, bank, window(3)).scores;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        EXPECT_EQ(scores[i] == 0.0f, i == 2 * 6 + 3) << i;
        EXPECT_GE(scores[i], 0.0f);
    }
}

TEST(ScorePatchesBatch, MatchesSingleCallsAndIgnoresBudgetAndThreads) {
    synth::Rng rng(11);
    const auto bank = synth::random_bank(rng, 5, 7, 11, 9);
    std::vector<EmbeddingTensor> tests;
    for (int i = 0; i < 6; ++i) {
        tests.push_back(synth::random_embedding(rng, 7, 11, 9, "t" + std::to_string(i)));
    }
    const auto cfg = window(5);
    std::vector<Tensor> single;
    for (const auto& t : tests) {
        single.push_back(score_patches(t, bank, cfg).scores);
    }
    const std::size_t minimum = plan_chunks(cfg, 1, 1, 7, 11, 9).working_set_bytes;
    for (std::size_t budget : {std::size_t{0}, minimum, minimum + 1000, std::size_t{1} << 20}) {
        for (std::size_t threads : {1u, 3u, 8u}) {
            SearchConfig c = cfg;
            c.memory_budget = budget;
            c.threads = threads;
            const auto batch = score_patches_batch(tests, bank, c);
            ASSERT_EQ(batch.size(), tests.size());
            for (std::size_t i = 0; i < tests.size(); ++i) {
                EXPECT_EQ(batch[i].scores, single[i]) << "budget " << budget << " threads " << threads;
                EXPECT_EQ(batch[i].image_id, tests[i].image_id);
            }
        }
    }
}

TEST(ScorePatchesBatch, BatchOfOneEqualsSingle) {
    synth::Rng rng(12);
    const auto bank = synth::random_bank(rng, 3, 4, 6, 6);
    const std::vector<EmbeddingTensor> tests{synth::random_embedding(rng, 4, 6, 6)};
    EXPECT_EQ(score_patches_batch(tests, bank, window(3))[0].scores, score_patches(tests[0], bank, window(3)).scores);
}

TEST(PlanChunks, BudgetIsRespected) {
    const auto cfg = window(3);
    const auto unbounded = plan_chunks(cfg, 10, 20, 8, 12, 12);
    EXPECT_EQ(unbounded.tests_per_chunk, 10u);
    EXPECT_EQ(unbounded.train_per_chunk, 20u);
    const auto minimum = plan_chunks(cfg, 1, 1, 8, 12, 12).working_set_bytes;
    SearchConfig tight = cfg;
    tight.memory_budget = minimum;
    const auto plan = plan_chunks(tight, 10, 20, 8, 12, 12);
    EXPECT_EQ(plan.tests_per_chunk, 1u);
    EXPECT_LE(plan.working_set_bytes, minimum);
    tight.memory_budget = 3 * minimum;
    EXPECT_LE(plan_chunks(tight, 10, 20, 8, 12, 12).working_set_bytes, 3 * minimum);
    tight.memory_budget = minimum - 1;
    EXPECT_THROW(plan_chunks(tight, 10, 20, 8, 12, 12), ConfigError);
}

TEST(ScorePatches, ErrorCases) {
    synth::Rng rng(13);
    const auto bank = synth::random_bank(rng, 2, 4, 6, 6);
    EXPECT_THROW(score_patches(synth::random_embedding(rng, 3, 6, 6), bank, window(3)), ShapeError);
    EXPECT_THROW(score_patches(synth::random_embedding(rng, 4, 6, 5), bank, window(3)), ShapeError);
    EXPECT_THROW(score_patches(synth::random_embedding(rng, 4, 6, 6), EmbeddingBank{}, window(3)), PreconditionError);
    EXPECT_THROW(window(4).validate(), ConfigError);
    EXPECT_THROW(window(0).validate(), ConfigError);
    EXPECT_THROW(parse_search_mode("nearby"), ConfigError);
    EXPECT_EQ(parse_search_mode("global"), SearchMode::global);
}

TEST(EmbeddingBank, RejectsEmptyAndMismatchedMembers) {
    synth::Rng rng(14);
    EXPECT_THROW(EmbeddingBank::from_embeddings({}, "c", "f"), ValidationError);
    const std::vector<EmbeddingTensor> mixed{synth::random_embedding(rng, 3, 4, 4),
                                             synth::random_embedding(rng, 3, 4, 5)};
    EXPECT_THROW(EmbeddingBank::from_embeddings(mixed, "c", "f"), ValidationError);
}

TEST(SquaredDistance, AgreesWithDoubleSum) {
    synth::Rng rng(15);
    for (std::size_t c : {1u, 7u, 8u, 9u, 64u, 448u}) {
        const auto a = synth::random_tensor(rng, {c});
        const auto b = synth::random_tensor(rng, {c});
        double want = 0;
        for (std::size_t i = 0; i < c; ++i) {
            const double d = double{a[i]} - double{b[i]};
            want += d * d;
        }
        EXPECT_NEAR(squared_distance(a.data().data(), b.data().data(), c), want, 1e-5 * (1 + want));
    }
}

TEST(BankIo, RoundTripAndFingerprint) {
    synth::Rng rng(16);
    synth::TempDir dir;
    const auto bank = synth::random_bank(rng, 3, 4, 5, 6);
    write_bank(bank, dir / "bank.lwnk");
    const auto back = read_bank(dir / "bank.lwnk");
    EXPECT_EQ(back.tensor(), bank.tensor());
    EXPECT_EQ(back.category(), "synthetic");
    EXPECT_EQ(back.fingerprint(), "fp");
    EXPECT_EQ(read_bank_fingerprint(dir / "bank.lwnk"), "fp");

    std::ofstream(dir / "junk.lwnk") << "LWNB";
    EXPECT_THROW(read_bank(dir / "junk.lwnk"), FormatError);
}
