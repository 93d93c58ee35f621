#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "diffvote/oracles.hpp"
#include "diffvote/preferences.hpp"

using namespace diffvote;

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

PreferenceMatrix pair_matrix(double eta01) { return PreferenceMatrix({{0.5, eta01}, {1.0 - eta01, 0.5}}); }

}  // namespace

TEST(PreferenceMatrix, RejectsMalformedInput) {
    EXPECT_THROW(PreferenceMatrix(std::vector<std::vector<double>>{{0.5}}), ValidationError);
    EXPECT_THROW(PreferenceMatrix({{0.5, 0.7}, {0.4, 0.5}}), ValidationError);
    EXPECT_THROW(PreferenceMatrix({{0.5, 1.2}, {-0.2, 0.5}}), ValidationError);
    EXPECT_THROW(PreferenceMatrix({{0.4, 0.6}, {0.4, 0.6}}), ValidationError);
    EXPECT_THROW(PreferenceMatrix({{0.5, 0.6}, {0.4, 0.5, 0.1}}), ValidationError);
    EXPECT_NO_THROW(PreferenceMatrix({{0.5, 1.0}, {0.0, 0.5}}));
}

TEST(GenerateRegime, TransitiveMatchesLogisticOfUtilityGaps) {
    const auto m = generate_regime({RegimeKind::Transitive, 3, 1.0, 0});
    EXPECT_NEAR(m(0, 1), 0.7310585786300049, 1e-15);
    EXPECT_NEAR(m(0, 2), 0.8807970779778823, 1e-15);
    EXPECT_NEAR(m(0, 1), logistic(1.0), 1e-15);
    EXPECT_NEAR(m(1, 0), 1.0 - logistic(1.0), 1e-15);
}

TEST(GenerateRegime, NearTieApproachesHalf) {
    const auto m = generate_regime({RegimeKind::NearTie, 6, 1e-9, 0});
    for (std::size_t a = 0; a < 6; ++a)
        for (std::size_t b = 0; b < 6; ++b) EXPECT_NEAR(m(a, b), 0.5, 1e-8);
}

TEST(GenerateRegime, CyclicThreeHasNoCondorcetWinner) {
    const auto m = generate_regime({RegimeKind::Cyclic, 3, 0.25, 0});
    EXPECT_DOUBLE_EQ(m(0, 1), 0.75);
    EXPECT_DOUBLE_EQ(m(1, 2), 0.75);
    EXPECT_DOUBLE_EQ(m(2, 0), 0.75);
    // Every alternative loses one head-to-head.
    for (std::size_t x = 0; x < 3; ++x) {
        bool beats_all = true;
        for (std::size_t o = 0; o < 3; ++o)
            if (o != x && !(m(x, o) > 0.5)) beats_all = false;
        EXPECT_FALSE(beats_all) << x;
    }
    EXPECT_FALSE(condorcet_winner(m).has_value());
}

TEST(GenerateRegime, CyclicEvenMHasExactOppositeTies) {
    const auto m = generate_regime({RegimeKind::Cyclic, 4, 0.25, 0});
    EXPECT_DOUBLE_EQ(m(0, 2), 0.5);
    EXPECT_DOUBLE_EQ(m(1, 3), 0.5);
    EXPECT_DOUBLE_EQ(m(0, 1), 0.75);
    EXPECT_DOUBLE_EQ(m(3, 0), 0.75);
}

TEST(GenerateRegime, SharplyTransitiveIsNearlyDeterministic) {
    const auto m = generate_regime({RegimeKind::SharplyTransitive, 5, 40.0, 0});
    for (std::size_t a = 0; a < 5; ++a)
        for (std::size_t b = a + 1; b < 5; ++b) EXPECT_GT(m(a, b), 1.0 - 1e-15);
}

TEST(GenerateRegime, ValidatesArguments) {
    EXPECT_THROW(generate_regime({RegimeKind::Transitive, 1, 1.0, 0}), ValidationError);
    EXPECT_THROW(generate_regime({RegimeKind::Cyclic, 2, 0.25, 0}), ValidationError);
    EXPECT_THROW(generate_regime({RegimeKind::Transitive, 4, 0.0, 0}), ValidationError);
    EXPECT_THROW(parse_regime("circular"), ValidationError);
    EXPECT_EQ(parse_regime("near_tie"), RegimeKind::NearTie);
}

TEST(MixtureMarginal, ExamplesAndWeightValidation) {
    const auto base = generate_regime({RegimeKind::Transitive, 4, 1.0, 0});
    EXPECT_EQ(mixture_marginal(ContextMixture({{1.0, base}})), base);

    const ContextMixture half({{0.5, pair_matrix(0.9)}, {0.5, pair_matrix(0.1)}});
    EXPECT_NEAR(mixture_marginal(half)(0, 1), 0.5, 1e-15);

    const ContextMixture tilted({{0.7, pair_matrix(1.0)}, {0.3, pair_matrix(0.0)}});
    EXPECT_NEAR(mixture_marginal(tilted)(0, 1), 0.7, 1e-15);

    EXPECT_THROW(ContextMixture({{0.6, pair_matrix(0.9)}, {0.6, pair_matrix(0.1)}}), ValidationError);
    EXPECT_THROW(ContextMixture({{1.2, pair_matrix(0.9)}, {-0.2, pair_matrix(0.1)}}), ValidationError);
    EXPECT_THROW(ContextMixture({{0.5, pair_matrix(0.9)}, {0.5, base}}), ValidationError);
    EXPECT_THROW(ContextMixture({}), ValidationError);
}

TEST(SampleComparison, DegenerateProbabilities) {
    Rng rng(1);
    for (int k = 0; k < 200; ++k) EXPECT_EQ(sample_comparison(pair_matrix(1.0), rng).y, 1);
    for (int k = 0; k < 200; ++k) EXPECT_EQ(sample_comparison(pair_matrix(0.0), rng).y, -1);
}

TEST(SampleComparison, FrequencyMatchesEta) {
    Rng rng(2);
    int wins = 0;
    for (int k = 0; k < 10000; ++k) wins += sample_comparison(pair_matrix(0.75), rng).y == 1;
    EXPECT_NEAR(wins / 10000.0, 0.75, 0.02);
}

TEST(SampleComparison, PairsAreUniformAndOriented) {
    const auto m = PreferenceMatrix::uniform(4);
    Rng rng(3);
    std::vector<int> counts(16, 0);
    for (int k = 0; k < 12000; ++k) {
        const auto c = sample_comparison(m, rng);
        ASSERT_LT(c.i, c.j);
        ASSERT_LT(c.j, 4u);
        ++counts[c.i * 4 + c.j];
    }
    for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t b = a + 1; b < 4; ++b) EXPECT_NEAR(counts[a * 4 + b] / 12000.0, 1.0 / 6.0, 0.02);
}

TEST(SampleComparison, SameSeedSameStream) {
    const auto m = generate_regime({RegimeKind::Transitive, 5, 0.3, 0});
    Rng a(42), b(42);
    for (int k = 0; k < 500; ++k) {
        const auto x = sample_comparison(m, a);
        const auto y = sample_comparison(m, b);
        ASSERT_EQ(x.i, y.i);
        ASSERT_EQ(x.j, y.j);
        ASSERT_EQ(x.y, y.y);
    }
}

TEST(SampleContextComparison, SingleContextMatchesPlainSampling) {
    const auto m = generate_regime({RegimeKind::Transitive, 4, 0.5, 0});
    const ContextMixture mix({{1.0, m}});
    Rng a(9), b(9);
    for (int k = 0; k < 300; ++k) {
        const auto x = sample_context_comparison(mix, a);
        b.uniform();  // the context draw
        const auto y = sample_comparison(m, b);
        ASSERT_EQ(x.context, std::optional<std::size_t>(0));
        ASSERT_EQ(x.i, y.i);
        ASSERT_EQ(x.j, y.j);
        ASSERT_EQ(x.y, y.y);
    }
}

TEST(SampleContextComparison, ContextFrequencies) {
    Rng rng(5);
    const ContextMixture degenerate({{1.0, pair_matrix(0.9)}, {0.0, pair_matrix(0.1)}});
    for (int k = 0; k < 1000; ++k) EXPECT_EQ(sample_context_comparison(degenerate, rng).context, 0u);

    const ContextMixture even({{0.5, pair_matrix(0.9)}, {0.5, pair_matrix(0.1)}});
    int first = 0;
    for (int k = 0; k < 10000; ++k) first += sample_context_comparison(even, rng).context == 0u;
    EXPECT_NEAR(first / 10000.0, 0.5, 0.02);
}

TEST(PreferenceJson, RoundTripsAndRejectsGarbage) {
    const auto m = generate_regime({RegimeKind::Cyclic, 5, 0.25, 0});
    EXPECT_EQ(matrix_from_json(nlohmann::json::parse(to_json(m).dump())), m);

    const ContextMixture mix({{0.3, pair_matrix(0.9)}, {0.7, pair_matrix(0.2)}});
    const auto back = mixture_from_json(to_json(mix));
    ASSERT_EQ(back.size(), 2u);
    EXPECT_DOUBLE_EQ(back[1].weight, 0.7);
    EXPECT_EQ(back[1].matrix, pair_matrix(0.2));

    EXPECT_THROW(matrix_from_json(nlohmann::json::parse(R"({"m": 2})")), ValidationError);
    EXPECT_THROW(matrix_from_json(nlohmann::json::parse(R"({"m": 3, "eta": [[0.5,0.5],[0.5,0.5]]})")),
                 ValidationError);
    EXPECT_THROW(matrix_from_json(nlohmann::json::parse(R"({"m": 2, "eta": "x"})")), ValidationError);
    EXPECT_THROW(mixture_from_json(nlohmann::json::parse(R"({"contexts": 3})")), ValidationError);
}

TEST(Rng, DerivedSeedsDifferAcrossStreams) {
    EXPECT_NE(derive_seed(0, 0), derive_seed(0, 1));
    EXPECT_NE(derive_seed(0, 1), derive_seed(1, 0));
    EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
    Rng rng(11);
    double sum = 0.0, sq = 0.0;
    for (int k = 0; k < 20000; ++k) {
        const double z = rng.normal();
        sum += z;
        sq += z * z;
    }
    EXPECT_NEAR(sum / 20000.0, 0.0, 0.03);
    EXPECT_NEAR(sq / 20000.0, 1.0, 0.05);
}
