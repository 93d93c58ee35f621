#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "diffvote/oracles.hpp"
#include "diffvote/preferences.hpp"

using namespace diffvote;

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

PreferenceMatrix random_matrix(std::size_t m, Rng& rng) {
    return PreferenceMatrix::from_upper(m, [&](std::size_t, std::size_t) { return rng.uniform(); });
}

// Heap's algorithm: visits all m! orders in a different sequence from the
// lexicographic enumeration under test.
template <typename F>
void heap_permutations(std::vector<std::size_t> a, F&& visit) {
    const std::size_t n = a.size();
    std::vector<std::size_t> c(n, 0);
    visit(a);
    std::size_t i = 1;
    while (i < n) {
        if (c[i] < i) {
            std::swap(a[i % 2 == 0 ? 0 : c[i]], a[i]);
            visit(a);
            ++c[i];
            i = 1;
        } else {
            c[i] = 0;
            ++i;
        }
    }
}

// Disagreement written from the pair perspective rather than by position.
double disagreement_by_pairs(const std::vector<std::size_t>& order, const PreferenceMatrix& m) {
    std::vector<std::size_t> pos(order.size());
    for (std::size_t p = 0; p < order.size(); ++p) pos[order[p]] = p;
    double total = 0.0;
    for (std::size_t a = 0; a < m.m(); ++a)
        for (std::size_t b = a + 1; b < m.m(); ++b) total += pos[a] < pos[b] ? m(b, a) : m(a, b);
    return total / (m.m() * (m.m() - 1) / 2.0);
}

std::vector<std::size_t> iota_vec(std::size_t m) {
    std::vector<std::size_t> v(m);
    for (std::size_t k = 0; k < m; ++k) v[k] = k;
    return v;
}

}  // namespace

TEST(MajoritySign, ThresholdAndTolerance) {
    const PreferenceMatrix m({{0.5, 0.75, 0.5, 0.4999999999999},
                              {0.25, 0.5, 0.5, 0.5},
                              {0.5, 0.5, 0.5, 0.5},
                              {0.5000000000001, 0.5, 0.5, 0.5}});
    EXPECT_EQ(majority_sign(m, 0, 1), 1);
    EXPECT_EQ(majority_sign(m, 1, 0), -1);
    EXPECT_EQ(majority_sign(m, 0, 2), 0);
    EXPECT_EQ(majority_sign(m, 0, 3), 0);
}

TEST(Copeland, Examples) {
    const auto t = copeland(generate_regime({RegimeKind::Transitive, 3, 1.0, 0}));
    EXPECT_EQ(t.scores, (std::vector<double>{2, 0, -2}));
    EXPECT_EQ(t.winners, (std::vector<std::size_t>{0}));

    const auto c = copeland(generate_regime({RegimeKind::Cyclic, 3, 0.25, 0}));
    EXPECT_EQ(c.scores, (std::vector<double>{0, 0, 0}));
    EXPECT_EQ(c.winners, (std::vector<std::size_t>{0, 1, 2}));

    const auto p = copeland(PreferenceMatrix({{0.5, 0.6}, {0.4, 0.5}}));
    EXPECT_EQ(p.scores, (std::vector<double>{1, -1}));
    EXPECT_EQ(p.winners, (std::vector<std::size_t>{0}));
}

TEST(CondorcetWinner, Examples) {
    EXPECT_EQ(condorcet_winner(generate_regime({RegimeKind::Transitive, 5, 1.0, 0})), 0u);
    EXPECT_FALSE(condorcet_winner(generate_regime({RegimeKind::Cyclic, 3, 0.25, 0})));
    EXPECT_FALSE(condorcet_winner(PreferenceMatrix({{0.5, 0.5, 0.9}, {0.5, 0.5, 0.9}, {0.1, 0.1, 0.5}})));
}

TEST(CondorcetWinner, AlwaysAmongCopelandWinners) {
    Rng rng(123);
    int with_winner = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto m = random_matrix(3 + trial % 5, rng);
        const auto cw = condorcet_winner(m);
        if (!cw) continue;
        ++with_winner;
        const auto winners = copeland(m).winners;
        EXPECT_EQ(winners, (std::vector<std::size_t>{*cw}));
    }
    EXPECT_GT(with_winner, 10);
}

TEST(Borda, Examples) {
    const auto u = borda_scores(PreferenceMatrix::uniform(5));
    for (double s : u) EXPECT_DOUBLE_EQ(s, 2.0);
    const auto t = borda_scores(generate_regime({RegimeKind::Transitive, 3, 1.0, 0}));
    EXPECT_NEAR(t[0], logistic(1.0) + logistic(2.0), 1e-14);
    EXPECT_NEAR(t[0], 1.6119, 1e-4);
}

TEST(Kendall, ExamplesAndMetricAxiomsExhaustivelyForFour) {
    const auto id = Ranking::identity(3);
    EXPECT_EQ(kendall_distance(id, id), 0u);
    EXPECT_EQ(kendall_distance(id, id.reversed()), 3u);
    EXPECT_EQ(kendall_distance(id, Ranking({1, 0, 2})), 1u);
    EXPECT_THROW(kendall_distance(id, Ranking::identity(4)), ValidationError);

    std::vector<Ranking> all;
    auto perm = iota_vec(4);
    do all.emplace_back(perm);
    while (std::next_permutation(perm.begin(), perm.end()));
    ASSERT_EQ(all.size(), 24u);
    for (const auto& p : all)
        for (const auto& q : all) {
            const auto d = kendall_distance(p, q);
            EXPECT_EQ(d == 0, p == q);
            EXPECT_EQ(d, kendall_distance(q, p));
            EXPECT_LE(d, 6u);
            for (const auto& r : all) EXPECT_LE(d, kendall_distance(p, r) + kendall_distance(r, q));
        }
}

TEST(Ranking, RejectsNonPermutations) {
    EXPECT_THROW(Ranking({0, 0, 1}), ValidationError);
    EXPECT_THROW(Ranking({0, 3, 1}), ValidationError);
    EXPECT_EQ(Ranking({2, 0, 1}).positions(), (std::vector<std::size_t>{1, 2, 0}));
    EXPECT_EQ(ranking_from_json(to_json(Ranking({2, 0, 1}))), Ranking({2, 0, 1}));
    EXPECT_THROW(ranking_from_json(nlohmann::json::parse("[0, 0]")), ValidationError);
}

TEST(ExpectedDisagreement, Examples) {
    for (const auto& r : {Ranking::identity(4), Ranking({3, 1, 0, 2})})
        EXPECT_DOUBLE_EQ(expected_disagreement(r, PreferenceMatrix::uniform(4)), 0.5);

    const PreferenceMatrix sharp({{0.5, 1, 1}, {0, 0.5, 1}, {0, 0, 0.5}});
    EXPECT_DOUBLE_EQ(expected_disagreement(Ranking::identity(3), sharp), 0.0);

    // The three rotations of the cycle reverse one 0.75 edge; the other
    // three orders reverse two of them.
    const auto cyc = generate_regime({RegimeKind::Cyclic, 3, 0.25, 0});
    int low = 0, high = 0;
    auto perm = iota_vec(3);
    do {
        const double v = expected_disagreement(Ranking(perm), cyc);
        EXPECT_NEAR(v, disagreement_by_pairs(perm, cyc), 1e-15);
        if (std::abs(v - 1.25 / 3.0) < 1e-15) ++low;
        if (std::abs(v - 1.75 / 3.0) < 1e-15) ++high;
    } while (std::next_permutation(perm.begin(), perm.end()));
    EXPECT_EQ(low, 3);
    EXPECT_EQ(high, 3);
    EXPECT_NEAR(expected_disagreement(Ranking({1, 2, 0}), cyc), 0.416667, 1e-6);
}

TEST(Kemeny, TransitiveFourIsUtilityOrder) {
    const auto m = generate_regime({RegimeKind::Transitive, 4, 1.0, 0});
    const auto k = kemeny_optimal(m);
    EXPECT_EQ(k.ranking, Ranking::identity(4));
    // Mean of sigma(-|u_a - u_b|) over the six pairs: gaps 1,1,1,2,2,3.
    const double expected = (3 * logistic(-1) + 2 * logistic(-2) + logistic(-3)) / 6.0;
    EXPECT_NEAR(k.disagreement, expected, 1e-15);
}

TEST(Kemeny, TiesGoToLexicographicallyFirst) {
    const auto u = kemeny_optimal(PreferenceMatrix::uniform(5));
    EXPECT_EQ(u.ranking, Ranking::identity(5));
    EXPECT_DOUBLE_EQ(u.disagreement, 0.5);

    const auto cyc = generate_regime({RegimeKind::Cyclic, 3, 0.25, 0});
    const auto k = kemeny_optimal(cyc);
    EXPECT_NEAR(k.disagreement, 1.25 / 3.0, 1e-15);
    EXPECT_EQ(k.ranking, Ranking::identity(3));
    int ties = 0;
    auto perm = iota_vec(3);
    do ties += std::abs(disagreement_by_pairs(perm, cyc) - k.disagreement) < 1e-12;
    while (std::next_permutation(perm.begin(), perm.end()));
    EXPECT_EQ(ties, 3);
}

TEST(Kemeny, MatchesIndependentEnumerationUpToSix) {
    Rng rng(77);
    for (std::size_t m = 2; m <= 6; ++m) {
        for (int trial = 0; trial < 6; ++trial) {
            const auto matrix = random_matrix(m, rng);
            const auto k = kemeny_optimal(matrix);
            double best = 1e300;
            std::size_t visited = 0;
            heap_permutations(iota_vec(m), [&](const std::vector<std::size_t>& p) {
                const double v = disagreement_by_pairs(p, matrix);
                EXPECT_LE(k.disagreement, v + 1e-12);
                best = std::min(best, v);
                ++visited;
            });
            std::size_t fact = 1;
            for (std::size_t f = 2; f <= m; ++f) fact *= f;
            EXPECT_EQ(visited, fact);
            EXPECT_NEAR(k.disagreement, best, 1e-12);
        }
    }
}

TEST(Kemeny, ThreadCountDoesNotChangeAnswer) {
    Rng rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        const auto m = random_matrix(7, rng);
        const auto one = kemeny_optimal(m, 1);
        for (unsigned t : {2u, 3u, 4u}) {
            const auto many = kemeny_optimal(m, t);
            EXPECT_EQ(many.ranking, one.ranking);
            EXPECT_EQ(many.disagreement, one.disagreement);
        }
    }
    const auto cyc = generate_regime({RegimeKind::Cyclic, 6, 0.25, 0});
    EXPECT_EQ(kemeny_optimal(cyc, 4).ranking, kemeny_optimal(cyc, 1).ranking);
}

TEST(Kemeny, RefusesLargeM) {
    EXPECT_THROW(kemeny_optimal(PreferenceMatrix::uniform(10)), ValidationError);
}

TEST(Axioms, CondorcetCriterion) {
    const auto cyc = generate_regime({RegimeKind::Cyclic, 3, 0.25, 0});
    for (std::size_t s = 0; s < 3; ++s) EXPECT_EQ(check_condorcet_criterion(s, cyc), AxiomStatus::Vacuous);
    const auto t = generate_regime({RegimeKind::Transitive, 5, 1.0, 0});
    EXPECT_EQ(check_condorcet_criterion(0, t), AxiomStatus::Satisfied);
    EXPECT_EQ(check_condorcet_criterion(1, t), AxiomStatus::Violated);
}

TEST(Axioms, MajorityWinner) {
    const auto t = generate_regime({RegimeKind::Transitive, 3, 1.0, 0});
    const ContextMixture single({{1.0, t}});
    EXPECT_EQ(check_majority_winner(0, single), AxiomStatus::Satisfied);
    EXPECT_EQ(check_majority_winner(2, single), AxiomStatus::Violated);

    const auto reversed = logistic_matrix({0.0, 1.0, 2.0});  // winner 2
    const ContextMixture tilted({{0.6, t}, {0.4, reversed}});
    EXPECT_EQ(majority_winner(tilted), 0u);
    EXPECT_EQ(check_majority_winner(2, tilted), AxiomStatus::Violated);

    const ContextMixture split({{0.5, t}, {0.5, reversed}});
    EXPECT_FALSE(majority_winner(split));
    EXPECT_EQ(check_majority_winner(0, split), AxiomStatus::Vacuous);
}

TEST(Axioms, Pareto) {
    const auto t = generate_regime({RegimeKind::Transitive, 4, 1.0, 0});
    EXPECT_EQ(check_pareto(kemeny_optimal(t).ranking, ContextMixture({{1.0, t}})), AxiomStatus::Satisfied);

    const ContextMixture agree({{0.5, logistic_matrix({1.0, 0.0, 0.5})}, {0.5, logistic_matrix({2.0, 0.0, 3.0})}});
    EXPECT_EQ(check_pareto(Ranking({1, 0, 2}), agree), AxiomStatus::Violated);
    EXPECT_EQ(check_pareto(Ranking({2, 0, 1}), agree), AxiomStatus::Satisfied);

    const ContextMixture opposed({{0.5, logistic_matrix({2.0, 1.0, 0.0})}, {0.5, logistic_matrix({0.0, 1.0, 2.0})}});
    auto perm = iota_vec(3);
    do EXPECT_EQ(check_pareto(Ranking(perm), opposed), AxiomStatus::Satisfied);
    while (std::next_permutation(perm.begin(), perm.end()));
}

TEST(Axioms, JsonShape) {
    const auto j = axiom_json("condorcet", AxiomStatus::Violated);
    EXPECT_EQ(j.at("axiom"), "condorcet");
    EXPECT_EQ(j.at("status"), "violated");
}
