#pragma once

// Exact brute-force social-choice computations used as ground truth.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "diffvote/error.hpp"
#include "diffvote/preferences.hpp"

namespace diffvote {

/// Strict total order over alternatives; order[0] is the best.
class Ranking {
public:
    explicit Ranking(std::vector<std::size_t> order) : order_(std::move(order)) {
        std::vector<bool> seen(order_.size(), false);
        for (std::size_t x : order_) {
            detail::require(x < order_.size() && !seen[x],
                            "ranking is not a permutation of 0..m-1");
            seen[x] = true;
        }
    }

    static Ranking identity(std::size_t m) {
        std::vector<std::size_t> order(m);
        std::iota(order.begin(), order.end(), std::size_t{0});
        return Ranking(std::move(order));
    }

    std::size_t m() const noexcept { return order_.size(); }
    std::size_t top() const { return order_.front(); }
    std::size_t operator[](std::size_t position) const { return order_[position]; }
    const std::vector<std::size_t>& order() const noexcept { return order_; }

    /// positions()[x] is the rank position of alternative x.
    std::vector<std::size_t> positions() const {
        std::vector<std::size_t> pos(order_.size());
        for (std::size_t p = 0; p < order_.size(); ++p) pos[order_[p]] = p;
        return pos;
    }

    Ranking reversed() const {
        return Ranking(std::vector<std::size_t>(order_.rbegin(), order_.rend()));
    }

    friend bool operator==(const Ranking&, const Ranking&) = default;

private:
    std::vector<std::size_t> order_;
};

struct CopelandResult {
    std::vector<double> scores;
    std::vector<std::size_t> winners;
};

enum class AxiomStatus { Satisfied, Violated, Vacuous };

inline std::string_view to_string(AxiomStatus s) {
    switch (s) {
        case AxiomStatus::Satisfied: return "satisfied";
        case AxiomStatus::Violated: return "violated";
        case AxiomStatus::Vacuous: return "vacuous";
    }
    return "?";
}

inline constexpr double kTieTolerance = 1e-12;

/// sign(eta(a,b) - 1/2), zero within kTieTolerance.
inline int majority_sign(const PreferenceMatrix& matrix, std::size_t a, std::size_t b) {
    const double d = matrix(a, b) - 0.5;
    if (std::abs(d) <= kTieTolerance) return 0;
    return d > 0.0 ? 1 : -1;
}

inline CopelandResult copeland(const PreferenceMatrix& matrix) {
    const std::size_t m = matrix.m();
    CopelandResult out;
    out.scores.assign(m, 0.0);
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b)
            if (a != b) out.scores[a] += majority_sign(matrix, a, b);
    const double best = *std::max_element(out.scores.begin(), out.scores.end());
    for (std::size_t a = 0; a < m; ++a)
        if (out.scores[a] == best) out.winners.push_back(a);
    return out;
}

inline std::optional<std::size_t> condorcet_winner(const PreferenceMatrix& matrix) {
    const std::size_t m = matrix.m();
    for (std::size_t a = 0; a < m; ++a) {
        bool beats_all = true;
        for (std::size_t b = 0; b < m && beats_all; ++b)
            if (b != a && majority_sign(matrix, a, b) != 1) beats_all = false;
        if (beats_all) return a;
    }
    return std::nullopt;
}

/// Expected pairwise win count against uniformly drawn opponents.
inline std::vector<double> borda_scores(const PreferenceMatrix& matrix) {
    const std::size_t m = matrix.m();
    std::vector<double> scores(m, 0.0);
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b)
            if (a != b) scores[a] += matrix(a, b);
    return scores;
}

/// Lowest index among the maximal Borda scores.
inline std::size_t borda_argmax(const PreferenceMatrix& matrix) {
    const auto scores = borda_scores(matrix);
    return static_cast<std::size_t>(
        std::distance(scores.begin(), std::max_element(scores.begin(), scores.end())));
}

/// Number of discordant pairs.
inline std::size_t kendall_distance(const Ranking& p, const Ranking& q) {
    detail::require(p.m() == q.m(), "kendall_distance: rankings have different sizes (" +
                                        std::to_string(p.m()) + " vs " + std::to_string(q.m()) +
                                        ")");
    const auto qpos = q.positions();
    std::size_t count = 0;
    for (std::size_t x = 0; x < p.m(); ++x)
        for (std::size_t y = x + 1; y < p.m(); ++y)
            if (qpos[p[x]] > qpos[p[y]]) ++count;
    return count;
}

namespace detail {

// Sum of eta[loser][winner] over pairs, in rank-position order.
inline double disagreement_sum(const std::vector<std::size_t>& order,
                               const PreferenceMatrix& matrix) {
    double total = 0.0;
    for (std::size_t hi = 0; hi < order.size(); ++hi)
        for (std::size_t lo = hi + 1; lo < order.size(); ++lo) total += matrix(order[lo], order[hi]);
    return total;
}

inline double pair_count(std::size_t m) {
    return static_cast<double>(m) * static_cast<double>(m - 1) / 2.0;
}

}  // namespace detail

/// Probability that a uniformly sampled comparison disagrees with the ranking.
inline double expected_disagreement(const Ranking& rank, const PreferenceMatrix& matrix) {
    detail::require(rank.m() == matrix.m(),
                    "expected_disagreement: ranking has m = " + std::to_string(rank.m()) +
                        " but matrix has m = " + std::to_string(matrix.m()));
    return detail::disagreement_sum(rank.order(), matrix) / detail::pair_count(matrix.m());
}

struct KemenyResult {
    Ranking ranking;
    double disagreement;
};

inline constexpr std::size_t kKemenyMaxAlternatives = 9;

/// Exhaustive Kemeny aggregation over all m! rankings (m <= 9).
///
/// Ties within 1e-12 go to the lexicographically smallest permutation. The
/// permutation space is split by first element across `threads` workers; a
/// first pass finds the exact minimum and a second pass the first ranking
/// within tolerance of it, so the answer does not depend on the split.
inline KemenyResult kemeny_optimal(const PreferenceMatrix& matrix, unsigned threads = 1) {
    const std::size_t m = matrix.m();
    detail::require(m <= kKemenyMaxAlternatives,
                    "kemeny_optimal enumerates m! rankings and is capped at m = " +
                        std::to_string(kKemenyMaxAlternatives) + "; got m = " + std::to_string(m) +
                        ", lower m");
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(m)));

    auto for_each_partition = [&](auto&& visit) {
        // visit(first, perm-with-that-first) for each permutation in lex order
        auto work = [&](std::size_t first) {
            std::vector<std::size_t> perm;
            perm.push_back(first);
            for (std::size_t x = 0; x < m; ++x)
                if (x != first) perm.push_back(x);
            do {
                visit(first, perm);
            } while (std::next_permutation(perm.begin() + 1, perm.end()));
        };
        if (threads == 1) {
            for (std::size_t first = 0; first < m; ++first) work(first);
            return;
        }
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                for (std::size_t first = t; first < m; first += threads) work(first);
            });
        for (auto& th : pool) th.join();
    };

    std::vector<double> part_min(m, std::numeric_limits<double>::infinity());
    for_each_partition([&](std::size_t first, const std::vector<std::size_t>& perm) {
        part_min[first] = std::min(part_min[first], detail::disagreement_sum(perm, matrix));
    });
    const double global_min = *std::min_element(part_min.begin(), part_min.end());
    const double cutoff = global_min + kTieTolerance * detail::pair_count(m);

    std::vector<std::optional<std::vector<std::size_t>>> part_first(m);
    for_each_partition([&](std::size_t first, const std::vector<std::size_t>& perm) {
        if (!part_first[first] && detail::disagreement_sum(perm, matrix) <= cutoff)
            part_first[first] = perm;
    });
    for (std::size_t first = 0; first < m; ++first) {
        if (part_first[first]) {
            Ranking best(*part_first[first]);
            const double value = expected_disagreement(best, matrix);
            return {std::move(best), value};
        }
    }
    throw std::logic_error("kemeny_optimal: no minimizer found");
}

inline AxiomStatus check_condorcet_criterion(std::size_t selected, const PreferenceMatrix& matrix) {
    const auto winner = condorcet_winner(matrix);
    if (!winner) return AxiomStatus::Vacuous;
    return *winner == selected ? AxiomStatus::Satisfied : AxiomStatus::Violated;
}

/// Contexts act as voters: each votes for its own Condorcet winner, and a
/// context without one abstains. A majority winner needs weight > 1/2.
inline std::optional<std::size_t> majority_winner(const ContextMixture& mix) {
    std::vector<double> support(mix.m(), 0.0);
    for (const auto& ctx : mix.contexts())
        if (const auto w = condorcet_winner(ctx.matrix)) support[*w] += ctx.weight;
    for (std::size_t a = 0; a < support.size(); ++a)
        if (support[a] > 0.5 + kTieTolerance) return a;
    return std::nullopt;
}

inline AxiomStatus check_majority_winner(std::size_t selected, const ContextMixture& mix) {
    const auto winner = majority_winner(mix);
    if (!winner) return AxiomStatus::Vacuous;
    return *winner == selected ? AxiomStatus::Satisfied : AxiomStatus::Violated;
}

/// Violated iff every context prefers a over b but the ranking puts b first.
inline AxiomStatus check_pareto(const Ranking& rank, const ContextMixture& mix) {
    detail::require(rank.m() == mix.m(), "check_pareto: ranking and mixture sizes differ");
    const auto pos = rank.positions();
    for (std::size_t a = 0; a < mix.m(); ++a) {
        for (std::size_t b = 0; b < mix.m(); ++b) {
            if (a == b) continue;
            const bool unanimous = std::all_of(
                mix.contexts().begin(), mix.contexts().end(),
                [&](const auto& ctx) { return majority_sign(ctx.matrix, a, b) == 1; });
            if (unanimous && pos[b] < pos[a]) return AxiomStatus::Violated;
        }
    }
    return AxiomStatus::Satisfied;
}

inline nlohmann::json to_json(const Ranking& rank) { return rank.order(); }

inline Ranking ranking_from_json(const nlohmann::json& j) {
    try {
        return Ranking(j.get<std::vector<std::size_t>>());
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed ranking JSON: ") + e.what());
    }
}

inline nlohmann::json axiom_json(std::string_view axiom, AxiomStatus status) {
    return {{"axiom", axiom}, {"status", to_string(status)}};
}

}  // namespace diffvote
