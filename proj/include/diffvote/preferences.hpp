#pragma once

// Population pairwise preferences: matrices of win probabilities, hidden-
// context mixtures, the synthetic regimes used by the experiments, and
// Bernoulli sampling of individual comparisons.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "diffvote/error.hpp"
#include "diffvote/numeric.hpp"
#include "diffvote/rng.hpp"

namespace diffvote {

inline constexpr double kProbabilityTolerance = 1e-12;

/// Pairwise win probabilities over m alternatives: eta(a, b) = Pr(a beats b).
///
/// Always satisfies eta(a,b) + eta(b,a) = 1 (to 1e-12), entries in [0,1]
/// and a diagonal of exactly 1/2. Immutable after construction.
class PreferenceMatrix {
public:
    /// Validating constructor from a full m x m grid.
    explicit PreferenceMatrix(const std::vector<std::vector<double>>& eta) {
        const std::size_t m = eta.size();
        detail::require(m >= 2, "preference matrix needs m >= 2 alternatives, got " +
                                    std::to_string(m));
        m_ = m;
        eta_.assign(m * m, 0.5);
        for (std::size_t a = 0; a < m; ++a) {
            detail::require(eta[a].size() == m, "preference matrix row " + std::to_string(a) +
                                                    " has " + std::to_string(eta[a].size()) +
                                                    " entries, expected " + std::to_string(m));
            for (std::size_t b = 0; b < m; ++b) {
                const double v = eta[a][b];
                detail::require(std::isfinite(v) && v >= 0.0 && v <= 1.0,
                                "eta[" + std::to_string(a) + "][" + std::to_string(b) +
                                    "] = " + std::to_string(v) + " is not a probability");
                eta_[a * m + b] = v;
            }
        }
        for (std::size_t a = 0; a < m; ++a) {
            detail::require(std::abs(eta_[a * m + a] - 0.5) <= kProbabilityTolerance,
                            "diagonal eta[" + std::to_string(a) + "][" + std::to_string(a) +
                                "] must be 0.5");
            eta_[a * m + a] = 0.5;
            for (std::size_t b = a + 1; b < m; ++b) {
                detail::require(
                    std::abs(eta_[a * m + b] + eta_[b * m + a] - 1.0) <= kProbabilityTolerance,
                    "eta[" + std::to_string(a) + "][" + std::to_string(b) + "] + eta[" +
                        std::to_string(b) + "][" + std::to_string(a) + "] must equal 1");
            }
        }
    }

    /// Builds a matrix from the upper triangle; the lower triangle is set to
    /// 1 - upper so antisymmetry holds by construction.
    template <typename UpperFn>
    static PreferenceMatrix from_upper(std::size_t m, UpperFn&& upper) {
        detail::require(m >= 2, "preference matrix needs m >= 2 alternatives, got " +
                                    std::to_string(m));
        std::vector<std::vector<double>> grid(m, std::vector<double>(m, 0.5));
        for (std::size_t a = 0; a < m; ++a) {
            for (std::size_t b = a + 1; b < m; ++b) {
                const double p = upper(a, b);
                grid[a][b] = p;
                grid[b][a] = 1.0 - p;
            }
        }
        return PreferenceMatrix(grid);
    }

    /// All-ties matrix.
    static PreferenceMatrix uniform(std::size_t m) {
        return from_upper(m, [](std::size_t, std::size_t) { return 0.5; });
    }

    std::size_t m() const noexcept { return m_; }

    double operator()(std::size_t a, std::size_t b) const { return eta_[a * m_ + b]; }

    std::vector<std::vector<double>> rows() const {
        std::vector<std::vector<double>> out(m_, std::vector<double>(m_));
        for (std::size_t a = 0; a < m_; ++a)
            for (std::size_t b = 0; b < m_; ++b) out[a][b] = (*this)(a, b);
        return out;
    }

    friend bool operator==(const PreferenceMatrix&, const PreferenceMatrix&) = default;

private:
    std::size_t m_ = 0;
    std::vector<double> eta_;
};

/// A weighted collection of per-context matrices sharing the same m.
class ContextMixture {
public:
    struct Context {
        double weight;
        PreferenceMatrix matrix;
    };

    explicit ContextMixture(std::vector<Context> contexts) : contexts_(std::move(contexts)) {
        detail::require(!contexts_.empty(), "context mixture must contain at least one context");
        const std::size_t m = contexts_.front().matrix.m();
        double total = 0.0;
        for (std::size_t c = 0; c < contexts_.size(); ++c) {
            const auto& ctx = contexts_[c];
            detail::require(std::isfinite(ctx.weight) && ctx.weight >= 0.0,
                            "context " + std::to_string(c) + " has negative weight");
            detail::require(ctx.matrix.m() == m,
                            "context " + std::to_string(c) + " has m = " +
                                std::to_string(ctx.matrix.m()) + ", expected " + std::to_string(m));
            total += ctx.weight;
        }
        detail::require(std::abs(total - 1.0) <= kProbabilityTolerance,
                        "context weights sum to " + std::to_string(total) + ", expected 1");
    }

    std::size_t m() const noexcept { return contexts_.front().matrix.m(); }
    std::size_t size() const noexcept { return contexts_.size(); }
    const Context& operator[](std::size_t c) const { return contexts_[c]; }
    const std::vector<Context>& contexts() const noexcept { return contexts_; }

private:
    std::vector<Context> contexts_;
};

/// One labelled comparison (i, j, y): y = +1 means i beat j.
struct Comparison {
    std::size_t i = 0;
    std::size_t j = 1;
    int y = 1;
    std::optional<std::size_t> context;

    friend bool operator==(const Comparison&, const Comparison&) = default;
};

enum class RegimeKind { Transitive, NearTie, Cyclic, SharplyTransitive };

inline std::string_view to_string(RegimeKind k) {
    switch (k) {
        case RegimeKind::Transitive: return "transitive";
        case RegimeKind::NearTie: return "near_tie";
        case RegimeKind::Cyclic: return "cyclic";
        case RegimeKind::SharplyTransitive: return "sharply_transitive";
    }
    return "?";
}

inline RegimeKind parse_regime(std::string_view s) {
    if (s == "transitive") return RegimeKind::Transitive;
    if (s == "near_tie") return RegimeKind::NearTie;
    if (s == "cyclic") return RegimeKind::Cyclic;
    if (s == "sharply_transitive") return RegimeKind::SharplyTransitive;
    throw ValidationError("unknown regime '" + std::string(s) +
                          "' (expected transitive, near_tie, cyclic or sharply_transitive)");
}

/// Recommended scale for each regime when none is given.
inline double default_scale(RegimeKind k) {
    switch (k) {
        case RegimeKind::Transitive: return 1.0;
        case RegimeKind::NearTie: return 0.05;
        case RegimeKind::Cyclic: return 0.25;
        case RegimeKind::SharplyTransitive: return 5.0;
    }
    return 1.0;
}

struct RegimeSpec {
    RegimeKind kind = RegimeKind::Transitive;
    std::size_t m = 5;
    double scale = 1.0;
    std::uint64_t seed = 0;

    void validate() const {
        detail::require(m >= 2, "regime needs m >= 2, got " + std::to_string(m));
        detail::require(kind != RegimeKind::Cyclic || m >= 3,
                        "cyclic regime needs m >= 3, got " + std::to_string(m));
        detail::require(std::isfinite(scale) && scale > 0.0,
                        "regime scale must be positive, got " + std::to_string(scale));
    }
};

/// Logistic-link matrix over latent utilities: eta(a,b) = sigma(u_a - u_b).
inline PreferenceMatrix logistic_matrix(const std::vector<double>& utilities) {
    return PreferenceMatrix::from_upper(utilities.size(), [&](std::size_t a, std::size_t b) {
        return sigmoid(utilities[a] - utilities[b]);
    });
}

/// Transitive-family regimes use evenly spaced utilities u_a = (m-1-a) * scale,
/// so alternative 0 is best. Cyclic is the circulant tournament in which a
/// beats the next floor((m-1)/2) alternatives with probability 1/2 + d,
/// d = min(scale, 0.49); for even m the opposite pair is an exact tie.
/// The seed is carried for provenance; every regime is deterministic.
inline PreferenceMatrix generate_regime(const RegimeSpec& spec) {
    spec.validate();
    const std::size_t m = spec.m;
    if (spec.kind != RegimeKind::Cyclic) {
        std::vector<double> u(m);
        for (std::size_t a = 0; a < m; ++a) u[a] = static_cast<double>(m - 1 - a) * spec.scale;
        return logistic_matrix(u);
    }
    const double d = std::min(spec.scale, 0.49);
    const std::size_t reach = (m - 1) / 2;
    return PreferenceMatrix::from_upper(m, [&](std::size_t a, std::size_t b) {
        const std::size_t gap = (b + m - a) % m;
        if (gap >= 1 && gap <= reach) return 0.5 + d;
        if (m % 2 == 0 && gap == m / 2) return 0.5;
        return 0.5 - d;
    });
}

/// Weighted average of the context matrices.
inline PreferenceMatrix mixture_marginal(const ContextMixture& mix) {
    return PreferenceMatrix::from_upper(mix.m(), [&](std::size_t a, std::size_t b) {
        double p = 0.0;
        for (const auto& ctx : mix.contexts()) p += ctx.weight * ctx.matrix(a, b);
        return std::clamp(p, 0.0, 1.0);
    });
}

/// Only the uniform distribution over unordered pairs is implemented.
enum class PairDistribution { UniformUnorderedPairs };

/// Draws an unordered pair uniformly, orients it as (min, max) and labels it
/// +1 with probability eta(i, j).
inline Comparison sample_comparison(const PreferenceMatrix& matrix, Rng& rng,
                                    PairDistribution = PairDistribution::UniformUnorderedPairs) {
    const std::size_t m = matrix.m();
    std::uint64_t k = rng.below(m * (m - 1) / 2);
    std::size_t i = 0;
    while (k >= m - 1 - i) {
        k -= m - 1 - i;
        ++i;
    }
    const std::size_t j = i + 1 + static_cast<std::size_t>(k);
    Comparison out;
    out.i = i;
    out.j = j;
    out.y = rng.bernoulli(matrix(i, j)) ? 1 : -1;
    return out;
}

/// Samples a latent context by weight, then a comparison within it.
inline Comparison sample_context_comparison(const ContextMixture& mix, Rng& rng) {
    const double u = rng.uniform();
    std::size_t chosen = mix.size() - 1;
    while (chosen > 0 && mix[chosen].weight <= 0.0) --chosen;
    double acc = 0.0;
    for (std::size_t c = 0; c < mix.size(); ++c) {
        acc += mix[c].weight;
        if (u < acc && mix[c].weight > 0.0) {
            chosen = c;
            break;
        }
    }
    Comparison out = sample_comparison(mix[chosen].matrix, rng);
    out.context = chosen;
    return out;
}

// JSON: {"m": int, "eta": [[float]]} and
// {"contexts": [{"weight": float, "matrix": {...}}]}.

inline nlohmann::json to_json(const PreferenceMatrix& matrix) {
    return {{"m", matrix.m()}, {"eta", matrix.rows()}};
}

inline PreferenceMatrix matrix_from_json(const nlohmann::json& j) {
    try {
        detail::require(j.is_object(), "matrix JSON must be an object");
        detail::require(j.contains("m") && j.contains("eta"), "matrix JSON needs \"m\" and \"eta\"");
        const auto m = j.at("m").get<std::size_t>();
        auto eta = j.at("eta").get<std::vector<std::vector<double>>>();
        detail::require(eta.size() == m, "matrix JSON: \"m\" = " + std::to_string(m) +
                                             " but \"eta\" has " + std::to_string(eta.size()) +
                                             " rows");
        return PreferenceMatrix(eta);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed matrix JSON: ") + e.what());
    }
}

inline nlohmann::json to_json(const ContextMixture& mix) {
    nlohmann::json contexts = nlohmann::json::array();
    for (const auto& ctx : mix.contexts())
        contexts.push_back({{"weight", ctx.weight}, {"matrix", to_json(ctx.matrix)}});
    return {{"contexts", contexts}};
}

inline ContextMixture mixture_from_json(const nlohmann::json& j) {
    try {
        detail::require(j.is_object() && j.contains("contexts") && j.at("contexts").is_array(),
                        "mixture JSON needs a \"contexts\" array");
        std::vector<ContextMixture::Context> contexts;
        for (const auto& c : j.at("contexts"))
            contexts.push_back({c.at("weight").get<double>(), matrix_from_json(c.at("matrix"))});
        return ContextMixture(std::move(contexts));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed mixture JSON: ") + e.what());
    }
}

}  // namespace diffvote
