#pragma once

// Exact population objectives over a preference matrix, full-batch gradient
// descent on one scalar reward per alternative, and a finite-difference
// verification harness.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "diffvote/error.hpp"
#include "diffvote/losses.hpp"
#include "diffvote/oracles.hpp"
#include "diffvote/preferences.hpp"
#include "diffvote/rng.hpp"

namespace diffvote {

/// One finite reward per alternative.
class RewardVector {
public:
    RewardVector() = default;
    explicit RewardVector(std::vector<double> values) : values_(std::move(values)) {
        for (std::size_t a = 0; a < values_.size(); ++a)
            detail::require(std::isfinite(values_[a]),
                            "reward " + std::to_string(a) + " is not finite");
    }
    static RewardVector zeros(std::size_t m) { return RewardVector(std::vector<double>(m, 0.0)); }

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t a) const { return values_[a]; }
    const std::vector<double>& values() const noexcept { return values_; }

    friend bool operator==(const RewardVector&, const RewardVector&) = default;

private:
    std::vector<double> values_;
};

struct InitZeros {};
struct InitSeededGaussian {
    double sigma = 0.01;
    std::uint64_t seed = 0;
};

struct OptimConfig {
    double learning_rate = 0.5;
    std::size_t steps = 2000;
    std::variant<InitZeros, InitSeededGaussian> init = InitZeros{};
    bool record_trajectory = false;

    void validate() const {
        detail::require(std::isfinite(learning_rate) && learning_rate > 0.0,
                        "learning rate must be positive");
        detail::require(steps >= 1, "steps must be >= 1");
        if (const auto* g = std::get_if<InitSeededGaussian>(&init))
            detail::require(std::isfinite(g->sigma) && g->sigma >= 0.0, "init sigma must be >= 0");
    }
};

/// Step size that keeps fixed-step descent stable for the family. The BTL
/// pair curvature reaches 1/(4 tau^2), so the step scales with tau^2 below
/// tau = 0.5; the Soft Copeland edge slope peaks at beta/(4 tau).
inline double default_learning_rate(const LossSpec& spec) {
    switch (spec.family) {
        case LossFamily::BTL:
        case LossFamily::SoftKemeny: return std::min(0.5, 2.0 * spec.tau * spec.tau);
        case LossFamily::SoftCopeland: return std::min(0.1, 2.0 * spec.tau * spec.tau / spec.beta);
        case LossFamily::Exponential:
        case LossFamily::Hinge: return 0.1;
    }
    return 0.1;
}

struct OptimResult {
    RewardVector final;
    std::vector<double> objective_trace;
    double objective_final = 0.0;
    double grad_norm_final = 0.0;
    std::size_t steps = 0;
};

namespace detail {

inline void require_same_m(std::size_t r, std::size_t m, const char* who) {
    require(r == m, std::string(who) + ": reward vector has " + std::to_string(r) +
                        " entries but the matrix has m = " + std::to_string(m));
}

// Mean conditional risk over unordered pairs and its gradient, in a single
// pass with a fixed pair order so results are bit-reproducible.
inline double objective_and_gradient(const LossSpec& spec, std::span<const double> r,
                                     const PreferenceMatrix& matrix, std::vector<double>* grad) {
    const std::size_t m = matrix.m();
    const double norm = 1.0 / pair_count(m);
    if (grad) grad->assign(m, 0.0);
    double total = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a + 1; b < m; ++b) {
            const double delta = r[a] - r[b];
            const double eta = matrix(a, b);
            total += conditional_risk(spec, delta, eta);
            if (grad) {
                const double g = conditional_risk_grad(spec, delta, eta) * norm;
                (*grad)[a] += g;
                (*grad)[b] -= g;
            }
        }
    }
    return total * norm;
}

inline double l2_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace detail

/// Mean over unordered pairs {a < b} of the conditional risk at r[a] - r[b].
inline double population_objective(const LossSpec& spec, const RewardVector& r,
                                   const PreferenceMatrix& matrix) {
    detail::require_same_m(r.size(), matrix.m(), "population_objective");
    return detail::objective_and_gradient(spec, r.values(), matrix, nullptr);
}

inline std::vector<double> population_gradient(const LossSpec& spec, const RewardVector& r,
                                               const PreferenceMatrix& matrix) {
    detail::require_same_m(r.size(), matrix.m(), "population_gradient");
    std::vector<double> g;
    detail::objective_and_gradient(spec, r.values(), matrix, &g);
    return g;
}

/// Sampled-data variant: mean instance loss over a list of comparisons.
inline double empirical_objective(const LossSpec& spec, const RewardVector& r,
                                  std::span<const Comparison> data) {
    detail::require(!data.empty(), "empirical_objective: no comparisons");
    double total = 0.0;
    for (const auto& c : data) {
        detail::require(c.i < r.size() && c.j < r.size() && c.i != c.j,
                        "empirical_objective: comparison indices out of range");
        total += loss_value(spec, r[c.i] - r[c.j], c.y);
    }
    return total / static_cast<double>(data.size());
}

inline std::vector<double> empirical_gradient(const LossSpec& spec, const RewardVector& r,
                                              std::span<const Comparison> data) {
    detail::require(!data.empty(), "empirical_gradient: no comparisons");
    std::vector<double> g(r.size(), 0.0);
    const double norm = 1.0 / static_cast<double>(data.size());
    for (const auto& c : data) {
        detail::require(c.i < r.size() && c.j < r.size() && c.i != c.j,
                        "empirical_gradient: comparison indices out of range");
        const double d = loss_grad_margin(spec, r[c.i] - r[c.j], c.y) * norm;
        g[c.i] += d;
        g[c.j] -= d;
    }
    return g;
}

inline RewardVector initial_rewards(std::size_t m, const OptimConfig& config) {
    const auto* g = std::get_if<InitSeededGaussian>(&config.init);
    if (!g) return RewardVector::zeros(m);
    Rng rng(g->seed);
    std::vector<double> r(m);
    for (double& x : r) x = g->sigma * rng.normal();
    return RewardVector(std::move(r));
}

/// Fixed-step full-batch descent r <- r - lr * grad for config.steps steps.
/// Throws OptimizerError naming the step if the objective or gradient stops
/// being finite.
inline OptimResult gradient_descent(const LossSpec& spec, const PreferenceMatrix& matrix,
                                    const OptimConfig& config) {
    spec.validate();
    config.validate();
    const std::size_t m = matrix.m();
    std::vector<double> r = initial_rewards(m, config).values();
    std::vector<double> g;
    OptimResult out;
    if (config.record_trajectory) out.objective_trace.reserve(config.steps + 1);

    auto evaluate = [&](std::size_t step) {
        const double f = detail::objective_and_gradient(spec, r, matrix, &g);
        if (!std::isfinite(f))
            throw OptimizerError(spec.label() + ": objective became non-finite at step " +
                                     std::to_string(step),
                                 step);
        for (double x : g)
            if (!std::isfinite(x))
                throw OptimizerError(spec.label() + ": gradient became non-finite at step " +
                                         std::to_string(step),
                                     step);
        if (config.record_trajectory) out.objective_trace.push_back(f);
        return f;
    };

    evaluate(0);
    double f = 0.0;
    for (std::size_t step = 1; step <= config.steps; ++step) {
        for (std::size_t a = 0; a < m; ++a) r[a] -= config.learning_rate * g[a];
        f = evaluate(step);
    }
    for (std::size_t a = 0; a < m; ++a)
        if (!std::isfinite(r[a]))
            throw OptimizerError(spec.label() + ": rewards became non-finite", config.steps);
    out.final = RewardVector(std::move(r));
    out.objective_final = f;
    out.grad_norm_final = detail::l2_norm(g);
    out.steps = config.steps;
    return out;
}

/// Descending sort of rewards; equal rewards keep index order.
inline Ranking induced_ranking(const RewardVector& r) {
    std::vector<std::size_t> order(r.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return r[a] > r[b]; });
    return Ranking(std::move(order));
}

struct FiniteDifferenceReport {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;
};

inline constexpr double kHingeKinkExclusion = 1e-4;
inline constexpr double kRelativeErrorFloor = 1e-12;

/// Central differences of population_objective against population_gradient,
/// coordinate by coordinate. Relative error uses max(|analytic|, |numeric|,
/// 1e-12) as the denominator. For the hinge, coordinates touching a pair
/// within 1e-4 of a kink (|delta| = 1) are skipped and counted.
inline FiniteDifferenceReport finite_difference_check(const LossSpec& spec,
                                                      const PreferenceMatrix& matrix,
                                                      const RewardVector& r, double step) {
    detail::require(step > 0.0 && step <= 1e-2, "finite_difference_check: step must lie in (0, 1e-2]");
    detail::require_same_m(r.size(), matrix.m(), "finite_difference_check");
    const auto analytic = population_gradient(spec, r, matrix);
    FiniteDifferenceReport report;
    const std::size_t m = r.size();
    for (std::size_t a = 0; a < m; ++a) {
        if (spec.family == LossFamily::Hinge) {
            bool near_kink = false;
            for (std::size_t b = 0; b < m; ++b)
                if (b != a && std::abs(std::abs(r[a] - r[b]) - 1.0) < kHingeKinkExclusion + step)
                    near_kink = true;
            if (near_kink) {
                ++report.skipped;
                continue;
            }
        }
        std::vector<double> plus = r.values(), minus = r.values();
        plus[a] += step;
        minus[a] -= step;
        const double numeric =
            (detail::objective_and_gradient(spec, plus, matrix, nullptr) -
             detail::objective_and_gradient(spec, minus, matrix, nullptr)) /
            (2.0 * step);
        const double denom =
            std::max({std::abs(analytic[a]), std::abs(numeric), kRelativeErrorFloor});
        report.max_relative_error =
            std::max(report.max_relative_error, std::abs(analytic[a] - numeric) / denom);
        ++report.checked;
    }
    return report;
}

inline nlohmann::json to_json(const OptimResult& result) {
    nlohmann::json j = {{"final", result.final.values()},
                        {"objective_final", result.objective_final},
                        {"grad_norm_final", result.grad_norm_final},
                        {"steps", result.steps}};
    if (!result.objective_trace.empty()) j["objective_trace"] = result.objective_trace;
    return j;
}

}  // namespace diffvote
