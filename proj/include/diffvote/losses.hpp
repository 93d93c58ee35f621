#pragma once

// Instance losses on a pairwise margin, their closed-form margin derivatives
// and conditional risks for the five loss families.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "diffvote/error.hpp"
#include "diffvote/numeric.hpp"

namespace diffvote {

enum class LossFamily { BTL, SoftCopeland, SoftKemeny, Exponential, Hinge };

inline constexpr LossFamily kAllFamilies[] = {LossFamily::BTL, LossFamily::SoftCopeland,
                                              LossFamily::SoftKemeny, LossFamily::Exponential,
                                              LossFamily::Hinge};

inline std::string_view to_string(LossFamily f) {
    switch (f) {
        case LossFamily::BTL: return "btl";
        case LossFamily::SoftCopeland: return "soft_copeland";
        case LossFamily::SoftKemeny: return "soft_kemeny";
        case LossFamily::Exponential: return "exponential";
        case LossFamily::Hinge: return "hinge";
    }
    return "?";
}

inline LossFamily parse_family(std::string_view s) {
    for (LossFamily f : kAllFamilies)
        if (to_string(f) == s) return f;
    throw ValidationError("unknown loss family '" + std::string(s) +
                          "' (expected btl, soft_copeland, soft_kemeny, exponential or hinge)");
}

/// A loss family plus the hyperparameters it uses. Exponential and hinge
/// take none; BTL and SoftKemeny take tau; SoftCopeland takes tau, beta and
/// lambda. Build through the named factories, which validate.
struct LossSpec {
    LossFamily family = LossFamily::BTL;
    double tau = 1.0;
    double beta = 0.0;
    double lambda = 0.0;

    static LossSpec btl(double tau) { return make(LossFamily::BTL, tau, 0.0, 0.0); }
    static LossSpec soft_kemeny(double tau) { return make(LossFamily::SoftKemeny, tau, 0.0, 0.0); }
    static LossSpec soft_copeland(double tau, double beta, double lambda) {
        return make(LossFamily::SoftCopeland, tau, beta, lambda);
    }
    static LossSpec exponential() { return make(LossFamily::Exponential, 1.0, 0.0, 0.0); }
    static LossSpec hinge() { return make(LossFamily::Hinge, 1.0, 0.0, 0.0); }

    static LossSpec make(LossFamily family, double tau, double beta, double lambda) {
        LossSpec s{family, tau, beta, lambda};
        if (!s.uses_tau()) s.tau = 1.0;
        if (!s.uses_beta_lambda()) s.beta = s.lambda = 0.0;
        s.validate();
        return s;
    }

    bool uses_tau() const noexcept {
        return family == LossFamily::BTL || family == LossFamily::SoftCopeland ||
               family == LossFamily::SoftKemeny;
    }
    bool uses_beta_lambda() const noexcept { return family == LossFamily::SoftCopeland; }

    void validate() const {
        auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
        if (uses_tau())
            detail::require(positive(tau), std::string(to_string(family)) +
                                               ": tau must be positive, got " +
                                               std::to_string(tau));
        if (uses_beta_lambda()) {
            detail::require(positive(beta),
                            "soft_copeland: beta must be positive, got " + std::to_string(beta));
            detail::require(positive(lambda), "soft_copeland: lambda must be positive, got " +
                                                  std::to_string(lambda));
        }
    }

    /// "btl(tau=0.05)" style label for logs and tables.
    std::string label() const {
        std::string out(to_string(family));
        char buf[96];
        if (uses_beta_lambda()) {
            std::snprintf(buf, sizeof buf, "(tau=%g,beta=%g,lambda=%g)", tau, beta, lambda);
            out += buf;
        } else if (uses_tau()) {
            std::snprintf(buf, sizeof buf, "(tau=%g)", tau);
            out += buf;
        }
        return out;
    }

    friend bool operator==(const LossSpec&, const LossSpec&) = default;
};

/// sigma(delta / tau).
inline double win_probability(double delta, double tau) { return sigmoid(delta / tau); }

/// Soft Copeland edge score tanh(beta (sigma(delta/tau) - 1/2)): odd,
/// strictly increasing, bounded by tanh(beta/2).
inline double soft_copeland_edge(double delta, double tau, double beta) {
    // sigma(z) - 1/2 = tanh(z/2)/2 keeps oddness exact.
    return std::tanh(beta * 0.5 * std::tanh(0.5 * delta / tau));
}

inline double soft_copeland_edge_slope(double delta, double tau, double beta) {
    const double z = delta / tau;
    return (beta / tau) * sigmoid_slope(z) * sech2(beta * 0.5 * std::tanh(0.5 * z));
}

/// Half-width of a margin band on which the regularized Soft Copeland
/// gradient has sign -y. The edge slope decreases in |delta|, so on
/// |delta| <= tau it is at least its value at tau.
inline double soft_copeland_monotone_band(double tau, double beta, double lambda) {
    const double floor_slope = soft_copeland_edge_slope(tau, tau, beta);
    return lambda > 0.0 ? std::min(tau, floor_slope / lambda) : tau;
}

inline double loss_value(const LossSpec& spec, double delta, int y) {
    const double yd = y * delta;
    switch (spec.family) {
        case LossFamily::BTL: return log1p_exp(-yd / spec.tau);
        case LossFamily::SoftCopeland:
            return -y * soft_copeland_edge(delta, spec.tau, spec.beta) +
                   0.5 * spec.lambda * delta * delta;
        case LossFamily::SoftKemeny: return sigmoid(-yd / spec.tau);
        case LossFamily::Exponential: return std::exp(-yd);
        case LossFamily::Hinge: return std::max(0.0, 1.0 - yd);
    }
    return 0.0;
}

/// d loss / d delta. The hinge uses subgradient 0 at the kink y*delta = 1.
inline double loss_grad_margin(const LossSpec& spec, double delta, int y) {
    const double yd = y * delta;
    switch (spec.family) {
        case LossFamily::BTL: return -(y / spec.tau) * sigmoid(-yd / spec.tau);
        case LossFamily::SoftCopeland:
            return -y * soft_copeland_edge_slope(delta, spec.tau, spec.beta) + spec.lambda * delta;
        case LossFamily::SoftKemeny: return -(y / spec.tau) * sigmoid_slope(-yd / spec.tau);
        case LossFamily::Exponential: return -y * std::exp(-yd);
        case LossFamily::Hinge: return yd < 1.0 ? -static_cast<double>(y) : 0.0;
    }
    return 0.0;
}

/// Expected loss at margin delta when the first alternative wins w.p. eta.
inline double conditional_risk(const LossSpec& spec, double delta, double eta) {
    return eta * loss_value(spec, delta, +1) + (1.0 - eta) * loss_value(spec, delta, -1);
}

inline double conditional_risk_grad(const LossSpec& spec, double delta, double eta) {
    return eta * loss_grad_margin(spec, delta, +1) + (1.0 - eta) * loss_grad_margin(spec, delta, -1);
}

/// Minimizer of the BTL conditional risk: tau * log(eta / (1 - eta)).
inline double btl_optimal_margin(double eta, double tau) {
    detail::require(eta > 0.0 && eta < 1.0,
                    "btl_optimal_margin: eta must lie in (0,1); at eta = " + std::to_string(eta) +
                        " the risk has no finite minimizer");
    detail::require(tau > 0.0, "btl_optimal_margin: tau must be positive");
    return tau * std::log(eta / (1.0 - eta));
}

/// Mean soft Copeland edge of alternative x against every other alternative
/// (uniform opponent distribution).
inline double soft_copeland_score(const std::vector<double>& rewards, std::size_t x, double tau,
                                  double beta) {
    detail::require(x < rewards.size(), "soft_copeland_score: alternative out of range");
    detail::require(rewards.size() >= 2, "soft_copeland_score: need at least two alternatives");
    double total = 0.0;
    for (std::size_t o = 0; o < rewards.size(); ++o)
        if (o != x) total += soft_copeland_edge(rewards[x] - rewards[o], tau, beta);
    return total / static_cast<double>(rewards.size() - 1);
}

inline nlohmann::json to_json(const LossSpec& spec) {
    nlohmann::json j = {{"family", to_string(spec.family)}};
    if (spec.uses_tau()) j["tau"] = spec.tau;
    if (spec.uses_beta_lambda()) {
        j["beta"] = spec.beta;
        j["lambda"] = spec.lambda;
    }
    return j;
}

inline LossSpec loss_from_json(const nlohmann::json& j) {
    try {
        detail::require(j.is_object() && j.contains("family"), "loss JSON needs a \"family\"");
        const LossFamily family = parse_family(j.at("family").get<std::string>());
        auto field = [&](const char* key) -> std::optional<double> {
            if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
            return j.at(key).get<double>();
        };
        LossSpec probe{family};
        if (probe.uses_tau())
            detail::require(field("tau").has_value(),
                            std::string(to_string(family)) + " requires \"tau\"");
        if (probe.uses_beta_lambda())
            detail::require(field("beta") && field("lambda"),
                            "soft_copeland requires \"beta\" and \"lambda\"");
        return LossSpec::make(family, field("tau").value_or(1.0), field("beta").value_or(0.0),
                              field("lambda").value_or(0.0));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed loss JSON: ") + e.what());
    }
}

}  // namespace diffvote
