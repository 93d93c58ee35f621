#pragma once

// Self-check suite: analytic gradients against central differences, and the
// limit/monotonicity properties the losses are built to satisfy.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "diffvote/losses.hpp"
#include "diffvote/optimizer.hpp"
#include "diffvote/preferences.hpp"
#include "diffvote/rng.hpp"

namespace diffvote {

struct PropertyResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct CheckOptions {
    // Fault injection: scale this family's analytic gradient by (1 + 1e-3).
    std::optional<LossFamily> perturb_family;
};

inline constexpr double kFiniteDifferenceStep = 1e-5;
inline constexpr double kGradientTolerance = 1e-6;

/// Hyperparameter points exercised by the gradient check. Temperatures stay
/// >= 1 for Soft Kemeny so the loss does not saturate to within rounding of
/// 1 on |delta| <= 10, where central differences lose all precision.
inline std::vector<LossSpec> gradient_check_specs() {
    std::vector<LossSpec> specs;
    for (double tau : {0.5, 1.0, 2.0}) specs.push_back(LossSpec::btl(tau));
    for (double tau : {1.0, 2.0}) specs.push_back(LossSpec::soft_kemeny(tau));
    for (double tau : {0.5, 1.0, 2.0})
        for (double beta : {1.0, 4.0})
            for (double lambda : {0.1, 0.01}) specs.push_back(LossSpec::soft_copeland(tau, beta, lambda));
    specs.push_back(LossSpec::exponential());
    specs.push_back(LossSpec::hinge());
    return specs;
}

inline std::vector<double> gradient_check_deltas() {
    std::vector<double> d;
    for (int k = -20; k <= 20; ++k) d.push_back(0.5 * k + 0.0625);
    return d;
}

namespace detail {

inline std::string fmt_double(const char* pattern, double v) {
    char buf[128];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

inline PropertyResult gradient_check_family(LossFamily family, const CheckOptions& opts) {
    PropertyResult res{"gradient_fd_" + std::string(to_string(family)), false, ""};
    const double fault = opts.perturb_family == family ? 1.0 + 1e-3 : 1.0;
    double worst = 0.0;
    std::size_t points = 0;
    std::string where;
    for (const auto& spec : gradient_check_specs()) {
        if (spec.family != family) continue;
        for (double delta : gradient_check_deltas()) {
            for (int y : {-1, 1}) {
                if (family == LossFamily::Hinge && std::abs(y * delta - 1.0) < kHingeKinkExclusion)
                    continue;
                const double analytic = fault * loss_grad_margin(spec, delta, y);
                const double numeric = (loss_value(spec, delta + kFiniteDifferenceStep, y) -
                                        loss_value(spec, delta - kFiniteDifferenceStep, y)) /
                                       (2.0 * kFiniteDifferenceStep);
                const double denom =
                    std::max({std::abs(analytic), std::abs(numeric), kRelativeErrorFloor});
                const double err = std::abs(analytic - numeric) / denom;
                ++points;
                if (err > worst) {
                    worst = err;
                    where = spec.label() + fmt_double(" delta=%g", delta) + " y=" + std::to_string(y);
                }
            }
        }
    }
    res.passed = worst <= kGradientTolerance && points >= 50;
    res.detail = std::to_string(points) + " points, max rel err " + fmt_double("%.3e", worst) +
                 (where.empty() ? "" : " at " + where);
    return res;
}

}  // namespace detail

/// Runs every property; each result names what it checked and the worst case.
inline std::vector<PropertyResult> run_property_suite(const CheckOptions& opts = {}) {
    std::vector<PropertyResult> out;

    for (LossFamily f : kAllFamilies) out.push_back(detail::gradient_check_family(f, opts));

    {
        PropertyResult res{"population_gradient_fd", false, ""};
        const auto matrix = generate_regime({RegimeKind::Transitive, 5, 1.0, 0});
        Rng rng(7);
        std::vector<double> r(5);
        for (double& x : r) x = rng.normal();
        double worst = 0.0;
        std::size_t skipped = 0;
        for (const auto& spec : gradient_check_specs()) {
            const auto rep = finite_difference_check(spec, matrix, RewardVector(r), kFiniteDifferenceStep);
            worst = std::max(worst, rep.max_relative_error);
            skipped += rep.skipped;
        }
        res.passed = worst <= kGradientTolerance;
        res.detail = "max rel err " + detail::fmt_double("%.3e", worst) + ", hinge skips " +
                     std::to_string(skipped);
        out.push_back(res);
    }

    {
        PropertyResult res{"label_symmetry", false, ""};
        double worst = 0.0;
        for (const auto& spec : gradient_check_specs())
            for (double d : gradient_check_deltas())
                worst = std::max(worst, std::abs(loss_value(spec, d, 1) - loss_value(spec, -d, -1)));
        res.passed = worst <= 1e-12;
        res.detail = "max |L(d,+1) - L(-d,-1)| = " + detail::fmt_double("%.3e", worst);
        out.push_back(res);
    }

    {
        PropertyResult res{"soft_kemeny_gradient_sign", false, ""};
        bool ok = true;
        for (double tau : {0.1, 1.0, 5.0})
            for (int k = -200; k <= 200; ++k)
                for (int y : {-1, 1}) {
                    const double g = loss_grad_margin(LossSpec::soft_kemeny(tau), 0.05 * k, y);
                    if (sign_of(g) != -y) ok = false;
                }
        res.passed = ok;
        res.detail = "sign(dL/dDelta) = -y on delta in [-10, 10]";
        out.push_back(res);
    }

    {
        // For y = +1 the gradient is negative on every delta <= 0. On the
        // positive side the edge slope is only bounded above by beta/(4 tau),
        // so the band beta/(4 tau lambda) is not sufficient; the checked band
        // uses the slope's lower bound on |delta| <= tau instead.
        PropertyResult res{"soft_copeland_monotone_band", false, ""};
        bool ok = true;
        std::size_t n = 0;
        for (double tau : {0.1, 0.5, 1.0})
            for (double beta : {1.0, 4.0, 16.0})
                for (double lambda : {0.1, 0.01}) {
                    const auto spec = LossSpec::soft_copeland(tau, beta, lambda);
                    const double band = soft_copeland_monotone_band(tau, beta, lambda);
                    const double loose = beta / (4.0 * tau * lambda);
                    for (int k = -99; k <= 99; ++k) {
                        const double d = k <= 0 ? 0.01 * k * loose : 0.01 * k * band;
                        ++n;
                        if (!(loss_grad_margin(spec, d, 1) < 0.0) || !(loss_grad_margin(spec, -d, -1) > 0.0))
                            ok = false;
                    }
                }
        res.passed = ok;
        res.detail = std::to_string(n) + " points: delta in (-beta/(4 tau lambda), 0] and (0, provable band)";
        out.push_back(res);
    }

    {
        PropertyResult res{"soft_kemeny_vanishing_gradient", false, ""};
        double worst = 0.0;
        for (double tau : {0.1, 1.0})
            for (int y : {-1, 1})
                worst = std::max(worst, std::abs(loss_grad_margin(LossSpec::soft_kemeny(tau), y * 30.0 * tau, y)));
        res.passed = worst < 1e-6;
        res.detail = "|grad| at y*delta/tau = 30: " + detail::fmt_double("%.3e", worst);
        out.push_back(res);
    }

    {
        PropertyResult res{"soft_kemeny_low_temperature_limit", false, ""};
        const auto spec = LossSpec::soft_kemeny(0.01);
        double worst = 0.0;
        for (int k = -200; k <= 200; ++k) {
            const double d = 0.05 * k;
            if (std::abs(d) < 0.5) continue;
            for (int y : {-1, 1})
                worst = std::max(worst, std::abs(loss_value(spec, d, y) - (y * d < 0 ? 1.0 : 0.0)));
        }
        res.passed = worst < 1e-3;
        res.detail = "max |L - 1[y delta < 0]| for |delta| >= 0.5: " + detail::fmt_double("%.3e", worst);
        out.push_back(res);
    }

    {
        PropertyResult res{"soft_copeland_saturation_limit", false, ""};
        double worst = 0.0;
        for (double tau : {0.01, 0.1, 1.0})
            for (int k = -400; k <= 400; ++k) {
                const double d = 0.025 * k;
                if (std::abs(win_probability(d, tau) - 0.5) < 0.05) continue;
                worst = std::max(worst, std::abs(soft_copeland_edge(d, tau, 100.0) - sign_of(d)));
            }
        res.passed = worst < 1e-3;
        res.detail = "beta=100, |sigma - 1/2| >= 0.05: max |s - sign| = " + detail::fmt_double("%.3e", worst);
        out.push_back(res);
    }

    {
        PropertyResult res{"btl_calibration", false, ""};
        double worst = 0.0;
        for (double tau : {0.5, 1.0, 2.0})
            for (double eta : {0.1, 0.3, 0.6, 0.7311, 0.9}) {
                const double d = btl_optimal_margin(eta, tau);
                worst = std::max(worst, std::abs(conditional_risk_grad(LossSpec::btl(tau), d, eta)));
            }
        res.passed = worst < 1e-12;
        res.detail = "max |risk'(tau log(eta/(1-eta)))| = " + detail::fmt_double("%.3e", worst);
        out.push_back(res);
    }

    {
        PropertyResult res{"soft_copeland_score_limit", false, ""};
        Rng rng(11);
        std::vector<double> r(7);
        for (std::size_t a = 0; a < r.size(); ++a) r[a] = 0.5 * static_cast<double>(a) + 0.1 * rng.uniform();
        double worst = 0.0;
        for (std::size_t x = 0; x < r.size(); ++x) {
            double count = 0.0;
            for (std::size_t o = 0; o < r.size(); ++o)
                if (o != x) count += sign_of(r[x] - r[o]);
            count /= static_cast<double>(r.size() - 1);
            worst = std::max(worst, std::abs(soft_copeland_score(r, x, 0.01, 100.0) - count));
        }
        res.passed = worst < 1e-3;
        res.detail = "beta=100, tau=0.01, m=7: max |C - sign count| = " + detail::fmt_double("%.3e", worst);
        out.push_back(res);
    }

    return out;
}

inline nlohmann::json to_json(const PropertyResult& r) {
    return {{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}};
}

}  // namespace diffvote
