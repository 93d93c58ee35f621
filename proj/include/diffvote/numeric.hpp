#pragma once

#include <cmath>

namespace diffvote {

// |z| beyond this saturates the logistic to exactly 0 or 1.
inline constexpr double kLogisticSaturation = 700.0;

inline double sigmoid(double z) {
    if (z > kLogisticSaturation) return 1.0;
    if (z < -kLogisticSaturation) return 0.0;
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// sigma(z) * (1 - sigma(z)) without cancellation for large |z|.
inline double sigmoid_slope(double z) {
    return sigmoid(z) * sigmoid(-z);
}

// log(1 + exp(x))
inline double log1p_exp(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

inline double sech2(double x) {
    const double c = std::cosh(x);
    return 1.0 / (c * c);
}

inline int sign_of(double x) {
    return (x > 0.0) - (x < 0.0);
}

}  // namespace diffvote
