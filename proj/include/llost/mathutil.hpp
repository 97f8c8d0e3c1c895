#pragma once

#include <cmath>

namespace llost {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112353;

// log(1 + e^x) without overflow for large |x|.
inline double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// log(1 - e^{-a}) for a > 0. Switches branch at log 2 to keep full precision
// at both ends (Maechler's rule).
inline double log1mexp(double a) {
    return a <= 0.6931471805599453 ? std::log(-std::expm1(-a)) : std::log1p(-std::exp(-a));
}

// Digamma via upward recurrence into the asymptotic regime.
inline double digamma(double x) {
    double r = 0.0;
    while (x < 6.0) {
        r -= 1.0 / x;
        x += 1.0;
    }
    const double i1 = 1.0 / x;
    const double i2 = i1 * i1;
    return r + std::log(x) - 0.5 * i1 -
           i2 * (1.0 / 12.0 - i2 * (1.0 / 120.0 - i2 * (1.0 / 252.0 - i2 / 240.0)));
}

}  // namespace llost
