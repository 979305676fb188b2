#pragma once

#include <cmath>
#include <limits>

namespace mitosim {

/// Helpers for arithmetic on quantities stored as natural logarithms.
/// Several certified constants (survival probabilities over wide intervals,
/// minorization masses) underflow double precision by hundreds of orders of
/// magnitude, so they are carried in log form end to end.

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)), stable for any magnitudes.
inline double log_add_exp(double a, double b) {
    if (a == neg_inf) return b;
    if (b == neg_inf) return a;
    const double m = a > b ? a : b;
    return m + std::log1p(std::exp(-(a > b ? a - b : b - a)));
}

/// log(exp(a) - exp(b)) for a > b; returns neg_inf when the difference
/// vanishes to rounding.
inline double log_sub_exp(double a, double b) {
    if (b == neg_inf) return a;
    const double r = std::exp(b - a);
    if (r >= 1.0) return neg_inf;
    return a + std::log1p(-r);
}

/// log(1 - exp(l)) for l <= 0: the log of the complement of a probability
/// given in log form.
inline double log1m_exp(double l) {
    if (l >= 0.0) return neg_inf;
    if (l > -0.6931471805599453) return std::log(-std::expm1(l));
    return std::log1p(-std::exp(l));
}

} // namespace mitosim
