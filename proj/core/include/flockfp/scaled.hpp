#pragma once

#include <cmath>

namespace flockfp {

// Value represented as m * exp(e). The Gibbs weights exp(-phi/D) and the
// angular kernels exp(x cos theta) overflow doubles long before the physically
// interesting parameter range ends, so integrals are carried around with the
// exponent split off and only combined in ratios or after cancellation.
struct ScaledReal {
    double m = 0.0;  // mantissa, carries the sign
    double e = 0.0;  // additive log-scale

    [[nodiscard]] double to_double() const { return m * std::exp(e); }

    [[nodiscard]] bool is_zero() const { return m == 0.0; }

    // pull the mantissa back to +-1 so repeated products stay representable
    [[nodiscard]] ScaledReal normalized() const {
        if (m == 0.0 || !std::isfinite(m)) return {m, e};
        return {m > 0.0 ? 1.0 : -1.0, e + std::log(std::abs(m))};
    }
};

inline ScaledReal scaled_from_log(double sign_mantissa, double log_scale) {
    return {sign_mantissa, log_scale};
}

inline ScaledReal operator*(const ScaledReal& a, const ScaledReal& b) {
    return {a.m * b.m, a.e + b.e};
}

inline ScaledReal operator*(double c, const ScaledReal& a) {
    return {c * a.m, a.e};
}

// a/b as a plain double; exponents cancel before exponentiation
inline double scaled_ratio(const ScaledReal& a, const ScaledReal& b) {
    return a.m / b.m * std::exp(a.e - b.e);
}

inline double log_abs(const ScaledReal& a) {
    return std::log(std::abs(a.m)) + a.e;
}

}  // namespace flockfp
