#pragma once

#include <cmath>
#include <vector>

#include "flockfp/errors.hpp"

namespace flockfp {

// d: velocity-space dimension, alpha: self-propulsion strength, D: noise level.
struct ModelParams {
    int d = 1;
    double alpha = 4.0;
    double D = 1.0;
};

void validate(const ModelParams& p);

// psi(v) = (alpha/4)|v|^4 - (alpha/2)|v|^2
inline double psi_alpha(const ModelParams& p, const double* v) {
    double s2 = 0.0;
    for (int k = 0; k < p.d; ++k) s2 += v[k] * v[k];
    return 0.25 * p.alpha * s2 * s2 - 0.5 * p.alpha * s2;
}

// radial weight exponent: (alpha/4)s^4 + ((1-alpha)/2)s^2
inline double phi_alpha(const ModelParams& p, double s) {
    const double s2 = s * s;
    return 0.25 * p.alpha * s2 * s2 + 0.5 * (1.0 - p.alpha) * s2;
}

// confinement-plus-alignment potential: 0.5|v-u|^2 + psi(v)
inline double potential(const ModelParams& p, const double* v, const double* u) {
    double q = 0.0;
    for (int k = 0; k < p.d; ++k) {
        const double dv = v[k] - u[k];
        q += dv * dv;
    }
    return 0.5 * q + psi_alpha(p, v);
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

inline double norm2(const std::vector<double>& a) {
    return std::sqrt(dot(a, a));
}

}  // namespace flockfp
