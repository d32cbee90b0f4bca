#pragma once

#include <functional>
#include <vector>

#include "flockfp/model.hpp"
#include "flockfp/scaled.hpp"

namespace flockfp {

enum class QuadMode { radial_angular, tensor_grid };

struct QuadSpec {
    double rel_tol = 1e-12;
    double s_max = 0.0;  // radial truncation; <= 0 asks for the default rule
    int n_theta = 16;    // initial even panel count for angular integrals
    QuadMode mode = QuadMode::radial_angular;
};

void validate(const QuadSpec& spec);

// Truncation rule: beyond the outermost stationary point of the radial weight
// exponent, walk out until the weight has dropped by another factor exp(-40).
double truncation_radius(const ModelParams& p);

QuadSpec make_quad_spec(const ModelParams& p, double rel_tol = 1e-12);

// surface measure of the k-sphere, with the 0-sphere (two points) giving 2
// and k = -1 (the d = 1 angular set) also giving 2 by convention
double sphere_measure(int k);

// int_0^pi cos^p(t) sin^(d-2)(t) exp(x cos t) dt for d >= 2; for d = 1 the
// angular set degenerates to two points and the value is 2cosh(x) (p even)
// or 2sinh(x) (p odd). Returned with exp(|x|) split into the exponent so
// large drift arguments stay representable.
ScaledReal angular_kernel(double x, int p, int d, const QuadSpec& spec);

// kernel h and its first two derivatives: deriv = k corresponds to p = 1 + k
ScaledReal angular_h(double s, int d, int deriv, const QuadSpec& spec);

// int_0^s_max kernel(s) * exp(-weight_exponent(s)) ds, adaptive to rel_tol
double radial_integral(const std::function<double(double)>& weight_exponent,
                       const std::function<double(double)>& kernel,
                       const QuadSpec& spec);

// same, but the kernel itself carries an exponent (angular factors); the
// result keeps the common log-scale split off
ScaledReal radial_integral_scaled(const std::function<double(double)>& weight_exponent,
                                  const std::function<ScaledReal(double)>& kernel,
                                  const QuadSpec& spec);

// int_{R^d} f(v) exp(-potential(v, u)/D) dv over the truncated box,
// by nested adaptive panels (d = 1) or self-refining product rules (d = 2, 3)
double tensor_integral(const std::function<double(const double*)>& f,
                       const std::vector<double>& u,
                       const ModelParams& params,
                       const QuadSpec& spec);

}  // namespace flockfp
