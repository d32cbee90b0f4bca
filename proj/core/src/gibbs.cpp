#include "flockfp/gibbs.hpp"

#include <cmath>
#include <functional>
#include <string>

#include "flockfp/errors.hpp"
#include "flockfp/phase.hpp"

namespace flockfp {

namespace {

// radial part of K without the sphere prefactor
ScaledReal k_radial(const ModelParams& p, double r, int extra_power, const QuadSpec& spec) {
    const auto wexp = [&](double s) { return phi_alpha(p, s) / p.D; };
    const auto kernel = [&](double s) {
        const ScaledReal a0 = angular_kernel(r * s / p.D, 0, p.d, spec);
        return std::pow(s, p.d - 1 + extra_power) * a0;
    };
    return radial_integral_scaled(wexp, kernel, spec);
}

double richardson_table(const std::function<double(double)>& T, double h0, double rel_gate,
                        double abs_gate, const char* what) {
    const double t0 = T(h0), t1 = T(0.5 * h0), t2 = T(0.25 * h0);
    const double r01 = (4.0 * t1 - t0) / 3.0;
    const double r12 = (4.0 * t2 - t1) / 3.0;
    const double rr = (16.0 * r12 - r01) / 15.0;
    const double err = std::abs(rr - r12);
    if (err > std::max(rel_gate * std::abs(rr), abs_gate))
        throw DerivativeUnstable(std::string(what) + ": extrapolation levels disagree by " +
                                 std::to_string(err));
    return rr;
}

}  // namespace

ScaledReal K_of_r_scaled(const ModelParams& p, double r, const QuadSpec& spec) {
    validate(p);
    return sphere_measure(p.d - 2) * k_radial(p, r, 0, spec);
}

ScaledReal H_of_r_scaled(const ModelParams& p, double r, const QuadSpec& spec) {
    validate(p);
    const auto wexp = [&](double s) { return phi_alpha(p, s) / p.D; };
    const auto kernel = [&](double s) {
        const ScaledReal h = angular_h(r * s / p.D, p.d, 0, spec);
        return (1.0 - s * s) * std::pow(s, p.d) * h;
    };
    return p.alpha * sphere_measure(p.d - 2) * radial_integral_scaled(wexp, kernel, spec);
}

ScaledReal H_prime_of_r_scaled(const ModelParams& p, double r, const QuadSpec& spec) {
    validate(p);
    const auto wexp = [&](double s) { return phi_alpha(p, s) / p.D; };
    const auto kernel = [&](double s) {
        const ScaledReal a2 = angular_kernel(r * s / p.D, 2, p.d, spec);
        return (1.0 - s * s) * std::pow(s, p.d + 1) * a2;
    };
    return (p.alpha / p.D) * sphere_measure(p.d - 2) *
           radial_integral_scaled(wexp, kernel, spec);
}

double K_of_r(const ModelParams& p, double r, const QuadSpec& spec) {
    return K_of_r_scaled(p, r, spec).to_double();
}

double H_of_r(const ModelParams& p, double r, const QuadSpec& spec) {
    return H_of_r_scaled(p, r, spec).to_double();
}

double K_of_r(const ModelParams& p, double r) { return K_of_r(p, r, make_quad_spec(p)); }

double H_of_r(const ModelParams& p, double r) { return H_of_r(p, r, make_quad_spec(p)); }

double H_prime_of_r(const ModelParams& p, double r) {
    return H_prime_of_r_scaled(p, r, make_quad_spec(p)).to_double();
}

double H_third_at_zero(const ModelParams& p, const QuadSpec& spec) {
    validate(p);
    const double a4 = angular_kernel(0.0, 4, p.d, spec).to_double();
    const auto wexp = [&](double s) { return phi_alpha(p, s) / p.D; };
    const auto kernel = [&](double s) {
        return ScaledReal{(1.0 - s * s) * std::pow(s, p.d + 3), 0.0};
    };
    const ScaledReal radial = radial_integral_scaled(wexp, kernel, spec);
    return p.alpha / (p.D * p.D * p.D) * sphere_measure(p.d - 2) * a4 * radial.to_double();
}

double normalization(const ModelParams& p, double r, const QuadSpec& spec) {
    const ScaledReal K = K_of_r_scaled(p, r, spec);
    if (!(K.m > 0.0)) throw NonConvergent("normalization integral came out nonpositive");
    return -r * r / (2.0 * p.D) + log_abs(K);
}

double normalization(const ModelParams& p, double r) {
    return normalization(p, r, make_quad_spec(p));
}

GibbsState make_gibbs(const ModelParams& p, std::vector<double> u, const QuadSpec& spec) {
    validate(p);
    if (static_cast<int>(u.size()) != p.d)
        throw ConfigError("Gibbs mean dimension disagrees with the model");
    const double r = norm2(u);
    return {p, std::move(u), normalization(p, r, spec)};
}

GibbsState make_gibbs(const ModelParams& p, std::vector<double> u) {
    return make_gibbs(p, std::move(u), make_quad_spec(p));
}

double density(const GibbsState& g, const double* v) {
    return std::exp(-potential(g.params, v, g.u.data()) / g.params.D - g.log_z);
}

std::vector<double> mean_velocity_of_gibbs(const ModelParams& p, const std::vector<double>& u,
                                           const QuadSpec& spec) {
    validate(p);
    const double r = norm2(u);
    if (r < 1e-14) return std::vector<double>(p.d, 0.0);
    const double hk = scaled_ratio(H_of_r_scaled(p, r, spec), K_of_r_scaled(p, r, spec));
    std::vector<double> out(p.d);
    for (int k = 0; k < p.d; ++k) out[k] = u[k] + hk * u[k] / r;
    return out;
}

std::vector<double> mean_velocity_of_gibbs(const ModelParams& p, const std::vector<double>& u) {
    return mean_velocity_of_gibbs(p, u, make_quad_spec(p));
}

double V_and_derivatives(const ModelParams& p, double r, int order, const QuadSpec& spec) {
    validate(p);
    const auto vprime = [&](double x) {
        return -scaled_ratio(H_of_r_scaled(p, x, spec), K_of_r_scaled(p, x, spec));
    };
    switch (order) {
        case 0:
            return 0.5 * r * r - p.D * log_abs(K_of_r_scaled(p, r, spec));
        case 1:
            return vprime(r);
        case 2: {
            const ScaledReal K = K_of_r_scaled(p, r, spec);
            const double hk = scaled_ratio(H_of_r_scaled(p, r, spec), K);
            const double hp = scaled_ratio(H_prime_of_r_scaled(p, r, spec), K);
            return -hp + hk * (hk + r) / p.D;
        }
        case 3: {
            const double f0 = vprime(r);
            const auto T = [&](double h) {
                return (vprime(r + h) - 2.0 * f0 + vprime(r - h)) / (h * h);
            };
            const double h0 = 1e-2 * std::max(1.0, std::abs(r));
            return richardson_table(T, h0, 1e-5, 1e-8, "third derivative of the potential");
        }
        case 4: {
            const auto T = [&](double h) {
                return (vprime(r + 2.0 * h) - 2.0 * vprime(r + h) + 2.0 * vprime(r - h) -
                        vprime(r - 2.0 * h)) /
                       (2.0 * h * h * h);
            };
            const double h0 = 2e-2 * std::max(1.0, std::abs(r));
            return richardson_table(T, h0, 1e-3, 1e-6, "fourth derivative of the potential");
        }
        default:
            throw ConfigError("potential derivatives are available for orders 0..4");
    }
}

double V_and_derivatives(const ModelParams& p, double r, int order) {
    return V_and_derivatives(p, r, order, make_quad_spec(p));
}

double weighted_moment_W_at(const ModelParams& p, double r, int k, const QuadSpec& spec) {
    validate(p);
    if (k < 0) throw ConfigError("moment order must be >= 0");
    const ScaledReal num = k_radial(p, r, k, spec);
    const ScaledReal den = k_radial(p, r, 0, spec);
    return scaled_ratio(num, den);
}

double weighted_moment_W(const ModelParams& p, int k, const QuadSpec& spec) {
    const auto r = find_r_of_D(p);
    if (!r) throw NoPolarizedState("no polarized state at or above the critical noise");
    return weighted_moment_W_at(p, *r, k, spec);
}

double weighted_moment_W(const ModelParams& p, int k) {
    return weighted_moment_W(p, k, make_quad_spec(p));
}

}  // namespace flockfp
