#pragma once

#include <vector>

#include "flockfp/model.hpp"
#include "flockfp/quadrature.hpp"

namespace flockfp {

// Fixed-point candidate density G_u = exp(-potential(v,u)/D) / Z(|u|).
struct GibbsState {
    ModelParams params;
    std::vector<double> u;
    double log_z = 0.0;
};

// log Z(r) = -r^2/(2D) + log K(r)
double normalization(const ModelParams& p, double r, const QuadSpec& spec);
double normalization(const ModelParams& p, double r);

GibbsState make_gibbs(const ModelParams& p, std::vector<double> u);
GibbsState make_gibbs(const ModelParams& p, std::vector<double> u, const QuadSpec& spec);

double density(const GibbsState& g, const double* v);

// polar-factorized moments of the tilted weight:
//   K(r) = |S^(d-2)| int s^(d-1) a0(rs/D) exp(-phi(s)/D) ds
//   H(r) = alpha |S^(d-2)| int (1-s^2) s^d h(rs/D) exp(-phi(s)/D) ds
// where a0 and h are the angular kernels. H(r) = 0 exactly at self-consistent
// polarization. Scaled variants keep the overflow-prone exponent split off.
ScaledReal K_of_r_scaled(const ModelParams& p, double r, const QuadSpec& spec);
ScaledReal H_of_r_scaled(const ModelParams& p, double r, const QuadSpec& spec);
double K_of_r(const ModelParams& p, double r, const QuadSpec& spec);
double H_of_r(const ModelParams& p, double r, const QuadSpec& spec);
double K_of_r(const ModelParams& p, double r);
double H_of_r(const ModelParams& p, double r);

// dH/dr, differentiated under the integral sign
ScaledReal H_prime_of_r_scaled(const ModelParams& p, double r, const QuadSpec& spec);
double H_prime_of_r(const ModelParams& p, double r);

// d^3H/dr^3 at r = 0 from the quartic angular moment; used to cross-check
// the finite-difference fourth derivative of the effective potential
double H_third_at_zero(const ModelParams& p, const QuadSpec& spec);

// mean velocity of G_u: u + (H(|u|)/K(|u|)) u/|u|
std::vector<double> mean_velocity_of_gibbs(const ModelParams& p, const std::vector<double>& u);
std::vector<double> mean_velocity_of_gibbs(const ModelParams& p, const std::vector<double>& u,
                                           const QuadSpec& spec);

// effective radial potential V(r) = r^2/2 - D log K(r) and its derivatives.
// Orders 0-2 come from quadrature identities; orders 3-4 use Richardson
// extrapolation of central differences of V' and raise DerivativeUnstable
// when the extrapolation levels disagree.
double V_and_derivatives(const ModelParams& p, double r, int order);
double V_and_derivatives(const ModelParams& p, double r, int order, const QuadSpec& spec);

// W_k = int |v|^k G_u dv evaluated on the polarized branch (|u| = r(D));
// raises NoPolarizedState above the critical noise
double weighted_moment_W(const ModelParams& p, int k);
double weighted_moment_W(const ModelParams& p, int k, const QuadSpec& spec);

// same moment at an explicitly supplied radius
double weighted_moment_W_at(const ModelParams& p, double r, int k, const QuadSpec& spec);

}  // namespace flockfp
