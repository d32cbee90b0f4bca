#pragma once

#include <optional>
#include <vector>

#include "flockfp/gibbs.hpp"
#include "flockfp/model.hpp"

namespace flockfp {

// Critical noise: the unique D where the defining radial integral
// int (1-s^2) s^(d+1) exp(-phi(s)/D) ds changes sign.
double find_D_star(int d, double alpha, double rel_tol = 1e-10);

// Polarization radius r(D) solving H(r) = 0, r > 0. Empty above the
// critical noise (including at it), where no polarized branch exists.
std::optional<double> find_r_of_D(const ModelParams& p);

// Constants of the quadratic (quartic at the critical noise) sandwich
//   mu1/2 dist(u,S)^2 <= V(|u|) - V_min <= |V'(|u|)|^2 / (2 mu2)
// valid for dist(u, S) < delta. Verified numerically on a radial sample
// before being returned; VerificationFailed otherwise.
struct PlConstants {
    double mu1 = 0.0;
    double mu2 = 0.0;
    double delta = 0.0;
};

PlConstants pl_constants(const ModelParams& p, double eps);

// normalized parallel variance of the polarized state:
//   kappa = (1/(D r^2)) int ((v-u) . u)^2 G_u dv,  |u| = r(D)
// equal to 1 - V''(r(D)); lives in (0,1) below the critical noise
double kappa(const ModelParams& p);
double kappa(const ModelParams& p, const std::vector<double>& u_direction);

// Spectral gap of the weighted Dirichlet form: smallest nonzero lambda with
//   int |grad g|^2 G_u dv >= lambda int g^2 G_u dv,  int g G_u dv = 0.
// Finite differences + inverse iteration, Richardson-extrapolated across a
// grid doubling. resolution <= 0 picks the per-dimension default.
double poincare_gap(const ModelParams& p, const std::vector<double>& u, int resolution = 0);

struct PoincareDetail {
    double coarse = 0.0;
    double fine = 0.0;
    double extrapolated = 0.0;
};

PoincareDetail poincare_gap_detail(const ModelParams& p, const std::vector<double>& u,
                                   int resolution = 0);

// Coercivity constants of the linearized energy on the polarized branch:
//   eta^2 = D (1 - kappa)         (squared spectral floor of Q1)
//   beta  = D Lambda (1 - kappa)  (Q2 >= beta^2 Q1 for aligned modes)
// plus the norm-equivalence pair (a, b) tying Q2^(1/2) to the plain
// weighted H1 seminorm.
struct Coercivity {
    double eta = 0.0;
    double beta = 0.0;
    double a = 0.0;
    double b = 0.0;
};

Coercivity coercivity_constants(const ModelParams& p);

// One row of the phase portrait; fields without meaning in a regime are NaN.
struct PhaseRecord {
    double D = 0.0;
    double r = 0.0;             // NaN above the critical noise
    double V_second_r = 0.0;    // V'' at r(D); NaN above
    double V_fourth_0 = 0.0;    // only at the critical noise, else NaN
    double kappa = 0.0;         // NaN above
    double eta = 0.0;           // NaN above
    double beta = 0.0;          // NaN above
    double a = 0.0;             // NaN above
    double b = 0.0;             // NaN above
    double lambda = 0.0;        // spectral gap at the free-energy minimizer
    double mu1 = 0.0;
    double mu2 = 0.0;
    double delta = 0.0;
};

// assembles everything for one D, sharing the expensive intermediates
PhaseRecord compute_phase_record(const ModelParams& p, double pl_eps, int resolution = 0);

}  // namespace flockfp
