#pragma once

#include <array>
#include <optional>
#include <vector>

#include "flockfp/grid.hpp"
#include "flockfp/model.hpp"

namespace flockfp {

// One dump row along a trajectory. Fields that have no meaning in the current
// regime (Q1 without a polarized anchor, the entropy gap before the terminal
// mean is fixed) are NaN and serialize as empty CSV cells.
struct DiagnosticsRecord {
    double t = 0.0;
    double F = 0.0;           // free energy
    double F_gap = 0.0;       // F minus the minimum over Gibbs states
    double H_rel_star = 0.0;  // relative entropy against the tracked anchor
    double H_rel_inf = 0.0;   // relative entropy against the terminal anchor
    double I = 0.0;           // Fisher information (flux-consistent)
    std::array<double, 2> u_f{0.0, 0.0};
    double dist_S = 0.0;      // distance of u_f to the minimizing set
    double Q1 = 0.0;          // linearized energy when the anchor is active
    std::array<double, 9> M{};  // radial moments, orders 0..8
    double res_identity_anchor = 0.0;  // free energy vs anchored entropy split
    double res_identity_self = 0.0;    // gap vs self-anchored split
    double res_identity_min = 0.0;     // gap vs minimizer-anchored split
    double res_debruijn = 0.0;         // energy decay vs Fisher information
};

// Expensive scalars shared by every record of a run.
struct DiagnosticsContext {
    ModelParams params;
    double D_star = 0.0;
    std::optional<double> r;   // polarization radius, below the transition
    double log_z_min = 0.0;    // log normalization at the minimizing radius
    double log_z_zero = 0.0;   // log normalization at radius 0
    double F_star = 0.0;       // minimal free energy over Gibbs states
    double V_star = 0.0;       // minimal effective potential
};

DiagnosticsContext make_diagnostics_context(const ModelParams& p);

// discrete free energy: sum [D f log f + psi f + 0.5|v-u_f|^2 f] h^d, 0log0=0
double free_energy(const GridDensity& f, const ModelParams& p);

// sum f log(f/g) h^d over cells with f > 0; g must live on the same grid
double relative_entropy(const GridDensity& f, const GridDensity& g);

// against a Gibbs state evaluated at cell centers; discrete_normalization
// renormalizes the reference to unit discrete mass first
double relative_entropy_vs_gibbs(const GridDensity& f, const GibbsState& g,
                                 bool discrete_normalization = false);

// Fisher information assembled from the same face fluxes as the transport
// scheme, so that the discrete energy-decay identity holds to O(dt)
double fisher_information(const GridDensity& f, const ModelParams& p);

// residuals of the three exact free-energy decompositions; `u` is the probe
// anchor for the first, and its radial projection onto the minimizing set
// anchors the third
struct IdentityResiduals {
    double vs_anchor = 0.0;
    double vs_self = 0.0;
    double vs_minimizer = 0.0;
};

IdentityResiduals identity_residuals(const GridDensity& f, const ModelParams& p,
                                     const std::vector<double>& u);
IdentityResiduals identity_residuals(const GridDensity& f, const ModelParams& p,
                                     const std::vector<double>& u,
                                     const DiagnosticsContext& ctx);

// universal lower bound for the free energy in terms of the fourth moment
double free_energy_lower_bound(const GridDensity& f, const ModelParams& p);

// H[f|G_{u_f}] - 0.5 ||f - G_{u_f}||_1^2, nonnegative up to roundoff
double csiszar_kullback_margin(const GridDensity& f, const ModelParams& p);

// least-squares fit of log(values) vs t over the trailing window
struct RateFit {
    double rate = 0.0;       // decay rate lambda in value ~ C exp(-lambda t)
    double r_squared = 0.0;  // quality of the linear fit in log space
    int n_points = 0;
};

RateFit fit_exponential_rate(const std::vector<double>& t, const std::vector<double>& values,
                             double window_fraction = 0.3);

// fit of log(values) vs log(t): value ~ C t^(-p), returns p
RateFit fit_algebraic_rate(const std::vector<double>& t, const std::vector<double>& values,
                           double window_fraction = 0.3);

// Long-time bound report along a recorded trajectory: entropy controlled by
// the linearized energy, mean-velocity distance controlled through the
// quadratic sandwich, and the exponential envelope for Q1 once it is small.
struct BoundCheck {
    double activation_time = 0.0;  // first dump time the bound is checked from
    double max_violation = 0.0;    // most positive (bound - margin) overshoot
    double min_margin = 0.0;       // smallest slack after activation
    int checked = 0;
};

struct TailBoundConstants {
    double eta = 0.0;
    double beta = 0.0;
    double mu1 = 0.0;
    double delta = 0.0;
    double W2 = 0.0;
    double K_D = 0.0;
    double A_D = 0.0;  // reported small-energy threshold min(delta eta / sqrt(W2), K_D^-2)
};

struct TailBoundReport {
    BoundCheck entropy_vs_q1;     // H[f|G_*] <= Q1 / eta^2
    BoundCheck distance_vs_q1;    // |u_f - u_*|^2 <= (2D/(mu1 eta^2)) Q1
    BoundCheck envelope;          // Q1(t) <= Q1(t0) e^{-2 beta^2 (t-t0)} / (1-K_D sqrt(Q1(t0)))^2
    double A_D = 0.0;
    double activation_threshold = 0.0;  // threshold actually used to pick t0
    double t0 = 0.0;
    double q1_t0 = 0.0;
};

TailBoundReport tail_bound_report(const std::vector<DiagnosticsRecord>& records,
                                  const ModelParams& p, const TailBoundConstants& c);

}  // namespace flockfp
