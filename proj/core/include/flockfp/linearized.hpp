#pragma once

#include <random>
#include <vector>

#include "flockfp/gibbs.hpp"
#include "flockfp/grid.hpp"
#include "flockfp/model.hpp"
#include "flockfp/phase.hpp"

namespace flockfp {

// Zero-mean (against the anchor weight) grid function with its first
// weighted moment cached. The weight is the anchor Gibbs density evaluated
// at cell centers and renormalized to unit discrete mass.
struct Perturbation {
    Grid grid;
    GibbsState anchor;
    std::vector<double> g;
    std::vector<double> weight;       // discrete G_u, unit mass
    std::vector<double> v_g;          // (1/D) sum v g G_u h^d
    std::uint64_t anchor_tag = 0;     // cheap identity for anchor equality
};

// zero-means `raw` against the anchor weight and caches v_g
Perturbation make_perturbation(const Grid& grid, const GibbsState& anchor,
                               std::vector<double> raw);

// f = G_*(1+g) representation of a density against a given anchor
Perturbation perturbation_from_density(const GridDensity& f, const GibbsState& anchor);

// Q1 = D int g^2 G - D^2 |v_g|^2,  Q2 = D^2 int |grad g - v_g|^2 G.
// Gradients are centered in the interior, one-sided at the boundary.
double q1(const Perturbation& p);
double q2(const Perturbation& p);

// D int g1 g2 G - D^2 v_g1 . v_g2; anchors must coincide (AnchorMismatch)
double inner_u(const Perturbation& p1, const Perturbation& p2);

// weighted L2 norm squared, int g^2 G
double norm_sq(const Perturbation& p);

// drift-form linearized operator and the quadratic remainder operator:
//   L g = D lap g + (grad psi + v - u) . (v_g - grad g)
//   R g = -v_g . [D grad g - (grad psi + v - u) g]
std::vector<double> apply_L(const Perturbation& p);
std::vector<double> apply_R(const Perturbation& p);

// radial projection onto the minimizing set: r u_f / |u_f|
std::vector<double> project_u_star(const std::vector<double>& u_f, double r);

// Velocity of the moving anchor u_* = pi(u_f): the tangential projection of
// the mean-velocity derivative alpha(u_f - int |v|^2 v f dv). Orthogonal to
// u_* exactly (enforced) and to v_g up to discretization.
std::vector<double> u_star_prime(const GridDensity& f, const ModelParams& p, double r);

// R[g] = D^2 v_g . int g (grad g - v_g) G dv - (u_*'/2) . int g^2 v G dv
double remainder_R(const Perturbation& p, const std::vector<double>& u_star_prime_vec);

// Constants of the long-time contraction argument.
struct TheoremConstants {
    double C_D = 0.0;    // sixth-moment absorption constant
    double gamma = 0.0;  // weighted-norm equivalence constant
    double B_D = 0.0;    // |R[g]| <= B_D max(|v_g|, |u_*'|) Q2
    double K_D = 0.0;    // R[g] <= K_D Q2 sqrt(Q1)
    double A_D = 0.0;    // reported smallness threshold min(delta eta W2^-1/2, K_D^-2)
    double activation_threshold = 0.0;  // min(delta^2 eta^2 / W2, K_D^-2)
};

struct LinearizedContext {
    ModelParams params;
    double r = 0.0;
    double kappa = 0.0;
    double lambda = 0.0;
    Coercivity coercivity;
    double W2 = 0.0;
    double W6 = 0.0;
    PlConstants pl;
};

LinearizedContext make_linearized_context(const ModelParams& p, double pl_eps = 0.05);

// C_D: smallest constant (plus a small safety factor) making
//   (alpha^2/(8 D^2)) int g^2 |v|^6 G <= C_D int g^2 G + int |grad g|^2 G
// hold over a probe family of smooth weighted polynomials and bumps,
// sharpened by a spectral power iteration on the discrete quadratic form.
double calibrate_moment_constant(const ModelParams& p, const Grid& grid,
                                 const GibbsState& anchor);

TheoremConstants theorem_constants(const LinearizedContext& ctx, const Grid& grid);

// max violation of the sixth-moment inequality for the given perturbation
// with a freshly calibrated constant; <= 0 when the calibration is sound
double moment_weighted_bound_check(const Perturbation& p);
double moment_weighted_bound_check(const Perturbation& p, double C_D);

// Random zero-mean perturbation with first moment parallel to the anchor
// mean: smooth radial profile times the aligned linear factor, so the sharp
// aligned inequalities apply. Includes near-extremal profiles.
std::vector<double> aligned_perturbation(const Grid& grid, const GibbsState& anchor,
                                         std::mt19937_64& rng);

// smooth random field (polynomial times Gaussian envelope), general purpose
std::vector<double> smooth_random_field(const Grid& grid, std::mt19937_64& rng);

}  // namespace flockfp
