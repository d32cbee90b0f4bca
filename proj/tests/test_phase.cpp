#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "flockfp/phase.hpp"
#include "flockfp/quadrature.hpp"
#include "reference_values.hpp"

using namespace flockfp;

TEST_CASE("pinned critical noise in both dimensions") {
    CHECK(find_D_star(1, 4.0) == doctest::Approx(refval::D_star_d1).epsilon(1e-10));
    CHECK(find_D_star(2, 4.0) == doctest::Approx(refval::D_star_d2).epsilon(1e-10));
}

TEST_CASE("defining integral changes sign exactly at the critical noise") {
    for (int d = 1; d <= 2; ++d) {
        const double Ds = find_D_star(d, 4.0);
        const auto defining = [&](double D) {
            const ModelParams p{d, 4.0, D};
            const QuadSpec spec = make_quad_spec(p);
            return radial_integral([&](double s) { return phi_alpha(p, s) / D; },
                                   [&](double s) {
                                       return (1.0 - s * s) * std::pow(s, double(d + 1));
                                   },
                                   spec);
        };
        CHECK(defining(0.9 * Ds) > 0.0);
        CHECK(defining(1.1 * Ds) < 0.0);
    }
}

TEST_CASE("pinned polarization radii") {
    const ModelParams cold{1, 4.0, 0.2};
    auto r = find_r_of_D(cold);
    REQUIRE(r.has_value());
    CHECK(*r == doctest::Approx(refval::r_d1_D02).epsilon(1e-9));

    const ModelParams p1{1, 4.0, refval::D_08_d1};
    r = find_r_of_D(p1);
    REQUIRE(r.has_value());
    CHECK(*r == doctest::Approx(refval::r_08_d1).epsilon(1e-8));

    const ModelParams p2{2, 4.0, refval::D_08_d2};
    r = find_r_of_D(p2);
    REQUIRE(r.has_value());
    CHECK(*r == doctest::Approx(refval::r_08_d2).epsilon(1e-8));
}

TEST_CASE("no polarized branch at or above the critical noise") {
    const double Ds = find_D_star(1, 4.0);
    CHECK_FALSE(find_r_of_D(ModelParams{1, 4.0, Ds}).has_value());
    CHECK_FALSE(find_r_of_D(ModelParams{1, 4.0, Ds + 1e-6}).has_value());
    CHECK_FALSE(find_r_of_D(ModelParams{1, 4.0, 1.5 * Ds}).has_value());
}

TEST_CASE("self-consistency at the polarized radius") {
    const ModelParams p{1, 4.0, refval::D_08_d1};
    const double r = *find_r_of_D(p);
    // u = r e1 reproduces itself as the Gibbs mean, and H vanishes there
    const auto mv = mean_velocity_of_gibbs(p, {r});
    CHECK(std::abs(mv[0] - r) <= 1e-9);
    CHECK(std::abs(H_of_r(p, r)) <= 1e-10 * p.alpha * K_of_r(p, r));
}

TEST_CASE("r(D) decreases toward the transition") {
    const double Ds = find_D_star(1, 4.0);
    const double r1 = *find_r_of_D(ModelParams{1, 4.0, 0.55 * Ds});
    const double r2 = *find_r_of_D(ModelParams{1, 4.0, 0.7 * Ds});
    const double r3 = *find_r_of_D(ModelParams{1, 4.0, 0.85 * Ds});
    CHECK(r1 > r2);
    CHECK(r2 > r3);
}

TEST_CASE("pinned kappa and the curvature identity") {
    const ModelParams cold{1, 4.0, 0.2};
    CHECK(kappa(cold) == doctest::Approx(refval::kappa_d1_D02).epsilon(1e-8));

    const ModelParams p{1, 4.0, refval::D_08_d1};
    const double k = kappa(p);
    CHECK(k == doctest::Approx(refval::kappa_08_d1).epsilon(1e-8));
    CHECK(k > 0.0);
    CHECK(k < 1.0);
    const double r = *find_r_of_D(p);
    CHECK(1.0 - V_and_derivatives(p, r, 2) == doctest::Approx(k).epsilon(1e-9));

    const ModelParams p2{2, 4.0, refval::D_08_d2};
    CHECK(kappa(p2) == doctest::Approx(refval::kappa_08_d2).epsilon(1e-8));
}

TEST_CASE("kappa does not depend on the tilt direction") {
    const ModelParams p{2, 4.0, refval::D_08_d2};
    const double along_axis = kappa(p, {1.0, 0.0});
    const double rotated = kappa(p, {0.6, 0.8});
    CHECK(rotated == doctest::Approx(along_axis).epsilon(1e-9));
}

TEST_CASE("spectral gap reproduces the Gaussian closed form at alpha = 0") {
    // for alpha = 0 the weight is a Gaussian with covariance D, whose
    // Poincare constant is exactly 1/D
    const ModelParams p1{1, 0.0, 0.7};
    CHECK(poincare_gap(p1, {0.0}) == doctest::Approx(1.0 / 0.7).epsilon(1e-6));
    const ModelParams p2{2, 0.0, 0.5};
    CHECK(poincare_gap(p2, {0.0, 0.0}) == doctest::Approx(2.0).epsilon(1e-5));
}

TEST_CASE("spectral gap pins on the polarized branch") {
    const ModelParams p{1, 4.0, refval::D_08_d1};
    const double r = *find_r_of_D(p);
    const PoincareDetail det = poincare_gap_detail(p, {r});
    CHECK(det.extrapolated == doctest::Approx(refval::lambda_08_d1).epsilon(1e-6));
    // Richardson sanity: the two resolutions already agree to leading order
    CHECK(std::abs(det.fine - det.extrapolated) <= std::abs(det.coarse - det.extrapolated));

    const ModelParams cold{1, 4.0, 0.2};
    CHECK(poincare_gap(cold, {*find_r_of_D(cold)}) ==
          doctest::Approx(refval::lambda_d1_D02).epsilon(1e-6));
}

TEST_CASE("coercivity constants tie together the branch quantities") {
    const ModelParams p{1, 4.0, refval::D_08_d1};
    const Coercivity c = coercivity_constants(p);
    const double k = kappa(p);
    CHECK(c.eta * c.eta == doctest::Approx(p.D * (1.0 - k)).epsilon(1e-10));
    CHECK(c.beta == doctest::Approx(refval::beta_08_d1).epsilon(1e-6));
    CHECK(c.a == doctest::Approx(refval::a_08_d1).epsilon(1e-6));
    CHECK(c.b == doctest::Approx(refval::b_08_d1).epsilon(1e-6));
    CHECK(c.a < c.b);

    const ModelParams p2{2, 4.0, refval::D_08_d2};
    const Coercivity c2 = coercivity_constants(p2);
    CHECK(c2.beta == doctest::Approx(refval::beta_08_d2).epsilon(1e-6));
    CHECK(c2.a == doctest::Approx(refval::a_08_d2).epsilon(1e-6));
    CHECK(c2.b == doctest::Approx(refval::b_08_d2).epsilon(1e-6));
}

TEST_CASE("quadratic sandwich constants hold on an independent radial sample") {
    const ModelParams p{1, 4.0, refval::D_08_d1};
    const double eps = 0.05;
    const PlConstants pl = pl_constants(p, eps);
    CHECK(pl.mu1 == doctest::Approx(refval::V2_08_d1 - 0.5 * eps).epsilon(1e-8));
    CHECK(pl.mu2 == doctest::Approx(refval::V2_08_d1 - 0.5 * eps).epsilon(1e-8));
    CHECK(pl.delta > 0.0);

    const double r = *find_r_of_D(p);
    const double v_min = V_and_derivatives(p, r, 0);
    for (int i = 0; i <= 20; ++i) {
        const double s = r - pl.delta + (2.0 * pl.delta) * i / 20.0;
        const double gap = V_and_derivatives(p, s, 0) - v_min;
        const double slope = V_and_derivatives(p, s, 1);
        const double dist = std::abs(s - r);
        CHECK(0.5 * pl.mu1 * dist * dist <= gap + 1e-13);
        CHECK(gap <= slope * slope / (2.0 * pl.mu2) + 1e-13);
    }
}

TEST_CASE("sandwich margin adapts when the curvature undercuts eps") {
    // close to the transition V'' at r(D) drops below any fixed eps; the
    // margin must shrink with it instead of going negative
    const double Ds = find_D_star(1, 4.0);
    const ModelParams p{1, 4.0, 0.995 * Ds};
    const PlConstants pl = pl_constants(p, 0.05);
    const double c = V_and_derivatives(p, *find_r_of_D(p), 2);
    CHECK(c < 0.05);
    CHECK(pl.mu1 > 0.0);
    CHECK(pl.mu1 == doctest::Approx(0.5 * c).epsilon(1e-9));
}

TEST_CASE("sandwich constants exist in the critical and supercritical regimes") {
    const double Ds = find_D_star(1, 4.0);
    const PlConstants at_crit = pl_constants(ModelParams{1, 4.0, Ds}, 0.05);
    CHECK(at_crit.mu1 > 0.0);
    CHECK(at_crit.mu2 > 0.0);
    CHECK(at_crit.delta > 0.0);
    const PlConstants above = pl_constants(ModelParams{1, 4.0, 1.2 * Ds}, 0.05);
    CHECK(above.mu1 > 0.0);
    CHECK(above.mu2 > 0.0);
}

TEST_CASE("phase records expose the regime through their NaN pattern") {
    const double Ds = find_D_star(1, 4.0);

    const PhaseRecord sub = compute_phase_record(ModelParams{1, 4.0, 0.8 * Ds}, 0.05);
    CHECK(std::isfinite(sub.r));
    CHECK(std::isfinite(sub.V_second_r));
    CHECK(std::isnan(sub.V_fourth_0));
    CHECK(std::isfinite(sub.kappa));
    CHECK(std::isfinite(sub.eta));
    CHECK(std::isfinite(sub.beta));
    CHECK(sub.lambda > 0.0);
    CHECK(sub.mu1 > 0.0);
    CHECK(sub.V_second_r > 0.0);

    const PhaseRecord sup = compute_phase_record(ModelParams{1, 4.0, 1.2 * Ds}, 0.05);
    CHECK(std::isnan(sup.r));
    CHECK(std::isnan(sup.V_second_r));
    CHECK(std::isnan(sup.V_fourth_0));
    CHECK(std::isnan(sup.kappa));
    CHECK(std::isnan(sup.eta));
    CHECK(std::isnan(sup.beta));
    CHECK(std::isnan(sup.a));
    CHECK(std::isnan(sup.b));
    CHECK(sup.lambda > 0.0);
    CHECK(sup.mu1 > 0.0);

    const PhaseRecord crit = compute_phase_record(ModelParams{1, 4.0, Ds}, 0.05);
    CHECK(std::isnan(crit.r));
    CHECK(crit.V_fourth_0 == doctest::Approx(refval::V4_at_D_star_d1).epsilon(1e-6));
}
