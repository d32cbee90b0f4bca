#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "flockfp/gibbs.hpp"
#include "flockfp/quadrature.hpp"
#include "reference_values.hpp"

using namespace flockfp;

TEST_CASE("pinned normalization") {
    const ModelParams p{1, 4.0, 0.5};
    CHECK(normalization(p, 0.7) ==
          doctest::Approx(refval::log_z_d1_a4_D05_r07).epsilon(1e-12));
}

TEST_CASE("alpha = 0 normalization is the Gaussian, independent of the tilt") {
    for (const double r : {0.0, 0.4, 1.1}) {
        const ModelParams p1{1, 0.0, 0.7};
        CHECK(normalization(p1, r) ==
              doctest::Approx(0.5 * std::log(2.0 * std::numbers::pi * p1.D)).epsilon(1e-11));
        const ModelParams p2{2, 0.0, 0.3};
        CHECK(normalization(p2, r) ==
              doctest::Approx(std::log(2.0 * std::numbers::pi * p2.D)).epsilon(1e-10));
    }
}

TEST_CASE("pinned density value") {
    const ModelParams p{1, 4.0, 0.2};
    const GibbsState g = make_gibbs(p, {0.0});
    const double v = 1.0;
    CHECK(density(g, &v) == doctest::Approx(refval::g0_at_one_d1_a4_D02).epsilon(1e-12));
}

TEST_CASE("pinned radial moments K and H") {
    const ModelParams p{1, 4.0, 0.2};
    CHECK(K_of_r(p, 0.5) == doctest::Approx(refval::K_d1_a4_D02_r05).epsilon(1e-11));
    CHECK(H_of_r(p, 0.5) == doctest::Approx(refval::H_d1_a4_D02_r05).epsilon(1e-11));
}

TEST_CASE("H is odd and vanishes at the origin") {
    const ModelParams p{1, 4.0, 0.3};
    CHECK(std::abs(H_of_r(p, 0.0)) <= 1e-12 * K_of_r(p, 0.0));
    const ModelParams p2{2, 4.0, 0.3};
    CHECK(std::abs(H_of_r(p2, 0.0)) <= 1e-12 * K_of_r(p2, 0.0));
}

TEST_CASE("Gibbs mean velocity agrees with the tensor-product quadrature route") {
    // the radial-angular factorization against a fully independent integration
    // path over the box
    const ModelParams p{1, 4.0, 0.3};
    const QuadSpec spec = make_quad_spec(p);
    const std::vector<double> u{0.4};
    const double z = tensor_integral([](const double*) { return 1.0; }, u, p, spec);
    const double m1 = tensor_integral([](const double* v) { return v[0]; }, u, p, spec);
    const double via_kernels = mean_velocity_of_gibbs(p, u)[0];
    CHECK(m1 / z == doctest::Approx(via_kernels).epsilon(1e-10));

    const ModelParams p2{2, 4.0, 0.45};
    const QuadSpec spec2 = make_quad_spec(p2);
    const std::vector<double> u2{0.3, 0.2};
    const double z2 = tensor_integral([](const double*) { return 1.0; }, u2, p2, spec2);
    const auto mv2 = mean_velocity_of_gibbs(p2, u2);
    for (int k = 0; k < 2; ++k) {
        const double m1k = tensor_integral([k](const double* v) { return v[k]; }, u2, p2, spec2);
        CHECK(m1k / z2 == doctest::Approx(mv2[k]).epsilon(1e-9));
    }
}

TEST_CASE("H' matches a central difference of H") {
    const ModelParams p{1, 4.0, 0.35};
    const double r = 0.5;
    const double e = 1e-4;
    const double fd = (H_of_r(p, r + e) - H_of_r(p, r - e)) / (2.0 * e);
    CHECK(H_prime_of_r(p, r) == doctest::Approx(fd).epsilon(1e-7));

    const ModelParams p2{2, 4.0, 0.3};
    const double fd2 = (H_of_r(p2, r + e) - H_of_r(p2, r - e)) / (2.0 * e);
    CHECK(H_prime_of_r(p2, r) == doctest::Approx(fd2).epsilon(1e-7));
}

TEST_CASE("H''' at zero matches a difference quotient of H'") {
    // H' is even in r, so 2 (H'(e) - H'(0)) / e^2 -> H'''(0)
    const ModelParams p{1, 4.0, 0.45};
    const QuadSpec spec = make_quad_spec(p);
    const double e = 1e-3;
    const double fd = 2.0 * (H_prime_of_r(p, e) - H_prime_of_r(p, 0.0)) / (e * e);
    CHECK(H_third_at_zero(p, spec) == doctest::Approx(fd).epsilon(1e-4));
}

TEST_CASE("effective potential derivatives cross-check by finite differences") {
    const ModelParams p{1, 4.0, 0.5};
    const double r = 0.4;
    const double e = 1e-5;
    const double v1_fd =
        (V_and_derivatives(p, r + e, 0) - V_and_derivatives(p, r - e, 0)) / (2.0 * e);
    CHECK(V_and_derivatives(p, r, 1) == doctest::Approx(v1_fd).epsilon(1e-8));
    const double v2_fd =
        (V_and_derivatives(p, r + e, 1) - V_and_derivatives(p, r - e, 1)) / (2.0 * e);
    CHECK(V_and_derivatives(p, r, 2) == doctest::Approx(v2_fd).epsilon(1e-8));
    // third order comes from Richardson extrapolation; compare against a
    // plain difference of the quadrature-exact second derivative
    const double h3 = 1e-3;
    const double v3_fd =
        (V_and_derivatives(p, r + h3, 2) - V_and_derivatives(p, r - h3, 2)) / (2.0 * h3);
    CHECK(V_and_derivatives(p, r, 3) == doctest::Approx(v3_fd).epsilon(1e-4));
}

TEST_CASE("pinned quartic coefficient at the critical noise") {
    const ModelParams p1{1, 4.0, refval::D_star_d1};
    CHECK(V_and_derivatives(p1, 0.0, 4) ==
          doctest::Approx(refval::V4_at_D_star_d1).epsilon(1e-6));
    const ModelParams p2{2, 4.0, refval::D_star_d2};
    CHECK(V_and_derivatives(p2, 0.0, 4) ==
          doctest::Approx(refval::V4_at_D_star_d2).epsilon(1e-6));
}

TEST_CASE("pinned K at zero tilt at the critical noise") {
    const ModelParams p1{1, 4.0, refval::D_star_d1};
    CHECK(K_of_r(p1, 0.0) == doctest::Approx(refval::K0_at_D_star_d1).epsilon(1e-10));
    const ModelParams p2{2, 4.0, refval::D_star_d2};
    CHECK(K_of_r(p2, 0.0) == doctest::Approx(refval::K0_at_D_star_d2).epsilon(1e-10));
}

TEST_CASE("pinned branch moments") {
    const ModelParams p{1, 4.0, 0.2};
    CHECK(weighted_moment_W(p, 2) == doctest::Approx(refval::W2_d1_D02).epsilon(1e-9));
    CHECK(weighted_moment_W(p, 6) == doctest::Approx(refval::W6_d1_D02).epsilon(1e-9));
}

TEST_CASE("branch moments agree with the tensor route at a given radius") {
    const ModelParams p{1, 4.0, 0.4};
    const QuadSpec spec = make_quad_spec(p);
    const double r = 0.6;
    const std::vector<double> u{r};
    const double z = tensor_integral([](const double*) { return 1.0; }, u, p, spec);
    const double m2 = tensor_integral([](const double* v) { return v[0] * v[0]; }, u, p, spec);
    CHECK(weighted_moment_W_at(p, r, 2, spec) == doctest::Approx(m2 / z).epsilon(1e-10));
}

TEST_CASE("no polarized moments above the transition") {
    const ModelParams p{1, 4.0, 1.3 * refval::D_star_d1};
    CHECK_THROWS_AS(weighted_moment_W(p, 2), NoPolarizedState);
}

TEST_CASE("model validation rejects nonsense") {
    CHECK_THROWS_AS(validate(ModelParams{1, 4.0, -0.1}), ConfigError);
    CHECK_THROWS_AS(validate(ModelParams{1, -2.0, 0.5}), ConfigError);
    CHECK_THROWS_AS(validate(ModelParams{0, 4.0, 0.5}), ConfigError);
}
