#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "flockfp/diagnostics.hpp"
#include "flockfp/phase.hpp"
#include "flockfp/solver.hpp"
#include "reference_values.hpp"

using namespace flockfp;

namespace {

const ModelParams kP{1, 4.0, refval::D_08_d1};

GridDensity random_density(const Grid& g, std::uint64_t seed) {
    GridDensity f{g, std::vector<double>(g.cells())};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<> unit(0.0, 1.0);
    for (int i = 0; i < g.cells(); ++i) {
        const double v = g.center(i % g.n);
        f.values[i] = std::exp(-v * v) * (0.2 + unit(rng));
    }
    normalize(f);
    return f;
}

}  // namespace

TEST_CASE("pinned free energies of the discrete Gibbs states") {
    const SolverConfig cfg = default_solver_config(kP, refval::r_08_d1);
    const Grid g = make_grid(1, cfg.n, cfg.L);
    const GridDensity g0 = discrete_gibbs(g, make_gibbs(kP, {0.0}));
    CHECK(free_energy(g0, kP) == doctest::Approx(refval::F_G0_08_d1).epsilon(1e-10));
    const GridDensity gu = discrete_gibbs(g, make_gibbs(kP, {refval::r_08_d1}));
    CHECK(free_energy(gu, kP) == doctest::Approx(refval::F_star_08_d1).epsilon(1e-10));
    CHECK(free_energy(gu, kP) < free_energy(g0, kP));
}

TEST_CASE("diagnostics context ties its fields together") {
    const DiagnosticsContext ctx = make_diagnostics_context(kP);
    CHECK(ctx.D_star == doctest::Approx(refval::D_star_d1).epsilon(1e-10));
    REQUIRE(ctx.r.has_value());
    CHECK(*ctx.r == doctest::Approx(refval::r_08_d1).epsilon(1e-8));
    CHECK(ctx.F_star == doctest::Approx(-kP.D * ctx.log_z_min).epsilon(1e-13));
    CHECK(ctx.F_star == doctest::Approx(ctx.V_star).epsilon(1e-13));
    CHECK(ctx.F_star == doctest::Approx(refval::F_star_08_d1).epsilon(1e-10));

    const ModelParams above{1, 4.0, 1.2 * refval::D_star_d1};
    const DiagnosticsContext sup = make_diagnostics_context(above);
    CHECK_FALSE(sup.r.has_value());
    CHECK(sup.log_z_min == doctest::Approx(sup.log_z_zero).epsilon(1e-14));
}

TEST_CASE("pinned relative entropy between the two Gibbs states") {
    const SolverConfig cfg = default_solver_config(kP, refval::r_08_d1);
    const Grid g = make_grid(1, cfg.n, cfg.L);
    const GridDensity gu = discrete_gibbs(g, make_gibbs(kP, {refval::r_08_d1}));
    const double h = relative_entropy_vs_gibbs(gu, make_gibbs(kP, {0.0}), true);
    CHECK(h == doctest::Approx(refval::H_Gu_G0_08_d1).epsilon(1e-8));
}

TEST_CASE("relative entropy basics") {
    const Grid g = make_grid(1, 300, 3.0);
    const GridDensity f = random_density(g, 21);
    CHECK(std::abs(relative_entropy(f, f)) <= 1e-14);
    const GridDensity other = random_density(g, 22);
    CHECK(relative_entropy(f, other) >= 0.0);
    // Pinsker-type control: H >= 0.5 ||f-g||_1^2
    double l1 = 0.0;
    for (int i = 0; i < g.cells(); ++i)
        l1 += std::abs(f.values[i] - other.values[i]) * g.cell_volume();
    CHECK(relative_entropy(f, other) >= 0.5 * l1 * l1 - 1e-12);
}

TEST_CASE("Fisher information is nonnegative and vanishes at the fixed point") {
    const SolverConfig cfg = default_solver_config(kP, 0.5);
    const Grid g = make_grid(1, cfg.n, cfg.L);
    const GridDensity f = random_density(g, 31);
    CHECK(fisher_information(f, kP) >= 0.0);
    // at the symmetric discrete Gibbs state every face flux cancels exactly
    const GridDensity g0 = discrete_gibbs(g, make_gibbs(kP, {0.0}));
    CHECK(fisher_information(g0, kP) <= 1e-18);
}

TEST_CASE("free-energy decompositions close to rounding on random data") {
    const SolverConfig cfg = default_solver_config(kP, 1.0);
    const Grid g = make_grid(1, cfg.n, cfg.L);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<> ball(-1.2, 1.2);
    for (int trial = 0; trial < 20; ++trial) {
        const GridDensity f = random_density(g, 100 + trial);
        const std::vector<double> u{ball(rng)};
        const IdentityResiduals res = identity_residuals(f, kP, u);
        CHECK(std::abs(res.vs_anchor) <= 1e-12);
        CHECK(std::abs(res.vs_self) <= 1e-12);
        CHECK(std::abs(res.vs_minimizer) <= 1e-12);
    }
}

TEST_CASE("free energy dominates the fourth-moment lower bound") {
    const SolverConfig cfg = default_solver_config(kP, 1.0);
    const Grid g = make_grid(1, cfg.n, cfg.L);
    for (int trial = 0; trial < 10; ++trial) {
        const GridDensity f = random_density(g, 200 + trial);
        CHECK(free_energy(f, kP) >= free_energy_lower_bound(f, kP) - 1e-12);
    }
}

TEST_CASE("Csiszar-Kullback margin never goes negative") {
    const SolverConfig cfg = default_solver_config(kP, 1.0);
    const Grid g = make_grid(1, cfg.n, cfg.L);
    for (int trial = 0; trial < 10; ++trial) {
        const GridDensity f = random_density(g, 300 + trial);
        CHECK(csiszar_kullback_margin(f, kP) >= -1e-12);
    }
}

TEST_CASE("exponential fits recover synthetic rates") {
    std::vector<double> t, v;
    for (int i = 0; i < 100; ++i) {
        t.push_back(0.25 * i);
        v.push_back(3.0 * std::exp(-0.37 * t.back()));
    }
    const RateFit fit = fit_exponential_rate(t, v);
    CHECK(fit.rate == doctest::Approx(0.37).epsilon(1e-12));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(fit.n_points == 50);

    // mild multiplicative noise moves the estimate only slightly
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<> jit(-1e-3, 1e-3);
    std::vector<double> noisy = v;
    for (auto& x : noisy) x *= 1.0 + jit(rng);
    CHECK(fit_exponential_rate(t, noisy).rate == doctest::Approx(0.37).epsilon(1e-3));

    std::vector<double> t_short(t.begin(), t.begin() + 30);
    std::vector<double> v_short(v.begin(), v.begin() + 30);
    CHECK_THROWS_AS(fit_exponential_rate(t_short, v_short), WindowTooShort);

    std::vector<double> with_zero = v;
    with_zero[90] = 0.0;
    CHECK_THROWS_AS(fit_exponential_rate(t, with_zero), NonPositiveValues);
}

TEST_CASE("algebraic fits recover synthetic powers") {
    std::vector<double> t, v;
    for (int i = 1; i <= 120; ++i) {
        t.push_back(0.5 * i);
        v.push_back(5.0 * std::pow(t.back(), -1.5));
    }
    const RateFit fit = fit_algebraic_rate(t, v);
    CHECK(fit.rate == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("tail bound report activates and checks the envelope") {
    const double eta = 0.42;
    const double beta = 0.23;
    TailBoundConstants c;
    c.eta = eta;
    c.beta = beta;
    c.mu1 = 0.33;
    c.delta = 0.0225;
    c.W2 = 0.758;
    c.K_D = 2900.0;
    c.A_D = std::min(c.delta * eta / std::sqrt(c.W2), 1.0 / (c.K_D * c.K_D));

    // a synthetic trajectory that decays faster than the envelope demands and
    // sits well inside both static bounds
    std::vector<DiagnosticsRecord> recs;
    for (int i = 0; i <= 200; ++i) {
        DiagnosticsRecord r;
        r.t = 0.5 * i;
        r.Q1 = 1e-3 * std::exp(-0.5 * r.t);
        r.H_rel_star = 0.1 * r.Q1 / (eta * eta);
        r.dist_S = std::sqrt(0.1 * 2.0 * kP.D / (c.mu1 * eta * eta) * r.Q1);
        recs.push_back(r);
    }
    const TailBoundReport rep = tail_bound_report(recs, kP, c);
    CHECK(std::isfinite(rep.t0));
    CHECK(rep.q1_t0 < rep.activation_threshold);
    CHECK(c.K_D * std::sqrt(rep.q1_t0) < 0.5);
    CHECK(rep.envelope.checked > 10);
    CHECK(rep.envelope.max_violation <= 0.0);
    CHECK(rep.entropy_vs_q1.max_violation <= 0.0);
    CHECK(rep.distance_vs_q1.max_violation <= 0.0);

    // a trajectory that decays slower than the envelope must get flagged
    std::vector<DiagnosticsRecord> slow = recs;
    for (auto& r : slow) {
        r.Q1 = 1e-8 * std::exp(-0.01 * r.t);
        r.H_rel_star = 0.1 * r.Q1 / (eta * eta);
        r.dist_S = 0.0;
    }
    const TailBoundReport bad = tail_bound_report(slow, kP, c);
    CHECK(std::isfinite(bad.t0));
    CHECK(bad.envelope.max_violation > 0.0);

    // a trajectory that never gets small enough reports no activation
    std::vector<DiagnosticsRecord> high = recs;
    for (auto& r : high) r.Q1 = 0.5;
    const TailBoundReport none = tail_bound_report(high, kP, c);
    CHECK(std::isnan(none.t0));
    CHECK(none.envelope.checked == 0);
}
