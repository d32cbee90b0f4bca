#include "flockfp/phase.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "banded.hpp"
#include "flockfp/errors.hpp"
#include "flockfp/grid.hpp"

namespace flockfp {

namespace {

using detail::BandMatrix;
using detail::band_mult;
using detail::cholesky_in_place;
using detail::cholesky_solve;

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

// sign carrier of the branch-defining integral int (1-s^2) s^(d+1) e^(-phi/D)
ScaledReal defining_integral(int d, double alpha, double D) {
    const ModelParams p{d, alpha, D};
    const QuadSpec spec = make_quad_spec(p);
    const auto wexp = [&](double s) { return phi_alpha(p, s) / D; };
    const auto kernel = [&](double s) {
        return ScaledReal{(1.0 - s * s) * std::pow(s, d + 1), 0.0};
    };
    return radial_integral_scaled(wexp, kernel, spec);
}

// magnitude scale for the root stopping rule: same integrand as H with the
// sign-carrying factor (1-s^2) replaced by (1+s^2)
ScaledReal h_scale(const ModelParams& p, double r, const QuadSpec& spec) {
    const auto wexp = [&](double s) { return phi_alpha(p, s) / p.D; };
    const auto kernel = [&](double s) {
        const ScaledReal h = angular_h(r * s / p.D, p.d, 0, spec);
        return (1.0 + s * s) * std::pow(s, p.d) * h;
    };
    return p.alpha * sphere_measure(p.d - 2) * radial_integral_scaled(wexp, kernel, spec);
}

double scaled_abs_ratio(const ScaledReal& a, const ScaledReal& b) {
    return std::abs(a.m / b.m) * std::exp(a.e - b.e);
}

double kappa_at(const ModelParams& p, double r, std::vector<double> direction) {
    const double nrm = norm2(direction);
    if (!(nrm > 0.0)) throw ConfigError("kappa direction must be nonzero");
    std::vector<double> u(p.d);
    for (int k = 0; k < p.d; ++k) u[k] = r * direction[k] / nrm;

    const QuadSpec spec = make_quad_spec(p);
    const auto f = [&](const double* v) {
        double s = 0.0;
        for (int k = 0; k < p.d; ++k) s += (v[k] - u[k]) * u[k];
        return s * s;
    };
    const double raw = tensor_integral(f, u, p, spec);
    const double log_z = normalization(p, r, spec);
    return raw * std::exp(-log_z) / (p.D * r * r);
}

double gap_on_grid(const ModelParams& p, const std::vector<double>& u, int n) {
    const double L = truncation_radius(p) + norm2(u);
    const Grid grid = make_grid(p.d, n, L);
    const int N = grid.cells();
    const int bw = p.d == 1 ? 1 : grid.n;
    const double h = grid.h;
    const double vol = grid.cell_volume();

    // scale-free weights: exp(-(phi - phi_min)/D)
    std::vector<double> phi(N);
    double phi_min = std::numeric_limits<double>::infinity();
    double v[2];
    for (int i = 0; i < N; ++i) {
        grid.coords(i, v);
        phi[i] = potential(p, v, u.data());
        phi_min = std::min(phi_min, phi[i]);
    }
    std::vector<double> w(N), bdiag(N);
    for (int i = 0; i < N; ++i) {
        w[i] = std::exp(-(phi[i] - phi_min) / p.D);
        bdiag[i] = w[i] * vol;
    }

    // Dirichlet form with face-midpoint weights
    BandMatrix A;
    A.n = N;
    A.bw = bw;
    A.a.assign(static_cast<std::size_t>(N) * (bw + 1), 0.0);
    const double face_scale = std::pow(h, p.d - 2);
    auto add_face = [&](int i, int j, double wf) {
        // j = i + band offset by construction
        A.at(0, i) += wf;
        A.at(0, j) += wf;
        A.at(j - i, i) -= wf;
    };
    double vm[2];
    for (int i = 0; i < N; ++i) {
        grid.coords(i, vm);
        const int ix = p.d == 1 ? i : i % grid.n;
        if (ix < grid.n - 1) {
            const double save = vm[0];
            vm[0] += 0.5 * h;
            add_face(i, i + 1, std::exp(-(potential(p, vm, u.data()) - phi_min) / p.D) * face_scale);
            vm[0] = save;
        }
        if (p.d == 2 && i / grid.n < grid.n - 1) {
            vm[1] += 0.5 * h;
            add_face(i, i + grid.n,
                     std::exp(-(potential(p, vm, u.data()) - phi_min) / p.D) * face_scale);
            vm[1] -= 0.5 * h;
        }
    }

    // pin the constant null mode by a large penalty at the heaviest cell;
    // deflation below keeps iterates in the zero-mean subspace, so the
    // penalized factorization only ever selects a particular solution
    BandMatrix Apen = A;
    double max_diag = 0.0;
    int pin = 0;
    for (int i = 0; i < N; ++i) {
        max_diag = std::max(max_diag, A.at(0, i));
        if (w[i] > w[pin]) pin = i;
    }
    Apen.at(0, pin) += 1e10 * max_diag;
    cholesky_in_place(Apen);

    const double b_total = [&] {
        double s = 0.0;
        for (double bi : bdiag) s += bi;
        return s;
    }();
    auto deflate = [&](std::vector<double>& x) {
        double s = 0.0;
        for (int i = 0; i < N; ++i) s += bdiag[i] * x[i];
        s /= b_total;
        for (int i = 0; i < N; ++i) x[i] -= s;
    };

    std::vector<double> x(N), y(N), ay(N);
    for (int i = 0; i < N; ++i) {
        grid.coords(i, vm);
        x[i] = vm[0];
    }
    deflate(x);

    double lambda_prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 500; ++it) {
        for (int i = 0; i < N; ++i) y[i] = bdiag[i] * x[i];
        cholesky_solve(Apen, y);
        deflate(y);
        band_mult(A, y, ay);
        double yay = 0.0, yby = 0.0;
        for (int i = 0; i < N; ++i) {
            yay += y[i] * ay[i];
            yby += bdiag[i] * y[i] * y[i];
        }
        if (!(yby > 0.0)) throw EigenNotConverged("inverse iteration collapsed to zero");
        const double lambda = yay / yby;
        const double nb = std::sqrt(yby);
        for (int i = 0; i < N; ++i) x[i] = y[i] / nb;
        if (it >= 2 && std::abs(lambda - lambda_prev) <= 1e-12 * std::abs(lambda)) return lambda;
        lambda_prev = lambda;
    }
    throw EigenNotConverged("spectral gap iteration did not settle in 500 sweeps");
}

PlConstants pl_constants_impl(const ModelParams& p, double eps, double d_star) {
    if (!(eps > 0.0)) throw ConfigError("sandwich margin eps must be positive");
    const QuadSpec spec = make_quad_spec(p);
    const auto V = [&](double rho) { return V_and_derivatives(p, rho, 0, spec); };
    const auto Vp = [&](double rho) { return V_and_derivatives(p, rho, 1, spec); };
    const double num_tol = 1e-12;

    const bool critical = std::abs(p.D - d_star) <= 1e-9 * d_star;

    if (critical) {
        const double c = V_and_derivatives(p, 0.0, 4, spec);
        if (!(c > 0.0)) throw VerificationFailed("quartic curvature not positive at the transition");
        // margin never larger than the curvature itself, so mu stays positive
        // (and within eps of c) however close the curvature is to zero
        const double mu = c - 0.5 * std::min(eps, c);
        const double v0 = V(0.0);
        const double upper_c = std::pow(6.0, 4.0 / 3.0) / (24.0 * std::cbrt(mu));
        double delta = 0.9 * eps;
        for (int shrink = 0; shrink < 30; ++shrink, delta *= 0.5) {
            bool ok = true;
            for (int j = 1; j <= 40 && ok; ++j) {
                const double uu = delta * j / 40.0;
                const double gap = V(uu) - v0;
                const double grad = Vp(uu);
                if (mu / 24.0 * std::pow(uu, 4) > gap + num_tol) ok = false;
                if (gap > upper_c * std::pow(std::abs(grad), 4.0 / 3.0) + num_tol) ok = false;
            }
            if (ok) return {mu, mu, delta};
        }
        throw VerificationFailed("quartic sandwich failed on every radius tried");
    }

    if (p.D < d_star) {
        const auto ropt = find_r_of_D(p);
        if (!ropt) throw VerificationFailed("polarized radius vanished below the transition");
        const double r = *ropt;
        const double c = V_and_derivatives(p, r, 2, spec);
        if (!(c > 0.0)) throw VerificationFailed("curvature not positive at the polarized radius");
        const double mu = c - 0.5 * std::min(eps, c);
        const double v_star = V(r);
        double delta = 0.9 * std::min(0.5 * r, eps);
        for (int shrink = 0; shrink < 30; ++shrink, delta *= 0.5) {
            bool ok = true;
            for (int j = -20; j <= 20 && ok; ++j) {
                if (j == 0) continue;
                const double uu = r + delta * j / 20.0;
                const double dist = std::abs(uu - r);
                const double gap = V(uu) - v_star;
                const double grad = Vp(uu);
                if (0.5 * mu * dist * dist > gap + num_tol) ok = false;
                if (gap > grad * grad / (2.0 * mu) + num_tol) ok = false;
            }
            if (ok) return {mu, mu, delta};
        }
        throw VerificationFailed("quadratic sandwich failed around the polarized radius");
    }

    const double c = V_and_derivatives(p, 0.0, 2, spec);
    if (!(c > 0.0)) throw VerificationFailed("curvature at zero not positive above the transition");
    const double mu = c - 0.5 * std::min(eps, c);
    const double v0 = V(0.0);
    double delta = 0.9 * eps;
    for (int shrink = 0; shrink < 30; ++shrink, delta *= 0.5) {
        bool ok = true;
        for (int j = 1; j <= 40 && ok; ++j) {
            const double uu = delta * j / 40.0;
            const double gap = V(uu) - v0;
            const double grad = Vp(uu);
            if (0.5 * mu * uu * uu > gap + num_tol) ok = false;
            if (gap > grad * grad / (2.0 * mu) + num_tol) ok = false;
        }
        if (ok) return {mu, mu, delta};
    }
    throw VerificationFailed("quadratic sandwich failed around zero");
}

}  // namespace

double find_D_star(int d, double alpha, double rel_tol) {
    if (d < 1) throw DimensionUnsupported("find_D_star needs d >= 1");
    if (!(alpha > 0.0)) throw BracketNotFound("no transition without an alignment force");
    if (!(rel_tol > 0.0 && rel_tol < 1e-2)) throw ConfigError("find_D_star rel_tol out of range");

    const int scan = 81;
    const double lo_d = 1e-4, hi_d = 1e4;
    double lo = nan_value, hi = nan_value;
    double prev_d = 0.0, prev_sign = 0.0;
    for (int i = 0; i <= scan; ++i) {
        const double D = lo_d * std::pow(hi_d / lo_d, static_cast<double>(i) / scan);
        const double sign = defining_integral(d, alpha, D).m;
        if (i > 0 && prev_sign > 0.0 && sign <= 0.0) {
            lo = prev_d;
            hi = D;
            break;
        }
        prev_d = D;
        prev_sign = sign;
    }
    if (!std::isfinite(lo))
        throw BracketNotFound("the branch-defining integral never changes sign on [1e-4, 1e4]");

    while (hi - lo > rel_tol * lo) {
        const double mid = 0.5 * (lo + hi);
        (defining_integral(d, alpha, mid).m > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::optional<double> find_r_of_D(const ModelParams& p) {
    validate(p);
    if (p.alpha == 0.0) return std::nullopt;  // no alignment force, no polarized branch
    const QuadSpec spec = make_quad_spec(p);

    // the polarized branch exists iff H rises from zero: sign of H'(0)
    if (!(defining_integral(p.d, p.alpha, p.D).m > 0.0)) return std::nullopt;

    const auto H = [&](double r) { return H_of_r_scaled(p, r, spec); };

    double lo = 1e-4;
    for (int tries = 0; tries < 30 && !(H(lo).m > 0.0); ++tries) lo *= 0.1;
    if (!(H(lo).m > 0.0)) throw RootNotBracketed("H does not rise from zero as predicted");

    double hi = std::max(1.0, lo * 2.0);
    int expand = 0;
    while (H(hi).m > 0.0) {
        hi *= 1.5;
        if (++expand > 60) throw RootNotBracketed("H never turns negative at large speed");
    }

    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        const ScaledReal hm = H(mid);
        if (scaled_abs_ratio(hm, h_scale(p, mid, spec)) <= 1e-12) return mid;
        (hm.m > 0.0 ? lo : hi) = mid;
        if (hi - lo <= 1e-15 * std::max(1.0, hi)) return 0.5 * (lo + hi);
    }
    throw RootNotBracketed("speed root failed to meet the magnitude stopping rule");
}

PlConstants pl_constants(const ModelParams& p, double eps) {
    validate(p);
    return pl_constants_impl(p, eps, find_D_star(p.d, p.alpha));
}

double kappa(const ModelParams& p) {
    std::vector<double> e1(p.d, 0.0);
    e1[0] = 1.0;
    return kappa(p, e1);
}

double kappa(const ModelParams& p, const std::vector<double>& u_direction) {
    validate(p);
    if (static_cast<int>(u_direction.size()) != p.d)
        throw ConfigError("kappa direction dimension disagrees with the model");
    const auto ropt = find_r_of_D(p);
    if (!ropt) throw NoPolarizedState("kappa needs the polarized branch");
    return kappa_at(p, *ropt, u_direction);
}

double poincare_gap(const ModelParams& p, const std::vector<double>& u, int resolution) {
    return poincare_gap_detail(p, u, resolution).extrapolated;
}

PoincareDetail poincare_gap_detail(const ModelParams& p, const std::vector<double>& u,
                                   int resolution) {
    validate(p);
    if (static_cast<int>(u.size()) != p.d)
        throw ConfigError("gap anchor dimension disagrees with the model");
    if (p.d > 2) throw DimensionUnsupported("spectral gap grids stop at d = 2");
    int n = resolution > 0 ? resolution : (p.d == 1 ? 256 : 96);
    if (n % 2 != 0) ++n;  // keep the grid symmetric about the origin
    PoincareDetail out;
    out.coarse = gap_on_grid(p, u, n);
    out.fine = gap_on_grid(p, u, 2 * n);
    out.extrapolated = (4.0 * out.fine - out.coarse) / 3.0;
    return out;
}

Coercivity coercivity_constants(const ModelParams& p) {
    validate(p);
    const auto ropt = find_r_of_D(p);
    if (!ropt) throw NoPolarizedState("coercivity constants live on the polarized branch");
    const double r = *ropt;
    std::vector<double> e1(p.d, 0.0);
    e1[0] = 1.0;
    const double kap = kappa_at(p, r, e1);
    std::vector<double> u(p.d, 0.0);
    u[0] = r;
    const double lambda = poincare_gap(p, u);
    const QuadSpec spec = make_quad_spec(p);
    const double w2 = weighted_moment_W_at(p, r, 2, spec);

    Coercivity c;
    c.eta = std::sqrt(p.D * (1.0 - kap));
    c.beta = p.D * lambda * (1.0 - kap);
    c.b = 2.0 / p.D * std::sqrt(w2) * (1.0 / (c.eta * c.beta) + 1.0);
    c.a = 1.0 / std::sqrt(p.D * p.D + 2.0 * p.D * std::sqrt(w2 / lambda) + w2 / lambda);
    return c;
}

PhaseRecord compute_phase_record(const ModelParams& p, double pl_eps, int resolution) {
    validate(p);
    PhaseRecord rec;
    rec.D = p.D;
    rec.r = rec.V_second_r = rec.V_fourth_0 = nan_value;
    rec.kappa = rec.eta = rec.beta = rec.a = rec.b = nan_value;

    const double d_star = find_D_star(p.d, p.alpha);
    const bool critical = std::abs(p.D - d_star) <= 1e-9 * d_star;
    const QuadSpec spec = make_quad_spec(p);

    std::vector<double> gap_anchor(p.d, 0.0);
    if (!critical && p.D < d_star) {
        const auto ropt = find_r_of_D(p);
        if (ropt) {
            const double r = *ropt;
            rec.r = r;
            rec.V_second_r = V_and_derivatives(p, r, 2, spec);
            std::vector<double> e1(p.d, 0.0);
            e1[0] = 1.0;
            rec.kappa = kappa_at(p, r, e1);
            gap_anchor[0] = r;
            rec.lambda = poincare_gap(p, gap_anchor, resolution);
            const double w2 = weighted_moment_W_at(p, r, 2, spec);
            rec.eta = std::sqrt(p.D * (1.0 - rec.kappa));
            rec.beta = p.D * rec.lambda * (1.0 - rec.kappa);
            rec.b = 2.0 / p.D * std::sqrt(w2) * (1.0 / (rec.eta * rec.beta) + 1.0);
            rec.a = 1.0 / std::sqrt(p.D * p.D + 2.0 * p.D * std::sqrt(w2 / rec.lambda) +
                                    w2 / rec.lambda);
        }
    } else {
        if (critical) rec.V_fourth_0 = V_and_derivatives(p, 0.0, 4, spec);
        rec.lambda = poincare_gap(p, gap_anchor, resolution);
    }

    const PlConstants pl = pl_constants_impl(p, pl_eps, d_star);
    rec.mu1 = pl.mu1;
    rec.mu2 = pl.mu2;
    rec.delta = pl.delta;
    return rec;
}

}  // namespace flockfp
