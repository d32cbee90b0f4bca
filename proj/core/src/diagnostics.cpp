#include "flockfp/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "flockfp/errors.hpp"
#include "flockfp/phase.hpp"
#include "flockfp/quadrature.hpp"
#include "flockfp/solver.hpp"

namespace flockfp {

namespace {

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();
constexpr double density_floor = 1e-300;

double dist2(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return s;
}

void require_same_grid(const Grid& a, const Grid& b) {
    if (a.d != b.d || a.n != b.n || a.L != b.L)
        throw ConfigError("densities live on different grids");
}

}  // namespace

DiagnosticsContext make_diagnostics_context(const ModelParams& p) {
    validate(p);
    DiagnosticsContext ctx;
    ctx.params = p;
    ctx.D_star = find_D_star(p.d, p.alpha);
    ctx.r = find_r_of_D(p);
    ctx.log_z_zero = normalization(p, 0.0);
    ctx.log_z_min = ctx.r ? normalization(p, *ctx.r) : ctx.log_z_zero;
    ctx.V_star = -p.D * ctx.log_z_min;
    ctx.F_star = ctx.V_star;  // the free energy of a minimizing Gibbs state
    return ctx;
}

double free_energy(const GridDensity& f, const ModelParams& p) {
    const Grid& g = f.grid;
    if (g.d != p.d) throw ConfigError("density dimension disagrees with the model");
    const std::vector<double> u = mean_velocity(f);
    double acc = 0.0;
    double v[2];
    for (int i = 0; i < g.cells(); ++i) {
        const double fi = f.values[i];
        if (fi <= 0.0) continue;
        g.coords(i, v);
        acc += p.D * fi * std::log(fi) + potential(p, v, u.data()) * fi;
    }
    return acc * g.cell_volume();
}

double relative_entropy(const GridDensity& f, const GridDensity& g) {
    require_same_grid(f.grid, g.grid);
    double acc = 0.0;
    for (int i = 0; i < f.grid.cells(); ++i) {
        const double fi = f.values[i];
        if (fi <= 0.0) continue;
        const double gi = std::max(g.values[i], density_floor);
        acc += fi * std::log(fi / gi);
    }
    return acc * f.grid.cell_volume();
}

double relative_entropy_vs_gibbs(const GridDensity& f, const GibbsState& gs,
                                 bool discrete_normalization) {
    const Grid& g = f.grid;
    if (g.d != gs.params.d) throw ConfigError("density dimension disagrees with the anchor");
    double log_shift = 0.0;
    if (discrete_normalization) {
        double m = 0.0;
        double v[2];
        for (int i = 0; i < g.cells(); ++i) {
            g.coords(i, v);
            m += density(gs, v);
        }
        log_shift = std::log(m * g.cell_volume());
    }
    double acc = 0.0;
    double v[2];
    for (int i = 0; i < g.cells(); ++i) {
        const double fi = f.values[i];
        if (fi <= 0.0) continue;
        g.coords(i, v);
        const double gi = std::max(density(gs, v), density_floor);
        acc += fi * (std::log(fi / gi) + log_shift);
    }
    return acc * g.cell_volume();
}

double fisher_information(const GridDensity& f, const ModelParams& p) {
    const Grid& g = f.grid;
    if (g.d != p.d) throw ConfigError("density dimension disagrees with the model");
    const std::vector<double> u = mean_velocity(f);
    const int n = g.n;
    const double h = g.h;
    const double vol = g.cell_volume();

    std::vector<double> pot(g.cells());
    std::vector<double> logf(g.cells());
    double v[2];
    for (int i = 0; i < g.cells(); ++i) {
        g.coords(i, v);
        pot[i] = potential(p, v, u.data());
        logf[i] = std::log(std::max(f.values[i], density_floor));
    }

    // per-face entropy production: (D/h^2) (B(-w) f_R - B(w) f_L) * dxi,
    // with dxi = D dlog f + dpot the discrete chemical-potential increment;
    // matches the transport fluxes so the decay identity closes
    double acc = 0.0;
    auto face = [&](int i, int j) {
        const double w = (pot[j] - pot[i]) / p.D;
        const double flux = bernoulli_weight(-w) * f.values[j] - bernoulli_weight(w) * f.values[i];
        const double dxi = p.D * (logf[j] - logf[i]) + (pot[j] - pot[i]);
        acc += flux * dxi;
    };
    if (g.d == 1) {
        for (int i = 0; i < n - 1; ++i) face(i, i + 1);
    } else {
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n - 1; ++i) face(j * n + i, j * n + i + 1);
        for (int j = 0; j < n - 1; ++j)
            for (int i = 0; i < n; ++i) face(j * n + i, (j + 1) * n + i);
    }
    return acc * p.D / (h * h) * vol;
}

IdentityResiduals identity_residuals(const GridDensity& f, const ModelParams& p,
                                     const std::vector<double>& u) {
    return identity_residuals(f, p, u, make_diagnostics_context(p));
}

IdentityResiduals identity_residuals(const GridDensity& f, const ModelParams& p,
                                     const std::vector<double>& u,
                                     const DiagnosticsContext& ctx) {
    if (static_cast<int>(u.size()) != p.d)
        throw ConfigError("probe velocity dimension disagrees with the model");
    const QuadSpec spec = make_quad_spec(p);
    const std::vector<double> u_f = mean_velocity(f);
    const double F = free_energy(f, p);

    IdentityResiduals out;

    const GibbsState g_u = make_gibbs(p, u, spec);
    const double h_u = relative_entropy_vs_gibbs(f, g_u, false);
    out.vs_anchor = std::abs(F - (p.D * h_u - 0.5 * dist2(u, u_f) - p.D * g_u.log_z));

    const GibbsState g_f = make_gibbs(p, u_f, spec);
    const double h_f = relative_entropy_vs_gibbs(f, g_f, false);
    const double v_uf = -p.D * g_f.log_z;
    out.vs_self = std::abs(F - ctx.F_star - (p.D * h_f + v_uf - ctx.V_star));

    std::vector<double> u_s(p.d, 0.0);
    if (ctx.r) {
        const double nu = norm2(u);
        if (nu > 1e-12) {
            for (int k = 0; k < p.d; ++k) u_s[k] = *ctx.r * u[k] / nu;
        } else {
            u_s[0] = *ctx.r;  // any minimizer works; pick a deterministic one
        }
    }
    const GibbsState g_s{p, u_s, ctx.log_z_min};
    const double h_s = relative_entropy_vs_gibbs(f, g_s, false);
    out.vs_minimizer = std::abs(F - ctx.F_star - (p.D * h_s - 0.5 * dist2(u_f, u_s)));
    return out;
}

double free_energy_lower_bound(const GridDensity& f, const ModelParams& p) {
    const double m4 = moment(f, 4);
    return -0.5 * p.d * std::log(2.0 * std::numbers::pi) * p.D + 0.25 * p.alpha * m4 -
           0.5 * (p.D + p.alpha) * std::sqrt(m4);
}

double csiszar_kullback_margin(const GridDensity& f, const ModelParams& p) {
    const std::vector<double> u_f = mean_velocity(f);
    const GibbsState gs = make_gibbs(p, u_f);
    const GridDensity gd = discrete_gibbs(f.grid, gs);
    const double h = relative_entropy(f, gd);
    double l1 = 0.0;
    for (int i = 0; i < f.grid.cells(); ++i) l1 += std::abs(f.values[i] - gd.values[i]);
    l1 *= f.grid.cell_volume();
    return h - 0.5 * l1 * l1;
}

namespace {

RateFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const int n = static_cast<int>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (int i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    if (!(std::abs(det) > 0.0)) throw WindowTooShort("degenerate abscissa in rate fit");
    const double slope = (n * sxy - sx * sy) / det;
    const double ss_tot = syy - sy * sy / n;
    double ss_res = 0.0;
    const double intercept = (sy - slope * sx) / n;
    for (int i = 0; i < n; ++i) {
        const double e = y[i] - (intercept + slope * x[i]);
        ss_res += e * e;
    }
    RateFit fit;
    fit.rate = -slope;
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    fit.n_points = n;
    return fit;
}

void take_window(const std::vector<double>& t, const std::vector<double>& values,
                 double window_fraction, std::vector<double>& tw, std::vector<double>& vw) {
    if (t.size() != values.size()) throw ConfigError("rate fit series lengths disagree");
    const int n = static_cast<int>(t.size());
    const int want = std::max(50, static_cast<int>(std::ceil(window_fraction * n)));
    if (n < want) throw WindowTooShort("rate fit needs at least 50 trailing samples");
    tw.assign(t.end() - want, t.end());
    vw.assign(values.end() - want, values.end());
    for (double v : vw)
        if (!(v > 0.0)) throw NonPositiveValues("rate fit window contains nonpositive values");
}

}  // namespace

RateFit fit_exponential_rate(const std::vector<double>& t, const std::vector<double>& values,
                             double window_fraction) {
    std::vector<double> tw, vw;
    take_window(t, values, window_fraction, tw, vw);
    for (double& v : vw) v = std::log(v);
    return linear_fit(tw, vw);
}

RateFit fit_algebraic_rate(const std::vector<double>& t, const std::vector<double>& values,
                           double window_fraction) {
    std::vector<double> tw, vw;
    take_window(t, values, window_fraction, tw, vw);
    for (double v : tw)
        if (!(v > 0.0)) throw NonPositiveValues("algebraic fit needs positive times");
    for (double& v : vw) v = std::log(v);
    for (double& v : tw) v = std::log(v);
    return linear_fit(tw, vw);
}

TailBoundReport tail_bound_report(const std::vector<DiagnosticsRecord>& records,
                                  const ModelParams& p, const TailBoundConstants& c) {
    TailBoundReport rep;
    rep.A_D = c.A_D;
    rep.activation_threshold = std::min(c.delta * c.delta * c.eta * c.eta / c.W2,
                                        1.0 / (c.K_D * c.K_D));
    rep.t0 = nan_value;
    rep.q1_t0 = nan_value;

    const auto init_check = [&](BoundCheck& b) {
        b.activation_time = nan_value;
        b.max_violation = 0.0;
        b.min_margin = std::numeric_limits<double>::infinity();
        b.checked = 0;
    };
    init_check(rep.entropy_vs_q1);
    init_check(rep.distance_vs_q1);
    init_check(rep.envelope);

    // activation: first dump where Q1 sits strictly inside the contraction
    // region, with enough slack that the envelope prefactor stays bounded
    std::size_t i0 = records.size();
    for (std::size_t i = 0; i < records.size(); ++i) {
        const double q1 = records[i].Q1;
        if (std::isfinite(q1) && q1 >= 0.0 && q1 < rep.activation_threshold &&
            c.K_D * std::sqrt(q1) < 0.5) {
            i0 = i;
            break;
        }
    }
    if (i0 == records.size()) return rep;  // never activated; all checks empty

    rep.t0 = records[i0].t;
    rep.q1_t0 = records[i0].Q1;
    const double denom = 1.0 - c.K_D * std::sqrt(rep.q1_t0);
    const double pref = rep.q1_t0 / (denom * denom);

    auto update = [&](BoundCheck& b, double lhs, double rhs, double t) {
        if (b.checked == 0) b.activation_time = t;
        ++b.checked;
        const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-30});
        const double viol = (lhs - rhs) / scale;
        b.max_violation = std::max(b.max_violation, viol);
        b.min_margin = std::min(b.min_margin, -viol);
    };

    for (std::size_t i = i0; i < records.size(); ++i) {
        const DiagnosticsRecord& r = records[i];
        if (!std::isfinite(r.Q1)) continue;
        update(rep.entropy_vs_q1, r.H_rel_star, r.Q1 / (c.eta * c.eta), r.t);
        update(rep.distance_vs_q1, r.dist_S * r.dist_S,
               2.0 * p.D / (c.mu1 * c.eta * c.eta) * r.Q1, r.t);
        update(rep.envelope, r.Q1,
               pref * std::exp(-2.0 * c.beta * c.beta * (r.t - rep.t0)), r.t);
    }
    return rep;
}

}  // namespace flockfp
