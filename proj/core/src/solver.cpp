#include "flockfp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "flockfp/errors.hpp"
#include "flockfp/gibbs.hpp"
#include "flockfp/parallel.hpp"
#include "flockfp/phase.hpp"
#include "flockfp/quadrature.hpp"

namespace flockfp {

namespace {

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

void fill_potential(const Grid& grid, const ModelParams& p, const std::vector<double>& u,
                    std::vector<double>& pot) {
    pot.resize(static_cast<std::size_t>(grid.cells()));
    double v[2];
    for (int i = 0; i < grid.cells(); ++i) {
        grid.coords(i, v);
        pot[i] = potential(p, v, u.data());
    }
}

// Backward-Euler solve of one axis line of the exponential-fitting flux.
// The matrix I - dt*L is tridiagonal with unit column sums (mass telescopes)
// and the Thomas recurrences only add nonnegative numbers, so positivity of
// the input carries to the output exactly in floating point.
void line_solve(std::vector<double>& f, const std::vector<double>& pot, int n, int base,
                int stride, double c, double inv_D) {
    std::vector<double> bp(n - 1), bm(n - 1), di(n), rhs(n);
    for (int k = 0; k + 1 < n; ++k) {
        const double w = (pot[base + (k + 1) * stride] - pot[base + k * stride]) * inv_D;
        bp[k] = bernoulli_weight(w);
        bm[k] = bernoulli_weight(-w);
    }
    for (int k = 0; k < n; ++k) {
        double diag = 1.0;
        if (k + 1 < n) diag += c * bp[k];
        if (k > 0) diag += c * bm[k - 1];
        di[k] = diag;
        rhs[k] = f[base + k * stride];
    }
    for (int k = 1; k < n; ++k) {
        const double lo = -c * bp[k - 1];
        const double up_prev = -c * bm[k - 1];
        const double m = lo / di[k - 1];
        di[k] -= m * up_prev;
        if (!(di[k] > 0.0)) throw NonConvergent("tridiagonal pivot lost positivity");
        rhs[k] -= m * rhs[k - 1];
    }
    f[base + (n - 1) * stride] = rhs[n - 1] / di[n - 1];
    for (int k = n - 2; k >= 0; --k) {
        const double up = -c * bm[k];
        f[base + k * stride] = (rhs[k] - up * f[base + (k + 1) * stride]) / di[k];
    }
}

void sweep(GridDensity& f, const std::vector<double>& pot, const ModelParams& p, double dt) {
    const Grid& g = f.grid;
    const double c = p.D * dt / (g.h * g.h);
    const double inv_D = 1.0 / p.D;
    if (g.d == 1) {
        line_solve(f.values, pot, g.n, 0, 1, c, inv_D);
        return;
    }
    parallel_for(g.n, [&](int j) { line_solve(f.values, pot, g.n, j * g.n, 1, c, inv_D); });
    parallel_for(g.n, [&](int i) { line_solve(f.values, pot, g.n, i, g.n, c, inv_D); });
}

void guard_cfl(const SolverConfig& cfg, const ModelParams& p, const std::vector<double>& u) {
    const double R = cfg.L * std::sqrt(static_cast<double>(p.d));
    const double max_a = p.alpha * (R * R * R + R) + R + norm2(u);
    const double number = cfg.dt * max_a / (2.0 * cfg.L / cfg.n);
    if (number > cfg.cfl_number)
        throw CFLViolation("advective CFL number " + std::to_string(number) +
                           " exceeds the accuracy guard " + std::to_string(cfg.cfl_number));
}

void audit_positive(const GridDensity& f) {
    for (double v : f.values)
        if (v < 0.0) throw NegativeCell("scheme produced a negative cell value");
}

GridDensity advance(const GridDensity& f, const SolverConfig& cfg, const ModelParams& p,
                    const std::vector<double>& u, std::vector<double>& pot) {
    guard_cfl(cfg, p, u);
    fill_potential(f.grid, p, u, pot);
    GridDensity out = f;
    sweep(out, pot, p, cfg.dt);
    audit_positive(out);
    return out;
}

double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

double bernoulli_weight(double w) {
    if (std::abs(w) < 1e-8) return 1.0 - 0.5 * w + w * w / 12.0;
    if (w > 700.0) return 0.0;
    if (w < -700.0) return -w;
    return w / std::expm1(w);
}

SolverConfig default_solver_config(const ModelParams& p, double u_headroom) {
    validate(p);
    SolverConfig cfg;
    cfg.L = default_half_width(p, u_headroom);
    cfg.n = p.d == 1 ? 400 : 128;
    cfg.dt = 1e-3 / p.D;
    cfg.t_end = 50.0 / p.D;
    return cfg;
}

void validate(const SolverConfig& cfg, const ModelParams& p) {
    validate(p);
    if (!(cfg.L > 0.0) || !std::isfinite(cfg.L)) throw ConfigError("domain half-width must be positive");
    if (cfg.n < 4) throw ConfigError("need at least 4 cells per dimension");
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw ConfigError("time step must be positive");
    if (!(cfg.t_end >= 0.0) || !std::isfinite(cfg.t_end)) throw ConfigError("horizon must be nonnegative");
    if (cfg.output_stride < 1) throw ConfigError("output stride must be at least 1");
    if (!(cfg.cfl_number > 0.0)) throw ConfigError("the CFL guard must be positive");
}

std::vector<double> drift_field(const ModelParams& p, const std::vector<double>& u,
                                const std::vector<double>& v) {
    if (static_cast<int>(u.size()) != p.d || static_cast<int>(v.size()) != p.d)
        throw ConfigError("drift arguments disagree with the model dimension");
    const double s2 = dot(v, v);
    std::vector<double> a(p.d);
    for (int k = 0; k < p.d; ++k) a[k] = p.alpha * (s2 - 1.0) * v[k] + v[k] - u[k];
    return a;
}

GridDensity step(const GridDensity& f, const SolverConfig& cfg, const ModelParams& p) {
    validate(cfg, p);
    if (f.grid.d != p.d || f.grid.n != cfg.n || f.grid.L != cfg.L)
        throw ConfigError("density grid disagrees with the solver configuration");
    std::vector<double> pot;
    std::vector<double> u = mean_velocity(f);
    if (cfg.coupling == Coupling::semi_implicit) {
        const GridDensity provisional = advance(f, cfg, p, u, pot);
        u = mean_velocity(provisional);
    }
    return advance(f, cfg, p, u, pot);
}

namespace {

DiagnosticsRecord make_record(const GridDensity& f, double t, const ModelParams& p,
                              const DiagnosticsContext& ctx, const std::vector<double>& probe,
                              double prev_step_F, double dt) {
    DiagnosticsRecord rec;
    rec.t = t;
    rec.F = free_energy(f, p);
    rec.F_gap = rec.F - ctx.F_star;
    const std::vector<double> u = mean_velocity(f);
    for (int k = 0; k < p.d; ++k) rec.u_f[k] = u[k];
    const double speed = norm2(u);
    rec.dist_S = ctx.r ? std::abs(speed - *ctx.r) : speed;
    rec.H_rel_star = (rec.F_gap + 0.5 * rec.dist_S * rec.dist_S) / p.D;
    rec.H_rel_inf = nan_value;  // fixed after the terminal mean is known
    rec.I = fisher_information(f, p);
    for (int k = 0; k <= 8; ++k) rec.M[k] = moment(f, k);
    const IdentityResiduals ir = identity_residuals(f, p, probe, ctx);
    rec.res_identity_anchor = ir.vs_anchor;
    rec.res_identity_self = ir.vs_self;
    rec.res_identity_min = ir.vs_minimizer;
    rec.res_debruijn = std::isnan(prev_step_F)
                           ? nan_value
                           : std::abs((rec.F - prev_step_F) / dt + rec.I);

    if (ctx.r) {
        std::vector<double> u_star(p.d, 0.0);
        if (speed > 1e-12) {
            for (int k = 0; k < p.d; ++k) u_star[k] = *ctx.r * u[k] / speed;
        } else {
            u_star[0] = *ctx.r;
        }
        const GridDensity anchor =
            discrete_gibbs(f.grid, GibbsState{p, u_star, ctx.log_z_min});
        const double vol = f.grid.cell_volume();
        double q = 0.0;
        double vg[2] = {0.0, 0.0};
        double v[2];
        for (int i = 0; i < f.grid.cells(); ++i) {
            const double gi = anchor.values[i];
            if (gi <= 0.0) continue;
            const double gpert = f.values[i] / gi - 1.0;
            q += gpert * gpert * gi;
            f.grid.coords(i, v);
            for (int k = 0; k < p.d; ++k) vg[k] += v[k] * gpert * gi;
        }
        q *= vol;
        // D int g^2 G - |int v g G|^2, the second variation of the free energy
        double vg2 = 0.0;
        for (int k = 0; k < p.d; ++k) vg2 += vg[k] * vg[k] * vol * vol;
        rec.Q1 = p.D * q - vg2;
    } else {
        rec.Q1 = nan_value;
    }
    return rec;
}

}  // namespace

RunResult run(const GridDensity& f_ini, const SolverConfig& cfg, const ModelParams& p,
              const DiagnosticsContext& ctx) {
    validate(cfg, p);
    if (f_ini.grid.d != p.d || f_ini.grid.n != cfg.n || f_ini.grid.L != cfg.L)
        throw ConfigError("initial density grid disagrees with the solver configuration");
    if (ctx.params.d != p.d || ctx.params.alpha != p.alpha || ctx.params.D != p.D)
        throw AnchorMismatch("diagnostics context was built for different parameters");

    GridDensity f = f_ini;
    normalize(f);
    const std::vector<double> probe = mean_velocity(f);

    const int n_steps =
        cfg.t_end == 0.0
            ? 0
            : static_cast<int>(std::llround(std::ceil(cfg.t_end / cfg.dt - 1e-12)));

    RunResult result;
    std::vector<double> pot;
    double prev_step_F = nan_value;
    double last_dump_F = std::numeric_limits<double>::infinity();
    const double dissip_margin =
        1e-8 + (cfg.coupling == Coupling::semi_implicit
                    ? 10.0 * cfg.output_stride * cfg.dt * cfg.dt
                    : 0.0);

    for (int k = 0;; ++k) {
        const double t = k * cfg.dt;
        if (k % cfg.output_stride == 0 || k == n_steps) {
            const double mass = f.mass();
            if (std::abs(mass - 1.0) > 1e-9)
                throw VerificationFailed("mass drifted to " + std::to_string(mass) +
                                         " at t = " + std::to_string(t));
            DiagnosticsRecord rec = make_record(f, t, p, ctx, probe, prev_step_F, cfg.dt);
            if (rec.F > last_dump_F + dissip_margin * (1.0 + std::abs(last_dump_F)))
                throw VerificationFailed("free energy increased beyond tolerance at t = " +
                                         std::to_string(t));
            last_dump_F = rec.F;
            result.records.push_back(rec);
        }
        if (k == n_steps) break;
        const bool next_dumps = ((k + 1) % cfg.output_stride == 0) || (k + 1 == n_steps);
        if (next_dumps) prev_step_F = free_energy(f, p);

        std::vector<double> u = mean_velocity(f);
        if (cfg.coupling == Coupling::semi_implicit) {
            const GridDensity provisional = advance(f, cfg, p, u, pot);
            u = mean_velocity(provisional);
        }
        f = advance(f, cfg, p, u, pot);
    }

    result.u_inf = mean_velocity(f);
    const double v_inf = -p.D * normalization(p, norm2(result.u_inf));
    for (DiagnosticsRecord& rec : result.records) {
        double d2 = 0.0;
        for (int k = 0; k < p.d; ++k) {
            const double dv = rec.u_f[k] - result.u_inf[k];
            d2 += dv * dv;
        }
        rec.H_rel_inf = (rec.F + 0.5 * d2 - v_inf) / p.D;
    }
    result.final_state = std::move(f);
    return result;
}

GridDensity initial_data(InitialKind kind, const ModelParams& p, std::uint64_t seed,
                         const SolverConfig& cfg, const InitialOptions& opt,
                         HypothesisReport* report) {
    validate(cfg, p);
    const Grid grid = make_grid(p.d, cfg.n, cfg.L);
    GridDensity f{grid, std::vector<double>(static_cast<std::size_t>(grid.cells()), 0.0)};

    const std::optional<double> r = find_r_of_D(p);

    auto pick_vector = [&](const std::vector<double>& given, double default_scale) {
        if (!given.empty()) {
            if (static_cast<int>(given.size()) != p.d)
                throw ConfigError("initial-data vector disagrees with the model dimension");
            return given;
        }
        std::vector<double> v(p.d, 0.0);
        v[0] = default_scale * (r ? *r : 0.0);
        return v;
    };

    double v[2];
    switch (kind) {
        case InitialKind::gibbs_tilt: {
            if (!(std::abs(opt.eps) < 1.0))
                throw ConfigError("tilt amplitude must have magnitude below 1");
            const std::vector<double> u0 = pick_vector(opt.u0, 1.0);
            std::vector<double> dir(p.d, 0.0);
            const double nu = norm2(u0);
            if (nu > 1e-12) {
                for (int k = 0; k < p.d; ++k) dir[k] = u0[k] / nu;
            } else {
                dir[0] = 1.0;
            }
            const GibbsState gs = make_gibbs(p, u0);
            for (int i = 0; i < grid.cells(); ++i) {
                grid.coords(i, v);
                double along = 0.0;
                for (int k = 0; k < p.d; ++k) along += v[k] * dir[k];
                f.values[i] = density(gs, v) * (1.0 + opt.eps * std::tanh(along));
            }
            break;
        }
        case InitialKind::gaussian_bump: {
            if (!(opt.width > 0.0)) throw ConfigError("bump width must be positive");
            const std::vector<double> c = pick_vector(opt.center, 1.2);
            for (int i = 0; i < grid.cells(); ++i) {
                grid.coords(i, v);
                double q = 0.0;
                for (int k = 0; k < p.d; ++k) {
                    const double dv = v[k] - c[k];
                    q += dv * dv;
                }
                f.values[i] = std::exp(-q / (2.0 * opt.width * opt.width));
            }
            break;
        }
        case InitialKind::mixture: {
            if (opt.components < 1) throw ConfigError("mixture needs at least one component");
            std::mt19937_64 rng(seed);
            for (int c = 0; c < opt.components; ++c) {
                double center[2] = {0.0, 0.0};
                for (int k = 0; k < p.d; ++k)
                    center[k] = (unit_uniform(rng) - 0.5) * cfg.L;
                const double width = 0.2 + 0.3 * unit_uniform(rng);
                const double weight = 0.5 + unit_uniform(rng);
                for (int i = 0; i < grid.cells(); ++i) {
                    grid.coords(i, v);
                    double q = 0.0;
                    for (int k = 0; k < p.d; ++k) {
                        const double dv = v[k] - center[k];
                        q += dv * dv;
                    }
                    f.values[i] += weight * std::exp(-q / (2.0 * width * width));
                }
            }
            break;
        }
    }
    normalize(f);

    if (report) {
        *report = HypothesisReport{};
        report->F_ini = free_energy(f, p);
        const GridDensity g0 = discrete_gibbs(grid, make_gibbs(p, std::vector<double>(p.d, 0.0)));
        report->F_G0 = free_energy(g0, p);
        report->energy_gap = report->F_ini - report->F_G0;
        report->energy_ok = report->energy_gap < 0.0;

        std::vector<std::vector<double>> anchors;
        if (r) {
            if (p.d == 1) {
                anchors.push_back({*r});
                anchors.push_back({-*r});
            } else {
                for (int k = 0; k < 8; ++k) {
                    const double th = 2.0 * std::numbers::pi * k / 8.0;
                    anchors.push_back({*r * std::cos(th), *r * std::sin(th)});
                }
            }
        } else {
            anchors.emplace_back(p.d, 0.0);
        }
        double worst = 0.0;
        for (const std::vector<double>& u_s : anchors) {
            const GibbsState gs = make_gibbs(p, u_s);
            double acc = 0.0;
            for (int i = 0; i < grid.cells(); ++i) {
                const double fi = f.values[i];
                if (fi <= 0.0) continue;
                grid.coords(i, v);
                acc += fi * fi / std::max(density(gs, v), 1e-300);
            }
            worst = std::max(worst, acc * grid.cell_volume());
        }
        report->l2_weighted_max = worst;
        report->l2_ok = worst <= 1e8;  // heuristic tail-safety cutoff
        if (!report->energy_ok)
            report->warnings.push_back(
                "initial free energy does not sit below the isotropic state");
        if (!report->l2_ok)
            report->warnings.push_back(
                "weighted L2 norm against the polarized states looks unbounded");
    }
    return f;
}

}  // namespace flockfp
