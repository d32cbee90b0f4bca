#include "flockfp/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "flockfp/csv.hpp"
#include "flockfp/diagnostics.hpp"
#include "flockfp/gibbs.hpp"
#include "flockfp/grid.hpp"
#include "flockfp/linearized.hpp"
#include "flockfp/model.hpp"
#include "flockfp/parallel.hpp"
#include "flockfp/phase.hpp"
#include "flockfp/solver.hpp"
#include "flockfp/version.hpp"

namespace flockfp {

namespace {

constexpr double kQuadRelTol = 1e-12;  // matches the make_quad_spec default
constexpr double kCheckTol = 1e-9;     // relative slack before an inequality counts as violated

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k) s += ",";
        s += format_double(v[k]);
    }
    return s;
}

ModelParams model_from(const ConfigMap& cfg) {
    ModelParams p;
    p.d = cfg.get_int("model.d", 1);
    p.alpha = cfg.get_double("model.alpha", 4.0);
    p.D = cfg.get_double("model.D", 1.0);
    validate(p);
    if (p.d > 2) throw ConfigError("only d = 1 and d = 2 are supported");
    return p;
}

void echo_model(ConfigMap& eff, const ModelParams& p) {
    eff.set("model.d", std::to_string(p.d));
    eff.set("model.alpha", format_double(p.alpha));
    eff.set("model.D", format_double(p.D));
}

// Comment block carried by every CSV: version, command, a hash of the
// effective configuration, the quadrature tolerance, and the effective
// configuration itself as re-parsable `cfg key = value` lines.
void stamp(CsvWriter& w, const char* command, const ConfigMap& eff) {
    w.comment(std::string("flockfp ") + version_string);
    w.comment(std::string("command = ") + command);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(config_hash(eff)));
    w.comment(std::string("config_hash = ") + buf);
    w.comment("quad_rel_tol = " + format_double(kQuadRelTol));
    std::istringstream lines(eff.canonical());
    std::string line;
    while (std::getline(lines, line))
        if (!line.empty()) w.comment("cfg " + line);
}

}  // namespace

void cmd_phase(const ConfigMap& cfg, std::ostream& out) {
    if (cfg.has("model.D"))
        throw ConfigError("phase sweeps the noise level; use phase.D_values or phase.D_min/D_max");
    ModelParams base;
    base.d = cfg.get_int("model.d", 1);
    base.alpha = cfg.get_double("model.alpha", 4.0);
    validate(base);
    if (base.d > 2) throw ConfigError("only d = 1 and d = 2 are supported");

    const double pl_eps = cfg.get_double("phase.pl_eps", 0.05);
    const int resolution = cfg.get_int("phase.resolution", 0);
    const bool relative = cfg.get_bool("phase.relative", false);

    std::vector<double> D_values;
    if (cfg.has("phase.D_values")) {
        if (cfg.has("phase.D_min") || cfg.has("phase.D_max") || cfg.has("phase.count"))
            throw ConfigError("phase.D_values and phase.D_min/D_max/count are mutually exclusive");
        D_values = cfg.get_vector("phase.D_values", {});
        if (D_values.empty()) throw ConfigError("phase.D_values must not be empty");
    } else {
        if (!cfg.has("phase.D_min") || !cfg.has("phase.D_max"))
            throw ConfigError("phase needs phase.D_values or both phase.D_min and phase.D_max");
        const double lo = cfg.get_double("phase.D_min", 0.0);
        const double hi = cfg.get_double("phase.D_max", 0.0);
        const int count = cfg.get_int("phase.count", 20);
        if (count < 1) throw ConfigError("phase.count must be >= 1");
        if (!(lo > 0.0) || !(hi >= lo))
            throw ConfigError("phase.D_min/D_max must satisfy 0 < D_min <= D_max");
        for (int i = 0; i < count; ++i)
            D_values.push_back(count == 1 ? lo : lo + (hi - lo) * (double(i) / (count - 1)));
    }
    cfg.check_all_consumed();

    const double D_star = find_D_star(base.d, base.alpha);
    if (relative)
        for (double& Dv : D_values) Dv *= D_star;
    for (double Dv : D_values)
        if (!(Dv > 0.0) || !std::isfinite(Dv))
            throw ConfigError("phase: every D value must be finite and positive");

    std::vector<PhaseRecord> records(D_values.size());
    parallel_for(static_cast<int>(D_values.size()), [&](int i) {
        ModelParams p = base;
        p.D = D_values[i];
        records[i] = compute_phase_record(p, pl_eps, resolution);
    });

    ConfigMap eff;
    eff.set("model.d", std::to_string(base.d));
    eff.set("model.alpha", format_double(base.alpha));
    eff.set("phase.D_values", join(D_values));
    eff.set("phase.pl_eps", format_double(pl_eps));
    eff.set("phase.resolution", std::to_string(resolution));

    CsvWriter w(out);
    stamp(w, "phase", eff);
    w.comment("D_star = " + format_double(D_star));
    w.header({"D", "r_D", "V_second_rD", "V_fourth_0", "kappa", "eta", "beta", "a", "b",
              "Lambda", "mu1", "mu2", "delta"});
    for (const PhaseRecord& rec : records)
        w.row({rec.D, rec.r, rec.V_second_r, rec.V_fourth_0, rec.kappa, rec.eta, rec.beta, rec.a,
               rec.b, rec.lambda, rec.mu1, rec.mu2, rec.delta});
}

void cmd_simulate(const ConfigMap& cfg, std::ostream& out) {
    const ModelParams p = model_from(cfg);
    const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed", 12345));

    const std::string kind_name = cfg.get_string("initial.kind", "gibbs_tilt");
    InitialKind kind;
    if (kind_name == "gibbs_tilt") {
        kind = InitialKind::gibbs_tilt;
    } else if (kind_name == "gaussian_bump") {
        kind = InitialKind::gaussian_bump;
    } else if (kind_name == "mixture") {
        kind = InitialKind::mixture;
    } else {
        throw ConfigError("initial.kind must be gibbs_tilt, gaussian_bump or mixture");
    }
    InitialOptions opt;
    opt.u0 = cfg.get_vector("initial.u0", {});
    opt.eps = cfg.get_double("initial.eps", opt.eps);
    opt.center = cfg.get_vector("initial.center", {});
    opt.width = cfg.get_double("initial.width", opt.width);
    opt.components = cfg.get_int("initial.components", opt.components);
    if (!opt.u0.empty() && static_cast<int>(opt.u0.size()) != p.d)
        throw ConfigError("initial.u0 must have model.d components");
    if (!opt.center.empty() && static_cast<int>(opt.center.size()) != p.d)
        throw ConfigError("initial.center must have model.d components");

    const DiagnosticsContext ctx = make_diagnostics_context(p);
    double headroom = ctx.r.value_or(0.0);
    headroom = std::max({headroom, norm2(opt.u0), norm2(opt.center)});

    SolverConfig scfg = default_solver_config(p, headroom);
    scfg.L = cfg.get_double("solver.L", scfg.L);
    scfg.n = cfg.get_int("solver.n", scfg.n);
    scfg.dt = cfg.get_double("solver.dt", scfg.dt);
    scfg.t_end = cfg.get_double("solver.t_end", scfg.t_end);
    const std::string coupling = cfg.get_string("solver.coupling", "explicit");
    if (coupling == "explicit") {
        scfg.coupling = Coupling::explicit_mean;
    } else if (coupling == "semi_implicit") {
        scfg.coupling = Coupling::semi_implicit;
    } else {
        throw ConfigError("solver.coupling must be explicit or semi_implicit");
    }
    scfg.output_stride = cfg.get_int("solver.output_stride", scfg.output_stride);
    scfg.cfl_number = cfg.get_double("solver.cfl_number", scfg.cfl_number);
    cfg.check_all_consumed();
    validate(scfg, p);

    HypothesisReport report;
    const GridDensity f0 = initial_data(kind, p, seed, scfg, opt, &report);
    const RunResult result = run(f0, scfg, p, ctx);

    ConfigMap eff;
    echo_model(eff, p);
    eff.set("seed", std::to_string(seed));
    eff.set("solver.L", format_double(scfg.L));
    eff.set("solver.n", std::to_string(scfg.n));
    eff.set("solver.dt", format_double(scfg.dt));
    eff.set("solver.t_end", format_double(scfg.t_end));
    eff.set("solver.coupling", coupling);
    eff.set("solver.output_stride", std::to_string(scfg.output_stride));
    eff.set("solver.cfl_number", format_double(scfg.cfl_number));
    eff.set("initial.kind", kind_name);
    if (!opt.u0.empty()) eff.set("initial.u0", join(opt.u0));
    if (!opt.center.empty()) eff.set("initial.center", join(opt.center));
    if (kind == InitialKind::gibbs_tilt) eff.set("initial.eps", format_double(opt.eps));
    if (kind == InitialKind::gaussian_bump) eff.set("initial.width", format_double(opt.width));
    if (kind == InitialKind::mixture) {
        eff.set("initial.width", format_double(opt.width));
        eff.set("initial.components", std::to_string(opt.components));
    }

    CsvWriter w(out);
    stamp(w, "simulate", eff);
    w.comment("D_star = " + format_double(ctx.D_star));
    if (ctx.r) w.comment("r_D = " + format_double(*ctx.r));
    w.comment("F_star = " + format_double(ctx.F_star));
    w.comment("hypothesis F_ini = " + format_double(report.F_ini));
    w.comment("hypothesis F_G0 = " + format_double(report.F_G0));
    w.comment("hypothesis energy_gap = " + format_double(report.energy_gap));
    w.comment("hypothesis l2_weighted_max = " + format_double(report.l2_weighted_max));
    w.comment(std::string("hypothesis energy_ok = ") + (report.energy_ok ? "true" : "false"));
    w.comment(std::string("hypothesis l2_ok = ") + (report.l2_ok ? "true" : "false"));
    for (const std::string& warn : report.warnings) w.comment("hypothesis warning: " + warn);
    w.comment("u_inf = " + join(result.u_inf));

    std::vector<std::string> names = {"t", "F", "F_gap", "H_rel_star", "H_rel_inf", "I", "uf_1"};
    if (p.d == 2) names.push_back("uf_2");
    names.insert(names.end(), {"dist_S", "Q1"});
    for (int k = 0; k <= 8; ++k) names.push_back("M" + std::to_string(k));
    names.insert(names.end(), {"res_eq6", "res_eq7", "res_eq8", "res_debruijn"});
    w.header(names);

    for (const DiagnosticsRecord& rec : result.records) {
        std::vector<double> cells = {rec.t, rec.F, rec.F_gap, rec.H_rel_star, rec.H_rel_inf,
                                     rec.I, rec.u_f[0]};
        if (p.d == 2) cells.push_back(rec.u_f[1]);
        cells.push_back(rec.dist_S);
        cells.push_back(rec.Q1);
        for (int k = 0; k <= 8; ++k) cells.push_back(rec.M[k]);
        cells.insert(cells.end(), {rec.res_identity_anchor, rec.res_identity_self,
                                   rec.res_identity_min, rec.res_debruijn});
        w.row(cells);
    }
}

namespace {

struct CheckStats {
    std::string name;
    int checked = 0;
    int violations = 0;
    double max_violation = -std::numeric_limits<double>::infinity();

    void update(double violation) {
        ++checked;
        max_violation = std::max(max_violation, violation);
        if (violation > kCheckTol) ++violations;
    }
};

// the bilinear form D int a b G - D^2 v_a . v_b applied to a raw field `a`
// (not zero-meaned) against an assembled perturbation
double raw_inner_u(const Perturbation& ref, const std::vector<double>& a, const Perturbation& b) {
    const double vol = ref.grid.cell_volume();
    const double D = ref.anchor.params.D;
    double s = 0.0;
    std::vector<double> first(ref.grid.d, 0.0);  // sum v a G vol = D v_a
    double v[2];
    for (int i = 0; i < ref.grid.cells(); ++i) {
        const double aw = a[i] * ref.weight[i] * vol;
        s += aw * b.g[i];
        ref.grid.coords(i, v);
        for (int k = 0; k < ref.grid.d; ++k) first[k] += v[k] * aw;
    }
    double cross = 0.0;
    for (int k = 0; k < ref.grid.d; ++k) cross += first[k] * b.v_g[k];
    return D * s - D * cross;
}

double dirichlet_energy(const Perturbation& pert) {
    Perturbation tmp = pert;
    std::fill(tmp.v_g.begin(), tmp.v_g.end(), 0.0);
    const double D = pert.anchor.params.D;
    return q2(tmp) / (D * D);
}

double alignment_weight(const std::vector<double>& v_g, const std::vector<double>& u) {
    const double nv = dot(v_g, v_g);
    const double nu = dot(u, u);
    if (nv <= 0.0 || nu <= 0.0) return 0.0;
    const double c = dot(v_g, u);
    return c * c / (nv * nu);
}

}  // namespace

void cmd_linearize(const ConfigMap& cfg, std::ostream& out) {
    const ModelParams p = model_from(cfg);
    const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed", 12345));
    const double pl_eps = cfg.get_double("linearize.pl_eps", 0.05);
    const int n = cfg.get_int("linearize.n", p.d == 1 ? 400 : 96);
    const int samples = cfg.get_int("linearize.samples", 200);
    if (samples < 1) throw ConfigError("linearize.samples must be >= 1");
    if (n < 8) throw ConfigError("linearize.n must be >= 8");

    const LinearizedContext lctx = make_linearized_context(p, pl_eps);
    const double L = cfg.get_double("linearize.L", default_half_width(p, lctx.r));
    cfg.check_all_consumed();
    if (!(L > 0.0) || !std::isfinite(L)) throw ConfigError("linearize.L must be finite and positive");

    const Grid grid = make_grid(p.d, n, L);
    std::vector<double> u_anchor(p.d, 0.0);
    u_anchor[0] = lctx.r;
    const GibbsState anchor = make_gibbs(p, u_anchor);
    const TheoremConstants tc = theorem_constants(lctx, grid);

    const double eta = lctx.coercivity.eta;
    const double beta = lctx.coercivity.beta;
    const double a = lctx.coercivity.a;
    const double b = lctx.coercivity.b;

    CheckStats q2_aligned{"q2_coercivity_aligned"};
    CheckStats q1_aligned{"q1_norm_aligned"};
    CheckStats sandwich{"gradient_sandwich"};
    CheckStats q2_weighted{"q2_coercivity_weighted"};
    CheckStats q1_weighted{"q1_norm_weighted"};
    CheckStats symmetry{"generator_symmetry"};
    CheckStats rem_abs{"remainder_bound_abs"};
    CheckStats rem_sqrt{"remainder_bound_sqrt"};
    CheckStats moment{"sixth_moment_bound"};

    std::mt19937_64 rng(seed);
    for (int s = 0; s < samples; ++s) {
        const Perturbation ga = make_perturbation(grid, anchor, aligned_perturbation(grid, anchor, rng));
        const Perturbation gs = make_perturbation(grid, anchor, smooth_random_field(grid, rng));

        const double Q1a = q1(ga), Q2a = q2(ga), n2a = norm_sq(ga);
        if (n2a > 1e-280) {
            const double scale_q = std::max({Q2a, beta * beta * Q1a, 1e-300});
            q2_aligned.update((beta * beta * Q1a - Q2a) / scale_q);
            const double scale_n = std::max({Q1a, eta * eta * n2a, 1e-300});
            q1_aligned.update((eta * eta * n2a - Q1a) / scale_n);

            const double dir = dirichlet_energy(ga);
            const double lo = a * a * Q2a, hi = b * b * Q2a;
            const double scale_s = std::max({dir, hi, 1e-300});
            sandwich.update(std::max(lo - dir, dir - hi) / scale_s);

            moment.update(moment_weighted_bound_check(ga, tc.C_D));

            // remainder bounds on f = G(1 + c g) with c keeping f positive
            double gmax = 0.0;
            for (double gi : ga.g) gmax = std::max(gmax, std::abs(gi));
            const double c = 0.3 / std::max(gmax, 1e-12);
            std::vector<double> scaled(ga.g);
            for (double& gi : scaled) gi *= c;
            const Perturbation gc = make_perturbation(grid, anchor, scaled);
            GridDensity f{grid, std::vector<double>(grid.cells())};
            for (int i = 0; i < grid.cells(); ++i) f.values[i] = ga.weight[i] * (1.0 + gc.g[i]);
            const std::vector<double> usp = u_star_prime(f, p, lctx.r);
            const double R = remainder_R(gc, usp);
            const double Q1c = q1(gc), Q2c = q2(gc);
            const double vnorm = std::max(norm2(gc.v_g), norm2(usp));
            const double rhs_abs = tc.B_D * vnorm * Q2c;
            rem_abs.update((std::abs(R) - rhs_abs) / std::max({rhs_abs, std::abs(R), 1e-300}));
            const double rhs_sqrt = tc.K_D * Q2c * std::sqrt(std::max(Q1c, 0.0));
            rem_sqrt.update((R - rhs_sqrt) / std::max({rhs_sqrt, std::abs(R), 1e-300}));
        }

        const double Q1s = q1(gs), Q2s = q2(gs), n2s = norm_sq(gs);
        if (n2s > 1e-280) {
            const double wgt = alignment_weight(gs.v_g, u_anchor);
            const double scale_q = std::max({Q2s, beta * beta * wgt * Q1s, 1e-300});
            q2_weighted.update((beta * beta * wgt * Q1s - Q2s) / scale_q);
            const double scale_n = std::max({Q1s, eta * eta * wgt * n2s, 1e-300});
            q1_weighted.update((eta * eta * wgt * n2s - Q1s) / scale_n);

            // symmetry of the generator against the aligned partner, with the
            // weak-identity residual as the per-pair discretization estimate
            const std::vector<double> La = apply_L(ga);
            const std::vector<double> Ls = apply_L(gs);
            const double s12 = raw_inner_u(ga, La, gs);
            const double s21 = raw_inner_u(ga, Ls, ga);
            std::vector<double> sum(ga.g);
            for (int i = 0; i < grid.cells(); ++i) sum[i] += gs.g[i];
            const Perturbation gsum = make_perturbation(grid, anchor, sum);
            const double q2_cross = 0.5 * (q2(gsum) - q2(ga) - q2(gs));
            const double weak = std::max(std::abs(s12 + q2_cross), std::abs(s21 + q2_cross));
            const double scale = std::max({std::abs(s12), std::abs(s21), q2(ga), 1e-300});
            symmetry.update((std::abs(s12 - s21) - 10.0 * weak) / scale);
        }
    }

    ConfigMap eff;
    echo_model(eff, p);
    eff.set("seed", std::to_string(seed));
    eff.set("linearize.n", std::to_string(n));
    eff.set("linearize.L", format_double(L));
    eff.set("linearize.samples", std::to_string(samples));
    eff.set("linearize.pl_eps", format_double(pl_eps));

    CsvWriter w(out);
    stamp(w, "linearize", eff);
    w.header({"kind", "name", "value", "checked", "violations", "max_violation"});
    auto constant = [&](const char* name, double value) {
        w.row_strings({"constant", name, format_double(value), "", "", ""});
    };
    constant("r", lctx.r);
    constant("kappa", lctx.kappa);
    constant("Lambda", lctx.lambda);
    constant("eta", eta);
    constant("beta", beta);
    constant("a", a);
    constant("b", b);
    constant("W2", lctx.W2);
    constant("W6", lctx.W6);
    constant("mu1", lctx.pl.mu1);
    constant("mu2", lctx.pl.mu2);
    constant("delta", lctx.pl.delta);
    constant("C_D", tc.C_D);
    constant("gamma", tc.gamma);
    constant("B_D", tc.B_D);
    constant("K_D", tc.K_D);
    constant("A_D", tc.A_D);
    constant("activation_threshold", tc.activation_threshold);
    for (const CheckStats* ck : {&q2_aligned, &q1_aligned, &sandwich, &q2_weighted, &q1_weighted,
                                 &symmetry, &rem_abs, &rem_sqrt, &moment}) {
        w.row_strings({"check", ck->name, "", std::to_string(ck->checked),
                       std::to_string(ck->violations),
                       ck->checked ? format_double(ck->max_violation) : ""});
    }
}

void cmd_rates(const ConfigMap& cfg, std::ostream& out) {
    if (!cfg.has("rates.input")) throw ConfigError("rates.input is required");
    const std::string input = cfg.get_string("rates.input", "");
    const double window = cfg.get_double("rates.window", 0.3);
    if (!(window > 0.0) || window > 1.0) throw ConfigError("rates.window must lie in (0, 1]");

    const CsvTable table = read_csv(input);

    // model parameters come from the embedded configuration of the trajectory
    // file; explicit model.* keys override
    std::string blob;
    for (const std::string& c : table.comments)
        if (c.rfind("cfg ", 0) == 0) blob += c.substr(4) + "\n";
    const ConfigMap embedded = parse_config_text(blob);
    ModelParams p;
    p.d = cfg.has("model.d") ? cfg.get_int("model.d", 1) : embedded.get_int("model.d", 1);
    p.alpha = cfg.has("model.alpha") ? cfg.get_double("model.alpha", 4.0)
                                     : embedded.get_double("model.alpha", 4.0);
    if (!cfg.has("model.D") && !embedded.has("model.D"))
        throw ConfigError("model.D not found in " + input + "; pass --set model.D=...");
    p.D = cfg.has("model.D") ? cfg.get_double("model.D", 1.0) : embedded.get_double("model.D", 1.0);
    cfg.check_all_consumed();
    validate(p);

    const double D_star = find_D_star(p.d, p.alpha);
    const bool subcritical = p.D < D_star;

    const std::vector<double> t = table.column_values("t");
    if (t.size() < 2) throw ConfigError("trajectory in " + input + " has fewer than two rows");

    ConfigMap eff;
    echo_model(eff, p);
    eff.set("rates.input", input);
    eff.set("rates.window", format_double(window));

    CsvWriter w(out);
    stamp(w, "rates", eff);
    w.comment("D_star = " + format_double(D_star));
    w.comment(std::string("regime = ") + (subcritical ? "subcritical" : "supercritical"));
    double reference = std::numeric_limits<double>::quiet_NaN();
    if (subcritical) {
        const Coercivity co = coercivity_constants(p);
        reference = 2.0 * co.beta * co.beta;
        w.comment("two_beta_sq = " + format_double(reference));
    }
    w.header({"series", "fit", "rate", "r_squared", "n_points", "reference"});

    auto emit = [&](const std::string& series, const char* fit_kind,
                    const std::vector<double>& values, bool algebraic, double ref) {
        // keep finite positive samples and drop the trailing run that has
        // already decayed to zero or below
        std::vector<double> tt, vv;
        std::size_t last = values.size();
        while (last > 0 && !(values[last - 1] > 0.0)) --last;
        for (std::size_t i = 0; i < last; ++i) {
            if (!std::isfinite(values[i]) || values[i] <= 0.0) continue;
            if (algebraic && !(t[i] > 0.0)) continue;
            tt.push_back(t[i]);
            vv.push_back(values[i]);
        }
        try {
            const RateFit fit = algebraic ? fit_algebraic_rate(tt, vv, window)
                                          : fit_exponential_rate(tt, vv, window);
            w.row_strings({series, fit_kind, format_double(fit.rate), format_double(fit.r_squared),
                           std::to_string(fit.n_points), format_double(ref)});
        } catch (const NumericalError& e) {
            w.comment("series " + series + " (" + fit_kind + ") skipped: " + e.what());
        }
    };
    auto column_or_skip = [&](const std::string& name) -> std::optional<std::vector<double>> {
        if (table.column(name) < 0) {
            w.comment("series " + name + " skipped: column not present");
            return std::nullopt;
        }
        return table.column_values(name);
    };

    if (subcritical) {
        if (auto q1col = column_or_skip("Q1")) emit("Q1", "exponential", *q1col, false, reference);
        if (auto hcol = column_or_skip("H_rel_inf"))
            emit("H_rel_inf", "exponential", *hcol, false, reference);
        // squared distance of the mean velocity to its terminal value
        std::vector<double> dist2(t.size(), 0.0);
        bool have_uf = table.column("uf_1") >= 0;
        if (have_uf) {
            std::vector<std::vector<double>> uf;
            uf.push_back(table.column_values("uf_1"));
            if (p.d == 2) {
                if (table.column("uf_2") < 0) have_uf = false;
                else uf.push_back(table.column_values("uf_2"));
            }
            if (have_uf) {
                for (std::size_t i = 0; i < t.size(); ++i) {
                    double s = 0.0;
                    for (const auto& col : uf) {
                        const double dv = col[i] - col.back();
                        s += dv * dv;
                    }
                    dist2[i] = s;
                }
                emit("dist_u_inf_sq", "exponential", dist2, false, reference);
            }
        }
        if (!have_uf) w.comment("series dist_u_inf_sq skipped: mean-velocity columns not present");
    } else {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        if (auto gap = column_or_skip("F_gap")) {
            emit("F_gap", "algebraic", *gap, true, nan);
            emit("F_gap", "exponential", *gap, false, nan);
        }
        if (auto h = column_or_skip("H_rel_star")) {
            emit("H_rel_star", "algebraic", *h, true, nan);
            emit("H_rel_star", "exponential", *h, false, nan);
        }
        if (auto d = column_or_skip("dist_S")) emit("dist_S", "algebraic", *d, true, nan);
    }
}

int run_cli(int argc, const char* const* argv) {
    std::string config_path;
    std::string out_path;
    std::vector<std::string> overrides;

    CLI::App app{"numerical laboratory for the noisy alignment mean-field equation", "flockfp"};
    app.require_subcommand(1);
    const struct {
        const char* name;
        const char* desc;
    } subs[] = {
        {"phase", "sweep the noise level and tabulate the transition structure"},
        {"simulate", "evolve an initial density and dump trajectory diagnostics"},
        {"linearize", "coercivity constants and inequality checks at the polarized state"},
        {"rates", "fit decay rates from a recorded trajectory CSV"},
    };
    for (const auto& s : subs) {
        CLI::App* sub = app.add_subcommand(s.name, s.desc);
        sub->add_option("--config", config_path, "key = value configuration file");
        sub->add_option("--out", out_path, "output CSV path (default: stdout)");
        sub->add_option("--set", overrides, "override a configuration key, key=value (repeatable)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config_error;
    }

    try {
        ConfigMap cfg;
        if (!config_path.empty()) cfg = parse_config_file(config_path);
        for (const std::string& s : overrides) apply_override(cfg, s);

        std::ostringstream body;
        if (app.got_subcommand("phase")) cmd_phase(cfg, body);
        else if (app.got_subcommand("simulate")) cmd_simulate(cfg, body);
        else if (app.got_subcommand("linearize")) cmd_linearize(cfg, body);
        else if (app.got_subcommand("rates")) cmd_rates(cfg, body);

        if (out_path.empty()) {
            std::cout << body.str();
        } else {
            std::ofstream f(out_path, std::ios::binary);
            if (!f) throw ConfigError("cannot open output file: " + out_path);
            f << body.str();
            if (!f) throw ConfigError("failed while writing output file: " + out_path);
        }
        return exit_ok;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return exit_numerical_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numerical_error;
    }
}

}  // namespace flockfp
