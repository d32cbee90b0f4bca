#include "flockfp/linearized.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "banded.hpp"
#include "flockfp/errors.hpp"

namespace flockfp {

namespace {

std::uint64_t fnv_doubles(const double* data, std::size_t count) {
    std::uint64_t h = 1469598103934665603ull;
    const unsigned char* bytes = reinterpret_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < count * sizeof(double); ++i) {
        h ^= bytes[i];
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t anchor_identity(const Grid& grid, const GibbsState& anchor) {
    std::vector<double> key;
    key.push_back(static_cast<double>(anchor.params.d));
    key.push_back(anchor.params.alpha);
    key.push_back(anchor.params.D);
    for (double c : anchor.u) key.push_back(c);
    key.push_back(static_cast<double>(grid.n));
    key.push_back(grid.L);
    return fnv_doubles(key.data(), key.size());
}

// centered interior differences, one-sided at the ends
void gradient_axis(const Grid& grid, const std::vector<double>& x, int axis,
                   std::vector<double>& out) {
    const int n = grid.n;
    const double h = grid.h;
    out.resize(x.size());
    const int stride = axis == 0 ? 1 : n;
    const int lines = grid.d == 1 ? 1 : n;
    const int line_stride = axis == 0 ? n : 1;
    for (int l = 0; l < lines; ++l) {
        const int base = l * line_stride;
        out[base] = (x[base + stride] - x[base]) / h;
        for (int k = 1; k + 1 < n; ++k)
            out[base + k * stride] =
                (x[base + (k + 1) * stride] - x[base + (k - 1) * stride]) / (2.0 * h);
        out[base + (n - 1) * stride] =
            (x[base + (n - 1) * stride] - x[base + (n - 2) * stride]) / h;
    }
}

// second differences, stencil shifted inward at the ends
void laplacian(const Grid& grid, const std::vector<double>& x, std::vector<double>& out) {
    const int n = grid.n;
    const double h2 = grid.h * grid.h;
    out.assign(x.size(), 0.0);
    for (int axis = 0; axis < grid.d; ++axis) {
        const int stride = axis == 0 ? 1 : n;
        const int lines = grid.d == 1 ? 1 : n;
        const int line_stride = axis == 0 ? n : 1;
        for (int l = 0; l < lines; ++l) {
            const int base = l * line_stride;
            auto second = [&](int k) {
                return (x[base + (k + 1) * stride] - 2.0 * x[base + k * stride] +
                        x[base + (k - 1) * stride]) /
                       h2;
            };
            out[base] += second(1);
            for (int k = 1; k + 1 < n; ++k) out[base + k * stride] += second(k);
            out[base + (n - 1) * stride] += second(n - 2);
        }
    }
}

void check_dimensions(const Grid& grid, const GibbsState& anchor) {
    if (grid.d != anchor.params.d)
        throw ConfigError("grid and anchor dimensions disagree");
}

void require_same_anchor(const Perturbation& a, const Perturbation& b) {
    if (a.anchor_tag != b.anchor_tag)
        throw AnchorMismatch("perturbations live against different anchors");
}

double drift_component(const ModelParams& p, const double* v, const double* u, double s2,
                       int k) {
    return p.alpha * (s2 - 1.0) * v[k] + v[k] - u[k];
}

}  // namespace

Perturbation make_perturbation(const Grid& grid, const GibbsState& anchor,
                               std::vector<double> raw) {
    check_dimensions(grid, anchor);
    if (static_cast<int>(raw.size()) != grid.cells())
        throw ConfigError("perturbation size disagrees with the grid");
    Perturbation p;
    p.grid = grid;
    p.anchor = anchor;
    p.weight = discrete_gibbs(grid, anchor).values;
    p.anchor_tag = anchor_identity(grid, anchor);

    const double vol = grid.cell_volume();
    double mean = 0.0;
    for (int i = 0; i < grid.cells(); ++i) mean += raw[i] * p.weight[i];
    mean *= vol;
    for (double& x : raw) x -= mean;
    p.g = std::move(raw);

    p.v_g.assign(grid.d, 0.0);
    double v[2];
    for (int i = 0; i < grid.cells(); ++i) {
        grid.coords(i, v);
        const double gw = p.g[i] * p.weight[i];
        for (int k = 0; k < grid.d; ++k) p.v_g[k] += v[k] * gw;
    }
    for (int k = 0; k < grid.d; ++k) p.v_g[k] *= vol / anchor.params.D;
    return p;
}

Perturbation perturbation_from_density(const GridDensity& f, const GibbsState& anchor) {
    check_dimensions(f.grid, anchor);
    const GridDensity w = discrete_gibbs(f.grid, anchor);
    std::vector<double> raw(f.values.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (!(w.values[i] > 0.0))
            throw NonPositiveValues("anchor weight vanished on the grid");
        raw[i] = f.values[i] / w.values[i] - 1.0;
    }
    return make_perturbation(f.grid, anchor, std::move(raw));
}

double norm_sq(const Perturbation& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.g.size(); ++i) s += p.g[i] * p.g[i] * p.weight[i];
    return s * p.grid.cell_volume();
}

double q1(const Perturbation& p) {
    const double D = p.anchor.params.D;
    double vg2 = 0.0;
    for (double c : p.v_g) vg2 += c * c;
    return D * norm_sq(p) - D * D * vg2;
}

double inner_u(const Perturbation& p1, const Perturbation& p2) {
    require_same_anchor(p1, p2);
    const double D = p1.anchor.params.D;
    double s = 0.0;
    for (std::size_t i = 0; i < p1.g.size(); ++i) s += p1.g[i] * p2.g[i] * p1.weight[i];
    s *= p1.grid.cell_volume();
    double cross = 0.0;
    for (int k = 0; k < p1.grid.d; ++k) cross += p1.v_g[k] * p2.v_g[k];
    return D * s - D * D * cross;
}

double q2(const Perturbation& p) {
    const double D = p.anchor.params.D;
    const double vol = p.grid.cell_volume();
    double acc = 0.0;
    std::vector<double> grad;
    for (int axis = 0; axis < p.grid.d; ++axis) {
        gradient_axis(p.grid, p.g, axis, grad);
        const double vk = p.v_g[axis];
        for (std::size_t i = 0; i < grad.size(); ++i) {
            const double dv = grad[i] - vk;
            acc += dv * dv * p.weight[i];
        }
    }
    return D * D * acc * vol;
}

std::vector<double> apply_L(const Perturbation& p) {
    const ModelParams& m = p.anchor.params;
    std::vector<double> out;
    laplacian(p.grid, p.g, out);
    for (double& x : out) x *= m.D;

    std::vector<double> grad[2];
    for (int axis = 0; axis < p.grid.d; ++axis)
        gradient_axis(p.grid, p.g, axis, grad[axis]);

    double v[2];
    for (int i = 0; i < p.grid.cells(); ++i) {
        p.grid.coords(i, v);
        double s2 = 0.0;
        for (int k = 0; k < p.grid.d; ++k) s2 += v[k] * v[k];
        for (int k = 0; k < p.grid.d; ++k) {
            const double a = drift_component(m, v, p.anchor.u.data(), s2, k);
            out[i] += a * (p.v_g[k] - grad[k][i]);
        }
    }
    return out;
}

std::vector<double> apply_R(const Perturbation& p) {
    const ModelParams& m = p.anchor.params;
    std::vector<double> grad[2];
    for (int axis = 0; axis < p.grid.d; ++axis)
        gradient_axis(p.grid, p.g, axis, grad[axis]);

    std::vector<double> out(p.g.size(), 0.0);
    double v[2];
    for (int i = 0; i < p.grid.cells(); ++i) {
        p.grid.coords(i, v);
        double s2 = 0.0;
        for (int k = 0; k < p.grid.d; ++k) s2 += v[k] * v[k];
        double acc = 0.0;
        for (int k = 0; k < p.grid.d; ++k) {
            const double a = drift_component(m, v, p.anchor.u.data(), s2, k);
            acc += p.v_g[k] * (m.D * grad[k][i] - a * p.g[i]);
        }
        out[i] = -acc;
    }
    return out;
}

std::vector<double> project_u_star(const std::vector<double>& u_f, double r) {
    const double n = norm2(u_f);
    if (n < 1e-12) throw ZeroMeanVelocity("cannot project a vanishing mean velocity");
    std::vector<double> out(u_f.size());
    for (std::size_t k = 0; k < u_f.size(); ++k) out[k] = r * u_f[k] / n;
    return out;
}

std::vector<double> u_star_prime(const GridDensity& f, const ModelParams& p, double r) {
    if (f.grid.d != p.d) throw ConfigError("density dimension disagrees with the model");
    const std::vector<double> u = mean_velocity(f);
    const double n = norm2(u);
    if (n < 1e-12) throw ZeroMeanVelocity("anchor velocity undefined at zero mean");

    // d/dt u_f = alpha u_f - alpha int |v|^2 v f dv, then the differential of
    // the radial projection, r (w/|u| - u (u.w)/|u|^3)
    const std::vector<double> m2 = weighted_first_moment(f, 2);
    std::vector<double> w(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) w[k] = p.alpha * (u[k] - m2[k]);

    const double uw = dot(u, w);
    std::vector<double> out(u.size());
    for (std::size_t k = 0; k < u.size(); ++k)
        out[k] = r * (w[k] / n - u[k] * uw / (n * n * n));

    // exact tangency against the projected anchor
    double ou = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) ou += out[k] * u[k];
    ou /= n * n;
    for (std::size_t k = 0; k < u.size(); ++k) out[k] -= ou * u[k];
    return out;
}

double remainder_R(const Perturbation& p, const std::vector<double>& u_star_prime_vec) {
    const ModelParams& m = p.anchor.params;
    if (static_cast<int>(u_star_prime_vec.size()) != p.grid.d)
        throw ConfigError("anchor velocity derivative has the wrong dimension");
    const double vol = p.grid.cell_volume();

    double first = 0.0;
    std::vector<double> grad;
    for (int axis = 0; axis < p.grid.d; ++axis) {
        gradient_axis(p.grid, p.g, axis, grad);
        double acc = 0.0;
        for (std::size_t i = 0; i < grad.size(); ++i)
            acc += p.g[i] * (grad[i] - p.v_g[axis]) * p.weight[i];
        first += p.v_g[axis] * acc * vol;
    }
    first *= m.D * m.D;

    double second = 0.0;
    double v[2];
    for (int i = 0; i < p.grid.cells(); ++i) {
        p.grid.coords(i, v);
        double along = 0.0;
        for (int k = 0; k < p.grid.d; ++k) along += u_star_prime_vec[k] * v[k];
        second += p.g[i] * p.g[i] * along * p.weight[i];
    }
    second *= 0.5 * vol;
    return first - second;
}

LinearizedContext make_linearized_context(const ModelParams& p, double pl_eps) {
    validate(p);
    const std::optional<double> r = find_r_of_D(p);
    if (!r)
        throw NoPolarizedState("the contraction constants need a polarized state");
    LinearizedContext ctx;
    ctx.params = p;
    ctx.r = *r;
    ctx.kappa = kappa(p);
    std::vector<double> u(p.d, 0.0);
    u[0] = ctx.r;
    ctx.lambda = poincare_gap(p, u);
    const double one_minus_kappa = 1.0 - ctx.kappa;
    ctx.coercivity.eta = std::sqrt(p.D * one_minus_kappa);
    ctx.coercivity.beta = p.D * ctx.lambda * one_minus_kappa;
    ctx.W2 = weighted_moment_W(p, 2);
    ctx.W6 = weighted_moment_W(p, 6);
    ctx.coercivity.b =
        2.0 / p.D * std::sqrt(ctx.W2) * (1.0 / (ctx.coercivity.eta * ctx.coercivity.beta) + 1.0);
    ctx.coercivity.a = 1.0 / std::sqrt(p.D * p.D + 2.0 * p.D * std::sqrt(ctx.W2 / ctx.lambda) +
                                       ctx.W2 / ctx.lambda);
    ctx.pl = pl_constants(p, pl_eps);
    return ctx;
}

namespace {

// Rayleigh quotient of the sixth-moment inequality with centered gradients,
// the same discretization the bound check uses
double probe_rayleigh(const Grid& grid, const std::vector<double>& w, const ModelParams& p,
                      const std::vector<double>& g) {
    const double c6 = p.alpha * p.alpha / (8.0 * p.D * p.D);
    double num = 0.0, den = 0.0;
    double v[2];
    for (int i = 0; i < grid.cells(); ++i) {
        grid.coords(i, v);
        double s2 = 0.0;
        for (int k = 0; k < grid.d; ++k) s2 += v[k] * v[k];
        num += c6 * s2 * s2 * s2 * g[i] * g[i] * w[i];
        den += g[i] * g[i] * w[i];
    }
    std::vector<double> grad;
    for (int axis = 0; axis < grid.d; ++axis) {
        gradient_axis(grid, g, axis, grad);
        for (std::size_t i = 0; i < grad.size(); ++i) num -= grad[i] * grad[i] * w[i];
    }
    if (!(den > 0.0)) return -std::numeric_limits<double>::infinity();
    return num / den;
}

}  // namespace

double calibrate_moment_constant(const ModelParams& p, const Grid& grid,
                                 const GibbsState& anchor) {
    validate(p);
    check_dimensions(grid, anchor);
    const int N = grid.cells();
    const int bw = grid.d == 1 ? 1 : grid.n;
    const double h = grid.h;
    const double c6 = p.alpha * p.alpha / (8.0 * p.D * p.D);

    // scale-free anchor weights; Rayleigh quotients are normalization-free
    std::vector<double> phi(N), w(N);
    double phi_min = std::numeric_limits<double>::infinity();
    double v[2];
    for (int i = 0; i < N; ++i) {
        grid.coords(i, v);
        phi[i] = potential(p, v, anchor.u.data());
        phi_min = std::min(phi_min, phi[i]);
    }
    for (int i = 0; i < N; ++i) w[i] = std::exp(-(phi[i] - phi_min) / p.D);

    // Face-based Dirichlet form minus the sixth-moment diagonal; the largest
    // pencil eigenvalue against the mass diagonal is the sharp constant. The
    // matrix is assembled after a symmetric scaling by 1/sqrt(w_i vol): a
    // congruence, so positive definiteness is unchanged, while every entry
    // becomes exp(O(|grad phi| h / D)) and the deep tail cannot underflow to
    // exact zero rows.
    detail::BandMatrix base;
    base.n = N;
    base.bw = bw;
    base.a.assign(static_cast<std::size_t>(N) * (bw + 1), 0.0);
    const double inv_h2 = 1.0 / (h * h);  // face_scale / vol
    const auto grow = [](double e) { return std::exp(std::min(e, 700.0)); };
    auto add_face = [&](int i, int j, double phi_mid) {
        base.at(0, i) += inv_h2 * grow((phi[i] - phi_mid) / p.D);
        base.at(0, j) += inv_h2 * grow((phi[j] - phi_mid) / p.D);
        base.at(j - i, i) -= inv_h2 * grow((0.5 * (phi[i] + phi[j]) - phi_mid) / p.D);
    };
    double vm[2];
    for (int i = 0; i < N; ++i) {
        grid.coords(i, vm);
        const int ix = p.d == 1 ? i : i % grid.n;
        if (ix < grid.n - 1) {
            const double save = vm[0];
            vm[0] += 0.5 * h;
            add_face(i, i + 1, potential(p, vm, anchor.u.data()));
            vm[0] = save;
        }
        if (p.d == 2 && i / grid.n < grid.n - 1) {
            vm[1] += 0.5 * h;
            add_face(i, i + grid.n, potential(p, vm, anchor.u.data()));
            vm[1] -= 0.5 * h;
        }
    }

    std::vector<double> moment6(N);
    double s_hi = 1.0;
    for (int i = 0; i < N; ++i) {
        grid.coords(i, v);
        double s2 = 0.0;
        for (int k = 0; k < grid.d; ++k) s2 += v[k] * v[k];
        moment6[i] = c6 * s2 * s2 * s2;
        s_hi = std::max(s_hi, moment6[i]);
    }
    s_hi += 1.0;

    // positive-definiteness bisection: the sharp constant is the smallest s
    // with  A - P + s B  positive semidefinite (B scales to the identity)
    const auto is_pd = [&](double s) {
        detail::BandMatrix m = base;
        for (int i = 0; i < N; ++i) m.at(0, i) += s - moment6[i];
        return detail::try_cholesky(m);
    };
    double s_lo = 0.0;
    if (!is_pd(s_hi))
        throw EigenNotConverged("moment-constant bracket failed unexpectedly");
    if (is_pd(0.0)) {
        s_hi = 0.0;  // inequality already holds with no zeroth-order help
    } else {
        while (s_hi - s_lo > 1e-4 + 1e-3 * s_hi) {
            const double mid = 0.5 * (s_lo + s_hi);
            (is_pd(mid) ? s_hi : s_lo) = mid;
        }
    }

    // smooth probe family keeps the centered-gradient realization honest
    double probe_max = 0.0;
    std::vector<double> g(static_cast<std::size_t>(N));
    const int n_monomials = grid.d == 1 ? 5 : 8;
    for (int env = 0; env < 2; ++env) {
        for (int mono = 0; mono < n_monomials; ++mono) {
            for (int i = 0; i < N; ++i) {
                grid.coords(i, v);
                const double s2 = v[0] * v[0] + (grid.d == 2 ? v[1] * v[1] : 0.0);
                double m = 1.0;
                switch (mono) {
                    case 0: m = 1.0; break;
                    case 1: m = v[0]; break;
                    case 2: m = s2; break;
                    case 3: m = v[0] * s2; break;
                    case 4: m = s2 * s2; break;
                    case 5: m = v[1]; break;
                    case 6: m = v[0] * v[1]; break;
                    case 7: m = v[1] * s2; break;
                }
                g[i] = m * (env == 0 ? 1.0 : std::exp(-0.5 * s2));
            }
            probe_max = std::max(probe_max, probe_rayleigh(grid, w, p, g));
        }
    }

    return 1.02 * std::max({s_hi, probe_max, 0.0});
}

TheoremConstants theorem_constants(const LinearizedContext& ctx, const Grid& grid) {
    const ModelParams& p = ctx.params;
    std::vector<double> u(p.d, 0.0);
    u[0] = ctx.r;
    const GibbsState anchor = make_gibbs(p, u);

    TheoremConstants tc;
    tc.C_D = calibrate_moment_constant(p, grid, anchor);

    const double eta = ctx.coercivity.eta;
    const double beta = ctx.coercivity.beta;
    const double b = ctx.coercivity.b;
    const double eb2 = eta * eta * beta * beta;
    tc.gamma = std::pow(8.0 * p.D * p.D / p.alpha, 1.0 / 6.0) *
               std::pow(tc.C_D / eb2 + b * b, 1.0 / 6.0) * std::pow(1.0 / eb2, 5.0 / 6.0);
    tc.B_D = p.D * p.D / (eta * beta) + 0.5 * tc.gamma;
    tc.K_D = tc.B_D * (std::sqrt(ctx.W2) / (p.D * eta) +
                       2.0 * p.alpha * std::sqrt(ctx.W6) / (ctx.r * eta));
    tc.A_D = std::min(ctx.pl.delta * eta / std::sqrt(ctx.W2), 1.0 / (tc.K_D * tc.K_D));
    tc.activation_threshold =
        std::min(ctx.pl.delta * ctx.pl.delta * eta * eta / ctx.W2, 1.0 / (tc.K_D * tc.K_D));
    return tc;
}

double moment_weighted_bound_check(const Perturbation& p) {
    return moment_weighted_bound_check(
        p, calibrate_moment_constant(p.anchor.params, p.grid, p.anchor));
}

double moment_weighted_bound_check(const Perturbation& p, double C_D) {
    const ModelParams& m = p.anchor.params;
    const double c6 = m.alpha * m.alpha / (8.0 * m.D * m.D);
    const double vol = p.grid.cell_volume();

    double lhs = 0.0, mass = 0.0;
    double v[2];
    for (int i = 0; i < p.grid.cells(); ++i) {
        p.grid.coords(i, v);
        double s2 = 0.0;
        for (int k = 0; k < p.grid.d; ++k) s2 += v[k] * v[k];
        lhs += c6 * s2 * s2 * s2 * p.g[i] * p.g[i] * p.weight[i];
        mass += p.g[i] * p.g[i] * p.weight[i];
    }
    double grad_term = 0.0;
    std::vector<double> grad;
    for (int axis = 0; axis < p.grid.d; ++axis) {
        gradient_axis(p.grid, p.g, axis, grad);
        for (std::size_t i = 0; i < grad.size(); ++i)
            grad_term += grad[i] * grad[i] * p.weight[i];
    }
    const double rhs = C_D * mass + grad_term;
    return (lhs - rhs) * vol / std::max(mass * vol, 1e-300);
}

namespace {

double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double symmetric_uniform(std::mt19937_64& rng) { return 2.0 * unit_uniform(rng) - 1.0; }

}  // namespace

std::vector<double> aligned_perturbation(const Grid& grid, const GibbsState& anchor,
                                         std::mt19937_64& rng) {
    check_dimensions(grid, anchor);
    const double nu = norm2(anchor.u);
    std::vector<double> dir(grid.d, 0.0);
    if (nu > 1e-12) {
        for (int k = 0; k < grid.d; ++k) dir[k] = anchor.u[k] / nu;
    } else {
        dir[0] = 1.0;
    }

    double c[4];
    if (unit_uniform(rng) < 1.0 / 3.0) {
        // near-extremal: the sharp constants are attained close to rho = 1
        c[0] = 1.0;
        for (int k = 1; k < 4; ++k) c[k] = 0.02 * symmetric_uniform(rng);
    } else {
        for (double& ck : c) ck = symmetric_uniform(rng);
    }

    std::vector<double> g(static_cast<std::size_t>(grid.cells()));
    double v[2];
    for (int i = 0; i < grid.cells(); ++i) {
        grid.coords(i, v);
        double s2 = 0.0, along = 0.0;
        for (int k = 0; k < grid.d; ++k) {
            s2 += v[k] * v[k];
            along += v[k] * dir[k];
        }
        const double rho = c[0] + c[1] * s2 + c[2] * s2 * s2 + c[3] * std::exp(-s2);
        g[i] = rho * along;
    }
    return g;
}

std::vector<double> smooth_random_field(const Grid& grid, std::mt19937_64& rng) {
    double coeff[2][4];
    for (auto& axis : coeff)
        for (double& ck : axis) ck = symmetric_uniform(rng);
    const double sigma = 0.5 + unit_uniform(rng);

    std::vector<double> g(static_cast<std::size_t>(grid.cells()));
    double v[2];
    for (int i = 0; i < grid.cells(); ++i) {
        grid.coords(i, v);
        double poly = 1.0, s2 = 0.0;
        for (int k = 0; k < grid.d; ++k) {
            const double x = v[k];
            poly *= coeff[k][0] + coeff[k][1] * x + coeff[k][2] * x * x +
                    coeff[k][3] * x * x * x;
            s2 += x * x;
        }
        g[i] = poly * std::exp(-0.5 * s2 / (sigma * sigma));
    }
    return g;
}

}  // namespace flockfp
