#include "flockfp/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <string>
#include <vector>

#include "flockfp/errors.hpp"

namespace flockfp {

void validate(const ModelParams& p) {
    if (p.d < 1) throw ConfigError("model dimension must be >= 1, got " + std::to_string(p.d));
    if (!(p.alpha >= 0.0) || !std::isfinite(p.alpha))
        throw ConfigError("alpha must be finite and >= 0");
    if (!(p.D > 0.0) || !std::isfinite(p.D)) throw ConfigError("noise D must be finite and > 0");
}

void validate(const QuadSpec& spec) {
    if (!(spec.rel_tol > 0.0) || spec.rel_tol > 1e-4)
        throw ConfigError("quadrature rel_tol must lie in (0, 1e-4]");
    if (spec.n_theta < 16 || spec.n_theta % 2 != 0)
        throw ConfigError("n_theta must be an even integer >= 16");
    if (!std::isfinite(spec.s_max) || spec.s_max < 0.0)
        throw ConfigError("s_max must be finite and >= 0");
}

namespace {

struct GaussRule {
    std::vector<double> x, w;
};

// Nodes by Newton iteration on the Legendre recurrence; avoids hand-copied
// tables. Weights from the standard derivative formula.
GaussRule legendre_rule(int n) {
    GaussRule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 64; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 4e-16) break;
        }
        r.x[i] = x;
        r.w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

const GaussRule& rule7() {
    static const GaussRule r = legendre_rule(7);
    return r;
}

const GaussRule& rule15() {
    static const GaussRule r = legendre_rule(15);
    return r;
}

struct Segment {
    double a = 0.0, b = 0.0;
    double fine = 0.0;   // 15-point estimate
    double err = 0.0;    // |15-point - 7-point|
    double fabs = 0.0;   // 15-point estimate of |f|
};

template <class F>
Segment eval_segment(const F& f, double a, double b) {
    const GaussRule& r15 = rule15();
    const GaussRule& r7 = rule7();
    const double c = 0.5 * (a + b), s = 0.5 * (b - a);
    double f15 = 0.0, fa = 0.0;
    for (std::size_t i = 0; i < r15.x.size(); ++i) {
        const double y = f(c + s * r15.x[i]);
        f15 += r15.w[i] * y;
        fa += r15.w[i] * std::abs(y);
    }
    double f7 = 0.0;
    for (std::size_t i = 0; i < r7.x.size(); ++i) f7 += r7.w[i] * f(c + s * r7.x[i]);
    return {a, b, f15 * s, std::abs(f15 - f7) * s, fa * s};
}

// Globally adaptive bisection: split the segment with the largest error
// estimate until the summed estimate clears the relative target. The target
// keeps a floor proportional to the integral of |f| so that integrands with
// genuine cancellation (odd kernels) terminate.
template <class F>
double adaptive_gl(const F& f, double a, double b, double rel_tol, int seed_panels,
                   const char* what) {
    if (!(b > a)) return 0.0;
    seed_panels = std::max(1, seed_panels);

    std::vector<Segment> segs;
    segs.reserve(64);
    for (int k = 0; k < seed_panels; ++k) {
        const double lo = a + (b - a) * k / seed_panels;
        const double hi = a + (b - a) * (k + 1) / seed_panels;
        segs.push_back(eval_segment(f, lo, hi));
    }

    double total = 0.0, terr = 0.0, tabs = 0.0;
    for (const Segment& s : segs) {
        total += s.fine;
        terr += s.err;
        tabs += s.fabs;
    }

    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry> worst;
    for (std::size_t i = 0; i < segs.size(); ++i) worst.push({segs[i].err, i});

    const std::size_t max_segments = 16384;
    while (true) {
        // The floor keeps the absolute target comfortably above the roundoff
        // stall of the 15/7 error estimate, which pure relative tolerance
        // undercuts once the integrand cancels almost completely.
        const double tol =
            rel_tol * std::max(std::abs(total), 3e-2 * tabs) + std::numeric_limits<double>::min();
        if (terr <= tol) return total;
        if (segs.size() >= max_segments)
            throw NonConvergent(std::string("adaptive quadrature exhausted its panel budget in ") +
                                what);

        // lazy-deletion heap: skip stale entries
        Entry top = worst.top();
        worst.pop();
        while (top.first != segs[top.second].err) {
            top = worst.top();
            worst.pop();
        }
        const Segment s = segs[top.second];
        const double mid = 0.5 * (s.a + s.b);
        if (!(mid > s.a && mid < s.b))
            throw NonConvergent(std::string("adaptive quadrature hit interval collapse in ") +
                                what);

        const Segment left = eval_segment(f, s.a, mid);
        const Segment right = eval_segment(f, mid, s.b);
        total += left.fine + right.fine - s.fine;
        terr += left.err + right.err - s.err;
        tabs += left.fabs + right.fabs - s.fabs;
        segs[top.second] = left;
        worst.push({left.err, top.second});
        segs.push_back(right);
        worst.push({right.err, segs.size() - 1});
    }
}

}  // namespace

double truncation_radius(const ModelParams& p) {
    validate(p);
    const double s_peak = p.alpha > 1.0 ? std::sqrt((p.alpha - 1.0) / p.alpha) : 0.0;
    const double target = phi_alpha(p, s_peak) + 40.0 * p.D;
    double lo = s_peak, hi = std::max(1.0, s_peak);
    while (phi_alpha(p, hi) < target) {
        hi *= 2.0;
        if (hi > 1e8) throw NonConvergent("truncation radius search ran away");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (phi_alpha(p, mid) < target ? lo : hi) = mid;
    }
    return hi;
}

QuadSpec make_quad_spec(const ModelParams& p, double rel_tol) {
    QuadSpec spec;
    spec.rel_tol = rel_tol;
    spec.s_max = truncation_radius(p);
    return spec;
}

double sphere_measure(int k) {
    if (k < -1) throw DimensionUnsupported("sphere_measure needs k >= -1");
    if (k == -1 || k == 0) return 2.0;  // two-point spheres by convention
    return 2.0 * std::pow(std::numbers::pi, 0.5 * (k + 1)) / std::tgamma(0.5 * (k + 1));
}

ScaledReal angular_kernel(double x, int p, int d, const QuadSpec& spec) {
    validate(spec);
    if (d < 1) throw DimensionUnsupported("angular kernel needs d >= 1");
    if (p < 0) throw ConfigError("angular kernel power must be >= 0");
    const double ax = std::abs(x);
    if (d == 1) {
        // cosh/sinh with exp(|x|) split off
        const double t = std::exp(-2.0 * ax);
        if (p % 2 == 0) return {0.5 * (1.0 + t), ax};
        const double sign = x >= 0.0 ? 1.0 : -1.0;
        return {0.5 * sign * (1.0 - t), ax};
    }
    const auto integrand = [&](double theta) {
        const double c = std::cos(theta);
        return std::pow(c, p) * std::pow(std::sin(theta), d - 2) * std::exp(x * c - ax);
    };
    const double val = adaptive_gl(integrand, 0.0, std::numbers::pi,
                                   std::min(spec.rel_tol, 1e-13), spec.n_theta, "angular kernel");
    return {val, ax};
}

ScaledReal angular_h(double s, int d, int deriv, const QuadSpec& spec) {
    if (deriv < 0 || deriv > 2) throw ConfigError("angular_h derivative order must be 0, 1 or 2");
    return angular_kernel(s, 1 + deriv, d, spec);
}

double radial_integral(const std::function<double(double)>& weight_exponent,
                       const std::function<double(double)>& kernel, const QuadSpec& spec) {
    validate(spec);
    if (!(spec.s_max > 0.0)) throw ConfigError("radial integral needs a positive s_max");
    const auto f = [&](double s) { return kernel(s) * std::exp(-weight_exponent(s)); };
    return adaptive_gl(f, 0.0, spec.s_max, spec.rel_tol, 8, "radial integral");
}

ScaledReal radial_integral_scaled(const std::function<double(double)>& weight_exponent,
                                  const std::function<ScaledReal(double)>& kernel,
                                  const QuadSpec& spec) {
    validate(spec);
    if (!(spec.s_max > 0.0)) throw ConfigError("radial integral needs a positive s_max");

    // locate the dominating exponent so the shifted integrand stays bounded
    const int scan = 1024;
    double e_ref = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= scan; ++i) {
        const double s = spec.s_max * i / scan;
        const ScaledReal k = kernel(s);
        if (k.is_zero()) continue;
        e_ref = std::max(e_ref, k.e - weight_exponent(s));
    }
    if (!std::isfinite(e_ref)) return {0.0, 0.0};

    const auto f = [&](double s) {
        const ScaledReal k = kernel(s);
        if (k.is_zero()) return 0.0;
        return k.m * std::exp(k.e - weight_exponent(s) - e_ref);
    };
    const double val = adaptive_gl(f, 0.0, spec.s_max, spec.rel_tol, 8, "scaled radial integral");
    return {val, e_ref};
}

double tensor_integral(const std::function<double(const double*)>& f, const std::vector<double>& u,
                       const ModelParams& params, const QuadSpec& spec) {
    validate(params);
    validate(spec);
    if (params.d > 3) throw DimensionUnsupported("tensor integrals stop at d = 3");
    if (static_cast<int>(u.size()) != params.d)
        throw ConfigError("mean velocity dimension disagrees with the model");

    const double s_max = spec.s_max > 0.0 ? spec.s_max : truncation_radius(params);
    const double L = s_max + norm2(u);

    if (params.d == 1) {
        const auto g = [&](double v) {
            return f(&v) * std::exp(-potential(params, &v, u.data()) / params.D);
        };
        return adaptive_gl(g, -L, L, spec.rel_tol, 16, "tensor integral d=1");
    }

    // self-refining composite product rule
    const GaussRule& r15 = rule15();
    const auto level = [&](int m, double* abs_out) {
        std::vector<double> nodes, weights;
        nodes.reserve(15 * m);
        weights.reserve(15 * m);
        for (int k = 0; k < m; ++k) {
            const double lo = -L + 2.0 * L * k / m;
            const double hi = -L + 2.0 * L * (k + 1) / m;
            const double c = 0.5 * (lo + hi), s = 0.5 * (hi - lo);
            for (std::size_t i = 0; i < r15.x.size(); ++i) {
                nodes.push_back(c + s * r15.x[i]);
                weights.push_back(s * r15.w[i]);
            }
        }
        const int nn = static_cast<int>(nodes.size());
        double acc = 0.0, acc_abs = 0.0;
        double v[3] = {0.0, 0.0, 0.0};
        const int outer = params.d == 3 ? nn : 1;
        for (int k2 = 0; k2 < outer; ++k2) {
            const double wk = params.d == 3 ? weights[k2] : 1.0;
            if (params.d == 3) v[2] = nodes[k2];
            for (int j = 0; j < nn; ++j) {
                v[1] = nodes[j];
                double row = 0.0, row_abs = 0.0;
                for (int i = 0; i < nn; ++i) {
                    v[0] = nodes[i];
                    const double y = f(v) * std::exp(-potential(params, v, u.data()) / params.D);
                    row += weights[i] * y;
                    row_abs += weights[i] * std::abs(y);
                }
                acc += wk * weights[j] * row;
                acc_abs += wk * weights[j] * row_abs;
            }
        }
        if (abs_out) *abs_out = acc_abs;
        return acc;
    };

    const int max_m = params.d == 2 ? 64 : 16;
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (int m = 4; m <= max_m; m *= 2) {
        double iabs = 0.0;
        const double cur = level(m, &iabs);
        if (std::isfinite(prev)) {
            const double tol = spec.rel_tol * std::max(std::abs(cur), 3e-2 * iabs) +
                               std::numeric_limits<double>::min();
            if (std::abs(cur - prev) <= tol) return cur;
        }
        prev = cur;
    }
    throw NonConvergent("tensor integral failed to settle under panel doubling");
}

}  // namespace flockfp
