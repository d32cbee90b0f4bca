#include "flockfp/grid.hpp"

#include <cmath>
#include <string>

#include "flockfp/errors.hpp"
#include "flockfp/quadrature.hpp"

namespace flockfp {

Grid make_grid(int d, int n, double L) {
    if (d < 1 || d > 2) throw DimensionUnsupported("grids support d = 1 and d = 2");
    if (n < 4) throw ConfigError("grid needs at least 4 cells per dimension");
    if (!(L > 0.0) || !std::isfinite(L)) throw ConfigError("grid half-width must be positive");
    Grid g;
    g.d = d;
    g.n = n;
    g.L = L;
    g.h = 2.0 * L / n;
    return g;
}

double default_half_width(const ModelParams& p, double u_headroom) {
    return truncation_radius(p) + 1.5 * std::abs(u_headroom);
}

double GridDensity::mass() const {
    double s = 0.0;
    for (double f : values) s += f;
    return s * grid.cell_volume();
}

void normalize(GridDensity& f) {
    const double m = f.mass();
    if (!(m > 0.0)) throw NegativeCell("cannot normalize a density without positive mass");
    for (double& x : f.values) x /= m;
}

GridDensity discrete_gibbs(const Grid& grid, const GibbsState& state) {
    if (grid.d != state.params.d)
        throw ConfigError("grid dimension disagrees with the Gibbs state");
    GridDensity f;
    f.grid = grid;
    f.values.resize(grid.cells());
    double v[2];
    for (int i = 0; i < grid.cells(); ++i) {
        grid.coords(i, v);
        f.values[i] = density(state, v);
    }
    normalize(f);
    return f;
}

std::vector<double> mean_velocity(const GridDensity& f) {
    const Grid& g = f.grid;
    std::vector<double> u(g.d, 0.0);
    double v[2];
    for (int i = 0; i < g.cells(); ++i) {
        g.coords(i, v);
        for (int k = 0; k < g.d; ++k) u[k] += v[k] * f.values[i];
    }
    for (int k = 0; k < g.d; ++k) u[k] *= g.cell_volume();
    return u;
}

double moment(const GridDensity& f, int k) {
    if (k < 0) throw ConfigError("moment order must be >= 0");
    const Grid& g = f.grid;
    double s = 0.0;
    double v[2];
    for (int i = 0; i < g.cells(); ++i) {
        g.coords(i, v);
        double r2 = 0.0;
        for (int a = 0; a < g.d; ++a) r2 += v[a] * v[a];
        s += std::pow(std::sqrt(r2), k) * f.values[i];
    }
    return s * g.cell_volume();
}

std::vector<double> weighted_first_moment(const GridDensity& f, int k) {
    if (k < 0) throw ConfigError("moment order must be >= 0");
    const Grid& g = f.grid;
    std::vector<double> out(g.d, 0.0);
    double v[2];
    for (int i = 0; i < g.cells(); ++i) {
        g.coords(i, v);
        double r2 = 0.0;
        for (int a = 0; a < g.d; ++a) r2 += v[a] * v[a];
        const double wk = std::pow(std::sqrt(r2), k);
        for (int a = 0; a < g.d; ++a) out[a] += wk * v[a] * f.values[i];
    }
    for (int a = 0; a < g.d; ++a) out[a] *= g.cell_volume();
    return out;
}

}  // namespace flockfp
