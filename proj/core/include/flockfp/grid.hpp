#pragma once

#include <vector>

#include "flockfp/gibbs.hpp"
#include "flockfp/model.hpp"

namespace flockfp {

// Uniform cell-centered grid on [-L, L]^d, d = 1 or 2.
struct Grid {
    int d = 1;
    int n = 0;        // cells per dimension
    double L = 0.0;   // half-width
    double h = 0.0;   // cell width, 2L/n

    [[nodiscard]] int cells() const { return d == 1 ? n : n * n; }
    [[nodiscard]] double center(int i) const { return -L + (i + 0.5) * h; }
    [[nodiscard]] double cell_volume() const { return d == 1 ? h : h * h; }

    // cell index -> velocity coordinates (x fastest)
    void coords(int idx, double* v) const {
        if (d == 1) {
            v[0] = center(idx);
        } else {
            v[0] = center(idx % n);
            v[1] = center(idx / n);
        }
    }
};

Grid make_grid(int d, int n, double L);

// default half-width: weight truncation radius plus headroom for the mean
double default_half_width(const ModelParams& p, double u_headroom);

// Nonnegative cell-centered density with unit discrete mass.
struct GridDensity {
    Grid grid;
    std::vector<double> values;

    [[nodiscard]] double mass() const;
};

// rescale to unit discrete mass
void normalize(GridDensity& f);

// cell-centered Gibbs density, renormalized so the discrete mass is exactly 1
GridDensity discrete_gibbs(const Grid& grid, const GibbsState& state);

// discrete mean velocity sum v_i f_i h^d
std::vector<double> mean_velocity(const GridDensity& f);

// discrete radial moment sum |v_i|^k f_i h^d
double moment(const GridDensity& f, int k);

// sum |v_i|^k v_i f_i h^d (enters the mean-velocity balance law)
std::vector<double> weighted_first_moment(const GridDensity& f, int k);

}  // namespace flockfp
