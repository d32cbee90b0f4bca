#pragma once

// Internal banded SPD helpers shared by the spectral-gap and moment-constant
// computations. Lower band storage, right-looking factorization.

#include <algorithm>
#include <cmath>
#include <vector>

#include "flockfp/errors.hpp"

namespace flockfp::detail {

struct BandMatrix {
    int n = 0;
    int bw = 0;
    std::vector<double> a;  // lower band storage: a[k + j*(bw+1)] = A(j+k, j)

    double& at(int k, int j) { return a[k + static_cast<std::size_t>(j) * (bw + 1)]; }
    [[nodiscard]] double at(int k, int j) const {
        return a[k + static_cast<std::size_t>(j) * (bw + 1)];
    }
};

// returns false as soon as a pivot fails, leaving m partially overwritten
inline bool try_cholesky(BandMatrix& m) {
    const int n = m.n, bw = m.bw;
    for (int j = 0; j < n; ++j) {
        double d = m.at(0, j);
        if (!(d > 0.0)) return false;
        d = std::sqrt(d);
        m.at(0, j) = d;
        const int reach = std::min(bw, n - 1 - j);
        for (int k = 1; k <= reach; ++k) m.at(k, j) /= d;
        for (int i = 1; i <= reach; ++i) {
            const double lij = m.at(i, j);
            if (lij == 0.0) continue;
            const int reach2 = std::min(bw - i, n - 1 - (j + i));
            for (int k = 0; k <= reach2; ++k) m.at(k, j + i) -= lij * m.at(i + k, j);
        }
    }
    return true;
}

inline void cholesky_in_place(BandMatrix& m) {
    if (!try_cholesky(m)) throw EigenNotConverged("banded factorization lost positivity");
}

inline void cholesky_solve(const BandMatrix& m, std::vector<double>& b) {
    const int n = m.n, bw = m.bw;
    for (int j = 0; j < n; ++j) {
        double s = b[j];
        const int lo = std::max(0, j - bw);
        for (int i = lo; i < j; ++i) s -= m.at(j - i, i) * b[i];
        b[j] = s / m.at(0, j);
    }
    for (int j = n - 1; j >= 0; --j) {
        double s = b[j];
        const int reach = std::min(bw, n - 1 - j);
        for (int k = 1; k <= reach; ++k) s -= m.at(k, j) * b[j + k];
        b[j] = s / m.at(0, j);
    }
}

inline void band_mult(const BandMatrix& m, const std::vector<double>& x, std::vector<double>& y) {
    const int n = m.n, bw = m.bw;
    std::fill(y.begin(), y.end(), 0.0);
    for (int j = 0; j < n; ++j) {
        y[j] += m.at(0, j) * x[j];
        const int reach = std::min(bw, n - 1 - j);
        for (int k = 1; k <= reach; ++k) {
            y[j + k] += m.at(k, j) * x[j];
            y[j] += m.at(k, j) * x[j + k];
        }
    }
}

}  // namespace flockfp::detail
