#pragma once

// Random instance generators and independent oracles shared by the unit
// tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "shapetest/functionals.hpp"
#include "shapetest/grid.hpp"
#include "shapetest/lp.hpp"
#include "shapetest/operators.hpp"

namespace support {

using shapetest::FunctionOnGrid;
using shapetest::Grid;

using Rng = std::mt19937_64;

inline double unif(Rng& rng, double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}
inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
inline double gauss(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

/// Strictly increasing axis in [0, 1] with `n` points, endpoints included.
inline Eigen::VectorXd random_axis(Rng& rng, int n) {
    std::vector<double> gaps(static_cast<std::size_t>(n - 1));
    double total = 0;
    for (auto& g : gaps) total += (g = 0.2 + unif(rng));
    Eigen::VectorXd a(n);
    a[0] = 0;
    for (int i = 1; i < n; ++i) a[i] = a[i - 1] + gaps[static_cast<std::size_t>(i - 1)] / total;
    a[n - 1] = 1;
    return a;
}

/// Random grid in [0,1]^d with at most `max_points` points.
inline std::shared_ptr<const Grid> random_grid(Rng& rng, int d, int max_points) {
    std::vector<Eigen::VectorXd> axes;
    if (d == 1) {
        axes.push_back(random_axis(rng, uniform_int(rng, 3, max_points)));
    } else {
        const int side = std::max(2, static_cast<int>(std::floor(std::sqrt(static_cast<double>(max_points)))));
        const int n1 = uniform_int(rng, 2, side);
        const int n2 = uniform_int(rng, 2, std::max(2, max_points / n1));
        axes.push_back(random_axis(rng, n1));
        axes.push_back(random_axis(rng, n2));
    }
    return std::make_shared<const Grid>(std::move(axes));
}

inline FunctionOnGrid random_function(Rng& rng, std::shared_ptr<const Grid> g, double scale = 1.0) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(g->size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = scale * gauss(rng);
    return FunctionOnGrid(std::move(g), std::move(v));
}

/// Nondecreasing in every argument: A(z1) + B(z2) + max(C(z1), D(z2)).
inline FunctionOnGrid random_monotone(Rng& rng, std::shared_ptr<const Grid> g) {
    const int d = g->dim();
    std::vector<std::vector<Eigen::VectorXd>> parts(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
        for (int r = 0; r < 2; ++r) {
            const Eigen::Index m = g->axis_size(k);
            Eigen::VectorXd c(m);
            double acc = gauss(rng);
            for (Eigen::Index i = 0; i < m; ++i) {
                if (unif(rng) < 0.7) acc += std::abs(gauss(rng));
                c[i] = acc;
            }
            parts[static_cast<std::size_t>(k)].push_back(c);
        }
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(g->size()));
    for (std::size_t i = 0; i < g->size(); ++i) {
        double sum = 0, mx = -1e300;
        for (int k = 0; k < d; ++k) {
            const auto j = g->index_along(i, k);
            sum += parts[static_cast<std::size_t>(k)][0][j];
            mx = std::max(mx, parts[static_cast<std::size_t>(k)][1][j]);
        }
        v[static_cast<Eigen::Index>(i)] = sum + (d > 1 ? mx : 0.0);
    }
    return FunctionOnGrid(std::move(g), std::move(v));
}

/// z -> max_k (a_k + b_k'z) + c |z|^2, with slopes b_k >= 0 when `monotone`.
inline std::function<double(const Eigen::VectorXd&)> random_convex_fn(Rng& rng, int d, bool monotone) {
    const int pieces = uniform_int(rng, 1, 5);
    std::vector<double> a(static_cast<std::size_t>(pieces));
    std::vector<Eigen::VectorXd> b;
    for (int k = 0; k < pieces; ++k) {
        a[static_cast<std::size_t>(k)] = gauss(rng);
        Eigen::VectorXd s(d);
        for (int j = 0; j < d; ++j) s[j] = monotone ? std::abs(2 * gauss(rng)) : 2 * gauss(rng);
        b.push_back(s);
    }
    const double c = unif(rng) < 0.5 ? 0.0 : unif(rng, 0.0, 2.0);
    return [a, b, c](const Eigen::VectorXd& z) {
        double m = -1e300;
        for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, a[k] + b[k].dot(z));
        return m + c * z.squaredNorm();
    };
}

inline FunctionOnGrid random_convex(Rng& rng, std::shared_ptr<const Grid> g, bool monotone) {
    const auto h = random_convex_fn(rng, g->dim(), monotone);
    return FunctionOnGrid::sample(std::move(g), h);
}

/// Member of the cone for `shape` on grid `g` (grids live in [0,1]^d).
inline FunctionOnGrid random_member(Rng& rng, const shapetest::ShapeSpec& shape, std::shared_ptr<const Grid> g) {
    using shapetest::Restriction;
    switch (shape.restriction) {
        case Restriction::Monotone: return random_monotone(rng, g);
        case Restriction::Convex: return random_convex(rng, g, false);
        case Restriction::Concave: return -random_convex(rng, g, false);
        case Restriction::MonotoneConvex: return random_convex(rng, g, true);
        case Restriction::MonotoneConcave: {
            // -h(1 - z) with h convex and nondecreasing
            const auto h = random_convex_fn(rng, g->dim(), true);
            return FunctionOnGrid::sample(g, [&](const Eigen::VectorXd& z) {
                return -h(Eigen::VectorXd::Ones(z.size()) - z);
            });
        }
    }
    return random_monotone(rng, g);
}

// ---------------------------------------------------------------- oracles

/// Insertion sort.
inline std::vector<double> sort_oracle(std::vector<double> v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        for (std::size_t j = i; j > 0 && v[j - 1] > v[j]; --j) std::swap(v[j - 1], v[j]);
    return v;
}

/// (1/2) max over comparable pairs z_i <= z_j of (v_i - v_j)^+, by enumeration.
inline double monotone_distance_pairs(const FunctionOnGrid& f) {
    const auto& g = f.grid();
    double best = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = 0; j < g.size(); ++j) {
            bool below = true;
            for (int k = 0; k < g.dim(); ++k) below = below && g.index_along(i, k) <= g.index_along(j, k);
            if (below) best = std::max(best, f[static_cast<Eigen::Index>(i)] - f[static_cast<Eigen::Index>(j)]);
        }
    return best / 2;
}

/// Chebyshev distance of a 2-vector to nondecreasing pairs by grid search.
inline double monotone_pair_grid_search(double v0, double v1, int steps = 2000) {
    const double lo = std::min(v0, v1) - 1, hi = std::max(v0, v1) + 1;
    double best = 1e300;
    for (int i = 0; i <= steps; ++i) {
        const double h0 = lo + (hi - lo) * i / steps;
        // best h1 >= h0 for fixed h0 is clamp(v1, h0, inf)
        const double h1 = std::max(h0, v1);
        best = std::min(best, std::max(std::abs(v0 - h0), std::abs(v1 - h1)));
    }
    return best;
}

/// Greatest convex minorant on a 1-D grid: min over chords (j <= l <= k)
/// straddling z_l of the linear interpolant, O(N^3).
inline Eigen::VectorXd gcm_chord_oracle(const Eigen::VectorXd& z, const Eigen::VectorXd& v) {
    const Eigen::Index n = z.size();
    Eigen::VectorXd out(n);
    for (Eigen::Index l = 0; l < n; ++l) {
        double best = v[l];
        for (Eigen::Index j = 0; j <= l; ++j)
            for (Eigen::Index k = l; k < n; ++k) {
                if (j == k) continue;
                const double w = (z[l] - z[j]) / (z[k] - z[j]);
                best = std::min(best, (1 - w) * v[j] + w * v[k]);
            }
        out[l] = best;
    }
    return out;
}

/// Multivariate rearrangement by hand for d = 2: sort every column then
/// every row, sort every row then every column, average.
inline Eigen::VectorXd rearrange_2d_oracle(const Grid& g, const Eigen::VectorXd& v) {
    const Eigen::Index n1 = g.axis_size(0), n2 = g.axis_size(1);
    auto at = [n2](Eigen::Index i, Eigen::Index j) { return i * n2 + j; };
    auto sort_axis = [&](Eigen::VectorXd w, int axis) {
        if (axis == 0) {
            for (Eigen::Index j = 0; j < n2; ++j) {
                std::vector<double> col;
                for (Eigen::Index i = 0; i < n1; ++i) col.push_back(w[at(i, j)]);
                col = sort_oracle(col);
                for (Eigen::Index i = 0; i < n1; ++i) w[at(i, j)] = col[static_cast<std::size_t>(i)];
            }
        } else {
            for (Eigen::Index i = 0; i < n1; ++i) {
                std::vector<double> row;
                for (Eigen::Index j = 0; j < n2; ++j) row.push_back(w[at(i, j)]);
                row = sort_oracle(row);
                for (Eigen::Index j = 0; j < n2; ++j) w[at(i, j)] = row[static_cast<std::size_t>(j)];
            }
        }
        return w;
    };
    const Eigen::VectorXd a = sort_axis(sort_axis(v, 0), 1);
    const Eigen::VectorXd b = sort_axis(sort_axis(v, 1), 0);
    return 0.5 * (a + b);
}

/// Random LP min c'x s.t. A x <= b, x >= 0 with A > 0 and b > 0: feasible
/// (x = 0) and bounded (every x_j appears with a positive coefficient).
inline shapetest::LinearProgram random_bounded_lp(Rng& rng, int m, int n) {
    shapetest::LinearProgram lp(n);
    for (int j = 0; j < n; ++j) lp.c[j] = gauss(rng);
    Eigen::MatrixXd a(m, n);
    Eigen::VectorXd b(m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) a(i, j) = unif(rng, 0.05, 2.0);
        b[i] = unif(rng, 0.5, 3.0);
    }
    lp.add_rows(a, b, shapetest::RowSense::LessEqual);
    return lp;
}

/// Dual of min c'x, A x <= b, x >= 0: max b'y, A'y <= c, y <= 0, written as
/// min -b'y so it can go through the same solver.
inline shapetest::LinearProgram dual_of(const shapetest::LinearProgram& p) {
    const Eigen::Index m = p.A.rows();
    shapetest::LinearProgram d(m);
    d.c = -p.b;
    for (Eigen::Index i = 0; i < m; ++i) {
        d.lower[i] = -std::numeric_limits<double>::infinity();
        d.upper[i] = 0;
    }
    d.add_rows(p.A.transpose(), p.c, shapetest::RowSense::LessEqual);
    return d;
}

}  // namespace support
