#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "shapetest/errors.hpp"
#include "shapetest/grid.hpp"
#include "shapetest/lp.hpp"

namespace shapetest {

enum class OperatorKind { Rearrange, Gcm, Lcm };

inline std::string to_string(OperatorKind k) {
    switch (k) {
        case OperatorKind::Rearrange: return "rearrange";
        case OperatorKind::Gcm: return "gcm";
        case OperatorKind::Lcm: return "lcm";
    }
    return "?";
}

/// A shape-enforcing map: one primitive, or a composition applied left to right.
class ShapeOperator {
public:
    enum class Kind { Rearrange, Gcm, Lcm, Compose };

    ShapeOperator(std::vector<OperatorKind> steps, int domain_dim)
        : steps_(std::move(steps)), domain_dim_(domain_dim) {
        if (steps_.empty()) throw InvalidArgument("shape operator needs at least one step");
        if (domain_dim_ < 1) throw InvalidArgument("shape operator domain dimension must be positive");
    }

    static ShapeOperator rearrange(int d = 1) { return {{OperatorKind::Rearrange}, d}; }
    static ShapeOperator gcm(int d = 1) { return {{OperatorKind::Gcm}, d}; }
    static ShapeOperator lcm(int d = 1) { return {{OperatorKind::Lcm}, d}; }
    static ShapeOperator compose(std::vector<OperatorKind> steps, int d = 1) { return {std::move(steps), d}; }

    Kind kind() const {
        if (steps_.size() > 1) return Kind::Compose;
        switch (steps_.front()) {
            case OperatorKind::Rearrange: return Kind::Rearrange;
            case OperatorKind::Gcm: return Kind::Gcm;
            case OperatorKind::Lcm: return Kind::Lcm;
        }
        return Kind::Compose;
    }

    const std::vector<OperatorKind>& steps() const noexcept { return steps_; }
    int domain_dim() const noexcept { return domain_dim_; }

    bool contains(OperatorKind k) const { return std::find(steps_.begin(), steps_.end(), k) != steps_.end(); }

    /// "rearrange", "gcm", "rearrange+gcm", ...
    std::string name() const {
        std::string out;
        for (auto k : steps_) {
            if (!out.empty()) out += "+";
            out += to_string(k);
        }
        return out;
    }

    friend bool operator==(const ShapeOperator& a, const ShapeOperator& b) {
        return a.steps_ == b.steps_ && a.domain_dim_ == b.domain_dim_;
    }

private:
    std::vector<OperatorKind> steps_;
    int domain_dim_;
};

namespace detail {

/// Sorts values ascending along one axis, holding the other coordinates fixed.
template <typename Scalar>
void sort_along_axis(VectorX<Scalar>& v, const GridT<Scalar>& grid, int axis) {
    const std::size_t stride = grid.stride(axis);
    const auto len = static_cast<std::size_t>(grid.axis_size(axis));
    const std::size_t block = stride * len;
    std::vector<Scalar> line(len);
    for (std::size_t outer = 0; outer < grid.size(); outer += block) {
        for (std::size_t inner = 0; inner < stride; ++inner) {
            const std::size_t base = outer + inner;
            for (std::size_t k = 0; k < len; ++k) line[k] = v[static_cast<Eigen::Index>(base + k * stride)];
            std::stable_sort(line.begin(), line.end());
            for (std::size_t k = 0; k < len; ++k) v[static_cast<Eigen::Index>(base + k * stride)] = line[k];
        }
    }
}

/// Lower convex hull of (z_i, v_i) evaluated back at every z_i.
template <typename Scalar>
VectorX<Scalar> lower_hull_values(const VectorX<Scalar>& z, const VectorX<Scalar>& v) {
    const Eigen::Index n = z.size();
    std::vector<Eigen::Index> hull;
    hull.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        while (hull.size() >= 2) {
            const Eigen::Index a = hull[hull.size() - 2], b = hull.back();
            const Scalar cross = (z[b] - z[a]) * (v[i] - v[a]) - (v[b] - v[a]) * (z[i] - z[a]);
            if (cross > Scalar(0)) break;
            hull.pop_back();
        }
        hull.push_back(i);
    }
    VectorX<Scalar> out(n);
    std::size_t seg = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        // hull holds the first and last index, so hull[seg] <= i < hull[seg + 1] or i is last.
        while (seg + 1 < hull.size() && hull[seg + 1] <= i) ++seg;
        const Eigen::Index a = hull[seg];
        if (a == i) {
            out[i] = v[i];
            continue;
        }
        const Eigen::Index b = hull[seg + 1];
        out[i] = v[a] + (v[b] - v[a]) * (z[i] - z[a]) / (z[b] - z[a]);
    }
    return out;
}

template <typename Scalar>
void require_dim(const FunctionOnGridT<Scalar>& f, int d, const char* what) {
    if (f.dim() != d)
        throw DimensionMismatch(std::string(what) + " needs a " + std::to_string(d) + "-dimensional grid");
}

}  // namespace detail

/// Monotone rearrangement on a univariate grid: the values sorted ascending.
template <typename Scalar>
FunctionOnGridT<Scalar> rearrange_1d(const FunctionOnGridT<Scalar>& f) {
    detail::require_dim(f, 1, "rearrange_1d");
    VectorX<Scalar> v = f.values();
    std::stable_sort(v.data(), v.data() + v.size());
    return f.with_values(std::move(v));
}

/// Multivariate rearrangement: the average over every ordering of the axes of
/// the successive one-axis sorts.
template <typename Scalar>
FunctionOnGridT<Scalar> rearrange_multi(const FunctionOnGridT<Scalar>& f) {
    const int d = f.dim();
    if (d == 1) return rearrange_1d(f);
    std::vector<int> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), 0);
    VectorX<Scalar> acc = VectorX<Scalar>::Zero(f.size());
    int count = 0;
    do {
        VectorX<Scalar> v = f.values();
        // M_{pi_1} o ... o M_{pi_d}: the last axis in the ordering is sorted first.
        for (auto it = order.rbegin(); it != order.rend(); ++it) detail::sort_along_axis(v, f.grid(), *it);
        acc += v;
        ++count;
    } while (std::next_permutation(order.begin(), order.end()));
    return f.with_values(acc / Scalar(count));
}

/// Greatest convex minorant on a univariate grid, via the lower convex hull.
template <typename Scalar>
FunctionOnGridT<Scalar> gcm_1d(const FunctionOnGridT<Scalar>& f) {
    detail::require_dim(f, 1, "gcm_1d");
    return f.with_values(detail::lower_hull_values(f.grid().axis(0), f.values()));
}

/// Greatest convex minorant on a univariate grid by direct minimisation over
/// chords: value l is min over j <= l <= k of the chord through (z_j, f_j) and
/// (z_k, f_k) evaluated at z_l, with j = k = l giving f_l. Cubic cost.
template <typename Scalar>
FunctionOnGridT<Scalar> gcm_1d_chord(const FunctionOnGridT<Scalar>& f) {
    detail::require_dim(f, 1, "gcm_1d_chord");
    const auto& z = f.grid().axis(0);
    const auto& v = f.values();
    const Eigen::Index n = v.size();
    VectorX<Scalar> out(n);
    for (Eigen::Index l = 0; l < n; ++l) {
        Scalar best = v[l];
        for (Eigen::Index j = 0; j <= l; ++j) {
            for (Eigen::Index k = l; k < n; ++k) {
                if (j == k) continue;
                const Scalar chord = ((z[k] - z[l]) * v[j] + (z[l] - z[j]) * v[k]) / (z[k] - z[j]);
                best = std::min(best, chord);
            }
        }
        out[l] = best;
    }
    return f.with_values(std::move(out));
}

/// Biconjugate of f at grid point l as the linear program
///   max_{v, xi} v  s.t.  v + xi'(z_j - z_l) <= f(z_j)  for every grid point j.
template <typename Scalar>
Scalar gcm_lp(const FunctionOnGridT<Scalar>& f, std::size_t l, const SimplexOptions& options = {}) {
    const auto& grid = f.grid();
    if (l >= grid.size()) throw InvalidArgument("gcm_lp: grid index out of range");
    const int d = grid.dim();
    const auto n = static_cast<Eigen::Index>(grid.size());
    LinearProgramT<Scalar> lp(d + 1);
    for (Eigen::Index j = 0; j <= d; ++j) lp.set_free(j);
    lp.c[0] = Scalar(-1);
    const MatrixX<Scalar> pts = grid.points();
    MatrixX<Scalar> rows(n, d + 1);
    rows.col(0).setOnes();
    rows.rightCols(d) = pts.rowwise() - pts.row(static_cast<Eigen::Index>(l));
    lp.add_rows(rows, f.values(), RowSense::LessEqual);
    const auto sol = solve(lp, options);
    if (sol.status != LpStatus::Optimal) throw NumericalFailure("gcm_lp: program not solved to optimality");
    return sol.x[0];
}

/// Biconjugate at grid point l via the dual program: the smallest value of
/// sum_j lambda_j f_j over convex weights whose barycentre is z_l.
template <typename Scalar>
Scalar gcm_lp_dual(const FunctionOnGridT<Scalar>& f, std::size_t l, const SimplexOptions& options = {}) {
    const auto& grid = f.grid();
    const int d = grid.dim();
    const auto n = static_cast<Eigen::Index>(grid.size());
    LinearProgramT<Scalar> lp(n);
    lp.c = f.values();
    const MatrixX<Scalar> pts = grid.points();
    MatrixX<Scalar> rows(d + 1, n);
    rows.row(0).setOnes();
    rows.bottomRows(d) = (pts.rowwise() - pts.row(static_cast<Eigen::Index>(l))).transpose();
    VectorX<Scalar> rhs = VectorX<Scalar>::Zero(d + 1);
    rhs[0] = Scalar(1);
    lp.add_rows(rows, rhs, RowSense::Equal);
    const auto sol = solve(lp, options);
    if (sol.status != LpStatus::Optimal) throw NumericalFailure("gcm_lp_dual: program not solved to optimality");
    return std::min(sol.objective_value, f.values()[static_cast<Eigen::Index>(l)]);
}

/// Greatest convex minorant on any rectangular grid.
template <typename Scalar>
FunctionOnGridT<Scalar> gcm(const FunctionOnGridT<Scalar>& f) {
    if (f.dim() == 1) return gcm_1d(f);
    VectorX<Scalar> out(f.size());
    for (std::size_t l = 0; l < f.grid().size(); ++l) out[static_cast<Eigen::Index>(l)] = gcm_lp_dual(f, l);
    return f.with_values(std::move(out));
}

/// Least concave majorant, -GCM(-f).
template <typename Scalar>
FunctionOnGridT<Scalar> lcm(const FunctionOnGridT<Scalar>& f) {
    return -gcm(-f);
}

template <typename Scalar>
FunctionOnGridT<Scalar> apply(OperatorKind k, const FunctionOnGridT<Scalar>& f) {
    switch (k) {
        case OperatorKind::Rearrange: return rearrange_multi(f);
        case OperatorKind::Gcm: return gcm(f);
        case OperatorKind::Lcm: return lcm(f);
    }
    return f;
}

/// Applies the operator's steps in order.
template <typename Scalar>
FunctionOnGridT<Scalar> apply(const ShapeOperator& op, const FunctionOnGridT<Scalar>& f) {
    if (op.domain_dim() != f.dim())
        throw DimensionMismatch("operator '" + op.name() + "' expects dimension " +
                                std::to_string(op.domain_dim()) + ", got " + std::to_string(f.dim()));
    FunctionOnGridT<Scalar> out = f;
    for (auto k : op.steps()) out = apply(k, out);
    return out;
}

}  // namespace shapetest
