#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "shapetest/errors.hpp"

namespace shapetest {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

enum class NormOrder { L1, L2, Sup };

/// Rectangular grid over a box in R^d. Points are linearly ordered
/// axis-major: the last axis varies fastest.
template <typename Scalar>
class GridT {
public:
    using Vector = VectorX<Scalar>;

    explicit GridT(std::vector<Vector> axes) : axes_(std::move(axes)) {
        if (axes_.empty()) throw InvalidArgument("grid needs at least one axis");
        size_ = 1;
        for (const auto& a : axes_) {
            if (a.size() < 2) throw InvalidArgument("each grid axis needs at least 2 points");
            for (Eigen::Index i = 0; i < a.size(); ++i) {
                if (!std::isfinite(static_cast<double>(a[i])))
                    throw InvalidArgument("grid coordinates must be finite");
                if (i > 0 && !(a[i] > a[i - 1]))
                    throw InvalidArgument("grid axis must be strictly increasing");
            }
            size_ *= static_cast<std::size_t>(a.size());
        }
    }

    /// N equispaced points on [lo, hi]; z_j = lo + (hi - lo) j / (N - 1).
    static GridT uniform(Eigen::Index n, Scalar lo = Scalar(0), Scalar hi = Scalar(1)) {
        return GridT({uniform_axis(n, lo, hi)});
    }

    /// Tensor grid with `n` points on every axis of [lo, hi]^d.
    static GridT uniform_box(int d, Eigen::Index n, Scalar lo = Scalar(0), Scalar hi = Scalar(1)) {
        if (d < 1) throw InvalidArgument("grid dimension must be positive");
        return GridT(std::vector<Vector>(static_cast<std::size_t>(d), uniform_axis(n, lo, hi)));
    }

    static Vector uniform_axis(Eigen::Index n, Scalar lo, Scalar hi) {
        if (n < 2) throw InvalidArgument("grid axis needs at least 2 points");
        if (!(hi > lo)) throw InvalidArgument("grid axis needs hi > lo");
        Vector a(n);
        for (Eigen::Index j = 0; j < n; ++j)
            a[j] = lo + (hi - lo) * Scalar(j) / Scalar(n - 1);
        a[n - 1] = hi;
        return a;
    }

    int dim() const noexcept { return static_cast<int>(axes_.size()); }
    std::size_t size() const noexcept { return size_; }
    const Vector& axis(int k) const { return axes_.at(static_cast<std::size_t>(k)); }
    const std::vector<Vector>& axes() const noexcept { return axes_; }
    Eigen::Index axis_size(int k) const { return axis(k).size(); }

    /// Distance in linear index between neighbours along axis k.
    std::size_t stride(int k) const {
        std::size_t s = 1;
        for (int j = dim() - 1; j > k; --j) s *= static_cast<std::size_t>(axes_[j].size());
        return s;
    }

    /// Coordinate index along axis k of the point with this linear index.
    Eigen::Index index_along(std::size_t linear, int k) const {
        return static_cast<Eigen::Index>((linear / stride(k)) % static_cast<std::size_t>(axes_[k].size()));
    }

    std::vector<Eigen::Index> multi_index(std::size_t linear) const {
        std::vector<Eigen::Index> idx(axes_.size());
        for (int k = dim() - 1; k >= 0; --k) {
            const auto m = static_cast<std::size_t>(axes_[k].size());
            idx[k] = static_cast<Eigen::Index>(linear % m);
            linear /= m;
        }
        return idx;
    }

    Vector point(std::size_t linear) const {
        const auto idx = multi_index(linear);
        Vector z(dim());
        for (int k = 0; k < dim(); ++k) z[k] = axes_[k][idx[k]];
        return z;
    }

    /// All points as rows of a size() x dim() matrix.
    MatrixX<Scalar> points() const {
        MatrixX<Scalar> out(static_cast<Eigen::Index>(size_), dim());
        for (std::size_t i = 0; i < size_; ++i) out.row(static_cast<Eigen::Index>(i)) = point(i).transpose();
        return out;
    }

    /// Trapezoid quadrature weights, one per point.
    Vector quadrature_weights() const {
        std::vector<Vector> per_axis;
        for (const auto& a : axes_) {
            const Eigen::Index m = a.size();
            Vector w(m);
            w[0] = (a[1] - a[0]) / Scalar(2);
            w[m - 1] = (a[m - 1] - a[m - 2]) / Scalar(2);
            for (Eigen::Index i = 1; i + 1 < m; ++i) w[i] = (a[i + 1] - a[i - 1]) / Scalar(2);
            per_axis.push_back(std::move(w));
        }
        Vector out(static_cast<Eigen::Index>(size_));
        for (std::size_t i = 0; i < size_; ++i) {
            const auto idx = multi_index(i);
            Scalar w(1);
            for (int k = 0; k < dim(); ++k) w *= per_axis[k][idx[k]];
            out[static_cast<Eigen::Index>(i)] = w;
        }
        return out;
    }

    friend bool operator==(const GridT& a, const GridT& b) {
        if (a.axes_.size() != b.axes_.size()) return false;
        for (std::size_t k = 0; k < a.axes_.size(); ++k) {
            if (a.axes_[k].size() != b.axes_[k].size()) return false;
            if (a.axes_[k] != b.axes_[k]) return false;
        }
        return true;
    }
    friend bool operator!=(const GridT& a, const GridT& b) { return !(a == b); }

private:
    std::vector<Vector> axes_;
    std::size_t size_ = 0;
};

/// Values of a real function at every point of a grid. The grid is shared
/// and immutable, so copies of a FunctionOnGrid are cheap to pass around.
template <typename Scalar>
class FunctionOnGridT {
public:
    using Grid = GridT<Scalar>;
    using Vector = VectorX<Scalar>;

    FunctionOnGridT(std::shared_ptr<const Grid> grid, Vector values)
        : grid_(std::move(grid)), values_(std::move(values)) {
        if (!grid_) throw InvalidArgument("function needs a grid");
        if (static_cast<std::size_t>(values_.size()) != grid_->size())
            throw InvalidArgument("value count " + std::to_string(values_.size()) +
                                  " does not match grid size " + std::to_string(grid_->size()));
        if (!values_.allFinite()) throw InvalidArgument("function values must be finite");
    }

    FunctionOnGridT(const Grid& grid, Vector values)
        : FunctionOnGridT(std::make_shared<const Grid>(grid), std::move(values)) {}

    static FunctionOnGridT zero(std::shared_ptr<const Grid> grid) {
        const auto n = static_cast<Eigen::Index>(grid->size());
        return FunctionOnGridT(std::move(grid), Vector::Zero(n));
    }

    /// Samples `fn(point)` at every grid point.
    template <typename Fn>
    static FunctionOnGridT sample(std::shared_ptr<const Grid> grid, Fn&& fn) {
        Vector v(static_cast<Eigen::Index>(grid->size()));
        for (std::size_t i = 0; i < grid->size(); ++i) v[static_cast<Eigen::Index>(i)] = fn(grid->point(i));
        return FunctionOnGridT(std::move(grid), std::move(v));
    }

    const Grid& grid() const noexcept { return *grid_; }
    const std::shared_ptr<const Grid>& grid_ptr() const noexcept { return grid_; }
    const Vector& values() const noexcept { return values_; }
    Eigen::Index size() const noexcept { return values_.size(); }
    int dim() const noexcept { return grid_->dim(); }
    Scalar operator[](Eigen::Index i) const { return values_[i]; }

    /// Same grid, new values.
    FunctionOnGridT with_values(Vector v) const { return FunctionOnGridT(grid_, std::move(v)); }

    bool same_grid(const FunctionOnGridT& other) const {
        return grid_ == other.grid_ || *grid_ == *other.grid_;
    }

private:
    std::shared_ptr<const Grid> grid_;
    Vector values_;
};

using Grid = GridT<double>;
using FunctionOnGrid = FunctionOnGridT<double>;

template <typename Scalar>
void require_same_grid(const FunctionOnGridT<Scalar>& f, const FunctionOnGridT<Scalar>& g) {
    if (!f.same_grid(g)) throw GridMismatch("functions live on different grids");
}

/// Grid norm: max |f| for Sup, trapezoid Riemann sums for L1 and L2.
template <typename Scalar>
Scalar norm(const FunctionOnGridT<Scalar>& f, NormOrder p) {
    const auto& v = f.values();
    switch (p) {
        case NormOrder::Sup:
            return v.size() == 0 ? Scalar(0) : v.cwiseAbs().maxCoeff();
        case NormOrder::L1:
            return f.grid().quadrature_weights().dot(v.cwiseAbs());
        case NormOrder::L2:
            return std::sqrt(f.grid().quadrature_weights().dot(v.cwiseAbs2()));
    }
    return Scalar(0);
}

/// Pointwise f - g.
template <typename Scalar>
FunctionOnGridT<Scalar> diff(const FunctionOnGridT<Scalar>& f, const FunctionOnGridT<Scalar>& g) {
    require_same_grid(f, g);
    return f.with_values(f.values() - g.values());
}

template <typename Scalar>
FunctionOnGridT<Scalar> operator-(const FunctionOnGridT<Scalar>& f, const FunctionOnGridT<Scalar>& g) {
    return diff(f, g);
}

template <typename Scalar>
FunctionOnGridT<Scalar> operator+(const FunctionOnGridT<Scalar>& f, const FunctionOnGridT<Scalar>& g) {
    require_same_grid(f, g);
    return f.with_values(f.values() + g.values());
}

template <typename Scalar>
FunctionOnGridT<Scalar> operator*(Scalar a, const FunctionOnGridT<Scalar>& f) {
    return f.with_values(a * f.values());
}

template <typename Scalar>
FunctionOnGridT<Scalar> operator-(const FunctionOnGridT<Scalar>& f) {
    return f.with_values(-f.values());
}

inline std::string to_string(NormOrder p) {
    switch (p) {
        case NormOrder::L1: return "L1";
        case NormOrder::L2: return "L2";
        case NormOrder::Sup: return "sup";
    }
    return "?";
}

}  // namespace shapetest
