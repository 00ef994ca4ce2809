#include "shapetest/sieve.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shapetest/errors.hpp"

namespace shapetest {

SplineBasis::SplineBasis(int degree, std::vector<Eigen::VectorXd> interior_knots,
                         std::vector<std::pair<double, double>> boundary)
    : degree_(degree), interior_(std::move(interior_knots)), boundary_(std::move(boundary)) {
    if (degree_ != 2 && degree_ != 3) throw InvalidArgument("spline degree must be 2 or 3");
    if (interior_.empty() || interior_.size() != boundary_.size())
        throw InvalidArgument("spline basis needs matching knot and boundary lists");
    for (std::size_t k = 0; k < interior_.size(); ++k) {
        const auto [lo, hi] = boundary_[k];
        if (!(hi > lo)) throw DegenerateSample("axis " + std::to_string(k) + " has an empty range");
        const auto& t = interior_[k];
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            if (!(t[i] > lo && t[i] < hi))
                throw DegenerateSample("interior knot on axis " + std::to_string(k) + " is not strictly inside the boundary");
            if (i > 0 && !(t[i] > t[i - 1]))
                throw DegenerateSample("coinciding quantile knots on axis " + std::to_string(k));
        }
        Eigen::VectorXd u(t.size() + 2 * (degree_ + 1));
        u.head(degree_ + 1).setConstant(lo);
        u.segment(degree_ + 1, t.size()) = t;
        u.tail(degree_ + 1).setConstant(hi);
        knots_.push_back(std::move(u));
    }
}

Eigen::Index SplineBasis::axis_dim(int axis) const {
    return degree_ + 1 + interior_knots(axis).size();
}

Eigen::Index SplineBasis::size() const {
    Eigen::Index k = 1;
    for (int a = 0; a < dim(); ++a) k *= axis_dim(a);
    return k;
}

Eigen::VectorXd SplineBasis::knot_vector(int axis) const {
    return knots_.at(static_cast<std::size_t>(axis));
}

Eigen::VectorXd SplineBasis::eval_axis(int axis, double x) const {
    const auto& u = knots_.at(static_cast<std::size_t>(axis));
    const auto [lo, hi] = boundary_[static_cast<std::size_t>(axis)];
    const int p = degree_;
    const Eigen::Index nb = axis_dim(axis);
    x = std::clamp(x, lo, hi);

    // Knot span s with u[s] <= x < u[s+1]; the right end belongs to the last span.
    Eigen::Index s;
    if (x >= u[nb]) {
        s = nb - 1;
    } else {
        const double* first = u.data() + p;
        const double* last = u.data() + nb + 1;
        s = static_cast<Eigen::Index>(std::upper_bound(first, last, x) - u.data()) - 1;
    }

    // Cox-de Boor recursion for the p + 1 nonzero functions on the span.
    std::vector<double> n(static_cast<std::size_t>(p + 1), 0.0), left(static_cast<std::size_t>(p + 1)),
        right(static_cast<std::size_t>(p + 1));
    n[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = x - u[s + 1 - j];
        right[j] = u[s + j] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double temp = n[r] / (right[r + 1] + left[j - r]);
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(nb);
    for (int r = 0; r <= p; ++r) out[s - p + r] = n[r];
    return out;
}

Eigen::VectorXd SplineBasis::eval(const Eigen::Ref<const Eigen::VectorXd>& point) const {
    if (point.size() != dim()) throw DimensionMismatch("point dimension does not match the spline basis");
    Eigen::VectorXd row = eval_axis(0, point[0]);
    for (int a = 1; a < dim(); ++a) {
        const Eigen::VectorXd next = eval_axis(a, point[a]);
        Eigen::VectorXd prod(row.size() * next.size());
        for (Eigen::Index i = 0; i < row.size(); ++i) prod.segment(i * next.size(), next.size()) = row[i] * next;
        row.swap(prod);
    }
    return row;
}

double empirical_quantile(std::vector<double> values, double p) {
    if (values.empty()) throw InvalidArgument("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

SplineBasis build_basis(int degree, const std::vector<int>& n_knots, const Eigen::MatrixXd& data) {
    if (degree != 2 && degree != 3) throw InvalidArgument("spline degree must be 2 or 3");
    if (static_cast<Eigen::Index>(n_knots.size()) != data.cols())
        throw DimensionMismatch("one knot count per covariate is required");
    std::vector<Eigen::VectorXd> interior;
    std::vector<std::pair<double, double>> boundary;
    for (Eigen::Index k = 0; k < data.cols(); ++k) {
        const int m = n_knots[static_cast<std::size_t>(k)];
        if (m < 0) throw InvalidArgument("knot count must be nonnegative");
        if (data.rows() <= m) throw InvalidArgument("sample size must exceed the number of knots");
        std::vector<double> col(data.rows());
        for (Eigen::Index i = 0; i < data.rows(); ++i) col[static_cast<std::size_t>(i)] = data(i, k);
        std::sort(col.begin(), col.end());
        Eigen::VectorXd t(m);
        for (int i = 1; i <= m; ++i) t[i - 1] = empirical_quantile(col, static_cast<double>(i) / (m + 1));
        interior.push_back(std::move(t));
        boundary.emplace_back(col.front(), col.back());
    }
    return SplineBasis(degree, std::move(interior), std::move(boundary));
}

SplineBasis build_basis(int degree, int n_knots, const Eigen::MatrixXd& data) {
    return build_basis(degree, std::vector<int>(static_cast<std::size_t>(data.cols()), n_knots), data);
}

Eigen::MatrixXd design_matrix(const SplineBasis& basis, const Eigen::MatrixXd& points) {
    if (points.cols() != basis.dim()) throw DimensionMismatch("points do not match the basis dimension");
    Eigen::MatrixXd out(points.rows(), basis.size());
    for (Eigen::Index i = 0; i < points.rows(); ++i) out.row(i) = basis.eval(points.row(i).transpose()).transpose();
    return out;
}

}  // namespace shapetest
