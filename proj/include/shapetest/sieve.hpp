#pragma once

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace shapetest {

/// Clamped B-spline basis on a box, tensor product across axes.
/// Interior knots sit at empirical quantiles; boundary knots at the sample
/// min and max with multiplicity degree + 1.
class SplineBasis {
public:
    SplineBasis(int degree, std::vector<Eigen::VectorXd> interior_knots,
                std::vector<std::pair<double, double>> boundary);

    int degree() const noexcept { return degree_; }
    int dim() const noexcept { return static_cast<int>(interior_.size()); }
    const Eigen::VectorXd& interior_knots(int axis) const { return interior_.at(static_cast<std::size_t>(axis)); }
    std::pair<double, double> boundary(int axis) const { return boundary_.at(static_cast<std::size_t>(axis)); }

    /// Number of univariate basis functions on one axis: degree + 1 + #interior knots.
    Eigen::Index axis_dim(int axis) const;

    /// Total sieve dimension k_n.
    Eigen::Index size() const;

    /// Full clamped knot vector for one axis.
    Eigen::VectorXd knot_vector(int axis) const;

    /// The axis_dim(axis) univariate basis values at x (clamped to the boundary).
    Eigen::VectorXd eval_axis(int axis, double x) const;

    /// The k_n basis values at one point, axis-major tensor order.
    Eigen::VectorXd eval(const Eigen::Ref<const Eigen::VectorXd>& point) const;

private:
    int degree_;
    std::vector<Eigen::VectorXd> interior_;
    std::vector<std::pair<double, double>> boundary_;
    std::vector<Eigen::VectorXd> knots_;
};

/// Linear interpolation between order statistics: x_(h) with h = (n - 1) p.
double empirical_quantile(std::vector<double> values, double p);

/// Builds the basis from a covariate sample (n x d), placing `n_knots[k]`
/// interior knots on axis k at the equispaced quantiles i / (m + 1).
SplineBasis build_basis(int degree, const std::vector<int>& n_knots, const Eigen::MatrixXd& data);

/// Same knot count on every axis.
SplineBasis build_basis(int degree, int n_knots, const Eigen::MatrixXd& data);

/// n x k_n matrix of basis values; row i belongs to points.row(i).
Eigen::MatrixXd design_matrix(const SplineBasis& basis, const Eigen::MatrixXd& points);

}  // namespace shapetest
