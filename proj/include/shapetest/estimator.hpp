#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>

#include "shapetest/grid.hpp"
#include "shapetest/sieve.hpp"

namespace shapetest {

/// Y = theta(Z) + W'gamma + u. `w` has zero columns when there are no controls.
struct Sample {
    Eigen::VectorXd y;
    Eigen::MatrixXd z;
    Eigen::MatrixXd w;

    Eigen::Index n() const noexcept { return y.size(); }
    int dim() const noexcept { return static_cast<int>(z.cols()); }
    Eigen::Index controls() const noexcept { return w.cols(); }

    /// Throws InvalidArgument on mismatched rows or non-finite entries.
    void validate() const;
};

/// Keeps rows whose first covariate lies in [lo, hi].
Sample trim_sample(const Sample& s, double lo, double hi);

struct SeriesFit {
    SplineBasis basis;
    Eigen::VectorXd beta;
    Eigen::VectorXd gamma;
    Eigen::VectorXd residuals;
    Eigen::MatrixXd design;        // [P | W], n x (k_n + q)
    Eigen::MatrixXd gram_inverse;  // (X'X / n)^-1 for X = [P | W]
    double r_n = 0;
    double c_n = 0;

    Eigen::Index n() const noexcept { return residuals.size(); }
    Eigen::Index k_n() const noexcept { return beta.size(); }
};

/// Condition threshold on the QR diagonal ratio beyond which the design is
/// treated as rank deficient.
inline constexpr double kRankThreshold = 1e10;

/// OLS of y on [P(z) | w].
SeriesFit fit(const Sample& sample, const SplineBasis& basis);

/// theta_hat(z) = p(z)' beta on every grid point; controls are excluded.
FunctionOnGrid eval_on_grid(const SeriesFit& fit, std::shared_ptr<const Grid> grid);

/// Multiplier bootstrap draws on a grid, stored column-wise.
struct BootstrapEnsemble {
    std::shared_ptr<const Grid> grid;
    Eigen::MatrixXd draws;  // grid size x B
    Eigen::VectorXd sup_norms;
    std::uint64_t seed = 0;

    Eigen::Index size() const noexcept { return draws.cols(); }
    FunctionOnGrid draw(Eigen::Index b) const { return FunctionOnGrid(grid, draws.col(b)); }
};

/// G_b(z) = r_n p(z)' [(X'X/n)^-1 (1/n) sum_i x_i u_i w_ib]_beta with w_ib iid N(0,1).
/// Draw b uses its own engine keyed by (seed, b), so the ensemble does not
/// depend on `threads`.
BootstrapEnsemble score_bootstrap(const SeriesFit& fit, std::shared_ptr<const Grid> grid, int B,
                                  std::uint64_t seed, int threads = 1);

}  // namespace shapetest
