#include "shapetest/estimator.hpp"

#include <cmath>
#include <random>
#include <string>

#include "shapetest/errors.hpp"
#include "shapetest/parallel.hpp"
#include "shapetest/random.hpp"

namespace shapetest {

void Sample::validate() const {
    if (y.size() == 0) throw InvalidArgument("sample is empty");
    if (z.rows() != y.size()) throw InvalidArgument("y and z have different row counts");
    if (z.cols() < 1) throw InvalidArgument("sample needs at least one covariate");
    if (w.cols() > 0 && w.rows() != y.size()) throw InvalidArgument("y and w have different row counts");
    if (!y.allFinite() || !z.allFinite() || (w.size() > 0 && !w.allFinite()))
        throw InvalidArgument("sample contains non-finite values");
}

Sample trim_sample(const Sample& s, double lo, double hi) {
    if (!(hi > lo)) throw InvalidArgument("trimming range needs lo < hi");
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < s.n(); ++i)
        if (s.z(i, 0) >= lo && s.z(i, 0) <= hi) keep.push_back(i);
    Sample out;
    const auto m = static_cast<Eigen::Index>(keep.size());
    out.y.resize(m);
    out.z.resize(m, s.z.cols());
    out.w.resize(m, s.w.cols());
    for (Eigen::Index r = 0; r < m; ++r) {
        out.y[r] = s.y[keep[r]];
        out.z.row(r) = s.z.row(keep[r]);
        if (s.w.cols() > 0) out.w.row(r) = s.w.row(keep[r]);
    }
    return out;
}

SeriesFit fit(const Sample& sample, const SplineBasis& basis) {
    sample.validate();
    if (sample.dim() != basis.dim()) throw DimensionMismatch("sample and basis dimensions differ");
    const Eigen::Index n = sample.n(), k = basis.size(), q = sample.controls();
    if (n <= k + q)
        throw InvalidArgument("sample size " + std::to_string(n) + " must exceed the number of regressors " +
                              std::to_string(k + q));

    Eigen::MatrixXd x(n, k + q);
    x.leftCols(k) = design_matrix(basis, sample.z);
    if (q > 0) x.rightCols(q) = sample.w;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    const Eigen::VectorXd rdiag = qr.matrixR().diagonal().cwiseAbs();
    const double rmax = rdiag.maxCoeff(), rmin = rdiag.minCoeff();
    if (!(rmin > 0) || rmax / rmin > kRankThreshold)
        throw RankDeficient("design matrix is numerically singular (condition ratio " +
                            std::to_string(rmin > 0 ? rmax / rmin : INFINITY) + ")");

    const Eigen::VectorXd coef = qr.solve(sample.y);

    // X P = Q R, so (X'X)^-1 = P R^-1 R^-T P'.
    const Eigen::Index p = k + q;
    const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd rinv = r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::MatrixXd perm = qr.colsPermutation();
    const Eigen::MatrixXd prinv = perm * rinv;

    SeriesFit out{basis, coef.head(k), coef.tail(q), sample.y - x * coef, std::move(x),
                  static_cast<double>(n) * (prinv * prinv.transpose()), 0.0, 0.0};
    out.r_n = std::sqrt(static_cast<double>(n) / static_cast<double>(k));
    out.c_n = 1.0 / std::log(static_cast<double>(n));
    return out;
}

FunctionOnGrid eval_on_grid(const SeriesFit& fit, std::shared_ptr<const Grid> grid) {
    if (grid->dim() != fit.basis.dim()) throw DimensionMismatch("grid and basis dimensions differ");
    Eigen::VectorXd v = design_matrix(fit.basis, grid->points()) * fit.beta;
    return FunctionOnGrid(std::move(grid), std::move(v));
}

BootstrapEnsemble score_bootstrap(const SeriesFit& fit, std::shared_ptr<const Grid> grid, int B,
                                  std::uint64_t seed, int threads) {
    if (B < 1) throw InvalidArgument("bootstrap needs at least one draw");
    if (grid->dim() != fit.basis.dim()) throw DimensionMismatch("grid and basis dimensions differ");
    const Eigen::Index n = fit.n(), k = fit.k_n();

    // M = r_n P_grid [Ginv]_beta,. X' diag(u) / n, so that G_b = M omega_b.
    Eigen::MatrixXd t = fit.gram_inverse.topRows(k) * fit.design.transpose();
    t = t * fit.residuals.asDiagonal();
    t /= static_cast<double>(n);
    const Eigen::MatrixXd m = fit.r_n * (design_matrix(fit.basis, grid->points()) * t);

    Eigen::MatrixXd omega(n, B);
    parallel_for(static_cast<std::size_t>(B), threads, [&](std::size_t b) {
        auto eng = make_engine(seed, b);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Eigen::Index i = 0; i < n; ++i) omega(i, static_cast<Eigen::Index>(b)) = normal(eng);
    });

    BootstrapEnsemble out;
    out.grid = std::move(grid);
    out.draws = m * omega;
    out.sup_norms = out.draws.cwiseAbs().colwise().maxCoeff().transpose();
    out.seed = seed;
    return out;
}

}  // namespace shapetest
