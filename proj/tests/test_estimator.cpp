#include <catch_amalgamated.hpp>

#include "shapetest/errors.hpp"
#include "shapetest/estimator.hpp"
#include "shapetest/simlab.hpp"

using namespace shapetest;

namespace {

std::shared_ptr<const Grid> grid_for(const Sample& s, Eigen::Index n = 41) {
    return std::make_shared<const Grid>(Grid::uniform(n, s.z.minCoeff(), s.z.maxCoeff()));
}

}  // namespace

TEST_CASE("constant outcome is fitted exactly", "[estimator]") {
    Sample s = draw_sample(Design::null_design(Family::Uni1, 1), 200, 1);
    s.y.setConstant(5.0);
    const auto fit = shapetest::fit(s, build_basis(3, 5, s.z));
    CHECK(fit.residuals.cwiseAbs().maxCoeff() <= 1e-10);
    const auto theta = eval_on_grid(fit, grid_for(s));
    CHECK((theta.values().array() - 5.0).abs().maxCoeff() <= 1e-10);
}

TEST_CASE("exact spline data recovers the coefficients", "[estimator]") {
    Sample s = draw_sample(Design::null_design(Family::Uni1, 1), 300, 2);
    const auto basis = build_basis(3, 5, s.z);
    Eigen::VectorXd beta0(basis.size());
    for (Eigen::Index j = 0; j < beta0.size(); ++j) beta0[j] = std::sin(1.0 + j);
    s.y = design_matrix(basis, s.z) * beta0;
    const auto fit = shapetest::fit(s, basis);
    CHECK((fit.beta - beta0).cwiseAbs().maxCoeff() <= 1e-8);
    const auto g = grid_for(s);
    const Eigen::VectorXd truth = design_matrix(basis, g->points()) * beta0;
    CHECK((eval_on_grid(fit, g).values() - truth).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("fit rates and residual orthogonality", "[estimator]") {
    const Sample s = draw_sample(Design::null_design(Family::Uni1, 2), 1000, 3);
    const auto fit = shapetest::fit(s, build_basis(3, 5, s.z));
    CHECK(fit.r_n == Catch::Approx(std::sqrt(1000.0 / 9.0)));
    CHECK(fit.c_n == Catch::Approx(1.0 / std::log(1000.0)));
    const Eigen::VectorXd score = fit.design.transpose() * fit.residuals;
    CHECK(score.cwiseAbs().maxCoeff() <= 1e-8 * (fit.design.norm() * fit.residuals.norm()));
    // evaluation at the sample points equals the fitted values
    const Eigen::VectorXd fitted = design_matrix(fit.basis, s.z) * fit.beta;
    CHECK((fitted - (s.y - fit.residuals)).cwiseAbs().maxCoeff() <= 1e-10);
    // gram inverse
    const Eigen::MatrixXd gram = fit.design.transpose() * fit.design / 1000.0;
    CHECK((gram * fit.gram_inverse - Eigen::MatrixXd::Identity(9, 9)).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("estimation error shrinks with n under D1", "[estimator]") {
    const Design d1 = Design::null_design(Family::Uni1, 1);
    auto sup = [&](Eigen::Index n) {
        const Sample s = draw_sample(d1, n, 17);
        const auto fit = shapetest::fit(s, build_basis(3, 5, s.z));
        return norm(eval_on_grid(fit, std::make_shared<const Grid>(Grid::uniform(101, -0.95, 0.95))), NormOrder::Sup);
    };
    CHECK(sup(2000) < sup(200));
}

TEST_CASE("controls enter jointly and an empty control block changes nothing", "[estimator]") {
    Sample s = draw_sample(Design::null_design(Family::Uni1, 3), 500, 4);
    const auto basis = build_basis(3, 3, s.z);
    const auto plain = shapetest::fit(s, basis);
    CHECK(plain.gamma.size() == 0);

    Sample c = s;
    c.w.resize(500, 2);
    for (Eigen::Index i = 0; i < 500; ++i) {
        c.w(i, 0) = std::cos(3.0 * i);
        c.w(i, 1) = (i % 3 == 0) ? 1.0 : 0.0;
        c.y[i] += 0.7 * c.w(i, 0) - 0.4 * c.w(i, 1);
    }
    const auto with = shapetest::fit(c, basis);
    CHECK(with.gamma.size() == 2);
    CHECK(with.gamma[0] == Catch::Approx(0.7).margin(0.15));
    CHECK(with.gamma[1] == Catch::Approx(-0.4).margin(0.3));
    CHECK(with.gram_inverse.rows() == basis.size() + 2);
}

TEST_CASE("collinear designs are rank deficient", "[estimator]") {
    Sample s = draw_sample(Design::null_design(Family::Uni1, 1), 200, 5);
    s.w = Eigen::MatrixXd::Ones(200, 1);  // constant control duplicates the spline span
    CHECK_THROWS_AS(shapetest::fit(s, build_basis(3, 3, s.z)), RankDeficient);
    Sample tiny = draw_sample(Design::null_design(Family::Uni1, 1), 8, 5);
    CHECK_THROWS_AS(shapetest::fit(tiny, build_basis(3, 5, tiny.z)), InvalidArgument);
}

TEST_CASE("bootstrap draws", "[estimator]") {
    const Sample s = draw_sample(Design::null_design(Family::Uni1, 1), 500, 6);
    const auto fit = shapetest::fit(s, build_basis(3, 5, s.z));
    const auto g = grid_for(s);

    SECTION("zero residuals give zero draws") {
        auto f0 = fit;
        f0.residuals.setZero();
        const auto e = score_bootstrap(f0, g, 60, 1);
        CHECK(e.draws.isZero());
        CHECK(e.sup_norms.isZero());
    }
    SECTION("fixed seed reproduces the ensemble bit for bit, for any thread count") {
        const auto a = score_bootstrap(fit, g, 100, 42, 1);
        const auto b = score_bootstrap(fit, g, 100, 42, 3);
        CHECK(a.draws == b.draws);
        CHECK(score_bootstrap(fit, g, 100, 43).draws != a.draws);
    }
    SECTION("draws are linear in the residuals") {
        auto f2 = fit;
        f2.residuals *= 2.0;
        const auto a = score_bootstrap(fit, g, 80, 9), b = score_bootstrap(f2, g, 80, 9);
        CHECK((b.draws - 2.0 * a.draws).cwiseAbs().maxCoeff() <= 1e-12 * (1 + a.draws.cwiseAbs().maxCoeff()));
    }
    SECTION("draws have mean zero") {
        const int B = 2000;
        const auto e = score_bootstrap(fit, g, B, 7);
        for (Eigen::Index i = 0; i < e.draws.rows(); ++i) {
            const double mean = e.draws.row(i).mean();
            const double sd = std::sqrt((e.draws.row(i).array() - mean).square().sum() / (B - 1));
            CHECK(std::abs(mean) <= 3.0 * sd / std::sqrt(static_cast<double>(B)) + 1e-12);
        }
        CHECK(e.sup_norms[5] == Catch::Approx(e.draws.col(5).cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("trimming keeps rows inside the range", "[estimator]") {
    const Sample s = draw_sample(Design::null_design(Family::Uni1, 1), 400, 8);
    const Sample t = trim_sample(s, -0.5, 0.5);
    CHECK(t.n() > 100);
    CHECK(t.n() < 300);
    CHECK(t.z.minCoeff() >= -0.5);
    CHECK(t.z.maxCoeff() <= 0.5);
}
