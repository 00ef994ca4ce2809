#include <catch_amalgamated.hpp>

#include "shapetest/functionals.hpp"
#include "support.hpp"

using namespace shapetest;

namespace {

std::shared_ptr<const Grid> line(Eigen::Index n) { return std::make_shared<const Grid>(Grid::uniform(n, 0.0, 1.0)); }
FunctionOnGrid fn(const Eigen::VectorXd& v) { return FunctionOnGrid(line(v.size()), v); }

const ShapeSpec kMon{Restriction::Monotone, 1};

}  // namespace

TEST_CASE("rearrangement residual counterexample", "[functionals]") {
    const auto phi = WaldFunctional::operator_residual(ShapeOperator::rearrange(1));
    const Eigen::Vector4d t1(40, 54, 42, 69), t2(21, 88, 3, 68);
    CHECK(evaluate(phi, fn(t1)) == 12);
    CHECK(evaluate(phi, fn(t2)) == 67);
    CHECK(evaluate(phi, fn(t1 + t2)) == 92);
    // the residual is not subadditive, hence not convex
    CHECK(evaluate(phi, fn(t1 + t2)) > evaluate(phi, fn(t1)) + evaluate(phi, fn(t2)));
}

TEST_CASE("cone distance examples", "[functionals]") {
    const auto phi = WaldFunctional::cone_distance(kMon);
    CHECK(evaluate(phi, fn(Eigen::Vector4d(1, 2, 2, 7))) == 0);
    CHECK(evaluate(phi, fn(Eigen::Vector2d(1, 0))) == 0.5);
    CHECK(evaluate(phi, fn(Eigen::Vector4d(21, 88, 3, 68))) == 42.5);
    CHECK(support::monotone_pair_grid_search(1, 0) == Catch::Approx(0.5));
    CHECK(cone_distance_lp(kMon, fn(Eigen::Vector4d(21, 88, 3, 68))) == Catch::Approx(42.5).margin(1e-9));

    const auto res = WaldFunctional::operator_residual(ShapeOperator::gcm(1));
    CHECK(evaluate(res, fn(Eigen::Vector3d(0, -0.25, -1))) == Catch::Approx(0.25));
}

TEST_CASE("Assumption 1 conformance", "[functionals]") {
    CHECK(conforms_to_assumption1(WaldFunctional::cone_distance(kMon)));
    CHECK(conforms_to_assumption1(WaldFunctional::operator_residual(ShapeOperator::gcm(1))));
    CHECK_FALSE(conforms_to_assumption1(WaldFunctional::operator_residual(ShapeOperator::rearrange(1))));
    CHECK_THROWS_AS(WaldFunctional(ConeDistance{kMon, NormOrder::L1}), Unsupported);
}

TEST_CASE("closed-form cone distance matches the LP and the pair oracle", "[functionals]") {
    support::Rng rng(21);
    for (int t = 0; t < 100; ++t) {
        const int d = t % 3 == 0 ? 2 : 1;
        const auto g = support::random_grid(rng, d, d == 1 ? 30 : 20);
        const auto f = support::random_function(rng, g);
        const ShapeSpec s{Restriction::Monotone, d};
        const double closed = cone_distance_envelope(s, f);
        CHECK(closed == Catch::Approx(support::monotone_distance_pairs(f)).margin(1e-12));
        CHECK(std::abs(cone_distance_lp(s, f) - closed) <= 1e-6);
    }
}

TEST_CASE("univariate curvature cone distances match the LP", "[functionals]") {
    support::Rng rng(22);
    for (auto r : {Restriction::Convex, Restriction::Concave, Restriction::MonotoneConvex, Restriction::MonotoneConcave}) {
        for (int t = 0; t < 40; ++t) {
            const auto f = support::random_function(rng, support::random_grid(rng, 1, 25));
            const ShapeSpec s{r, 1};
            CHECK(std::abs(cone_distance_lp(s, f) - cone_distance_envelope(s, f)) <= 1e-6);
        }
    }
}

TEST_CASE("bivariate joint cone distances match the LP", "[functionals]") {
    support::Rng rng(23);
    for (auto r : {Restriction::MonotoneConcave, Restriction::MonotoneConvex, Restriction::Convex}) {
        for (int t = 0; t < 15; ++t) {
            const auto f = support::random_function(rng, support::random_grid(rng, 2, 16));
            const ShapeSpec s{r, 2};
            CHECK(std::abs(cone_distance_lp(s, f) - cone_distance_envelope(s, f)) <= 1e-6);
        }
    }
}

TEST_CASE("phi vanishes exactly on the null cone", "[functionals]") {
    support::Rng rng(24);
    for (auto r : {Restriction::Monotone, Restriction::Convex, Restriction::Concave, Restriction::MonotoneConvex,
                   Restriction::MonotoneConcave}) {
        for (int d : {1, 2}) {
            const ShapeSpec s{r, d};
            for (int t = 0; t < 10; ++t) {
                const auto g = support::random_grid(rng, d, d == 1 ? 30 : 16);
                const auto member = support::random_member(rng, s, g);
                CHECK(evaluate(WaldFunctional::cone_distance(s), member) <= 1e-9 * (1 + norm(member, NormOrder::Sup)));
                CHECK(satisfies(s, member, 1e-9 * (1 + norm(member, NormOrder::Sup))));
                const auto noise = support::random_function(rng, g, 5.0);
                CHECK(satisfies(s, noise) == (evaluate(WaldFunctional::cone_distance(s), noise) <= 1e-10));
            }
        }
    }
}

TEST_CASE("shape names and default pairings", "[functionals]") {
    for (auto name : {"mon", "con", "conc", "mon-con", "mon-conc"}) CHECK(to_string(parse_restriction(name)) == name);
    CHECK_THROWS_AS(parse_restriction("wiggly"), InvalidArgument);
    CHECK(enforcing_operator({Restriction::MonotoneConcave, 2}).name() == "rearrange+lcm");
    CHECK(default_functional({Restriction::Convex, 1}).name() == "residual(gcm,sup)");
    CHECK(default_functional({Restriction::Monotone, 2}).is_cone_distance());
}

TEST_CASE("shape constraints describe the cone", "[functionals]") {
    const Grid g = Grid::uniform(4, 0.0, 1.0);
    const auto a = shape_constraints(ShapeSpec{Restriction::MonotoneConvex, 1}, g);
    CHECK(a.rows() == 3 + 2);
    CHECK((a * Eigen::Vector4d(0, 1, 3, 6)).minCoeff() >= 0);
    CHECK((a * Eigen::Vector4d(0, 2, 3, 4)).minCoeff() < 0);
}
