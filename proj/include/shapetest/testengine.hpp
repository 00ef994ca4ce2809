#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "shapetest/estimator.hpp"
#include "shapetest/functionals.hpp"

namespace shapetest {

inline constexpr const char* kReportSchema = "shapetest-report/1";

/// gamma_n as a function of n: fixed, 0.01 / log n, or 1 / n.
struct GammaRule {
    enum class Kind { Fixed, LogN, InverseN };
    Kind kind = Kind::LogN;
    double value = 0.01;

    static GammaRule fixed(double g) { return {Kind::Fixed, g}; }
    static GammaRule logn() { return {Kind::LogN, 0.01}; }
    static GammaRule invn() { return {Kind::InverseN, 0.0}; }

    double gamma(Eigen::Index n) const;
    /// "fixed:0.01", "logn", "invn"
    std::string name() const;
    /// Accepts the names above; "lognrule" and "log" are aliases of "logn".
    static GammaRule parse(const std::string& s);

    friend bool operator==(const GammaRule& a, const GammaRule& b) {
        return a.kind == b.kind && (a.kind != Kind::Fixed || a.value == b.value);
    }
};

/// B-spline sieve: degree 2 or 3 with `knots` interior knots per axis.
struct BasisConfig {
    int degree = 3;
    int knots = 5;

    /// "F-C5", "F-Q0", ...
    std::string label() const;
    static BasisConfig parse_label(const std::string& s);
    friend bool operator==(const BasisConfig&, const BasisConfig&) = default;
};

struct TestConfig {
    explicit TestConfig(ShapeSpec shape_);

    ShapeSpec shape;
    WaldFunctional functional;
    ShapeOperator gamma_op;
    double alpha = 0.05;
    GammaRule gamma_rule = GammaRule::logn();
    int bootstrap = 200;
    BasisConfig basis;
    /// Reporting grid. When null, a tensor grid spanning the sample range
    /// with `grid_points` per axis is used.
    std::shared_ptr<const Grid> grid;
    Eigen::Index grid_points = 0;  // 0: 101 in one dimension, 11 per axis otherwise
    std::uint64_t seed = 1;
    std::optional<double> c_n;
    int threads = 1;

    /// Throws InvalidArgument on out-of-range settings.
    void validate() const;
    Eigen::Index resolved_grid_points() const;
};

/// Order statistic of rank ceil(q B) (right-continuous empirical quantile).
double order_statistic(std::vector<double> values, double q);

struct KappaEstimate {
    double kappa = 0;
    double tau = 0;
    bool degenerate = false;  // tau == 0, so kappa falls back to 0
};

/// kappa = r_n c_n / tau, with tau the (1 - gamma) order statistic of the
/// bootstrap sup-norms.
KappaEstimate kappa_hat(const BootstrapEnsemble& ensemble, double r_n, double c_n, double gamma);
KappaEstimate kappa_hat(const BootstrapEnsemble& ensemble, const SeriesFit& fit, double gamma);

/// phi(G_b + kappa * restricted) for every draw; failed draws are NaN.
struct BootstrapValues {
    std::vector<double> values;
    int failures = 0;

    /// Finite values only, in draw order.
    std::vector<double> successful() const;
};

/// Fraction of failed draws beyond which a test is aborted.
inline constexpr double kMaxDrawFailureRate = 0.01;

BootstrapValues bootstrap_values(const BootstrapEnsemble& ensemble, const FunctionOnGrid& restricted,
                                 const WaldFunctional& functional, double kappa, int threads = 1);

double critical_value(const BootstrapEnsemble& ensemble, const SeriesFit& fit, const WaldFunctional& functional,
                      const ShapeOperator& gamma_op, double kappa, double alpha);

struct TestReport {
    double statistic = 0;
    double phi_hat = 0;
    double kappa_hat = 0;
    double tau_hat = 0;
    bool kappa_degenerate = false;
    double gamma = 0;
    double critical_value = 0;
    double p_value = 1;
    bool reject = false;
    std::vector<double> bootstrap_values;
    int failed_draws = 0;
    Eigen::Index n = 0;
    Eigen::Index k_n = 0;
    double r_n = 0;
    double c_n = 0;
    nlohmann::json provenance;

    nlohmann::json to_json() const;
};

/// The data-dependent part of a test (fit, statistic, bootstrap ensemble),
/// shared by every gamma rule.
class PreparedTest {
public:
    PreparedTest(const Sample& sample, const TestConfig& config);

    TestReport decide(const GammaRule& rule) const;
    TestReport decide() const { return decide(config_.gamma_rule); }

    const SeriesFit& fit() const noexcept { return *fit_; }
    const BootstrapEnsemble& ensemble() const noexcept { return ensemble_; }
    const FunctionOnGrid& theta_hat() const noexcept { return *theta_hat_; }
    double statistic() const noexcept { return statistic_; }

private:
    TestConfig config_;
    std::optional<SeriesFit> fit_;
    std::optional<FunctionOnGrid> theta_hat_;
    std::optional<FunctionOnGrid> restricted_;
    BootstrapEnsemble ensemble_;
    double phi_hat_ = 0;
    double statistic_ = 0;
    double c_n_ = 0;
};

TestReport run_test(const Sample& sample, const TestConfig& config);

/// Grid spanning the sample range on every covariate axis.
std::shared_ptr<const Grid> sample_range_grid(const Sample& sample, Eigen::Index points_per_axis);

struct HarnessRecord {
    int reps = 0;
    int rejections = 0;
    int failures = 0;
    double frequency = 0;
    double se = 0;
};

/// Monte Carlo rejection frequency with its binomial standard error.
/// `draw(seed)` generates one sample; replication r uses sample seed
/// derive_seed(master, r, 0) and bootstrap seed derive_seed(master, r, 1).
HarnessRecord size_power_harness(const std::function<Sample(std::uint64_t)>& draw, const TestConfig& config,
                               int n_reps, std::uint64_t master_seed, int threads = 1);

}  // namespace shapetest
