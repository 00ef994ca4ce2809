#include "shapetest/testengine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "shapetest/errors.hpp"
#include "shapetest/parallel.hpp"
#include "shapetest/random.hpp"

namespace shapetest {

double GammaRule::gamma(Eigen::Index n) const {
    switch (kind) {
        case Kind::Fixed: return value;
        case Kind::LogN: return value / std::log(static_cast<double>(n));
        case Kind::InverseN: return 1.0 / static_cast<double>(n);
    }
    return value;
}

std::string GammaRule::name() const {
    switch (kind) {
        case Kind::Fixed: {
            std::ostringstream os;
            os << "fixed:" << value;
            return os.str();
        }
        case Kind::LogN: return "logn";
        case Kind::InverseN: return "invn";
    }
    return "logn";
}

GammaRule GammaRule::parse(const std::string& s) {
    if (s == "logn" || s == "lognrule" || s == "log") return logn();
    if (s == "invn" || s == "inv" || s == "1/n") return invn();
    if (s.rfind("fixed:", 0) == 0) {
        double g = 0;
        try {
            std::size_t used = 0;
            g = std::stod(s.substr(6), &used);
            if (used != s.size() - 6) throw std::invalid_argument(s);
        } catch (const std::exception&) {
            throw InvalidArgument("malformed gamma rule '" + s + "'");
        }
        if (!(g > 0 && g < 1)) throw InvalidArgument("fixed gamma must lie in (0, 1)");
        return fixed(g);
    }
    throw InvalidArgument("unknown gamma rule '" + s + "' (expected fixed:G, logn or invn)");
}

std::string BasisConfig::label() const {
    return std::string("F-") + (degree == 2 ? "Q" : "C") + std::to_string(knots);
}

BasisConfig BasisConfig::parse_label(const std::string& s) {
    std::string t = s.rfind("F-", 0) == 0 ? s.substr(2) : s;
    if (t.size() < 2 || (t[0] != 'C' && t[0] != 'Q')) throw InvalidArgument("malformed basis label '" + s + "'");
    BasisConfig b;
    b.degree = t[0] == 'Q' ? 2 : 3;
    try {
        b.knots = std::stoi(t.substr(1));
    } catch (const std::exception&) {
        throw InvalidArgument("malformed basis label '" + s + "'");
    }
    return b;
}

TestConfig::TestConfig(ShapeSpec shape_)
    : shape(shape_), functional(default_functional(shape_)), gamma_op(enforcing_operator(shape_)) {}

void TestConfig::validate() const {
    if (!(alpha > 0 && alpha < 1)) throw InvalidArgument("alpha must lie in (0, 1)");
    if (bootstrap < 50) throw InvalidArgument("at least 50 bootstrap draws are required");
    if (basis.degree != 2 && basis.degree != 3) throw InvalidArgument("basis degree must be 2 or 3");
    if (basis.knots < 0) throw InvalidArgument("knot count must be nonnegative");
    if (!conforms_to_assumption1(functional))
        throw InvalidArgument("functional '" + functional.name() + "' is not convex and cannot drive the test");
    if (functional.dim() != shape.dim || gamma_op.domain_dim() != shape.dim)
        throw DimensionMismatch("functional, operator and shape dimensions differ");
    if (grid && grid->dim() != shape.dim) throw DimensionMismatch("grid and shape dimensions differ");
    if (grid_points < 0 || grid_points == 1) throw InvalidArgument("grid needs at least 2 points per axis");
    if (c_n && !(*c_n > 0)) throw InvalidArgument("c_n must be positive");
    if (gamma_rule.kind == GammaRule::Kind::Fixed && !(gamma_rule.value > 0 && gamma_rule.value < 1))
        throw InvalidArgument("fixed gamma must lie in (0, 1)");
}

Eigen::Index TestConfig::resolved_grid_points() const {
    if (grid_points > 0) return grid_points;
    return shape.dim == 1 ? 101 : 11;
}

double order_statistic(std::vector<double> values, double q) {
    if (values.empty()) throw InvalidArgument("order statistic of an empty set");
    const auto b = static_cast<double>(values.size());
    auto rank = static_cast<std::size_t>(std::ceil(q * b - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1), values.end());
    return values[rank - 1];
}

KappaEstimate kappa_hat(const BootstrapEnsemble& ensemble, double r_n, double c_n, double gamma) {
    if (!(gamma > 0 && gamma < 1)) throw InvalidArgument("gamma must lie in (0, 1)");
    if (ensemble.size() == 0) throw InvalidArgument("empty bootstrap ensemble");
    std::vector<double> s(ensemble.sup_norms.data(), ensemble.sup_norms.data() + ensemble.sup_norms.size());
    KappaEstimate out;
    out.tau = order_statistic(std::move(s), 1.0 - gamma);
    if (out.tau > 0) {
        out.kappa = r_n * c_n / out.tau;
    } else {
        out.degenerate = true;
        out.kappa = 0;
    }
    return out;
}

KappaEstimate kappa_hat(const BootstrapEnsemble& ensemble, const SeriesFit& fit, double gamma) {
    return kappa_hat(ensemble, fit.r_n, fit.c_n, gamma);
}

std::vector<double> BootstrapValues::successful() const {
    std::vector<double> out;
    out.reserve(values.size());
    for (double v : values)
        if (std::isfinite(v)) out.push_back(v);
    return out;
}

BootstrapValues bootstrap_values(const BootstrapEnsemble& ensemble, const FunctionOnGrid& restricted,
                                 const WaldFunctional& functional, double kappa, int threads) {
    if (!(kappa >= 0)) throw InvalidArgument("kappa must be nonnegative");
    if (static_cast<std::size_t>(restricted.size()) != ensemble.grid->size())
        throw GridMismatch("restricted estimate is not on the bootstrap grid");
    const Eigen::VectorXd shift = kappa * restricted.values();
    BootstrapValues out;
    out.values.assign(static_cast<std::size_t>(ensemble.size()), std::numeric_limits<double>::quiet_NaN());
    parallel_for(out.values.size(), threads, [&](std::size_t b) {
        try {
            const FunctionOnGrid g(ensemble.grid, ensemble.draws.col(static_cast<Eigen::Index>(b)) + shift);
            out.values[b] = evaluate(functional, g);
        } catch (const Error&) {
            // left as NaN and counted below
        }
    });
    for (double v : out.values)
        if (!std::isfinite(v)) ++out.failures;
    if (out.failures > kMaxDrawFailureRate * static_cast<double>(out.values.size()))
        throw NumericalFailure(std::to_string(out.failures) + " of " + std::to_string(out.values.size()) +
                               " bootstrap evaluations failed");
    return out;
}

double critical_value(const BootstrapEnsemble& ensemble, const SeriesFit& fit, const WaldFunctional& functional,
                      const ShapeOperator& gamma_op, double kappa, double alpha) {
    if (!(alpha > 0 && alpha < 1)) throw InvalidArgument("alpha must lie in (0, 1)");
    const FunctionOnGrid theta = eval_on_grid(fit, ensemble.grid);
    const auto vals = bootstrap_values(ensemble, apply(gamma_op, theta), functional, kappa);
    return order_statistic(vals.successful(), 1.0 - alpha);
}

std::shared_ptr<const Grid> sample_range_grid(const Sample& sample, Eigen::Index points_per_axis) {
    std::vector<Eigen::VectorXd> axes;
    for (Eigen::Index k = 0; k < sample.z.cols(); ++k) {
        const double lo = sample.z.col(k).minCoeff(), hi = sample.z.col(k).maxCoeff();
        if (!(hi > lo)) throw DegenerateSample("covariate " + std::to_string(k + 1) + " is constant");
        axes.push_back(Grid::uniform_axis(points_per_axis, lo, hi));
    }
    return std::make_shared<const Grid>(std::move(axes));
}

namespace {

template <typename Fn>
auto staged(const char* stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

nlohmann::json grid_json(const Grid& g) {
    nlohmann::json axes = nlohmann::json::array();
    for (int k = 0; k < g.dim(); ++k)
        axes.push_back({{"points", g.axis_size(k)}, {"lo", g.axis(k)[0]}, {"hi", g.axis(k)[g.axis_size(k) - 1]}});
    return {{"dim", g.dim()}, {"axes", axes}};
}

}  // namespace

PreparedTest::PreparedTest(const Sample& sample, const TestConfig& config) : config_(config) {
    staged("config", [&] {
        config_.validate();
        sample.validate();
        if (sample.dim() != config_.shape.dim)
            throw DimensionMismatch("sample has " + std::to_string(sample.dim()) + " covariates but the shape has " +
                                    std::to_string(config_.shape.dim));
    });
    const SplineBasis basis = staged("basis", [&] { return build_basis(config_.basis.degree, config_.basis.knots, sample.z); });
    fit_.emplace(staged("fit", [&] { return shapetest::fit(sample, basis); }));
    c_n_ = config_.c_n.value_or(fit_->c_n);

    auto grid = config_.grid ? config_.grid : staged("grid", [&] { return sample_range_grid(sample, config_.resolved_grid_points()); });
    staged("statistic", [&] {
        theta_hat_.emplace(eval_on_grid(*fit_, grid));
        phi_hat_ = evaluate(config_.functional, *theta_hat_);
        statistic_ = fit_->r_n * phi_hat_;
        restricted_.emplace(apply(config_.gamma_op, *theta_hat_));
    });
    ensemble_ = staged("bootstrap", [&] {
        return score_bootstrap(*fit_, grid, config_.bootstrap, config_.seed, config_.threads);
    });
}

TestReport PreparedTest::decide(const GammaRule& rule) const {
    TestReport r;
    r.n = fit_->n();
    r.k_n = fit_->k_n();
    r.r_n = fit_->r_n;
    r.c_n = c_n_;
    r.phi_hat = phi_hat_;
    r.statistic = statistic_;
    r.gamma = rule.gamma(r.n);

    const auto kappa = staged("kappa", [&] { return kappa_hat(ensemble_, r.r_n, r.c_n, r.gamma); });
    r.kappa_hat = kappa.kappa;
    r.tau_hat = kappa.tau;
    r.kappa_degenerate = kappa.degenerate;

    const auto vals = staged("critical-value", [&] {
        return bootstrap_values(ensemble_, *restricted_, config_.functional, r.kappa_hat, config_.threads);
    });
    const auto ok = vals.successful();
    r.failed_draws = vals.failures;
    r.critical_value = order_statistic(ok, 1.0 - config_.alpha);
    const auto exceed = std::count_if(ok.begin(), ok.end(), [&](double v) { return v >= r.statistic; });
    r.p_value = static_cast<double>(exceed) / static_cast<double>(ok.size());
    r.reject = r.statistic > r.critical_value;
    r.bootstrap_values = vals.values;

    const auto& g = ensemble_.grid;
    r.provenance = {{"schema", kReportSchema},
                    {"alpha", config_.alpha},
                    {"gamma_rule", rule.name()},
                    {"bootstrap", config_.bootstrap},
                    {"shape", to_string(config_.shape.restriction)},
                    {"dim", config_.shape.dim},
                    {"functional", config_.functional.name()},
                    {"gamma_op", config_.gamma_op.name()},
                    {"basis",
                     {{"degree", config_.basis.degree},
                      {"knots", config_.basis.knots},
                      {"label", config_.basis.label()},
                      {"kind", config_.basis.degree == 2 ? "quadratic" : "cubic"}}},
                    {"grid", grid_json(*g)},
                    {"seed", config_.seed},
                    {"rng", "mt19937_64/seed_seq(seed,draw)"},
                    {"c_n_override", config_.c_n ? nlohmann::json(*config_.c_n) : nlohmann::json(nullptr)}};
    return r;
}

nlohmann::json TestReport::to_json() const {
    nlohmann::json vals = nlohmann::json::array();
    for (double v : bootstrap_values) vals.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr));
    return {{"schema", kReportSchema},
            {"statistic", statistic},
            {"phi_hat", phi_hat},
            {"kappa_hat", kappa_hat},
            {"kappa_degenerate", kappa_degenerate},
            {"tau_hat", tau_hat},
            {"gamma", gamma},
            {"critical_value", critical_value},
            {"p_value", p_value},
            {"reject", reject},
            {"n", n},
            {"k_n", k_n},
            {"r_n", r_n},
            {"c_n", c_n},
            {"failed_draws", failed_draws},
            {"bootstrap_values", vals},
            {"provenance", provenance}};
}

TestReport run_test(const Sample& sample, const TestConfig& config) {
    return PreparedTest(sample, config).decide(config.gamma_rule);
}

HarnessRecord size_power_harness(const std::function<Sample(std::uint64_t)>& draw, const TestConfig& config,
                               int n_reps, std::uint64_t master_seed, int threads) {
    if (n_reps < 1) throw InvalidArgument("harness needs at least one replication");
    std::vector<int> outcome(static_cast<std::size_t>(n_reps), -1);
    parallel_for(outcome.size(), threads, [&](std::size_t r) {
        TestConfig c = config;
        c.seed = derive_seed(master_seed, r, 1);
        c.threads = 1;
        try {
            outcome[r] = run_test(draw(derive_seed(master_seed, r, 0)), c).reject ? 1 : 0;
        } catch (const Error&) {
            outcome[r] = -1;
        }
    });
    HarnessRecord h;
    for (int o : outcome) {
        if (o < 0) {
            ++h.failures;
        } else {
            ++h.reps;
            h.rejections += o;
        }
    }
    if (h.reps > 0) {
        h.frequency = static_cast<double>(h.rejections) / h.reps;
        h.se = std::sqrt(h.frequency * (1 - h.frequency) / h.reps);
    }
    return h;
}

}  // namespace shapetest
