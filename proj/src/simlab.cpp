#include "shapetest/simlab.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "shapetest/errors.hpp"
#include "shapetest/parallel.hpp"
#include "shapetest/random.hpp"

namespace shapetest {

std::string to_string(Family f) {
    switch (f) {
        case Family::Uni1: return "uni1";
        case Family::Uni2: return "uni2";
        case Family::Bi1: return "bi1";
        case Family::Uni2c: return "uni2c";
        case Family::Bi2: return "bi2";
    }
    return "uni1";
}

Family parse_family(const std::string& s) {
    for (auto f : {Family::Uni1, Family::Uni2, Family::Bi1, Family::Uni2c, Family::Bi2})
        if (s == to_string(f)) return f;
    throw InvalidArgument("unknown design family '" + s + "' (expected uni1, uni2, bi1, uni2c, bi2)");
}

int family_dim(Family f) { return (f == Family::Bi1 || f == Family::Bi2) ? 2 : 1; }

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

bool has_abc(Family f) { return f == Family::Uni1 || f == Family::Bi1 || f == Family::Bi2; }

}  // namespace

std::string Design::params() const {
    std::string out = label;
    if (!out.empty()) out += " ";
    if (has_abc(family)) return out + "a=" + fmt(a) + " b=" + fmt(b) + " c=" + fmt(c);
    return out + "b=" + fmt(b);
}

Design Design::null_design(Family f, int index) {
    Design d;
    d.family = f;
    d.label = "D" + std::to_string(index);
    if (f == Family::Uni2 || f == Family::Uni2c) {
        if (index != 1) throw InvalidArgument("family " + to_string(f) + " has only the null design D1");
        return d;
    }
    if (index < 1 || index > 3) throw InvalidArgument("null designs are D1, D2 and D3");
    static const double uni[3][3] = {{0, 0, 0}, {0.1, 0.5, 0.5}, {0.5, 2, 1}};
    static const double bi[3][3] = {{0, 0, 0}, {0.2, 1, 0}, {0.5, 0, 0.5}};
    const auto& p = f == Family::Uni1 ? uni[index - 1] : bi[index - 1];
    d.a = p[0];
    d.b = p[1];
    d.c = p[2];
    return d;
}

Design Design::alternative(Family f, int delta) {
    if (delta < 0) throw InvalidArgument("delta must be nonnegative");
    Design d;
    d.family = f;
    d.label = "delta=" + std::to_string(delta);
    const double dd = delta;
    switch (f) {
        case Family::Uni1:
        case Family::Bi1:
            d.a = d.c = -0.05 * dd;
            d.b = 0.2 * dd;
            break;
        case Family::Bi2:
            d.a = d.c = -0.2 * dd;
            d.b = 0.2 * dd;
            break;
        case Family::Uni2:
        case Family::Uni2c:
            d.b = 0.5 * dd;
            break;
    }
    return d;
}

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double theta0(const Design& d, const Eigen::Ref<const Eigen::VectorXd>& z) {
    if (z.size() != d.dim()) throw DimensionMismatch("point dimension does not match the design");
    if (d.dim() == 1) {
        const double x = z[0];
        if (!(x >= -1 && x <= 1)) throw DomainError("univariate designs live on [-1, 1]");
        switch (d.family) {
            case Family::Uni1: return d.a * x - d.b * normal_pdf(d.c * x);
            case Family::Uni2: return -d.b * normal_pdf(std::pow(std::abs(x), 1.5));
            case Family::Uni2c: return d.b * normal_pdf(std::pow(std::abs(x), 1.5));
            default: break;
        }
    }
    const double z1 = z[0], z2 = z[1];
    if (!(z1 >= 0 && z1 <= 1 && z2 >= 0 && z2 <= 1)) throw DomainError("bivariate designs live on [0, 1]^2");
    const double ces = d.b == 0 ? std::sqrt(z1 * z2) : std::pow(0.5 * std::pow(z1, d.b) + 0.5 * std::pow(z2, d.b), 1.0 / d.b);
    const double scale = d.family == Family::Bi2 ? 5.0 : 1.0;
    return d.a * ces + d.c * std::log1p(scale * (z1 + z2));
}

Sample draw_sample(const Design& design, Eigen::Index n, std::uint64_t seed) {
    if (n < 1) throw InvalidArgument("sample size must be positive");
    const int d = design.dim();
    auto eng = make_engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Sample s;
    s.y.resize(n);
    s.z.resize(n, d);
    s.w.resize(n, 0);
    Eigen::VectorXd zi(d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int k = 0; k < d; ++k) {
            const double u = normal_cdf(normal(eng));
            zi[k] = d == 1 ? std::clamp(-1.0 + 2.0 * u, -1.0, 1.0) : u;
        }
        s.z.row(i) = zi.transpose();
        s.y[i] = theta0(design, zi) + normal(eng);
    }
    return s;
}

void McConfig::validate() const {
    if (!(alpha > 0 && alpha < 1)) throw InvalidArgument("alpha must lie in (0, 1)");
    if (bootstrap < 50) throw InvalidArgument("at least 50 bootstrap draws are required");
    if (reps < 1) throw InvalidArgument("at least one replication is required");
    if (gamma_rules.empty()) throw InvalidArgument("at least one gamma rule is required");
}

namespace {

std::string fingerprint(const McCell& cell, const McConfig& cfg, const GammaRule& rule) {
    std::ostringstream os;
    os << to_string(cell.design.family) << '|' << cell.design.params() << '|' << cell.n << '|' << cell.basis.label()
       << '|' << to_string(cell.shape.restriction) << '|' << rule.name() << '|' << cfg.alpha << '|' << cfg.bootstrap
       << '|' << cfg.reps << '|' << cfg.seed << '|' << cfg.grid_points;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(os.str())));
    return buf;
}

}  // namespace

std::vector<McResult> run_mc(const std::vector<McCell>& cells, const McConfig& config) {
    config.validate();
    const std::size_t nrules = config.gamma_rules.size();
    std::vector<McResult> out;
    for (const auto& cell : cells) {
        TestConfig tc(cell.shape);
        tc.alpha = config.alpha;
        tc.bootstrap = config.bootstrap;
        tc.basis = cell.basis;
        tc.grid_points = config.grid_points;
        tc.threads = 1;

        const auto start = std::chrono::steady_clock::now();
        // outcome[r * nrules + g]: 1 reject, 0 accept, -1 failed replication
        std::vector<int> outcome(static_cast<std::size_t>(config.reps) * nrules, -1);
        parallel_for(static_cast<std::size_t>(config.reps), config.threads, [&](std::size_t r) {
            TestConfig c = tc;
            c.seed = derive_seed(config.seed, r, 1);
            try {
                const PreparedTest prepared(draw_sample(cell.design, cell.n, derive_seed(config.seed, r, 0)), c);
                for (std::size_t g = 0; g < nrules; ++g)
                    outcome[r * nrules + g] = prepared.decide(config.gamma_rules[g]).reject ? 1 : 0;
            } catch (const Error&) {
                for (std::size_t g = 0; g < nrules; ++g) outcome[r * nrules + g] = -1;
            }
        });
        const double ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

        for (std::size_t g = 0; g < nrules; ++g) {
            McResult res;
            res.family = to_string(cell.design.family);
            res.params = cell.design.params();
            res.n = cell.n;
            res.basis = cell.basis.label();
            res.shape = to_string(cell.shape.restriction);
            res.gamma_rule = config.gamma_rules[g].name();
            res.alpha = config.alpha;
            res.delta = cell.delta;
            for (int r = 0; r < config.reps; ++r) {
                const int o = outcome[static_cast<std::size_t>(r) * nrules + g];
                if (o < 0) {
                    ++res.failures;
                } else {
                    ++res.reps;
                    res.rejections += o;
                }
            }
            if (res.failures > kMaxReplicationFailureRate * config.reps)
                throw NumericalFailure("cell " + res.family + " " + res.params + " n=" + std::to_string(res.n) + " " +
                                       res.basis + " aborted: " + std::to_string(res.failures) + " of " +
                                       std::to_string(config.reps) + " replications failed");
            res.reject_rate = res.reps > 0 ? static_cast<double>(res.rejections) / res.reps : 0.0;
            res.se = res.reps > 0 ? std::sqrt(res.reject_rate * (1 - res.reject_rate) / res.reps) : 0.0;
            res.runtime_ms = config.timing ? std::round(ms) : 0.0;
            res.fingerprint = fingerprint(cell, config, config.gamma_rules[g]);
            out.push_back(std::move(res));
        }
    }
    return out;
}

void write_csv(std::ostream& out, const std::vector<McResult>& results, bool with_delta) {
    if (with_delta) out << "delta,";
    out << "family,params,n,basis,gamma_rule,alpha,reps,reject_rate,se,runtime_ms\n";
    char buf[256];
    for (const auto& r : results) {
        if (with_delta) out << (r.delta ? std::to_string(*r.delta) : std::string()) << ',';
        std::snprintf(buf, sizeof buf, ",%g,%d,%.4f,%.4f,%.0f\n", r.alpha, r.reps, r.reject_rate, r.se, r.runtime_ms);
        out << r.family << ',' << r.params << ',' << r.n << ',' << r.basis << ',' << r.gamma_rule << buf;
    }
}

std::vector<BasisConfig> default_bases(int dim) {
    if (dim == 1) return {{3, 3}, {3, 5}, {3, 7}};
    return {{2, 0}, {2, 1}, {3, 0}, {3, 1}};
}

std::vector<std::string> suite_names() {
    return {"size-mon-uni",    "size-mon-bi",     "size-con-uni", "size-conc-bi",
            "size-moncon-uni", "size-monconc-bi", "power-curves"};
}

bool suite_has_delta(const std::string& name) { return name == "power-curves"; }

namespace {

Restriction default_power_shape(Family f) {
    switch (f) {
        case Family::Uni2c: return Restriction::Convex;
        case Family::Bi2: return Restriction::Concave;
        default: return Restriction::Monotone;
    }
}

}  // namespace

std::vector<McCell> suite(const std::string& name, const SuiteOptions& options) {
    const std::vector<Eigen::Index> ns = options.n.empty() ? std::vector<Eigen::Index>{500, 750, 1000} : options.n;
    std::vector<McCell> cells;

    auto size_suite = [&](Family f, Restriction r) {
        const int d = family_dim(f);
        for (Eigen::Index n : ns)
            for (const auto& basis : default_bases(d))
                for (int k = 1; k <= 3; ++k) cells.push_back({Design::null_design(f, k), n, basis, ShapeSpec{r, d}, {}});
    };

    if (name == "size-mon-uni") {
        size_suite(Family::Uni1, Restriction::Monotone);
    } else if (name == "size-mon-bi") {
        size_suite(Family::Bi1, Restriction::Monotone);
    } else if (name == "size-con-uni") {
        size_suite(Family::Uni1, Restriction::Convex);
    } else if (name == "size-conc-bi") {
        size_suite(Family::Bi2, Restriction::Concave);
    } else if (name == "size-moncon-uni") {
        size_suite(Family::Uni1, Restriction::MonotoneConvex);
    } else if (name == "size-monconc-bi") {
        size_suite(Family::Bi2, Restriction::MonotoneConcave);
    } else if (name == "power-curves") {
        const Family f = options.family.value_or(Family::Uni1);
        const int d = family_dim(f);
        const ShapeSpec shape{options.shape.value_or(default_power_shape(f)), d};
        for (Eigen::Index n : ns)
            for (const auto& basis : default_bases(d))
                for (int delta = 0; delta <= 10; ++delta)
                    cells.push_back({Design::alternative(f, delta), n, basis, shape, delta});
    } else {
        std::string known;
        for (const auto& s : suite_names()) known += (known.empty() ? "" : ", ") + s;
        throw InvalidArgument("unknown suite '" + name + "' (known: " + known + ")");
    }
    return cells;
}

}  // namespace shapetest
