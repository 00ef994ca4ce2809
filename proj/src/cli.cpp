#include "shapetest/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"

#include "shapetest/errors.hpp"
#include "shapetest/functionals.hpp"
#include "shapetest/operators.hpp"
#include "shapetest/parallel.hpp"
#include "shapetest/random.hpp"
#include "shapetest/simlab.hpp"
#include "shapetest/testengine.hpp"

namespace shapetest::cli {

namespace {

/// Bad flags or flag combinations; mapped to kExitUsage.
class UsageError : public Error {
public:
    using Error::Error;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(s);
    while (std::getline(is, cell, sep)) out.push_back(trim(cell));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::string& what) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v))
        throw InvalidArgument("malformed number '" + s + "' in " + what);
    return v;
}

}  // namespace

int CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

CsvTable read_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto cells = split(line, ',');
        if (t.header.empty()) {
            t.header = std::move(cells);
            std::set<std::string> seen(t.header.begin(), t.header.end());
            if (seen.size() != t.header.size()) throw InvalidArgument("duplicate column names in CSV header");
            continue;
        }
        if (cells.size() != t.header.size())
            throw InvalidArgument("CSV line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                                  " fields, expected " + std::to_string(t.header.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(parse_double(c, "CSV line " + std::to_string(lineno)));
        t.rows.push_back(std::move(row));
    }
    if (t.header.empty()) throw InvalidArgument("CSV input has no header");
    return t;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    return read_csv(in);
}

Sample sample_from_table(const CsvTable& t) {
    const int iy = t.column("y");
    if (iy < 0) throw InvalidArgument("CSV needs a 'y' column");
    std::vector<int> iz, iw;
    for (int k = 1; t.column("z" + std::to_string(k)) >= 0; ++k) iz.push_back(t.column("z" + std::to_string(k)));
    if (iz.empty() && t.column("z") >= 0) iz.push_back(t.column("z"));
    if (iz.empty()) throw InvalidArgument("CSV needs a 'z1' column");
    for (int k = 1; t.column("w" + std::to_string(k)) >= 0; ++k) iw.push_back(t.column("w" + std::to_string(k)));
    if (t.rows.empty()) throw InvalidArgument("CSV has no data rows");

    const auto n = static_cast<Eigen::Index>(t.rows.size());
    Sample s;
    s.y.resize(n);
    s.z.resize(n, static_cast<Eigen::Index>(iz.size()));
    s.w.resize(n, static_cast<Eigen::Index>(iw.size()));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = t.rows[static_cast<std::size_t>(i)];
        s.y[i] = r[static_cast<std::size_t>(iy)];
        for (std::size_t k = 0; k < iz.size(); ++k) s.z(i, static_cast<Eigen::Index>(k)) = r[static_cast<std::size_t>(iz[k])];
        for (std::size_t k = 0; k < iw.size(); ++k) s.w(i, static_cast<Eigen::Index>(k)) = r[static_cast<std::size_t>(iw[k])];
    }
    return s;
}

FunctionOnGrid function_from_table(const CsvTable& t) {
    std::vector<int> iz;
    if (t.column("z") >= 0) {
        iz.push_back(t.column("z"));
    } else {
        for (int k = 1; t.column("z" + std::to_string(k)) >= 0; ++k) iz.push_back(t.column("z" + std::to_string(k)));
    }
    const int iv = t.column("value");
    if (iz.empty() || iv < 0) throw InvalidArgument("CSV needs columns z (or z1, z2, ...) and value");
    const std::size_t d = iz.size();

    std::vector<std::set<double>> coords(d);
    for (const auto& r : t.rows)
        for (std::size_t k = 0; k < d; ++k) coords[k].insert(r[static_cast<std::size_t>(iz[k])]);
    std::vector<Eigen::VectorXd> axes;
    std::size_t total = 1;
    for (const auto& c : coords) {
        axes.emplace_back(Eigen::Map<const Eigen::VectorXd>(std::vector<double>(c.begin(), c.end()).data(),
                                                             static_cast<Eigen::Index>(c.size())));
        total *= c.size();
    }
    if (total != t.rows.size()) throw GridMismatch("grid is not rectangular");
    auto grid = std::make_shared<const Grid>(std::move(axes));

    Eigen::VectorXd v(static_cast<Eigen::Index>(total));
    std::vector<bool> filled(total, false);
    for (const auto& r : t.rows) {
        std::size_t linear = 0;
        for (std::size_t k = 0; k < d; ++k) {
            const auto& c = coords[k];
            const auto pos = static_cast<std::size_t>(std::distance(c.begin(), c.find(r[static_cast<std::size_t>(iz[k])])));
            linear += pos * grid->stride(static_cast<int>(k));
        }
        if (filled[linear]) throw GridMismatch("grid is not rectangular (repeated point)");
        filled[linear] = true;
        v[static_cast<Eigen::Index>(linear)] = r[static_cast<std::size_t>(iv)];
    }
    return FunctionOnGrid(std::move(grid), std::move(v));
}

Sample hours_fixture(Eigen::Index n, int controls, std::uint64_t seed, bool negate) {
    if (n < 10) throw InvalidArgument("fixture needs at least 10 rows");
    if (controls < 0) throw InvalidArgument("control count must be nonnegative");
    auto eng = make_engine(seed, fnv1a("hours-fixture"));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    Sample s;
    s.y.resize(n);
    s.z.resize(n, 1);
    s.w.resize(n, controls);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double hours = 3.0 + 87.0 * unif(eng);
        double y = 0.6 * std::log(hours / 3.0) / std::log(30.0);
        for (int k = 0; k < controls; ++k) {
            const double w = (k % 2 == 0) ? normal(eng) : (unif(eng) < 0.5 ? 1.0 : 0.0);
            s.w(i, k) = w;
            y += 0.05 * (k + 1) * w;
        }
        y += 0.25 * normal(eng);
        s.z(i, 0) = hours;
        s.y[i] = negate ? -y : y;
    }
    return s;
}

void write_sample_csv(std::ostream& out, const Sample& s) {
    out << "y";
    for (Eigen::Index k = 0; k < s.z.cols(); ++k) out << ",z" << k + 1;
    for (Eigen::Index k = 0; k < s.w.cols(); ++k) out << ",w" << k + 1;
    out << '\n';
    char buf[40];
    auto put = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        out << buf;
    };
    for (Eigen::Index i = 0; i < s.n(); ++i) {
        put(s.y[i]);
        for (Eigen::Index k = 0; k < s.z.cols(); ++k) out << ',', put(s.z(i, k));
        for (Eigen::Index k = 0; k < s.w.cols(); ++k) out << ',', put(s.w(i, k));
        out << '\n';
    }
}

namespace {

struct Options {
    // shared
    std::string shape = "mon";
    double alpha = 0.05;
    std::string basis;  // quadratic | cubic
    int knots = -1;
    std::string gamma_rule = "logn";
    int bootstrap = 200;
    std::uint64_t seed = 1;
    int threads = 0;
    Eigen::Index grid = 0;
    std::string output;
    // test
    std::string input;
    std::string z_range;
    // simulate
    std::string suite;
    int reps = 500;
    std::string family;
    std::string n_list;
    bool no_timing = false;
    // operators
    std::string op = "rearrange";
    // fixture
    Eigen::Index fixture_n = 2000;
    int controls = 3;
    bool negate = false;
};

int degree_from_name(const std::string& s) {
    if (s == "cubic" || s == "C" || s == "3") return 3;
    if (s == "quadratic" || s == "Q" || s == "2") return 2;
    throw UsageError("unknown basis '" + s + "' (expected quadratic or cubic)");
}

/// Bad option values are usage errors.
template <typename Fn>
auto as_usage(Fn&& fn) {
    try {
        return fn();
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
}

std::vector<GammaRule> parse_rules(const std::string& s) {
    if (s == "all") return {GammaRule::fixed(0.01), GammaRule::logn(), GammaRule::invn()};
    std::vector<GammaRule> out;
    for (const auto& part : split(s, ',')) out.push_back(as_usage([&] { return GammaRule::parse(part); }));
    if (out.empty()) throw UsageError("empty gamma rule list");
    return out;
}

/// Writes to -o path or to `out`.
template <typename Fn>
void emit(const std::string& path, std::ostream& out, Fn&& fn) {
    if (path.empty() || path == "-") {
        fn(out);
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write '" + path + "'");
    fn(f);
}

int cmd_test(const Options& o, std::ostream& out) {
    const Restriction r = as_usage([&] { return parse_restriction(o.shape); });
    Sample sample = sample_from_table(read_csv_file(o.input));
    if (!o.z_range.empty()) {
        const auto parts = split(o.z_range, ',');
        if (parts.size() != 2) throw UsageError("--z-range expects lo,hi");
        sample = trim_sample(sample, parse_double(parts[0], "--z-range"), parse_double(parts[1], "--z-range"));
    }
    TestConfig cfg(ShapeSpec{r, sample.dim()});
    cfg.alpha = o.alpha;
    const auto rules = parse_rules(o.gamma_rule);
    if (rules.size() != 1) throw UsageError("test takes a single --gamma-rule");
    cfg.gamma_rule = rules.front();
    cfg.bootstrap = o.bootstrap;
    cfg.basis.degree = o.basis.empty() ? 3 : degree_from_name(o.basis);
    cfg.basis.knots = o.knots >= 0 ? o.knots : 5;
    cfg.grid_points = o.grid;
    cfg.seed = o.seed;
    cfg.threads = resolve_threads(o.threads);
    try {
        cfg.validate();
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }

    const TestReport report = run_test(sample, cfg);
    auto j = report.to_json();
    j["provenance"]["input"] = o.input;
    j["provenance"]["z_range"] = o.z_range.empty() ? nlohmann::json(nullptr) : nlohmann::json(o.z_range);
    emit(o.output, out, [&](std::ostream& s) { s << j.dump(2) << '\n'; });
    return report.reject ? kExitReject : kExitNoReject;
}

int cmd_simulate(const Options& o, std::ostream& out) {
    SuiteOptions so;
    if (!o.family.empty()) so.family = as_usage([&] { return parse_family(o.family); });
    if (!o.n_list.empty())
        for (const auto& p : split(o.n_list, ',')) so.n.push_back(static_cast<Eigen::Index>(parse_double(p, "--n")));
    if (o.shape != "mon" || so.family) so.shape = as_usage([&] { return parse_restriction(o.shape); });
    if (!suite_has_delta(o.suite) && (so.family || o.shape != "mon"))
        throw UsageError("--family and --shape apply to power-curves only");
    auto cells = suite(o.suite, so);
    if (!o.basis.empty() || o.knots >= 0) {
        std::vector<McCell> kept;
        for (auto& c : cells) {
            if (!o.basis.empty() && c.basis.degree != degree_from_name(o.basis)) continue;
            if (o.knots >= 0 && c.basis.knots != o.knots) continue;
            kept.push_back(c);
        }
        if (kept.empty()) throw UsageError("no suite cells match --basis/--knots");
        cells = std::move(kept);
    }

    McConfig mc;
    mc.alpha = o.alpha;
    mc.bootstrap = o.bootstrap;
    mc.reps = o.reps;
    mc.seed = o.seed;
    mc.threads = resolve_threads(o.threads);
    mc.gamma_rules = parse_rules(o.gamma_rule);
    mc.grid_points = o.grid;
    mc.timing = !o.no_timing;
    try {
        mc.validate();
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    const auto results = run_mc(cells, mc);
    emit(o.output, out, [&](std::ostream& s) { write_csv(s, results, suite_has_delta(o.suite)); });
    return kExitNoReject;
}

ShapeOperator parse_operator(const std::string& name, int d) {
    std::vector<OperatorKind> steps;
    for (const auto& part : split(name, '+')) {
        if (part == "rearrange") steps.push_back(OperatorKind::Rearrange);
        else if (part == "gcm") steps.push_back(OperatorKind::Gcm);
        else if (part == "lcm") steps.push_back(OperatorKind::Lcm);
        else throw UsageError("unknown operator '" + part + "' (expected rearrange, gcm, lcm or a '+' composition)");
    }
    if (steps.empty()) throw UsageError("empty operator name");
    return ShapeOperator::compose(std::move(steps), d);
}

int cmd_operators(const Options& o, std::ostream& out) {
    const FunctionOnGrid f = function_from_table(read_csv_file(o.input));
    const ShapeOperator op = parse_operator(o.op, f.dim());
    const FunctionOnGrid g = apply(op, f);
    const double phi = norm(diff(f, g), NormOrder::Sup);
    emit(o.output, out, [&](std::ostream& s) {
        char buf[40];
        auto put = [&](double x) {
            std::snprintf(buf, sizeof buf, "%.17g", x);
            s << buf;
        };
        if (f.dim() == 1) {
            s << "z";
        } else {
            for (int k = 0; k < f.dim(); ++k) s << (k ? "," : "") << 'z' << k + 1;
        }
        s << ",value,transformed\n";
        for (std::size_t i = 0; i < f.grid().size(); ++i) {
            const auto z = f.grid().point(i);
            for (int k = 0; k < f.dim(); ++k) put(z[k]), s << ',';
            put(f[static_cast<Eigen::Index>(i)]);
            s << ',';
            put(g[static_cast<Eigen::Index>(i)]);
            s << '\n';
        }
        s << "# operator=" << op.name() << " phi_sup=";
        put(phi);
        s << '\n';
    });
    return kExitNoReject;
}

int cmd_fixture(const Options& o, std::ostream& out) {
    const Sample s = hours_fixture(o.fixture_n, o.controls, o.seed, o.negate);
    emit(o.output, out, [&](std::ostream& os) { write_sample_csv(os, s); });
    return kExitNoReject;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Shape restriction tests for nonparametric regression"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* c) {
        c->add_option("--alpha", o.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
        c->add_option("--basis", o.basis, "B-spline degree: quadratic or cubic");
        c->add_option("--knots", o.knots, "Interior knots per axis")->check(CLI::NonNegativeNumber);
        c->add_option("--bootstrap", o.bootstrap, "Bootstrap draws B");
        c->add_option("--seed", o.seed, "RNG seed");
        c->add_option("--threads", o.threads, "Worker threads (default: SHAPETEST_THREADS or all cores)");
        c->add_option("--grid", o.grid, "Reporting grid points per axis");
        c->add_option("-o,--output", o.output, "Output path (default stdout)");
    };

    auto* test = app.add_subcommand("test", "Test a shape restriction on a CSV dataset (y, z1[, z2], w1..wq)");
    test->add_option("input", o.input, "CSV file")->required();
    test->add_option("--shape", o.shape, "mon, con, conc, mon-con or mon-conc");
    test->add_option("--gamma-rule", o.gamma_rule, "fixed:G, logn or invn");
    test->add_option("--z-range", o.z_range, "Keep rows with lo <= z1 <= hi (lo,hi)");
    add_common(test);

    auto* sim = app.add_subcommand("simulate", "Run a Monte Carlo suite and write CSV");
    sim->add_option("suite", o.suite, "Suite name")->required();
    sim->add_option("--reps", o.reps, "Replications per cell");
    sim->add_option("--gamma-rule", o.gamma_rule, "Comma list of fixed:G, logn, invn, or all");
    sim->add_option("--family", o.family, "power-curves family: uni1, uni2, bi1, uni2c, bi2");
    sim->add_option("--shape", o.shape, "power-curves restriction (default per family)");
    sim->add_option("--n", o.n_list, "Comma list of sample sizes");
    sim->add_flag("--no-timing", o.no_timing, "Write runtime_ms as 0 for byte-stable output");
    add_common(sim);

    auto* ops = app.add_subcommand("operators", "Apply a shape operator to a function on a grid (CSV z..., value)");
    ops->add_option("input", o.input, "CSV file")->required();
    ops->add_option("--op", o.op, "rearrange, gcm, lcm or a composition such as rearrange+gcm");
    ops->add_option("-o,--output", o.output, "Output path (default stdout)");

    auto* fix = app.add_subcommand("fixture", "Write a synthetic hours/growth dataset (y, z1, w1..wq)");
    fix->add_option("--n", o.fixture_n, "Rows");
    fix->add_option("--controls", o.controls, "Number of controls");
    fix->add_option("--seed", o.seed, "RNG seed");
    fix->add_flag("--negate", o.negate, "Negate y (decreasing regression function)");
    fix->add_option("-o,--output", o.output, "Output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitNoReject;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitNoReject;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (*test) return cmd_test(o, out);
        if (*sim) return cmd_simulate(o, out);
        if (*ops) return cmd_operators(o, out);
        if (*fix) return cmd_fixture(o, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitUsage;
}

}  // namespace shapetest::cli
