#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "shapetest/estimator.hpp"
#include "shapetest/testengine.hpp"

namespace shapetest {

/// Simulation families.
///   Uni1:  a z - b phi(c z) on [-1, 1]
///   Uni2:  -b phi(|z|^1.5)
///   Uni2c: +b phi(|z|^1.5)
///   Bi1:   a (z1^b / 2 + z2^b / 2)^(1/b) + c log(1 + z1 + z2) on [0, 1]^2
///   Bi2:   the same with c log(1 + 5 (z1 + z2))
enum class Family { Uni1, Uni2, Bi1, Uni2c, Bi2 };

std::string to_string(Family f);
Family parse_family(const std::string& s);
int family_dim(Family f);

struct Design {
    Family family = Family::Uni1;
    double a = 0, b = 0, c = 0;
    std::string label;  // "D1", "delta=3", ...

    int dim() const { return family_dim(family); }
    /// "D2 a=0.1 b=0.5 c=0.5"
    std::string params() const;

    /// Null designs D1..D3. Uni2 and Uni2c only have D1 (b = 0).
    static Design null_design(Family f, int index);
    /// Alternative delta (delta = 0 gives D1).
    static Design alternative(Family f, int delta);
};

/// Standard normal density.
double normal_pdf(double x);
/// Standard normal distribution function.
double normal_cdf(double x);

/// theta_0(z). Throws DomainError outside the family's domain.
double theta0(const Design& design, const Eigen::Ref<const Eigen::VectorXd>& z);

/// Z = -1 + 2 Phi(Z*) (univariate) or Z_j = Phi(Z_j*) (bivariate), u ~ N(0,1),
/// Y = theta_0(Z) + u.
Sample draw_sample(const Design& design, Eigen::Index n, std::uint64_t seed);

struct McCell {
    Design design;
    Eigen::Index n = 500;
    BasisConfig basis;
    ShapeSpec shape;
    std::optional<int> delta;
};

struct McConfig {
    double alpha = 0.05;
    int bootstrap = 200;
    int reps = 500;
    std::uint64_t seed = 1;
    int threads = 1;
    std::vector<GammaRule> gamma_rules{GammaRule::logn()};
    Eigen::Index grid_points = 0;
    bool timing = true;

    void validate() const;
};

struct McResult {
    std::string family;
    std::string params;
    Eigen::Index n = 0;
    std::string basis;
    std::string shape;
    std::string gamma_rule;
    double alpha = 0;
    int reps = 0;
    int rejections = 0;
    int failures = 0;
    double reject_rate = 0;
    double se = 0;
    double runtime_ms = 0;
    std::optional<int> delta;
    std::string fingerprint;
};

/// Fraction of failed replications beyond which a cell is aborted.
inline constexpr double kMaxReplicationFailureRate = 0.02;

/// One McResult per (cell, gamma rule), cells in input order. Replication r
/// uses sample seed derive_seed(seed, r, 0) and bootstrap seed
/// derive_seed(seed, r, 1) in every cell, and all gamma rules share them.
std::vector<McResult> run_mc(const std::vector<McCell>& cells, const McConfig& config);

/// CSV with columns family,params,n,basis,gamma_rule,alpha,reps,reject_rate,se,runtime_ms,
/// preceded by delta when `with_delta`.
void write_csv(std::ostream& out, const std::vector<McResult>& results, bool with_delta = false);

struct SuiteOptions {
    std::optional<Family> family;       // power-curves only
    std::vector<Eigen::Index> n;        // empty: 500, 750, 1000
    std::optional<Restriction> shape;   // power-curves only; default per family
};

std::vector<std::string> suite_names();
std::vector<McCell> suite(const std::string& name, const SuiteOptions& options = {});
bool suite_has_delta(const std::string& name);

/// Bases used for each dimension: C3, C5, C7 univariate; Q0, Q1, C0, C1 bivariate.
std::vector<BasisConfig> default_bases(int dim);

}  // namespace shapetest
