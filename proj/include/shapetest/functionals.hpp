#pragma once

#include <string>
#include <variant>
#include <vector>

#include "shapetest/errors.hpp"
#include "shapetest/grid.hpp"
#include "shapetest/lp.hpp"
#include "shapetest/operators.hpp"

namespace shapetest {

enum class Restriction { Monotone, Convex, Concave, MonotoneConvex, MonotoneConcave };

inline std::string to_string(Restriction r) {
    switch (r) {
        case Restriction::Monotone: return "mon";
        case Restriction::Convex: return "con";
        case Restriction::Concave: return "conc";
        case Restriction::MonotoneConvex: return "mon-con";
        case Restriction::MonotoneConcave: return "mon-conc";
    }
    return "?";
}

inline Restriction parse_restriction(const std::string& s) {
    if (s == "mon") return Restriction::Monotone;
    if (s == "con") return Restriction::Convex;
    if (s == "conc") return Restriction::Concave;
    if (s == "mon-con") return Restriction::MonotoneConvex;
    if (s == "mon-conc") return Restriction::MonotoneConcave;
    throw InvalidArgument("unknown shape '" + s + "' (expected mon, con, conc, mon-con, mon-conc)");
}

/// The null cone: a shape restriction on functions of `dim` arguments.
struct ShapeSpec {
    Restriction restriction = Restriction::Monotone;
    int dim = 1;

    bool has_monotone() const {
        return restriction == Restriction::Monotone || restriction == Restriction::MonotoneConvex ||
               restriction == Restriction::MonotoneConcave;
    }
    bool has_convex() const {
        return restriction == Restriction::Convex || restriction == Restriction::MonotoneConvex;
    }
    bool has_concave() const {
        return restriction == Restriction::Concave || restriction == Restriction::MonotoneConcave;
    }

    friend bool operator==(const ShapeSpec& a, const ShapeSpec& b) {
        return a.restriction == b.restriction && a.dim == b.dim;
    }
};

/// phi(theta) = || theta - op(theta) ||_p
struct OperatorResidual {
    ShapeOperator op;
    NormOrder p = NormOrder::Sup;
};

/// phi(theta) = inf over the cone of || theta - lambda ||_sup
struct ConeDistance {
    ShapeSpec shape;
    NormOrder p = NormOrder::Sup;
};

class WaldFunctional {
public:
    using Form = std::variant<OperatorResidual, ConeDistance>;

    explicit WaldFunctional(Form form) : form_(std::move(form)) {
        if (const auto* cd = std::get_if<ConeDistance>(&form_); cd && cd->p != NormOrder::Sup)
            throw Unsupported("cone distance is implemented for the sup norm only");
    }

    static WaldFunctional operator_residual(ShapeOperator op, NormOrder p = NormOrder::Sup) {
        return WaldFunctional(OperatorResidual{std::move(op), p});
    }
    static WaldFunctional cone_distance(ShapeSpec shape) { return WaldFunctional(ConeDistance{shape, NormOrder::Sup}); }

    const Form& form() const noexcept { return form_; }
    bool is_cone_distance() const { return std::holds_alternative<ConeDistance>(form_); }

    int dim() const {
        if (const auto* cd = std::get_if<ConeDistance>(&form_)) return cd->shape.dim;
        return std::get<OperatorResidual>(form_).op.domain_dim();
    }

    std::string name() const {
        if (const auto* cd = std::get_if<ConeDistance>(&form_))
            return "cone-distance(" + to_string(cd->shape.restriction) + ",sup)";
        const auto& r = std::get<OperatorResidual>(form_);
        return "residual(" + r.op.name() + "," + to_string(r.p) + ")";
    }

private:
    Form form_;
};

/// Whether phi is positively homogeneous, convex and Lipschitz. The
/// rearrangement residual is not convex and is allowed only as a diagnostic.
inline bool conforms_to_assumption1(const WaldFunctional& phi) {
    if (phi.is_cone_distance()) return true;
    const auto& r = std::get<OperatorResidual>(phi.form());
    return !r.op.contains(OperatorKind::Rearrange);
}

/// Rows of A with A h >= 0 describing the cone on a grid: first differences
/// along each axis for monotonicity and second divided differences for
/// univariate convexity (negated for concavity).
template <typename Scalar>
MatrixX<Scalar> shape_constraints(const ShapeSpec& shape, const GridT<Scalar>& grid) {
    if (shape.dim != grid.dim()) throw DimensionMismatch("shape and grid dimensions differ");
    if ((shape.has_convex() || shape.has_concave()) && grid.dim() > 1)
        throw Unsupported("linear curvature constraints on grid values exist only for d = 1");
    const auto n = static_cast<Eigen::Index>(grid.size());
    std::vector<VectorX<Scalar>> rows;
    if (shape.has_monotone()) {
        for (int k = 0; k < grid.dim(); ++k) {
            const std::size_t s = grid.stride(k);
            for (std::size_t i = 0; i < grid.size(); ++i) {
                if (grid.index_along(i, k) + 1 >= grid.axis_size(k)) continue;
                VectorX<Scalar> r = VectorX<Scalar>::Zero(n);
                r[static_cast<Eigen::Index>(i + s)] = Scalar(1);
                r[static_cast<Eigen::Index>(i)] = Scalar(-1);
                rows.push_back(std::move(r));
            }
        }
    }
    if (shape.has_convex() || shape.has_concave()) {
        const Scalar sign = shape.has_convex() ? Scalar(1) : Scalar(-1);
        const auto& z = grid.axis(0);
        for (Eigen::Index i = 1; i + 1 < n; ++i) {
            VectorX<Scalar> r = VectorX<Scalar>::Zero(n);
            const Scalar hl = z[i] - z[i - 1], hr = z[i + 1] - z[i];
            r[i + 1] = sign / hr;
            r[i] = -sign * (Scalar(1) / hr + Scalar(1) / hl);
            r[i - 1] = sign / hl;
            rows.push_back(std::move(r));
        }
    }
    MatrixX<Scalar> A(static_cast<Eigen::Index>(rows.size()), n);
    for (std::size_t i = 0; i < rows.size(); ++i) A.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    return A;
}

/// Sup-norm distance from f to the cone, computed as the linear program
///   min t  s.t.  -t <= f_j - h_j <= t,  h in the cone.
/// For curvature in d >= 2 the cone is written with one supporting slope per
/// grid point, h_j >= h_l + g_l'(z_j - z_l), so the program has O(N^2) rows.
template <typename Scalar>
Scalar cone_distance_lp(const ShapeSpec& shape, const FunctionOnGridT<Scalar>& f, const SimplexOptions& options = {}) {
    const auto& grid = f.grid();
    if (shape.dim != grid.dim()) throw DimensionMismatch("shape and grid dimensions differ");
    const auto n = static_cast<Eigen::Index>(grid.size());
    const int d = grid.dim();
    const bool hyperplanes = (shape.has_convex() || shape.has_concave()) && d > 1;
    const Eigen::Index nslopes = hyperplanes ? n * d : 0;
    const Eigen::Index nvar = n + 1 + nslopes;
    const Eigen::Index t = n;

    LinearProgramT<Scalar> lp(nvar);
    for (Eigen::Index j = 0; j < n; ++j) lp.set_free(j);
    for (Eigen::Index j = n + 1; j < nvar; ++j) lp.set_free(j);
    lp.c[t] = Scalar(1);

    MatrixX<Scalar> band = MatrixX<Scalar>::Zero(n, nvar);
    band.leftCols(n).setIdentity();
    band.col(t).setOnes();
    lp.add_rows(band, f.values(), RowSense::GreaterEqual);  // h_j + t >= f_j
    band.col(t).setConstant(Scalar(-1));
    lp.add_rows(band, f.values(), RowSense::LessEqual);     // h_j - t <= f_j

    ShapeSpec linear_part = shape;
    if (hyperplanes) linear_part.restriction = Restriction::Monotone;
    if (!hyperplanes || shape.has_monotone()) {
        const MatrixX<Scalar> A = shape_constraints(linear_part, grid);
        if (A.rows() > 0) {
            MatrixX<Scalar> rows = MatrixX<Scalar>::Zero(A.rows(), nvar);
            rows.leftCols(n) = A;
            lp.add_rows(rows, VectorX<Scalar>::Zero(A.rows()), RowSense::GreaterEqual);
        }
    }
    if (hyperplanes) {
        const Scalar sign = shape.has_convex() ? Scalar(1) : Scalar(-1);
        const MatrixX<Scalar> pts = grid.points();
        MatrixX<Scalar> rows = MatrixX<Scalar>::Zero(n * (n - 1), nvar);
        Eigen::Index r = 0;
        for (Eigen::Index l = 0; l < n; ++l) {
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == l) continue;
                rows(r, j) += sign;
                rows(r, l) -= sign;
                for (int k = 0; k < d; ++k) rows(r, n + 1 + l * d + k) = -sign * (pts(j, k) - pts(l, k));
                ++r;
            }
        }
        lp.add_rows(rows, VectorX<Scalar>::Zero(rows.rows()), RowSense::GreaterEqual);
    }
    const auto sol = solve(lp, options);
    if (sol.status != LpStatus::Optimal) throw NumericalFailure("cone distance program not solved: " + to_string(sol.status));
    return std::max(Scalar(0), sol.objective_value);
}

namespace detail {

/// Running max over the lower set {z' <= z} of every grid point.
template <typename Scalar>
VectorX<Scalar> lower_set_max(const GridT<Scalar>& grid, VectorX<Scalar> v) {
    for (int k = 0; k < grid.dim(); ++k) {
        const std::size_t s = grid.stride(k);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (grid.index_along(i, k) == 0) continue;
            const auto a = static_cast<Eigen::Index>(i - s), b = static_cast<Eigen::Index>(i);
            v[b] = std::max(v[b], v[a]);
        }
    }
    return v;
}

/// Running min over the upper set {z' >= z}.
template <typename Scalar>
VectorX<Scalar> upper_set_min(const GridT<Scalar>& grid, VectorX<Scalar> v) {
    for (int k = 0; k < grid.dim(); ++k) {
        const std::size_t s = grid.stride(k);
        for (std::size_t ii = grid.size(); ii-- > 0;) {
            if (grid.index_along(ii, k) + 1 >= grid.axis_size(k)) continue;
            const auto a = static_cast<Eigen::Index>(ii + s), b = static_cast<Eigen::Index>(ii);
            v[b] = std::min(v[b], v[a]);
        }
    }
    return v;
}

/// Greatest minorant that is both nondecreasing and convex (or least
/// majorant that is nondecreasing and concave when `concave`). On a line one
/// pass suffices; in higher dimension the two envelopes are alternated to a
/// fixed point.
template <typename Scalar>
VectorX<Scalar> monotone_curved_envelope(const FunctionOnGridT<Scalar>& f, bool concave) {
    const auto& grid = f.grid();
    VectorX<Scalar> g = f.values();
    const Scalar tol = Scalar(1e-12) * (Scalar(1) + g.cwiseAbs().maxCoeff());
    for (int iter = 0; iter < 200; ++iter) {
        VectorX<Scalar> next = concave ? lcm(f.with_values(lower_set_max(grid, g))).values()
                                       : gcm(f.with_values(upper_set_min(grid, g))).values();
        const Scalar change = (next - g).cwiseAbs().maxCoeff();
        g.swap(next);
        if (grid.dim() == 1 || (iter > 0 && change <= tol)) return g;
    }
    throw NumericalFailure("monotone curvature envelope did not settle");
}

}  // namespace detail

/// Sup-norm distance to the cone in closed form. For any of the supported cones
/// C, the feasibility of |f - h| <= t with h in C reduces to comparing f with
/// its extremal C-envelope, giving
///   monotone:            max_j (max_{i <= j} f_i - f_j) / 2
///   convex / concave:    ||f - GCM f|| / 2,  ||LCM f - f|| / 2
///   joint restrictions:  the same with the monotone-and-curved envelope.
template <typename Scalar>
Scalar cone_distance_envelope(const ShapeSpec& shape, const FunctionOnGridT<Scalar>& f) {
    if (shape.dim != f.dim()) throw DimensionMismatch("shape and grid dimensions differ");
    const auto& v = f.values();
    VectorX<Scalar> gap;
    switch (shape.restriction) {
        case Restriction::Monotone:
            gap = detail::lower_set_max(f.grid(), v) - v;
            break;
        case Restriction::Convex:
            gap = v - gcm(f).values();
            break;
        case Restriction::Concave:
            gap = lcm(f).values() - v;
            break;
        case Restriction::MonotoneConvex:
            gap = v - detail::monotone_curved_envelope(f, false);
            break;
        case Restriction::MonotoneConcave:
            gap = detail::monotone_curved_envelope(f, true) - v;
            break;
    }
    return std::max(Scalar(0), gap.maxCoeff()) / Scalar(2);
}

/// phi(f). Cone distances use the closed-form envelope; cone_distance_lp is
/// the equivalent linear-programming route.
template <typename Scalar>
Scalar evaluate(const WaldFunctional& phi, const FunctionOnGridT<Scalar>& f) {
    if (phi.dim() != f.dim()) throw DimensionMismatch("functional '" + phi.name() + "' does not match grid dimension");
    if (const auto* cd = std::get_if<ConeDistance>(&phi.form())) return cone_distance_envelope(cd->shape, f);
    const auto& r = std::get<OperatorResidual>(phi.form());
    return norm(diff(f, apply(r.op, f)), r.p);
}

/// Whether f lies in the cone up to `tol`.
template <typename Scalar>
bool satisfies(const ShapeSpec& shape, const FunctionOnGridT<Scalar>& f, Scalar tol = Scalar(1e-10)) {
    if (shape.dim != f.dim()) throw DimensionMismatch("shape and grid dimensions differ");
    if (f.dim() == 1 || !(shape.has_convex() || shape.has_concave())) {
        const MatrixX<Scalar> A = shape_constraints(shape, f.grid());
        return A.rows() == 0 || (A * f.values()).minCoeff() >= -tol;
    }
    return cone_distance_envelope(shape, f) <= tol;
}

/// The enforcing operator paired with each restriction: rearrangement for
/// monotonicity, GCM/LCM for curvature, rearrangement then GCM/LCM for the
/// joint restrictions.
inline ShapeOperator enforcing_operator(const ShapeSpec& shape) {
    switch (shape.restriction) {
        case Restriction::Monotone: return ShapeOperator::rearrange(shape.dim);
        case Restriction::Convex: return ShapeOperator::gcm(shape.dim);
        case Restriction::Concave: return ShapeOperator::lcm(shape.dim);
        case Restriction::MonotoneConvex:
            return ShapeOperator::compose({OperatorKind::Rearrange, OperatorKind::Gcm}, shape.dim);
        case Restriction::MonotoneConcave:
            return ShapeOperator::compose({OperatorKind::Rearrange, OperatorKind::Lcm}, shape.dim);
    }
    return ShapeOperator::rearrange(shape.dim);
}

/// The Wald functional used for each restriction: sup-distance for
/// monotonicity and the joint restrictions, the GCM/LCM sup-residual for
/// convexity/concavity.
inline WaldFunctional default_functional(const ShapeSpec& shape) {
    switch (shape.restriction) {
        case Restriction::Convex: return WaldFunctional::operator_residual(ShapeOperator::gcm(shape.dim));
        case Restriction::Concave: return WaldFunctional::operator_residual(ShapeOperator::lcm(shape.dim));
        default: return WaldFunctional::cone_distance(shape);
    }
}

}  // namespace shapetest
