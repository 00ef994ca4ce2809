#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "shapetest/errors.hpp"
#include "shapetest/grid.hpp"

namespace shapetest {

enum class RowSense { LessEqual, Equal, GreaterEqual };
enum class LpStatus { Optimal, Infeasible, Unbounded };

inline std::string to_string(LpStatus s) {
    switch (s) {
        case LpStatus::Optimal: return "Optimal";
        case LpStatus::Infeasible: return "Infeasible";
        case LpStatus::Unbounded: return "Unbounded";
    }
    return "?";
}

/// minimize c'x  subject to  A x (sense) b,  lower <= x <= upper.
/// Bounds may be +-infinity.
template <typename Scalar>
struct LinearProgramT {
    using Vector = VectorX<Scalar>;
    using Matrix = MatrixX<Scalar>;

    Vector c;
    Matrix A;
    Vector b;
    std::vector<RowSense> senses;
    Vector lower;
    Vector upper;

    LinearProgramT() = default;

    /// `n` variables with bounds [0, +inf) and no rows.
    explicit LinearProgramT(Eigen::Index n)
        : c(Vector::Zero(n)),
          A(0, n),
          b(0),
          lower(Vector::Zero(n)),
          upper(Vector::Constant(n, std::numeric_limits<Scalar>::infinity())) {}

    Eigen::Index num_variables() const { return c.size(); }
    Eigen::Index num_rows() const { return A.rows(); }

    void set_free(Eigen::Index j) {
        lower[j] = -std::numeric_limits<Scalar>::infinity();
        upper[j] = std::numeric_limits<Scalar>::infinity();
    }

    /// Appends rows `block * x (sense) rhs`.
    void add_rows(const Matrix& block, const Vector& rhs, RowSense sense) {
        if (block.cols() != num_variables() || block.rows() != rhs.size())
            throw DimensionMismatch("constraint block has inconsistent shape");
        const Eigen::Index m0 = A.rows();
        Matrix grown(m0 + block.rows(), num_variables());
        grown.topRows(m0) = A;
        grown.bottomRows(block.rows()) = block;
        A.swap(grown);
        Vector bb(m0 + rhs.size());
        bb.head(m0) = b;
        bb.tail(rhs.size()) = rhs;
        b.swap(bb);
        senses.insert(senses.end(), static_cast<std::size_t>(block.rows()), sense);
    }

    void validate() const {
        const Eigen::Index n = num_variables();
        if (A.cols() != n || lower.size() != n || upper.size() != n)
            throw DimensionMismatch("linear program: variable dimensions disagree");
        if (A.rows() != b.size() || static_cast<std::size_t>(A.rows()) != senses.size())
            throw DimensionMismatch("linear program: row dimensions disagree");
        if (!c.allFinite() || !A.allFinite() || !b.allFinite())
            throw InvalidArgument("linear program: objective and constraints must be finite");
        for (Eigen::Index j = 0; j < n; ++j) {
            if (std::isnan(static_cast<double>(lower[j])) || std::isnan(static_cast<double>(upper[j])) ||
                lower[j] > upper[j])
                throw InvalidArgument("linear program: bad bounds on variable " + std::to_string(j));
        }
    }
};

template <typename Scalar>
struct LpSolutionT {
    LpStatus status = LpStatus::Infeasible;
    VectorX<Scalar> x;
    Scalar objective_value = Scalar(0);
    int iterations = 0;
};

using LinearProgram = LinearProgramT<double>;
using LpSolution = LpSolutionT<double>;

struct SimplexOptions {
    double feasibility_tol = 1e-8;   // relative to 1 + max|b|
    double optimality_tol = 1e-9;    // reduced cost
    double pivot_tol = 1e-11;
    int max_iterations = 0;          // 0: 50 * (rows + cols) of the standard form
    int degenerate_streak_for_bland = 50;
};

namespace detail {

/// Dense tableau two-phase simplex. Pricing is Dantzig's rule until a run of
/// degenerate pivots, after which Bland's rule is used for the rest of the solve
/// so that cycling cannot occur.
template <typename Scalar>
class DenseSimplex {
public:
    using Vector = VectorX<Scalar>;
    using Tableau = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    DenseSimplex(const LinearProgramT<Scalar>& lp, const SimplexOptions& opt) : lp_(lp), opt_(opt) {}

    LpSolutionT<Scalar> run() {
        lp_.validate();
        standardize();
        LpSolutionT<Scalar> sol;

        if (!phase_one()) {
            sol.status = LpStatus::Infeasible;
            sol.iterations = iterations_;
            return sol;
        }
        if (!phase_two()) {
            sol.status = LpStatus::Unbounded;
            sol.iterations = iterations_;
            return sol;
        }
        sol.status = LpStatus::Optimal;
        sol.x = recover();
        sol.objective_value = lp_.c.dot(sol.x);
        sol.iterations = iterations_;
        certify(sol.x);
        return sol;
    }

private:
    enum class MapKind { Shift, Mirror, Split };
    struct VarMap {
        MapKind kind;
        Eigen::Index col;
        Scalar offset;
    };

    void standardize() {
        const Eigen::Index n = lp_.num_variables();
        const Scalar inf = std::numeric_limits<Scalar>::infinity();

        std::vector<std::pair<Eigen::Index, Scalar>> upper_rows;  // (structural col, bound)
        Eigen::Index ny = 0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const Scalar lo = lp_.lower[j], hi = lp_.upper[j];
            if (lo > -inf) {
                maps_.push_back({MapKind::Shift, ny, lo});
                if (hi < inf) upper_rows.emplace_back(ny, hi - lo);
                ny += 1;
            } else if (hi < inf) {
                maps_.push_back({MapKind::Mirror, ny, hi});
                ny += 1;
            } else {
                maps_.push_back({MapKind::Split, ny, Scalar(0)});
                ny += 2;
            }
        }
        ny_ = ny;

        const Eigen::Index m_orig = lp_.num_rows();
        const Eigen::Index m = m_orig + static_cast<Eigen::Index>(upper_rows.size());
        MatrixX<Scalar> A = MatrixX<Scalar>::Zero(m, ny);
        Vector rhs(m);
        std::vector<RowSense> sense(static_cast<std::size_t>(m));

        for (Eigen::Index i = 0; i < m_orig; ++i) {
            Scalar r = lp_.b[i];
            for (Eigen::Index j = 0; j < n; ++j) {
                const Scalar a = lp_.A(i, j);
                if (a == Scalar(0)) continue;
                const auto& mp = maps_[static_cast<std::size_t>(j)];
                switch (mp.kind) {
                    case MapKind::Shift:
                        A(i, mp.col) += a;
                        r -= a * mp.offset;
                        break;
                    case MapKind::Mirror:
                        A(i, mp.col) -= a;
                        r -= a * mp.offset;
                        break;
                    case MapKind::Split:
                        A(i, mp.col) += a;
                        A(i, mp.col + 1) -= a;
                        break;
                }
            }
            rhs[i] = r;
            sense[static_cast<std::size_t>(i)] = lp_.senses[static_cast<std::size_t>(i)];
        }
        for (std::size_t k = 0; k < upper_rows.size(); ++k) {
            const Eigen::Index i = m_orig + static_cast<Eigen::Index>(k);
            A(i, upper_rows[k].first) = Scalar(1);
            rhs[i] = upper_rows[k].second;
            sense[static_cast<std::size_t>(i)] = RowSense::LessEqual;
        }
        for (Eigen::Index i = 0; i < m; ++i) {
            // rows with b = 0 are flipped too when that spares an artificial
            if (rhs[i] < Scalar(0) || (rhs[i] == Scalar(0) && sense[static_cast<std::size_t>(i)] == RowSense::GreaterEqual)) {
                A.row(i) *= Scalar(-1);
                rhs[i] = -rhs[i];
                auto& s = sense[static_cast<std::size_t>(i)];
                if (s == RowSense::LessEqual) s = RowSense::GreaterEqual;
                else if (s == RowSense::GreaterEqual) s = RowSense::LessEqual;
            }
        }

        Eigen::Index n_slack = 0, n_art = 0;
        for (auto s : sense) {
            if (s != RowSense::Equal) ++n_slack;
            if (s != RowSense::LessEqual) ++n_art;
        }
        art_begin_ = ny_ + n_slack;
        ncols_ = art_begin_ + n_art;
        m_ = m;
        scale_ = Scalar(1) + (rhs.size() ? rhs.cwiseAbs().maxCoeff() : Scalar(0));

        T_ = Tableau::Zero(m, ncols_ + 1);
        T_.leftCols(ny_) = A;
        T_.col(ncols_) = rhs;
        basis_.assign(static_cast<std::size_t>(m), -1);
        Eigen::Index slack = ny_, art = art_begin_;
        for (Eigen::Index i = 0; i < m; ++i) {
            switch (sense[static_cast<std::size_t>(i)]) {
                case RowSense::LessEqual:
                    T_(i, slack) = Scalar(1);
                    basis_[static_cast<std::size_t>(i)] = slack++;
                    break;
                case RowSense::GreaterEqual:
                    T_(i, slack++) = Scalar(-1);
                    T_(i, art) = Scalar(1);
                    basis_[static_cast<std::size_t>(i)] = art++;
                    break;
                case RowSense::Equal:
                    T_(i, art) = Scalar(1);
                    basis_[static_cast<std::size_t>(i)] = art++;
                    break;
            }
        }
        max_iter_ = opt_.max_iterations > 0 ? opt_.max_iterations
                                            : static_cast<int>(50 * (m + ncols_));
    }

    // Reduced costs for cost vector `cost` over all columns, and -objective in the last slot.
    Vector reduced_costs(const Vector& cost) const {
        Vector r = Vector::Zero(ncols_ + 1);
        r.head(ncols_) = cost;
        for (Eigen::Index i = 0; i < m_; ++i) {
            const Scalar cb = cost[basis_[static_cast<std::size_t>(i)]];
            if (cb != Scalar(0)) r -= cb * T_.row(i).transpose();
        }
        return r;
    }

    // Returns false if unbounded.
    bool optimize(Vector& r, Eigen::Index col_limit) {
        int degenerate_streak = 0;
        bool bland = false;
        for (;;) {
            Eigen::Index enter = -1;
            Scalar best = -Scalar(opt_.optimality_tol);
            for (Eigen::Index j = 0; j < col_limit; ++j) {
                if (r[j] < best) {
                    enter = j;
                    if (bland) break;
                    best = r[j];
                }
            }
            if (enter < 0) return true;

            Eigen::Index leave = -1;
            Scalar best_ratio = std::numeric_limits<Scalar>::infinity();
            for (Eigen::Index i = 0; i < m_; ++i) {
                const Scalar a = T_(i, enter);
                if (a <= Scalar(opt_.pivot_tol)) continue;
                const Scalar ratio = T_(i, ncols_) / a;
                if (leave < 0) {
                    best_ratio = ratio;
                    leave = i;
                    continue;
                }
                const Scalar slack = Scalar(1e-12) * (Scalar(1) + std::abs(best_ratio));
                if (ratio < best_ratio - slack) {
                    best_ratio = ratio;
                    leave = i;
                } else if (std::abs(ratio - best_ratio) <= slack &&
                           basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)]) {
                    leave = i;  // ties go to the lowest basic index
                }
            }
            if (leave < 0) return false;

            if (++iterations_ > max_iter_)
                throw NumericalFailure("simplex exceeded " + std::to_string(max_iter_) + " iterations");
            if (best_ratio <= Scalar(1e-14)) {
                if (++degenerate_streak >= opt_.degenerate_streak_for_bland) bland = true;
            } else {
                degenerate_streak = 0;
            }
            pivot(leave, enter, r);
        }
    }

    void pivot(Eigen::Index row, Eigen::Index col, Vector& r) {
        const Scalar p = T_(row, col);
        T_.row(row) /= p;
        T_(row, col) = Scalar(1);
        for (Eigen::Index i = 0; i < m_; ++i) {
            if (i == row) continue;
            const Scalar f = T_(i, col);
            if (f == Scalar(0)) continue;
            T_.row(i) -= f * T_.row(row);
            T_(i, col) = Scalar(0);
        }
        const Scalar f = r[col];
        if (f != Scalar(0)) {
            r -= f * T_.row(row).transpose();
            r[col] = Scalar(0);
        }
        basis_[static_cast<std::size_t>(row)] = col;
        // roundoff must not push a basic variable below zero
        for (Eigen::Index i = 0; i < m_; ++i)
            if (T_(i, ncols_) < Scalar(0) && T_(i, ncols_) > -Scalar(opt_.feasibility_tol)) T_(i, ncols_) = Scalar(0);
    }

    bool phase_one() {
        if (art_begin_ == ncols_) return true;
        Vector cost = Vector::Zero(ncols_);
        cost.tail(ncols_ - art_begin_).setOnes();
        Vector r = reduced_costs(cost);
        optimize(r, ncols_);
        const Scalar infeasibility = -r[ncols_];
        if (infeasibility > Scalar(opt_.feasibility_tol) * scale_) return false;

        // Drive zero-level artificials out of the basis; drop rows that are redundant.
        for (Eigen::Index i = 0; i < m_; ++i) {
            if (basis_[static_cast<std::size_t>(i)] < art_begin_) continue;
            Eigen::Index col = -1;
            for (Eigen::Index j = 0; j < art_begin_; ++j) {
                if (std::abs(T_(i, j)) > Scalar(opt_.pivot_tol) * 1e3) {
                    col = j;
                    break;
                }
            }
            if (col >= 0) {
                pivot(i, col, r);
            } else {
                remove_row(i);
                --i;
            }
        }
        return true;
    }

    void remove_row(Eigen::Index i) {
        const Eigen::Index tail = m_ - i - 1;
        if (tail > 0) T_.block(i, 0, tail, T_.cols()) = T_.block(i + 1, 0, tail, T_.cols()).eval();
        T_.conservativeResize(m_ - 1, Eigen::NoChange);
        basis_.erase(basis_.begin() + i);
        --m_;
    }

    bool phase_two() {
        Vector cost = Vector::Zero(ncols_);
        for (std::size_t j = 0; j < maps_.size(); ++j) {
            const auto& mp = maps_[j];
            const Scalar cj = lp_.c[static_cast<Eigen::Index>(j)];
            switch (mp.kind) {
                case MapKind::Shift: cost[mp.col] = cj; break;
                case MapKind::Mirror: cost[mp.col] = -cj; break;
                case MapKind::Split:
                    cost[mp.col] = cj;
                    cost[mp.col + 1] = -cj;
                    break;
            }
        }
        Vector r = reduced_costs(cost);
        return optimize(r, art_begin_);
    }

    Vector recover() const {
        Vector y = Vector::Zero(ny_);
        for (Eigen::Index i = 0; i < m_; ++i) {
            const Eigen::Index b = basis_[static_cast<std::size_t>(i)];
            if (b < ny_) y[b] = T_(i, ncols_);
        }
        Vector x(lp_.num_variables());
        for (std::size_t j = 0; j < maps_.size(); ++j) {
            const auto& mp = maps_[j];
            switch (mp.kind) {
                case MapKind::Shift: x[static_cast<Eigen::Index>(j)] = mp.offset + y[mp.col]; break;
                case MapKind::Mirror: x[static_cast<Eigen::Index>(j)] = mp.offset - y[mp.col]; break;
                case MapKind::Split: x[static_cast<Eigen::Index>(j)] = y[mp.col] - y[mp.col + 1]; break;
            }
        }
        return x;
    }

    void certify(const Vector& x) const {
        const Scalar tol = Scalar(opt_.feasibility_tol) *
                           (Scalar(1) + (lp_.b.size() ? lp_.b.cwiseAbs().maxCoeff() : Scalar(0)));
        const Vector ax = lp_.A * x;
        for (Eigen::Index i = 0; i < ax.size(); ++i) {
            const Scalar res = ax[i] - lp_.b[i];
            bool ok = true;
            switch (lp_.senses[static_cast<std::size_t>(i)]) {
                case RowSense::LessEqual: ok = res <= tol; break;
                case RowSense::GreaterEqual: ok = res >= -tol; break;
                case RowSense::Equal: ok = std::abs(res) <= tol; break;
            }
            if (!ok) throw NumericalFailure("simplex solution violates row " + std::to_string(i));
        }
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            if (x[j] < lp_.lower[j] - tol || x[j] > lp_.upper[j] + tol)
                throw NumericalFailure("simplex solution violates bound on variable " + std::to_string(j));
        }
    }

    const LinearProgramT<Scalar>& lp_;
    SimplexOptions opt_;
    std::vector<VarMap> maps_;
    Tableau T_;
    std::vector<Eigen::Index> basis_;
    Eigen::Index ny_ = 0, art_begin_ = 0, ncols_ = 0, m_ = 0;
    Scalar scale_ = Scalar(1);
    int iterations_ = 0;
    int max_iter_ = 0;
};

}  // namespace detail

/// Solves a linear program with a dense two-phase simplex. Infeasible and
/// unbounded programs are reported through the status; NumericalFailure is
/// thrown when the iteration cap is hit or the optimum fails its residual check.
template <typename Scalar>
LpSolutionT<Scalar> solve(const LinearProgramT<Scalar>& lp, const SimplexOptions& options = {}) {
    return detail::DenseSimplex<Scalar>(lp, options).run();
}

}  // namespace shapetest
