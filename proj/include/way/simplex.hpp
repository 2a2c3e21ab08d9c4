#pragma once

// Two-phase revised simplex for small standard-form linear programs:
//
//     minimize c.x  subject to  A x = b,  x >= 0.
//
// The basis is refactorized from the original data at every iteration, so
// rounding errors do not accumulate across pivots. Entering columns follow
// Dantzig's rule and the leaving row is chosen by the lexicographic ratio test
// on [x_B, B^-1], which rules out cycling on degenerate programs. Intended for
// problems with at most a few hundred rows and columns.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace way::lp {

enum class Status { optimal, infeasible, unbounded, iteration_limit };

struct Solution {
    Status status = Status::infeasible;
    Eigen::VectorXd x;
    double objective = std::numeric_limits<double>::quiet_NaN();
};

struct Options {
    double cost_tol = 1e-11;   // reduced costs above -cost_tol count as nonnegative
    double pivot_tol = 1e-9;   // pivot entries relative to the column's largest entry
    int max_iterations = 20000;
};

namespace detail {

class Revised {
public:
    Revised(Eigen::MatrixXd A, Eigen::VectorXd b, std::vector<Eigen::Index> basis, Options opt)
        : A_(std::move(A)), b_(std::move(b)), basis_(std::move(basis)), opt_(opt) {}

    /// Minimizes cost.x over the columns allowed to enter.
    Status run(const Eigen::VectorXd &cost, const std::vector<bool> &may_enter) {
        const Eigen::Index m = A_.rows();
        for (int iter = 0; iter < opt_.max_iterations; ++iter) {
            refactor();
            Eigen::VectorXd cb(m);
            for (Eigen::Index i = 0; i < m; ++i) cb(i) = cost(basis_[static_cast<std::size_t>(i)]);
            const Eigen::RowVectorXd y = cb.transpose() * binv_;
            const Eigen::RowVectorXd reduced = cost.transpose() - y * A_;

            std::vector<bool> in_basis(static_cast<std::size_t>(A_.cols()), false);
            for (auto j : basis_) in_basis[static_cast<std::size_t>(j)] = true;

            // Candidates by increasing reduced cost; a column whose direction has
            // only negligible positive entries is skipped rather than pivoted on.
            std::vector<Eigen::Index> cand;
            for (Eigen::Index j = 0; j < A_.cols(); ++j)
                if (may_enter[static_cast<std::size_t>(j)] && !in_basis[static_cast<std::size_t>(j)] &&
                    reduced(j) < -opt_.cost_tol)
                    cand.push_back(j);
            if (cand.empty()) return Status::optimal;
            std::stable_sort(cand.begin(), cand.end(), [&](auto a, auto b) { return reduced(a) < reduced(b); });

            bool pivoted = false;
            for (Eigen::Index enter : cand) {
                const Eigen::VectorXd d = binv_ * A_.col(enter);
                const double dmax = d.cwiseAbs().maxCoeff();
                if (d.maxCoeff() <= 1e-14 * std::max(1.0, dmax)) return Status::unbounded;
                Eigen::Index leave = -1;
                for (Eigen::Index i = 0; i < m; ++i) {
                    if (d(i) <= opt_.pivot_tol * std::max(1.0, dmax)) continue;
                    if (leave < 0 || lex_less(i, leave, d)) leave = i;
                }
                if (leave < 0) continue;
                basis_[static_cast<std::size_t>(leave)] = enter;
                pivoted = true;
                break;
            }
            if (!pivoted) return Status::optimal;
        }
        return Status::iteration_limit;
    }

    void refactor() {
        const Eigen::Index m = A_.rows();
        Eigen::MatrixXd B(m, m);
        for (Eigen::Index i = 0; i < m; ++i) B.col(i) = A_.col(basis_[static_cast<std::size_t>(i)]);
        binv_ = Eigen::PartialPivLU<Eigen::MatrixXd>(B).inverse();
        xb_ = binv_ * b_;
    }

    /// Replaces basic columns at or above `first_banned` by allowed columns
    /// where a usable pivot exists; returns rows left with no such column.
    std::vector<Eigen::Index> drive_out(Eigen::Index first_banned) {
        std::vector<Eigen::Index> stuck;
        for (Eigen::Index i = 0; i < A_.rows(); ++i) {
            if (basis_[static_cast<std::size_t>(i)] < first_banned) continue;
            refactor();
            const Eigen::RowVectorXd row = binv_.row(i) * A_.leftCols(first_banned);
            Eigen::Index best = -1;
            for (Eigen::Index j = 0; j < first_banned; ++j) {
                if (std::find(basis_.begin(), basis_.end(), j) != basis_.end()) continue;
                if (best < 0 || std::abs(row(j)) > std::abs(row(best))) best = j;
            }
            if (best >= 0 && std::abs(row(best)) > opt_.pivot_tol) basis_[static_cast<std::size_t>(i)] = best;
            else stuck.push_back(i);
        }
        return stuck;
    }

    const std::vector<Eigen::Index> &basis() const { return basis_; }
    const Eigen::VectorXd &xb() const { return xb_; }

private:
    bool lex_less(Eigen::Index a, Eigen::Index b, const Eigen::VectorXd &d) const {
        auto differs = [](double x, double y) { return std::abs(x - y) > 1e-12 * std::max({1.0, std::abs(x), std::abs(y)}); };
        double xa = xb_(a) / d(a), xbv = xb_(b) / d(b);
        if (differs(xa, xbv)) return xa < xbv;
        for (Eigen::Index k = 0; k < binv_.cols(); ++k) {
            xa = binv_(a, k) / d(a);
            xbv = binv_(b, k) / d(b);
            if (differs(xa, xbv)) return xa < xbv;
        }
        return basis_[static_cast<std::size_t>(a)] < basis_[static_cast<std::size_t>(b)];
    }

    Eigen::MatrixXd A_;
    Eigen::VectorXd b_;
    std::vector<Eigen::Index> basis_;
    Options opt_;
    Eigen::MatrixXd binv_;
    Eigen::VectorXd xb_;
};

}  // namespace detail

inline Solution minimize(const Eigen::VectorXd &c, Eigen::MatrixXd A, Eigen::VectorXd b, Options opt = {}) {
    const Eigen::Index n = A.cols();
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        if (b(i) < 0) {
            A.row(i) *= -1.0;
            b(i) *= -1.0;
        }
    }

    Solution sol;
    for (int attempt = 0; attempt < 2; ++attempt) {
        const Eigen::Index m = A.rows();
        // Phase one: one artificial column per row. Rows that already own a
        // unit column start with it in the basis instead.
        Eigen::MatrixXd full(m, n + m);
        full << A, Eigen::MatrixXd::Identity(m, m);
        std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
        for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;
        for (Eigen::Index j = 0; j < n; ++j) {
            Eigen::Index row = -1;
            bool unit = true;
            for (Eigen::Index i = 0; i < m && unit; ++i) {
                if (A(i, j) == 0.0) continue;
                if (A(i, j) == 1.0 && row < 0) row = i;
                else unit = false;
            }
            if (unit && row >= 0 && basis[static_cast<std::size_t>(row)] >= n) basis[static_cast<std::size_t>(row)] = j;
        }
        detail::Revised rs(full, b, basis, opt);

        Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(n + m);
        phase1.tail(m).setOnes();
        if (rs.run(phase1, std::vector<bool>(static_cast<std::size_t>(n + m), true)) != Status::optimal) {
            sol.status = Status::iteration_limit;
            return sol;
        }
        rs.refactor();
        double infeas = 0.0;
        for (Eigen::Index i = 0; i < m; ++i)
            if (rs.basis()[static_cast<std::size_t>(i)] >= n) infeas += std::abs(rs.xb()(i));
        if (infeas > 1e-9 * std::max(1.0, b.lpNorm<1>())) return sol;

        // Rows whose artificial cannot be pivoted out are redundant: drop them and restart.
        const auto stuck = rs.drive_out(n);
        if (!stuck.empty() && attempt == 0) {
            // The stuck artificials identify redundant original rows.
            std::vector<Eigen::Index> keep;
            std::vector<bool> drop(static_cast<std::size_t>(m), false);
            for (auto i : stuck) drop[static_cast<std::size_t>(rs.basis()[static_cast<std::size_t>(i)] - n)] = true;
            for (Eigen::Index i = 0; i < m; ++i)
                if (!drop[static_cast<std::size_t>(i)]) keep.push_back(i);
            A = Eigen::MatrixXd(A(keep, Eigen::all));
            b = Eigen::VectorXd(b(keep));
            continue;
        }

        // Phase two: artificials never enter; any still basic sit at zero.
        Eigen::VectorXd cost = Eigen::VectorXd::Zero(n + m);
        cost.head(n) = c;
        std::vector<bool> allowed(static_cast<std::size_t>(n + m), false);
        std::fill(allowed.begin(), allowed.begin() + n, true);
        if (const Status st = rs.run(cost, allowed); st != Status::optimal) {
            sol.status = st;
            return sol;
        }
        rs.refactor();
        sol.status = Status::optimal;
        sol.x = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 0; i < m; ++i) {
            const Eigen::Index bj = rs.basis()[static_cast<std::size_t>(i)];
            if (bj < n) sol.x(bj) = std::max(0.0, rs.xb()(i));
        }
        sol.objective = c.dot(sol.x);
        return sol;
    }
    sol.status = Status::iteration_limit;
    return sol;
}

}  // namespace way::lp
