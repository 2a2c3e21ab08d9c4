#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls into the routines it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include <boost/rational.hpp>

#include "way/core.hpp"
#include "way/fock.hpp"

namespace way::oracle {

using Rational = boost::rational<std::int64_t>;
inline const Rational kZero(0);

// ---------------------------------------------------------------------------
// Random generators

inline Matrix random_complex(std::mt19937_64 &rng, Eigen::Index r, Eigen::Index c) {
    std::normal_distribution<double> g;
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = cplx(g(rng), g(rng));
    return m;
}

inline Vector random_pure(std::mt19937_64 &rng, Eigen::Index d) {
    Vector v = random_complex(rng, d, 1).col(0);
    return v / v.norm();
}

/// Random density matrix of the given rank (Ginibre ensemble).
inline Matrix random_density(std::mt19937_64 &rng, Eigen::Index d, Eigen::Index rank = -1) {
    if (rank < 0) rank = d;
    const Matrix g = random_complex(rng, d, rank);
    Matrix rho = g * g.adjoint();
    rho /= rho.trace().real();
    return (rho + rho.adjoint()) / 2.0;
}

inline Matrix random_unitary(std::mt19937_64 &rng, Eigen::Index d) {
    Eigen::HouseholderQR<Matrix> qr(random_complex(rng, d, d));
    Matrix q = qr.householderQ();
    const Matrix r = qr.matrixQR();
    for (Eigen::Index i = 0; i < d; ++i) q.col(i) *= std::polar(1.0, std::arg(r(i, i)));
    return q;
}

inline Matrix random_hermitian(std::mt19937_64 &rng, Eigen::Index d) {
    const Matrix g = random_complex(rng, d, d);
    return (g + g.adjoint()) / 2.0;
}

// ---------------------------------------------------------------------------
// Twirl by discrete group averaging: (1/K) sum_j U(t_j) rho U(t_j)^dag with
// t_j = 2 pi j / K is exact once K exceeds the spread of charges.

inline Matrix twirl_by_averaging(const Matrix &rho, const GradedSpace &space) {
    const int spread = space.charges().back() - space.charges().front();
    const int K = spread + 1;
    const auto d = rho.rows();
    Matrix acc = Matrix::Zero(d, d);
    for (int j = 0; j < K; ++j) {
        Matrix u = Matrix::Zero(d, d);
        for (Eigen::Index i = 0; i < d; ++i)
            u(i, i) = std::polar(1.0, 2.0 * std::numbers::pi * j / K * space.charge_of(static_cast<std::size_t>(i)));
        acc += u * rho * u.adjoint();
    }
    return acc / static_cast<double>(K);
}

// ---------------------------------------------------------------------------
// Coherent-resource closed forms obtained by summing the per-sector optima.

/// sum_n Tr[Pi_n rho] * UD sector success, with sector weight
/// e^{-N}(N^n/n! + N^{n-1}/(n-1)!)/2 and success 2 min(n, N)/(n + N).
inline double coherent_ud_sector_sum(double N, int n_max) {
    double total = 0.0;
    for (int n = 1; n <= n_max; ++n) {
        const double w = 0.5 * (std::exp(-N + n * std::log(N) - std::lgamma(n + 1.0)) +
                                std::exp(-N + (n - 1) * std::log(N) - std::lgamma(static_cast<double>(n))));
        total += w * 2.0 * std::min<double>(n, N) / (n + N);
    }
    return total;
}

/// Telescoped form of the sum above: 1 - e^{-N} N^K / K!, K = floor(N).
inline double coherent_ud_floor_form(double N) {
    const double K = std::floor(N);
    return 1.0 - std::exp(-N + K * std::log(N) - std::lgamma(K + 1.0));
}

// ---------------------------------------------------------------------------
// Helstrom success via the trace norm: (p+ + p- + ||p+ rho+ - p- rho-||_1) / 2.

inline double helstrom_trace_norm(const Matrix &rp, const Matrix &rm, double pp, double pm) {
    const Matrix diff = pp * rp - pm * rm;
    Eigen::SelfAdjointEigenSolver<Matrix> es((diff + diff.adjoint()) / 2.0, Eigen::EigenvaluesOnly);
    return 0.5 * (pp + pm + es.eigenvalues().cwiseAbs().sum());
}

// ---------------------------------------------------------------------------
// Unambiguous discrimination of two pure qubit states by zooming grid search
// over the weight a of the "plus" effect. For each a, the largest admissible
// weight b of the "minus" effect is found by bisection on the smallest
// eigenvalue of the fail effect.

inline double ud_grid_search(const Vector &psi_p, const Vector &psi_m, double pp, double pm) {
    // Kernel directions of the opposite states.
    const Vector chi_p = Vector{{-std::conj(psi_m(1)), std::conj(psi_m(0))}};
    const Vector chi_m = Vector{{-std::conj(psi_p(1)), std::conj(psi_p(0))}};
    const Matrix Pp = chi_p * chi_p.adjoint(), Pm = chi_m * chi_m.adjoint();
    const double gp = pp * std::norm(chi_p.dot(psi_p)), gm = pm * std::norm(chi_m.dot(psi_m));

    auto feasible = [&](double a, double b) {
        const Matrix fail = Matrix::Identity(2, 2) - a * Pp - b * Pm;
        Eigen::SelfAdjointEigenSolver<Matrix> es(fail, Eigen::EigenvaluesOnly);
        return es.eigenvalues()(0) >= -1e-14;
    };
    auto max_b = [&](double a) {
        double lo = 0.0, hi = 1.0;
        if (feasible(a, 1.0)) return 1.0;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            (feasible(a, mid) ? lo : hi) = mid;
        }
        return lo;
    };
    double lo = 0.0, hi = 1.0, best = 0.0, best_a = 0.0;
    const int G = 400;
    for (int level = 0; level < 10; ++level) {
        for (int i = 0; i <= G; ++i) {
            const double a = lo + (hi - lo) * i / G;
            const double v = gp * a + gm * max_b(a);
            if (v > best) { best = v; best_a = a; }
        }
        const double w = (hi - lo) / 20.0;
        lo = std::max(0.0, best_a - w);
        hi = std::min(1.0, best_a + w);
    }
    return best;
}

// ---------------------------------------------------------------------------
// Exact convertibility by basis enumeration in rational arithmetic.
//
// p converts into q iff p = sum_k w_k T^(k) q for a probability vector w.
// Shifts whose translate of q leaves supp(p) must carry zero weight. The
// remaining system has a nonnegative solution iff it has a basic one, so all
// column subsets are tried with exact Gaussian elimination.

using IntDist = std::map<int, std::int64_t>;  // charge -> numerator over a common denominator

namespace detail {

/// Solves A x = b exactly; returns nullopt if inconsistent. Free variables are set to 0.
inline std::optional<std::vector<Rational>> solve_exact(std::vector<std::vector<Rational>> A, std::vector<Rational> b) {
    const std::size_t rows = A.size(), cols = rows ? A[0].size() : 0;
    std::vector<std::size_t> pivot_col;
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
        std::size_t piv = r;
        while (piv < rows && A[piv][c] == kZero) ++piv;
        if (piv == rows) continue;
        std::swap(A[piv], A[r]);
        std::swap(b[piv], b[r]);
        const Rational inv = Rational(1) / A[r][c];
        for (auto &x : A[r]) x *= inv;
        b[r] *= inv;
        for (std::size_t i = 0; i < rows; ++i) {
            if (i == r || A[i][c] == kZero) continue;
            const Rational f = A[i][c];
            for (std::size_t k = 0; k < cols; ++k) A[i][k] -= f * A[r][k];
            b[i] -= f * b[r];
        }
        pivot_col.push_back(c);
        ++r;
    }
    for (std::size_t i = r; i < rows; ++i)
        if (b[i] != kZero) return std::nullopt;
    std::vector<Rational> x(cols, Rational(0));
    for (std::size_t i = 0; i < pivot_col.size(); ++i) x[pivot_col[i]] = b[i];
    return x;
}

}  // namespace detail

inline bool exact_convertible(const IntDist &p, const IntDist &q, std::int64_t denom) {
    std::vector<int> sp, sq;
    for (auto [n, v] : p) if (v > 0) sp.push_back(n);
    for (auto [n, v] : q) if (v > 0) sq.push_back(n);
    auto qat = [&](int j) { auto it = q.find(j); return it == q.end() ? std::int64_t{0} : it->second; };
    auto pat = [&](int j) { auto it = p.find(j); return it == p.end() ? std::int64_t{0} : it->second; };

    // [T^(k) q]_j = q_{j+k}: translate k places q_m at j = m - k.
    std::vector<int> shifts;
    for (int k = sq.front() - sp.back(); k <= sq.back() - sp.front(); ++k) {
        bool inside = true;
        for (int m : sq) if (pat(m - k) == 0) inside = false;
        if (inside) shifts.push_back(k);
    }
    if (shifts.empty()) return false;

    const std::size_t ncol = shifts.size();
    for (std::uint32_t mask = 1; mask < (1U << ncol); ++mask) {
        std::vector<int> cols;
        for (std::size_t c = 0; c < ncol; ++c) if (mask & (1U << c)) cols.push_back(shifts[c]);
        std::vector<std::vector<Rational>> A;
        std::vector<Rational> b;
        for (int j : sp) {
            std::vector<Rational> row;
            for (int k : cols) row.emplace_back(qat(j + k), denom);
            A.push_back(std::move(row));
            b.emplace_back(pat(j), denom);
        }
        A.emplace_back(cols.size(), Rational(1));
        b.emplace_back(1);
        auto x = detail::solve_exact(A, b);
        if (!x) continue;
        if (std::all_of(x->begin(), x->end(), [](const Rational &v) { return v >= kZero; })) return true;
    }
    return false;
}

/// Grid search over weight vectors with entries in multiples of 1/steps.
/// Returns true if some grid point reproduces p exactly (soundness witness).
inline bool grid_convertible(const IntDist &p, const IntDist &q, int steps) {
    std::vector<int> sp, sq;
    for (auto [n, v] : p) if (v > 0) sp.push_back(n);
    for (auto [n, v] : q) if (v > 0) sq.push_back(n);
    std::vector<int> shifts;
    for (int k = sq.front() - sp.back(); k <= sq.back() - sp.front(); ++k) shifts.push_back(k);
    std::vector<int> w(shifts.size(), 0);
    auto qat = [&](int j) { auto it = q.find(j); return it == q.end() ? std::int64_t{0} : it->second; };
    auto pat = [&](int j) { auto it = p.find(j); return it == p.end() ? std::int64_t{0} : it->second; };
    const int jlo = std::min(sp.front(), sq.front() - shifts.back());
    const int jhi = std::max(sp.back(), sq.back() - shifts.front());

    bool found = false;
    auto check = [&] {
        // sum_k w_k q_{j+k} / (steps * denom) == p_j / denom
        for (int j = jlo; j <= jhi; ++j) {
            std::int64_t lhs = 0;
            for (std::size_t i = 0; i < shifts.size(); ++i) lhs += w[i] * qat(j + shifts[i]);
            if (lhs != pat(j) * steps) return false;
        }
        return true;
    };
    auto rec = [&](auto &&self, std::size_t idx, int left) -> void {
        if (found) return;
        if (idx + 1 == w.size()) {
            w[idx] = left;
            found = check();
            return;
        }
        for (int v = 0; v <= left && !found; ++v) {
            w[idx] = v;
            self(self, idx + 1, left - v);
        }
    };
    rec(rec, 0, steps);
    return found;
}

}  // namespace way::oracle
