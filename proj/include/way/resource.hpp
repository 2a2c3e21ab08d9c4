#pragma once

// U(1) asymmetry of pure states: charge distributions, asymmetry measures and
// covariant convertibility.
//
// Deterministic conversion psi -> phi is possible iff the charge distribution
// p of psi is a convex mixture of translates of the distribution q of phi:
//
//     p_j = sum_k w_k q_{j+k},   w_k >= 0,   sum_k w_k = 1.
//
// The mixture is found by minimizing the L1 residual with a small LP.

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "way/fock.hpp"
#include "way/simplex.hpp"

namespace way {

class ChargeDistribution {
public:
    ChargeDistribution() = default;

    explicit ChargeDistribution(std::map<int, double> probs) : probs_(std::move(probs)) {
        double total = 0.0;
        for (const auto &[n, p] : probs_) {
            if (!(p >= -kNumTol) || !std::isfinite(p)) throw Error("ChargeDistribution: negative or non-finite probability");
            total += p;
        }
        if (std::abs(total - 1.0) > kNumTol) throw Error("ChargeDistribution: probabilities do not sum to 1");
        for (auto &[n, p] : probs_) p = std::max(p, 0.0);
    }

    const std::map<int, double> &probs() const { return probs_; }

    double operator[](int n) const {
        auto it = probs_.find(n);
        return it == probs_.end() ? 0.0 : it->second;
    }

    /// Charges with strictly positive probability.
    std::vector<int> support() const {
        std::vector<int> s;
        for (const auto &[n, p] : probs_)
            if (p > 0.0) s.push_back(n);
        return s;
    }

    ChargeDistribution shifted(int by) const {
        std::map<int, double> out;
        for (const auto &[n, p] : probs_) out[n + by] = p;
        return ChargeDistribution(std::move(out));
    }

private:
    std::map<int, double> probs_;
};

struct ConversionCertificate {
    bool feasible = false;
    std::map<int, double> weights;  // shift k -> w_k, only when feasible
    double residual = 0.0;          // L1 distance of the best translation mixture
};

/// p_n = || Pi_n psi ||^2
inline ChargeDistribution charge_distribution(const PureState &psi) {
    std::map<int, double> probs;
    double total = 0.0;
    for (int n : psi.space.charges()) {
        const auto off = static_cast<Eigen::Index>(psi.space.offset(n));
        const auto dn = static_cast<Eigen::Index>(psi.space.sector_dim(n));
        const double p = psi.amplitudes.segment(off, dn).squaredNorm();
        probs[n] = p;
        total += p;
    }
    for (auto &[n, p] : probs) p /= total;
    return ChargeDistribution(std::move(probs));
}

inline double variance_measure(const ChargeDistribution &dist) {
    double m1 = 0.0, m2 = 0.0;
    for (const auto &[n, p] : dist.probs()) {
        m1 += n * p;
        m2 += static_cast<double>(n) * n * p;
    }
    return 4.0 * (m2 - m1 * m1);
}

/// Four times the variance of the number operator.
inline double variance_measure(const PureState &psi) {
    return 4.0 * variance(number_operator(psi.space), psi);
}

/// Shannon entropy (bits) of the charge distribution.
inline double frameness_entropy(const ChargeDistribution &dist) {
    double h = 0.0;
    for (const auto &[n, p] : dist.probs())
        if (p > 0.0) h -= p * std::log2(p);
    return h;
}

inline double frameness_entropy(const PureState &psi) { return frameness_entropy(charge_distribution(psi)); }

/// Decides whether the state with distribution `p` converts deterministically
/// into the state with distribution `q`.
inline ConversionCertificate deterministic_convertible(const ChargeDistribution &p, const ChargeDistribution &q) {
    const auto sp = p.support();
    const auto sq = q.support();
    if (sp.empty() || sq.empty()) throw Error("deterministic_convertible: empty support");

    // [T^(k) q]_j = q_{j+k} overlaps supp(p) only for these shifts.
    const int k_lo = sq.front() - sp.back();
    const int k_hi = sq.back() - sp.front();
    const int num_shifts = k_hi - k_lo + 1;

    // Every charge j reached by p or by some translate of q.
    const int j_lo = std::min(sp.front(), sq.front() - k_hi);
    const int j_hi = std::max(sp.back(), sq.back() - k_lo);
    const int num_rows = j_hi - j_lo + 1;

    // Columns: w_k, then s+_j, s-_j. Rows: one per j, then sum w = 1.
    const Eigen::Index cols = num_shifts + 2 * num_rows;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(num_rows + 1, cols);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(num_rows + 1);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(cols);
    for (int r = 0; r < num_rows; ++r) {
        const int j = j_lo + r;
        for (int s = 0; s < num_shifts; ++s) A(r, s) = q[j + k_lo + s];
        A(r, num_shifts + r) = 1.0;
        A(r, num_shifts + num_rows + r) = -1.0;
        b(r) = p[j];
    }
    A.row(num_rows).head(num_shifts).setOnes();
    b(num_rows) = 1.0;
    c.tail(2 * num_rows).setOnes();

    const auto sol = lp::minimize(c, std::move(A), std::move(b));
    if (sol.status != lp::Status::optimal)
        throw std::logic_error("deterministic_convertible: LP did not reach an optimum (status " + std::to_string(static_cast<int>(sol.status)) + ")");

    ConversionCertificate cert;
    cert.residual = sol.objective;
    cert.feasible = cert.residual <= kFeasibilityTol;
    if (cert.feasible) {
        for (int s = 0; s < num_shifts; ++s)
            if (sol.x(s) > 1e-14) cert.weights[k_lo + s] = sol.x(s);
    }
    return cert;
}

/// Uniform superposition on M+1 levels reaches, with nonzero probability, any
/// state supported inside a translate of a window of M+1 consecutive charges.
inline bool stochastic_reachable_from_uniform(int M, const ChargeDistribution &target) {
    if (M < 0) throw Error("stochastic_reachable_from_uniform: M must be >= 0");
    const auto s = target.support();
    if (s.empty()) throw Error("stochastic_reachable_from_uniform: empty support");
    return s.back() - s.front() <= M;
}

enum class Ordering { a_to_b, b_to_a, equivalent, incomparable };

inline std::string to_string(Ordering o) {
    switch (o) {
        case Ordering::a_to_b: return "a_to_b";
        case Ordering::b_to_a: return "b_to_a";
        case Ordering::equivalent: return "equivalent";
        case Ordering::incomparable: return "incomparable";
    }
    return "?";
}

inline Ordering compare(const ChargeDistribution &a, const ChargeDistribution &b) {
    const bool ab = deterministic_convertible(a, b).feasible;
    const bool ba = deterministic_convertible(b, a).feasible;
    if (ab && ba) return Ordering::equivalent;
    if (ab) return Ordering::a_to_b;
    if (ba) return Ordering::b_to_a;
    return Ordering::incomparable;
}

inline Ordering compare(const PureState &a, const PureState &b) {
    return compare(charge_distribution(a), charge_distribution(b));
}

}  // namespace way
