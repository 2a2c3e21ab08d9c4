#pragma once

// Binary state discrimination for charge-block-diagonal states.
//
// Block-diagonal hypotheses are discriminated sector by sector: every sector
// is an independent (renormalized) two-state problem and the optimal global
// measurement is the direct sum of the per-sector optima. Two criteria are
// supported: unambiguous discrimination (no errors, an explicit "fail"
// outcome) and maximum likelihood (Helstrom, no fail outcome).

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "way/fock.hpp"

namespace way {

enum class Criterion { ud, mle };

inline std::string to_string(Criterion c) { return c == Criterion::ud ? "UD" : "MLE"; }

struct EnsembleItem {
    double prior;
    BlockState state;
};

class Ensemble {
public:
    explicit Ensemble(std::vector<EnsembleItem> items) : items_(std::move(items)) {
        if (items_.empty()) throw Error("Ensemble: no items");
        double total = 0.0;
        for (const auto &it : items_) {
            if (!(it.prior >= 0.0)) throw Error("Ensemble: negative prior");
            if (!(it.state.space == items_.front().state.space))
                throw Error("Ensemble: states live on different graded spaces");
            total += it.prior;
        }
        if (std::abs(total - 1.0) > kNumTol) throw Error("Ensemble: priors do not sum to 1");
    }

    const std::vector<EnsembleItem> &items() const { return items_; }
    std::size_t size() const { return items_.size(); }
    const GradedSpace &space() const { return items_.front().state.space; }

private:
    std::vector<EnsembleItem> items_;
};

/// Effects of a two-outcome (MLE) or three-outcome (UD) measurement on one sector.
struct SectorPovm {
    int charge = 0;
    Matrix plus;
    Matrix minus;
    std::optional<Matrix> fail;

    double completeness_defect() const {
        Matrix sum = plus + minus;
        if (fail) sum += *fail;
        return (sum - Matrix::Identity(sum.rows(), sum.cols())).cwiseAbs().maxCoeff();
    }
    bool is_valid(double tol = kNumTol) const {
        return is_psd(plus, tol) && is_psd(minus, tol) && (!fail || is_psd(*fail, tol)) &&
               completeness_defect() <= tol;
    }
};

struct TwoStateResult {
    SectorPovm povm;
    double success = 0.0;
    double fail = 0.0;
    // Conditional success rates Tr[F+ rho+] and Tr[F- rho-].
    double rate_plus = 0.0;
    double rate_minus = 0.0;
};

struct SectorResult {
    int charge = 0;
    double weight = 0.0;
    double success = 0.0;
    double fail = 0.0;
    SectorPovm povm;
};

/// Direct sum of sector effects over the whole graded space.
struct GlobalPovm {
    GradedSpace space;
    Matrix plus;
    Matrix minus;
    Matrix fail;  // zero for MLE
};

struct DiscriminationResult {
    Criterion criterion = Criterion::ud;
    double success_prob = 0.0;
    double fail_prob = 0.0;
    std::vector<SectorResult> per_sector;  // sorted by charge
    GlobalPovm povm;
};

struct ProjectedSector {
    int charge = 0;
    double weight = 0.0;
    std::vector<double> priors;  // conditional on the sector
    std::vector<Matrix> states;  // unit trace, or zero when the item has no weight here
};

/// Per-sector weights and renormalized projected ensembles; sectors carrying
/// no weight are dropped.
inline std::vector<ProjectedSector> raynal_reduce(const Ensemble &ens) {
    std::vector<ProjectedSector> out;
    const auto &space = ens.space();
    for (std::size_t s = 0; s < space.num_sectors(); ++s) {
        ProjectedSector ps;
        ps.charge = space.charges()[s];
        std::vector<double> masses;
        for (const auto &it : ens.items()) {
            const double tr = it.state.blocks[s].trace().real();
            masses.push_back(it.prior * tr);
            ps.weight += it.prior * tr;
        }
        if (ps.weight <= 0.0) continue;
        for (std::size_t k = 0; k < ens.size(); ++k) {
            const Matrix &blk = ens.items()[k].state.blocks[s];
            const double tr = blk.trace().real();
            ps.priors.push_back(masses[k] / ps.weight);
            ps.states.push_back(tr > 0.0 ? Matrix(blk / tr) : Matrix::Zero(blk.rows(), blk.cols()));
        }
        out.push_back(std::move(ps));
    }
    return out;
}

namespace detail {

inline void require_pair(const Matrix &a, const Matrix &b, const char *what) {
    if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
        throw Error(std::string(what) + ": states must be square matrices of equal dimension");
    if (!is_psd(a) || !is_psd(b)) throw Error(std::string(what) + ": states must be Hermitian PSD");
}

inline bool supports_orthogonal(const Matrix &a, const Matrix &b) {
    const Matrix pa = support_projector(a), pb = support_projector(b);
    return operator_norm(pa * pb) <= kRankTol;
}

inline Vector kernel_vector(const Matrix &rho) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
    return es.eigenvectors().col(0);
}

inline Vector top_vector(const Matrix &rho) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
    return es.eigenvectors().col(rho.rows() - 1);
}

inline TwoStateResult finish(TwoStateResult r, const Matrix &rp, const Matrix &rm, double pp, double pm) {
    r.rate_plus = (r.povm.plus * rp).trace().real();
    r.rate_minus = (r.povm.minus * rm).trace().real();
    r.success = pp * r.rate_plus + pm * r.rate_minus;
    if (r.povm.fail) r.fail = pp * (*r.povm.fail * rp).trace().real() + pm * (*r.povm.fail * rm).trace().real();
    return r;
}

}  // namespace detail

/// Optimal unambiguous discrimination of two states.
///
/// Handles three structures: orthogonal supports (perfect), identical states
/// (always fail), and 2x2 states with one-dimensional kernels. For the last,
/// the effects are a|chi+><chi+| and b|chi-><chi-| with chi+- spanning the
/// kernel of the opposite state; (a, b) maximize the conclusive probability on
/// the boundary where the fail effect stops being positive.
inline TwoStateResult ud_two_states(const Matrix &rho_plus, const Matrix &rho_minus, std::array<double, 2> priors,
                                    int charge = 0) {
    detail::require_pair(rho_plus, rho_minus, "ud_two_states");
    const auto d = rho_plus.rows();
    const Matrix id = Matrix::Identity(d, d);
    const auto [pp, pm] = priors;

    TwoStateResult r;
    r.povm.charge = charge;
    if (detail::supports_orthogonal(rho_plus, rho_minus)) {
        r.povm.plus = support_projector(rho_plus);
        r.povm.minus = support_projector(rho_minus);
        r.povm.fail = id - r.povm.plus - r.povm.minus;
        return detail::finish(std::move(r), rho_plus, rho_minus, pp, pm);
    }
    if ((rho_plus - rho_minus).cwiseAbs().maxCoeff() <= kRankTol) {
        r.povm.plus = Matrix::Zero(d, d);
        r.povm.minus = Matrix::Zero(d, d);
        r.povm.fail = id;
        return detail::finish(std::move(r), rho_plus, rho_minus, pp, pm);
    }
    const auto rank_p = numerical_rank(rho_plus), rank_m = numerical_rank(rho_minus);
    if (d != 2 || rank_p != 1 || rank_m != 1)
        throw Error("ud_two_states: unsupported structure (dimension " + std::to_string(d) + ", ranks " +
                    std::to_string(rank_p) + " and " + std::to_string(rank_m) +
                    "); only 2x2 states with one-dimensional kernels, orthogonal supports, or identical states");

    const Vector chi_p = detail::kernel_vector(rho_minus);
    const Vector chi_m = detail::kernel_vector(rho_plus);
    const double A = pp * (chi_p.adjoint() * rho_plus * chi_p)(0, 0).real();
    const double B = pm * (chi_m.adjoint() * rho_minus * chi_m)(0, 0).real();
    const double c = std::norm(chi_p.dot(chi_m));

    auto b_of = [c](double a) { return (1.0 - a) / (1.0 - a * (1.0 - c)); };
    auto value = [&](double a) { return A * a + B * b_of(a); };
    double a = 0.0;
    if (A > 0.0) a = std::clamp((1.0 - std::sqrt(B * c / A)) / (1.0 - c), 0.0, 1.0);
    for (double cand : {0.0, 1.0})
        if (value(cand) > value(a)) a = cand;
    const double b = b_of(a);

    r.povm.plus = a * chi_p * chi_p.adjoint();
    r.povm.minus = b * chi_m * chi_m.adjoint();
    r.povm.fail = id - r.povm.plus - r.povm.minus;
    return detail::finish(std::move(r), rho_plus, rho_minus, pp, pm);
}

/// Helstrom measurement: projector onto the nonnegative eigenspace of
/// p+ rho+ - p- rho-. Zero eigenvalues go to the "plus" outcome.
inline TwoStateResult mle_two_states(const Matrix &rho_plus, const Matrix &rho_minus, std::array<double, 2> priors,
                                     int charge = 0) {
    detail::require_pair(rho_plus, rho_minus, "mle_two_states");
    const auto d = rho_plus.rows();
    const auto [pp, pm] = priors;
    Matrix diff = pp * rho_plus - pm * rho_minus;
    diff = (diff + diff.adjoint()) / 2.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(diff);
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());

    TwoStateResult r;
    r.povm.charge = charge;
    r.povm.plus = Matrix::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        if (es.eigenvalues()(i) >= -1e-12 * scale) {
            const Vector v = es.eigenvectors().col(i);
            r.povm.plus += v * v.adjoint();
        }
    }
    r.povm.minus = Matrix::Identity(d, d) - r.povm.plus;
    return detail::finish(std::move(r), rho_plus, rho_minus, pp, pm);
}

inline DiscriminationResult discriminate(const Ensemble &ens, Criterion criterion) {
    if (ens.size() != 2) throw Error("discriminate: only two-element ensembles are supported");
    const auto &space = ens.space();
    const auto d = static_cast<Eigen::Index>(space.total_dim());

    DiscriminationResult res;
    res.criterion = criterion;
    res.povm.space = space;
    res.povm.plus = Matrix::Zero(d, d);
    res.povm.minus = Matrix::Zero(d, d);
    res.povm.fail = Matrix::Zero(d, d);

    std::vector<bool> covered(space.num_sectors(), false);
    for (const auto &ps : raynal_reduce(ens)) {
        const std::array<double, 2> pr{ps.priors[0], ps.priors[1]};
        TwoStateResult tr = criterion == Criterion::ud ? ud_two_states(ps.states[0], ps.states[1], pr, ps.charge)
                                                       : mle_two_states(ps.states[0], ps.states[1], pr, ps.charge);
        res.success_prob += ps.weight * tr.success;
        res.fail_prob += ps.weight * tr.fail;
        res.povm.plus += embed_sector(space, ps.charge, tr.povm.plus);
        res.povm.minus += embed_sector(space, ps.charge, tr.povm.minus);
        if (tr.povm.fail) res.povm.fail += embed_sector(space, ps.charge, *tr.povm.fail);
        covered[space.sector_index(ps.charge)] = true;
        res.per_sector.push_back({ps.charge, ps.weight, tr.success, tr.fail, std::move(tr.povm)});
    }
    // Sectors neither hypothesis reaches still need an effect for completeness.
    for (std::size_t s = 0; s < space.num_sectors(); ++s) {
        if (covered[s]) continue;
        const int n = space.charges()[s];
        const auto dn = static_cast<Eigen::Index>(space.sector_dims()[s]);
        Matrix &target = criterion == Criterion::ud ? res.povm.fail : res.povm.plus;
        target += embed_sector(space, n, Matrix::Identity(dn, dn));
    }
    return res;
}

/// p+ Tr[F+ rho+] + p- Tr[F- rho-] for a global POVM on an ensemble.
inline double evaluate_success(const GlobalPovm &povm, const Ensemble &ens) {
    if (ens.size() != 2) throw Error("evaluate_success: only two-element ensembles are supported");
    const auto &it = ens.items();
    return it[0].prior * (povm.plus * it[0].state.dense()).trace().real() +
           it[1].prior * (povm.minus * it[1].state.dense()).trace().real();
}

/// True iff every pair of states has orthogonal support in every sector.
inline bool perfect_discrimination_possible(const Ensemble &ens) {
    const auto &space = ens.space();
    for (std::size_t s = 0; s < space.num_sectors(); ++s) {
        std::vector<Matrix> supports;
        for (const auto &it : ens.items())
            if (it.prior > 0.0) supports.push_back(support_projector(it.state.blocks[s]));
        for (std::size_t i = 0; i < supports.size(); ++i)
            for (std::size_t j = i + 1; j < supports.size(); ++j)
                if (operator_norm(supports[i] * supports[j]) > kNumTol) return false;
    }
    return true;
}

}  // namespace way
