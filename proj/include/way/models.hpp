#pragma once

// Measurement under an additive conservation law, recast as discrimination of
// twirled eigenstates of the measured observable.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "way/circuits.hpp"
#include "way/discrimination.hpp"
#include "way/fock.hpp"

namespace way {

struct WayScenario {
    GradedSpace system_space;
    Observable L;
    Observable N_S;
    std::vector<double> prior;  // indexed like the ascending eigenvalues of L
    std::optional<PureState> resource;
};

enum class Verdict { perfect, approximate_only, impossible };

inline std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::perfect: return "perfect";
        case Verdict::approximate_only: return "approximate_only";
        case Verdict::impossible: return "impossible";
    }
    return "?";
}

struct FeasibilityReport {
    Verdict verdict;
    Ensemble ensemble;                       // twirled surviving eigenstates
    std::vector<std::size_t> eigen_indices;  // which eigenvectors survived
    RealVector eigenvalues;
    Matrix eigenvectors;                     // columns, ascending eigenvalue
};

/// Minimum gap between ascending eigenvalues below which L counts as degenerate.
inline constexpr double kDegeneracyGap = 1e-9;

inline void validate(const WayScenario &sc) {
    if (!(sc.L.space == sc.system_space) || !(sc.N_S.space == sc.system_space))
        throw Error("WayScenario: observables must act on the system space");
    const Matrix expected = number_operator(sc.system_space).matrix;
    if ((sc.N_S.matrix - expected).cwiseAbs().maxCoeff() > kNumTol)
        throw Error("WayScenario: N_S must be the number operator of the system grading");
    if (sc.prior.size() != sc.system_space.total_dim()) throw Error("WayScenario: one prior per eigenvector required");
    double total = 0.0;
    for (double p : sc.prior) {
        if (!(p >= 0.0)) throw Error("WayScenario: negative prior");
        total += p;
    }
    if (std::abs(total - 1.0) > kNumTol) throw Error("WayScenario: prior does not sum to 1");
}

/// Twirled states e_k (x) resource for every eigenvector with positive prior,
/// and the verdict on perfect discrimination among them.
inline FeasibilityReport way_feasibility(const WayScenario &sc) {
    validate(sc);
    Eigen::SelfAdjointEigenSolver<Matrix> es(sc.L.matrix);
    const RealVector &ev = es.eigenvalues();
    for (Eigen::Index i = 1; i < ev.size(); ++i)
        if (ev(i) - ev(i - 1) < kDegeneracyGap) throw Error("way_feasibility: L has a degenerate spectrum");

    std::optional<TensorProduct> tp;
    if (sc.resource) tp.emplace(std::vector<GradedSpace>{sc.system_space, sc.resource->space});

    std::vector<EnsembleItem> items;
    std::vector<std::size_t> kept;
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
        const double p = sc.prior[static_cast<std::size_t>(k)];
        if (p <= 0.0) continue;
        const Vector e = es.eigenvectors().col(k);
        BlockState twirled = tp ? g_twirl(PureState(tp->space(), tp->product(std::vector<Vector>{e, sc.resource->amplitudes})))
                                : g_twirl(PureState(sc.system_space, e));
        items.push_back({p, std::move(twirled)});
        kept.push_back(static_cast<std::size_t>(k));
    }
    Ensemble ens(std::move(items));

    Verdict verdict = Verdict::approximate_only;
    if (perfect_discrimination_possible(ens)) {
        verdict = Verdict::perfect;
    } else {
        bool all_equal = true;
        const Matrix first = ens.items().front().state.dense();
        for (const auto &it : ens.items())
            if ((it.state.dense() - first).cwiseAbs().maxCoeff() > kRankTol) all_equal = false;
        if (all_equal) verdict = Verdict::impossible;
    }
    return {verdict, std::move(ens), std::move(kept), ev, es.eigenvectors()};
}

struct ModelReport {
    std::string resource;  // "uniform", "coherent" or "opt_phase"
    double param = 0.0;    // M, or alpha for the coherent resource
    double mean_n = 0.0;   // <N> of the resource
    Criterion criterion = Criterion::ud;
    double success_numeric = 0.0;
    double fail_numeric = 0.0;
    std::optional<double> success_closed_form;
    std::optional<double> success_reference;  // asymptotic value, not an identity
    std::vector<SectorResult> per_sector;
};

/// Equal-prior ensemble of twirled e+ (x) resource and e- (x) resource, with
/// the system as the first tensor factor.
inline Ensemble twirled_pair(const PureState &resource) {
    TensorProduct tp({GradedSpace::qubit(), resource.space});
    auto twirl_with = [&](const Vector &e) { return g_twirl(PureState(tp.space(), tp.product(std::vector<Vector>{e, resource.amplitudes}))); };
    return Ensemble(std::vector<EnsembleItem>{{0.5, twirl_with(e_plus())}, {0.5, twirl_with(e_minus())}});
}

inline double uniform_closed_form(int M) { return static_cast<double>(M) / (M + 1); }

/// 1 - e^{-N} N^{N+1} / (Gamma(N+1) (1+N))
inline double coherent_ud_closed_form(double mean_n) {
    if (mean_n <= 0.0) return 0.0;
    return 1.0 - std::exp(-mean_n + (mean_n + 1.0) * std::log(mean_n) - std::lgamma(mean_n + 1.0)) / (1.0 + mean_n);
}

/// e^{-N}/4 [1 + sum_{n>=1} N^{n-1}/(n-1)! (1 + sqrt(N/n))^2]
inline double coherent_mle_closed_form(double mean_n) {
    if (mean_n <= 0.0) return 0.5;
    const int n_max = static_cast<int>(std::ceil(mean_n + 40.0 + 40.0 * std::sqrt(mean_n)));
    // e^{-N} is folded into each term so large N does not overflow.
    double sum = std::exp(-mean_n);
    for (int n = 1; n <= n_max; ++n) {
        const double w = std::exp((n - 1) * std::log(mean_n) - std::lgamma(static_cast<double>(n)) - mean_n);
        const double f = 1.0 + std::sqrt(mean_n / n);
        sum += w * f * f;
    }
    return sum / 4.0;
}

/// Large-N limit of the coherent UD success.
inline double coherent_ud_stirling(double mean_n) { return 1.0 - 1.0 / std::sqrt(2.0 * std::numbers::pi * mean_n); }

/// Large-M limit of the opt-phase MLE success.
inline double opt_phase_asymptotic(int M) {
    return 1.0 - std::numbers::pi * std::numbers::pi / (4.0 * (M + 2.0) * (M + 2.0));
}

/// Reference curve 1 - 1/(4 + 16 <N>).
inline double ozawa_reference_curve(double mean_n) { return 1.0 - 1.0 / (4.0 + 16.0 * mean_n); }

namespace detail {

inline ModelReport run_model(std::string name, double param, double mean_n, const PureState &resource,
                             Criterion criterion) {
    const auto res = discriminate(twirled_pair(resource), criterion);
    ModelReport r;
    r.resource = std::move(name);
    r.param = param;
    r.mean_n = mean_n;
    r.criterion = criterion;
    r.success_numeric = res.success_prob;
    r.fail_numeric = res.fail_prob;
    r.per_sector = res.per_sector;
    return r;
}

}  // namespace detail

inline ModelReport uniform_model(int M, Criterion criterion) {
    if (M < 1) throw Error("uniform_model: M must be >= 1");
    auto r = detail::run_model("uniform", M, M / 2.0, uniform_state(M), criterion);
    r.success_closed_form = uniform_closed_form(M);
    return r;
}

inline ModelReport coherent_model(double alpha, Criterion criterion, double tail_mass = 1e-12) {
    if (!(alpha > 0.0)) throw Error("coherent_model: alpha must be > 0");
    const double mean_n = alpha * alpha;
    auto r = detail::run_model("coherent", alpha, mean_n, coherent_state(alpha, tail_mass), criterion);
    r.success_closed_form = criterion == Criterion::ud ? coherent_ud_closed_form(mean_n) : coherent_mle_closed_form(mean_n);
    if (criterion == Criterion::ud) r.success_reference = coherent_ud_stirling(mean_n);
    return r;
}

inline ModelReport opt_phase_model(int M) {
    if (M < 1) throw Error("opt_phase_model: M must be >= 1");
    auto r = detail::run_model("opt_phase", M, M / 2.0, opt_phase_state(M), Criterion::mle);
    r.success_reference = opt_phase_asymptotic(M);
    return r;
}

/// |<[L, N_S]>|^2 / (4 Var N_S + 4 Var N_A), all operators on the joint space.
inline double ozawa_bound_joint(const Matrix &L, const Matrix &N_S, const Matrix &N_A, const Matrix &joint) {
    const Eigen::Index d = joint.rows();
    if (L.rows() != d || N_S.rows() != d || N_A.rows() != d || joint.cols() != d)
        throw Error("ozawa_bound: dimension mismatch");
    auto var = [&](const Matrix &X) {
        const double m1 = (X * joint).trace().real();
        return (X * X * joint).trace().real() - m1 * m1;
    };
    const double denom = 4.0 * var(N_S) + 4.0 * var(N_A);
    if (denom <= kNumTol) throw Error("ozawa_bound: bound undefined (zero charge variance)");
    return std::norm((commutator(L, N_S) * joint).trace()) / denom;
}

/// Bound for system observables L, N_S and apparatus charge N_A; `joint` is a
/// density matrix on tensor(L.space, N_A.space).
inline double ozawa_bound(const Observable &L, const Observable &N_S, const Observable &N_A, const Matrix &joint) {
    if (!(L.space == N_S.space)) throw Error("ozawa_bound: L and N_S act on different spaces");
    const TensorProduct tp({L.space, N_A.space});
    require_density(joint, static_cast<Eigen::Index>(tp.space().total_dim()), "ozawa_bound");
    return ozawa_bound_joint(tp.embed(0, L.matrix), tp.embed(0, N_S.matrix), tp.embed(1, N_A.matrix), joint);
}

inline double ozawa_bound(const MeasurementModel &m, const Observable &L, const Matrix &system_rho) {
    if (!(L.space == m.system_space())) throw Error("ozawa_bound: observable does not act on the model's system");
    return ozawa_bound_joint(m.product.embed(0, L.matrix), m.product.embed(0, number_operator(m.system_space()).matrix),
                             m.apparatus_charge(), m.initial_joint(system_rho));
}

/// <(V^dag Z V - L)^2> on the joint input state.
inline double measurement_noise(const Matrix &V, const Matrix &L, const Matrix &Z, const Matrix &joint) {
    const Eigen::Index d = joint.rows();
    if (V.rows() != d || L.rows() != d || Z.rows() != d) throw Error("noise_of_model: dimension mismatch");
    const Matrix noise = V.adjoint() * Z * V - L;
    return (noise * noise * joint).trace().real();
}

/// Squared noise of the model as a measurement of L. The pointer assigns
/// `pointer_values[label]` to each outcome; undeclared labels read 0.
inline double noise_of_model(const MeasurementModel &m, const Observable &L, std::map<std::string, double> pointer_values,
                             const Matrix &system_rho) {
    if (!(L.space == m.system_space())) throw Error("noise_of_model: observable does not act on the model's system");
    require_density(system_rho, static_cast<Eigen::Index>(m.system_space().total_dim()), "noise_of_model");
    for (const auto &label : m.outcomes) pointer_values.try_emplace(label, 0.0);
    return measurement_noise(m.unitary.matrix, m.product.embed(0, L.matrix), m.pointer_observable(pointer_values),
                             m.initial_joint(system_rho));
}

/// L = l+ |e+><e+| + l- |e-><e-| on a qubit.
inline Observable pm_observable(double l_plus = 1.0, double l_minus = -1.0) {
    const Vector p = e_plus(), q = e_minus();
    return Observable(GradedSpace::qubit(), l_plus * p * p.adjoint() + l_minus * q * q.adjoint());
}

}  // namespace way
