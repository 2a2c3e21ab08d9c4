#pragma once

// Conserving unitary measurement models.
//
// A model couples a system wire to apparatus wires (resource, registers,
// optional copy qubit) through a unitary that commutes with the total number
// operator. The apparatus starts in a product state; register wires start in
// charge eigenstates. Outcomes are read from the computational basis of the
// register wires, so the pointer commutes with the apparatus charge.

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "way/fock.hpp"

namespace way {

struct ConservingUnitary {
    TensorProduct product;
    Matrix matrix;

    /// Checks unitarity only; conservation is measured by verify_conservation.
    ConservingUnitary(TensorProduct p, Matrix m) : product(std::move(p)), matrix(std::move(m)) {
        const auto d = static_cast<Eigen::Index>(product.space().total_dim());
        if (matrix.rows() != d || matrix.cols() != d) throw Error("ConservingUnitary: dimension mismatch");
        if (unitarity_defect() > kNumTol) throw Error("ConservingUnitary: matrix is not unitary");
    }

    const GradedSpace &space() const { return product.space(); }
    Observable charge_observable() const { return number_operator(product.space()); }

    double unitarity_defect() const {
        return operator_norm(matrix.adjoint() * matrix - Matrix::Identity(matrix.rows(), matrix.cols()));
    }
};

/// ||[U, N_tot]||
inline double verify_conservation(const ConservingUnitary &u) {
    return operator_norm(commutator(u.matrix, u.charge_observable().matrix));
}

struct MeasurementModel {
    std::string kind;
    TensorProduct product;                 // factor 0 is the system
    std::vector<std::string> wire_names;   // one per factor
    std::vector<Vector> initial_wires;     // initial state of factors 1..n-1
    std::vector<std::size_t> register_factors;
    std::vector<std::string> outcomes;     // declared outcome labels, in order
    // Outcome label of each register configuration, indexed by the row-major
    // index over the register wires.
    std::vector<std::string> pointer;
    ConservingUnitary unitary;

    const GradedSpace &system_space() const { return product.factor(0); }

    /// Projector onto register configurations reading `label`, on the full space.
    Matrix pointer_projector(const std::string &label) const {
        const auto d = static_cast<Eigen::Index>(product.space().total_dim());
        Matrix out = Matrix::Zero(d, d);
        for (std::size_t c = 0; c < static_cast<std::size_t>(d); ++c)
            if (pointer[register_config(c)] == label) out(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c)) = 1.0;
        return out;
    }

    /// Sum over outcomes of value(label) times its pointer projector.
    Matrix pointer_observable(const std::map<std::string, double> &values) const {
        const auto d = static_cast<Eigen::Index>(product.space().total_dim());
        Matrix out = Matrix::Zero(d, d);
        for (std::size_t c = 0; c < static_cast<std::size_t>(d); ++c) {
            auto it = values.find(pointer[register_config(c)]);
            if (it == values.end()) throw Error("pointer_observable: no value for outcome " + pointer[register_config(c)]);
            out(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c)) = it->second;
        }
        return out;
    }

    /// Apparatus charge N_A on the full space.
    Matrix apparatus_charge() const {
        const auto d = static_cast<Eigen::Index>(product.space().total_dim());
        Matrix out = Matrix::Zero(d, d);
        for (std::size_t f = 1; f < product.num_factors(); ++f)
            out += product.embed(f, number_operator(product.factor(f)).matrix);
        return out;
    }

    /// rho (x) |wires><wires| on the full space.
    Matrix initial_joint(const Matrix &system_rho) const {
        std::vector<Matrix> parts{system_rho};
        for (const auto &w : initial_wires) parts.push_back(w * w.adjoint());
        return product.product(parts);
    }

    std::size_t register_config(std::size_t composite) const {
        const auto digits = product.factor_indices(composite);
        std::size_t idx = 0;
        for (auto f : register_factors) idx = idx * product.factor(f).total_dim() + digits[f];
        return idx;
    }
};

/// ||[Z_A, N_A]|| with distinct pointer values for the declared outcomes.
inline double verify_yanase(const MeasurementModel &m) {
    std::map<std::string, double> values;
    for (std::size_t i = 0; i < m.outcomes.size(); ++i) values[m.outcomes[i]] = static_cast<double>(i + 1);
    return operator_norm(commutator(m.pointer_observable(values), m.apparatus_charge()));
}

struct OutcomeRecord {
    std::string label;
    double probability = 0.0;
    Matrix post_state;  // normalized reduced system state; empty if probability is 0
};

inline std::vector<OutcomeRecord> simulate_measurement(const MeasurementModel &m, const Matrix &system_rho) {
    require_density(system_rho, static_cast<Eigen::Index>(m.system_space().total_dim()), "simulate_measurement");
    const Matrix &V = m.unitary.matrix;
    const Matrix out = V * m.initial_joint(system_rho) * V.adjoint();
    std::vector<OutcomeRecord> records;
    for (const auto &label : m.outcomes) {
        const Matrix P = m.pointer_projector(label);
        const Matrix branch = P * out * P;
        OutcomeRecord r;
        r.label = label;
        r.probability = branch.trace().real();
        if (r.probability > 1e-14) r.post_state = m.product.partial_trace(branch, {0}) / r.probability;
        records.push_back(std::move(r));
    }
    return records;
}

inline double fidelity_with_pure(const Matrix &rho, const Vector &psi) {
    return (psi.adjoint() * rho * psi)(0, 0).real();
}

inline Vector e_plus() { return Vector{{cplx(std::numbers::sqrt2 / 2), cplx(std::numbers::sqrt2 / 2)}}; }
inline Vector e_minus() { return Vector{{cplx(std::numbers::sqrt2 / 2), cplx(-std::numbers::sqrt2 / 2)}}; }

namespace detail {

using Digits = std::vector<std::size_t>;

/// Builds an operator in natural order from its action on basis states.
inline Matrix from_basis_action(const TensorProduct &tp,
                                const std::function<std::vector<std::pair<cplx, Digits>>(const Digits &)> &act) {
    const auto d = static_cast<Eigen::Index>(tp.space().total_dim());
    Matrix nat = Matrix::Zero(d, d);
    std::vector<std::size_t> dims;
    for (const auto &f : tp.factors()) dims.push_back(f.total_dim());
    for (Eigen::Index col = 0; col < d; ++col) {
        Digits digits(dims.size());
        auto rem = static_cast<std::size_t>(col);
        for (std::size_t f = dims.size(); f-- > 0;) {
            digits[f] = rem % dims[f];
            rem /= dims[f];
        }
        for (const auto &[amp, target] : act(digits))
            nat(static_cast<Eigen::Index>(tp.natural_index(target)), col) += amp;
    }
    return nat;
}

inline Vector basis_vector(std::size_t dim, std::size_t index) {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(dim));
    v(static_cast<Eigen::Index>(index)) = 1.0;
    return v;
}

/// Projectors on system (x) resource, natural order (s * (M+1) + r):
/// phi_n^{+-} = (|s=0, r=n> +- |s=1, r=n-1>)/sqrt2 for n = 1..M.
inline Matrix phi_projector_sum(int M, double sign) {
    const auto dim = static_cast<Eigen::Index>(2 * (M + 1));
    Matrix P = Matrix::Zero(dim, dim);
    for (int n = 1; n <= M; ++n) {
        Vector v = Vector::Zero(dim);
        v(n) = std::numbers::sqrt2 / 2;
        v((M + 1) + (n - 1)) = sign * std::numbers::sqrt2 / 2;
        P += v * v.adjoint();
    }
    return P;
}

/// |s=0, r=0><.| + |s=1, r=M><.|
inline Matrix edge_projector(int M) {
    const auto dim = static_cast<Eigen::Index>(2 * (M + 1));
    Matrix P = Matrix::Zero(dim, dim);
    P(0, 0) = 1.0;
    P(dim - 1, dim - 1) = 1.0;
    return P;
}

/// Swap of two qubits among `n` qubits (row-major, qubit 0 most significant).
inline Matrix qubit_swap(std::size_t n, std::size_t i, std::size_t j) {
    const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n);
    Matrix S = Matrix::Zero(dim, dim);
    for (Eigen::Index x = 0; x < dim; ++x) {
        const auto bi = (static_cast<std::size_t>(x) >> (n - 1 - i)) & 1U;
        const auto bj = (static_cast<std::size_t>(x) >> (n - 1 - j)) & 1U;
        auto y = static_cast<std::size_t>(x);
        if (bi != bj) y ^= (std::size_t{1} << (n - 1 - i)) | (std::size_t{1} << (n - 1 - j));
        S(static_cast<Eigen::Index>(y), x) = 1.0;
    }
    return S;
}

inline void require_conserving(const ConservingUnitary &u, const char *what) {
    if (verify_conservation(u) > kNumTol) throw std::logic_error(std::string(what) + ": built unitary is not conserving");
}

inline std::vector<std::string> register_labels(std::size_t n, const std::map<std::size_t, std::string> &named,
                                                const std::string &fallback) {
    std::vector<std::string> out(std::size_t{1} << n, fallback);
    for (const auto &[config, label] : named) out[config] = label;
    return out;
}

}  // namespace detail

/// Unambiguous readout with a uniform resource on M+1 levels.
///
/// Wires: system, resource, registers r1 r2 r3 starting in |001>. The unitary
/// leaves the edge states |0,0>, |1,M> alone, applies SWAP(r2,r3) on the
/// phi^- subspace and SWAP(r1,r3) on the phi^+ subspace. Register reads:
/// 100 -> plus, 010 -> minus, everything else -> fail.
inline MeasurementModel build_ud_unitary(int M) {
    if (M < 1) throw Error("build_ud_unitary: M must be >= 1");
    const auto q = GradedSpace::qubit();
    TensorProduct tp({q, GradedSpace::levels(M), q, q, q});
    const Matrix Vnat = kron(detail::edge_projector(M), Matrix::Identity(8, 8)) +
                        kron(detail::phi_projector_sum(M, -1.0), detail::qubit_swap(3, 1, 2)) +
                        kron(detail::phi_projector_sum(M, +1.0), detail::qubit_swap(3, 0, 2));
    ConservingUnitary U(tp, tp.from_natural(Vnat));
    detail::require_conserving(U, "build_ud_unitary");
    return MeasurementModel{
        "ud",
        tp,
        {"system", "resource", "r1", "r2", "r3"},
        {uniform_state(M).amplitudes, detail::basis_vector(2, 0), detail::basis_vector(2, 0), detail::basis_vector(2, 1)},
        {2, 3, 4},
        {"plus", "minus", "fail"},
        detail::register_labels(3, {{4, "plus"}, {2, "minus"}, {1, "fail"}}, "fail"),
        std::move(U),
    };
}

/// Minimum-error readout with a uniform resource: V = P+ (x) I + P- (x) SWAP(r1,r2)
/// with P+ the span of phi^+ and registers starting in |01>. The unswapped
/// register 01 reads plus, the swapped 10 reads minus.
inline MeasurementModel build_mle_unitary(int M) {
    if (M < 1) throw Error("build_mle_unitary: M must be >= 1");
    const auto q = GradedSpace::qubit();
    TensorProduct tp({q, GradedSpace::levels(M), q, q});
    const Matrix Pp = detail::phi_projector_sum(M, +1.0);
    const Matrix Pm = Matrix::Identity(Pp.rows(), Pp.cols()) - Pp;
    const Matrix Vnat = kron(Pp, Matrix::Identity(4, 4)) + kron(Pm, detail::qubit_swap(2, 0, 1));
    ConservingUnitary U(tp, tp.from_natural(Vnat));
    detail::require_conserving(U, "build_mle_unitary");
    return MeasurementModel{
        "mle",
        tp,
        {"system", "resource", "r1", "r2"},
        {uniform_state(M).amplitudes, detail::basis_vector(2, 0), detail::basis_vector(2, 1)},
        {2, 3},
        {"plus", "minus"},
        detail::register_labels(2, {{1, "plus"}, {2, "minus"}}, "minus"),
        std::move(U),
    };
}

/// The unambiguous readout followed by a register-controlled refresh of the
/// system from a copy qubit prepared in e+: on "plus" the copy is swapped in,
/// on "minus" it is phase flipped to e- first.
inline MeasurementModel build_repeatable_variant(int M) {
    if (M < 1) throw Error("build_repeatable_variant: M must be >= 1");
    const auto base = build_ud_unitary(M);
    const auto q = GradedSpace::qubit();
    TensorProduct tp({q, GradedSpace::levels(M), q, q, q, q});

    const Matrix ud_nat = kron(base.product.to_natural(base.unitary.matrix), Matrix::Identity(2, 2));
    const Matrix refresh_nat = detail::from_basis_action(tp, [](const detail::Digits &d) {
        detail::Digits out = d;
        cplx amp = 1.0;
        const bool plus = d[2] == 1 && d[3] == 0 && d[4] == 0;
        const bool minus = d[2] == 0 && d[3] == 1 && d[4] == 0;
        if (plus || minus) {
            if (minus && d[5] == 1) amp = -1.0;
            std::swap(out[0], out[5]);
        }
        return std::vector<std::pair<cplx, detail::Digits>>{{amp, out}};
    });
    ConservingUnitary U(tp, tp.from_natural(Matrix(refresh_nat * ud_nat)));
    detail::require_conserving(U, "build_repeatable_variant");

    auto wires = base.initial_wires;
    wires.push_back(e_plus());
    return MeasurementModel{
        "repeatable",
        tp,
        {"system", "resource", "r1", "r2", "r3", "copy"},
        std::move(wires),
        {2, 3, 4},
        base.outcomes,
        base.pointer,
        std::move(U),
    };
}

/// Exact readout of the number basis of a qubit: registers start in |01> and
/// are swapped iff the system is |0>. Reads 10 -> plus (system 0), else minus.
inline MeasurementModel build_number_readout() {
    const auto q = GradedSpace::qubit();
    TensorProduct tp({q, q, q});
    Matrix p0 = Matrix::Zero(2, 2), p1 = Matrix::Zero(2, 2);
    p0(0, 0) = 1.0;
    p1(1, 1) = 1.0;
    const Matrix Vnat = kron(p0, detail::qubit_swap(2, 0, 1)) + kron(p1, Matrix::Identity(4, 4));
    ConservingUnitary U(tp, tp.from_natural(Vnat));
    detail::require_conserving(U, "build_number_readout");
    return MeasurementModel{
        "number_readout",
        tp,
        {"system", "r1", "r2"},
        {detail::basis_vector(2, 0), detail::basis_vector(2, 1)},
        {1, 2},
        {"plus", "minus"},
        detail::register_labels(2, {{2, "plus"}}, "minus"),
        std::move(U),
    };
}

/// No interaction at all; the single register always reads fail.
inline MeasurementModel build_idle_model() {
    const auto q = GradedSpace::qubit();
    TensorProduct tp({q, q});
    ConservingUnitary U(tp, Matrix::Identity(4, 4));
    return MeasurementModel{
        "idle", tp, {"system", "r1"}, {detail::basis_vector(2, 0)}, {1}, {"plus", "minus", "fail"},
        {"fail", "fail"}, std::move(U),
    };
}

}  // namespace way
