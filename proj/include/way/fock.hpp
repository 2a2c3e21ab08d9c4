#pragma once

// Charge-graded Hilbert spaces, states on them, and the U(1) twirl.
//
// A GradedSpace lists integer charges in increasing order together with the
// dimension of each charge sector. Basis vectors are stored sector by sector,
// so every operator that commutes with the number operator is block diagonal
// in the stored basis and sector blocks can be read off by offset.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "way/core.hpp"

namespace way {

class GradedSpace {
public:
    GradedSpace() = default;

    GradedSpace(std::vector<int> charges, std::vector<int> sector_dims)
        : charges_(std::move(charges)), dims_(std::move(sector_dims)) {
        if (charges_.size() != dims_.size())
            throw Error("GradedSpace: charges and sector_dims differ in length");
        if (charges_.empty()) throw Error("GradedSpace: at least one sector is required");
        for (std::size_t i = 0; i < charges_.size(); ++i) {
            if (dims_[i] <= 0) throw Error("GradedSpace: sector dimensions must be positive");
            if (i > 0 && charges_[i] <= charges_[i - 1])
                throw Error("GradedSpace: charges must be strictly increasing");
        }
        offsets_.resize(charges_.size());
        std::size_t off = 0;
        for (std::size_t i = 0; i < charges_.size(); ++i) {
            offsets_[i] = off;
            off += static_cast<std::size_t>(dims_[i]);
        }
        total_ = off;
    }

    /// One basis vector per charge 0..max_charge (a truncated oscillator).
    static GradedSpace levels(int max_charge) {
        if (max_charge < 0) throw Error("GradedSpace::levels: max_charge must be >= 0");
        std::vector<int> c(static_cast<std::size_t>(max_charge) + 1);
        std::iota(c.begin(), c.end(), 0);
        return GradedSpace(std::move(c), std::vector<int>(c.size(), 1));
    }
    static GradedSpace qubit() { return levels(1); }
    static GradedSpace trivial() { return GradedSpace({0}, {1}); }

    const std::vector<int> &charges() const { return charges_; }
    const std::vector<int> &sector_dims() const { return dims_; }
    std::size_t total_dim() const { return total_; }
    std::size_t num_sectors() const { return charges_.size(); }

    bool has_charge(int n) const { return std::binary_search(charges_.begin(), charges_.end(), n); }

    std::size_t sector_index(int n) const {
        auto it = std::lower_bound(charges_.begin(), charges_.end(), n);
        if (it == charges_.end() || *it != n)
            throw Error("GradedSpace: unknown charge " + std::to_string(n));
        return static_cast<std::size_t>(it - charges_.begin());
    }
    std::size_t offset(int n) const { return offsets_[sector_index(n)]; }
    std::size_t sector_dim(int n) const { return static_cast<std::size_t>(dims_[sector_index(n)]); }

    int charge_of(std::size_t basis_index) const {
        auto it = std::upper_bound(offsets_.begin(), offsets_.end(), basis_index);
        return charges_[static_cast<std::size_t>(it - offsets_.begin()) - 1];
    }

    friend bool operator==(const GradedSpace &a, const GradedSpace &b) {
        return a.charges_ == b.charges_ && a.dims_ == b.dims_;
    }

private:
    std::vector<int> charges_;
    std::vector<int> dims_;
    std::vector<std::size_t> offsets_;
    std::size_t total_ = 0;
};

/// Tensor product of graded spaces with additive charge.
///
/// The "natural" basis is the row-major Kronecker order of the factors. The
/// composite basis is sorted by total charge, ties broken by natural order,
/// which is lexicographic in (charge, index within sector) of each factor.
class TensorProduct {
public:
    explicit TensorProduct(std::vector<GradedSpace> factors) : factors_(std::move(factors)) {
        if (factors_.empty()) throw Error("TensorProduct: no factors");
        std::size_t total = 1;
        for (const auto &f : factors_) total *= f.total_dim();

        std::vector<int> natural_charge(total, 0);
        for (std::size_t idx = 0; idx < total; ++idx) {
            std::size_t rem = idx;
            int q = 0;
            for (std::size_t f = factors_.size(); f-- > 0;) {
                const std::size_t d = factors_[f].total_dim();
                q += factors_[f].charge_of(rem % d);
                rem /= d;
            }
            natural_charge[idx] = q;
        }
        std::vector<std::size_t> order(total);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return natural_charge[a] < natural_charge[b];
        });
        to_composite_.resize(total);
        for (std::size_t pos = 0; pos < total; ++pos) to_composite_[order[pos]] = pos;
        to_natural_ = std::move(order);

        std::vector<int> charges, dims;
        for (std::size_t pos = 0; pos < total; ++pos) {
            const int q = natural_charge[to_natural_[pos]];
            if (charges.empty() || charges.back() != q) {
                charges.push_back(q);
                dims.push_back(0);
            }
            ++dims.back();
        }
        space_ = GradedSpace(std::move(charges), std::move(dims));
    }

    const GradedSpace &space() const { return space_; }
    const std::vector<GradedSpace> &factors() const { return factors_; }
    const GradedSpace &factor(std::size_t i) const { return factors_.at(i); }
    std::size_t num_factors() const { return factors_.size(); }

    std::size_t natural_index(std::span<const std::size_t> factor_indices) const {
        if (factor_indices.size() != factors_.size()) throw Error("TensorProduct: wrong number of indices");
        std::size_t idx = 0;
        for (std::size_t f = 0; f < factors_.size(); ++f) {
            if (factor_indices[f] >= factors_[f].total_dim()) throw Error("TensorProduct: index out of range");
            idx = idx * factors_[f].total_dim() + factor_indices[f];
        }
        return idx;
    }

    std::size_t composite_index(std::span<const std::size_t> factor_indices) const {
        return to_composite_[natural_index(factor_indices)];
    }
    std::size_t composite_index(std::initializer_list<std::size_t> factor_indices) const {
        return composite_index(std::span<const std::size_t>(factor_indices.begin(), factor_indices.size()));
    }

    std::vector<std::size_t> factor_indices(std::size_t composite) const {
        std::size_t rem = to_natural_.at(composite);
        std::vector<std::size_t> out(factors_.size());
        for (std::size_t f = factors_.size(); f-- > 0;) {
            out[f] = rem % factors_[f].total_dim();
            rem /= factors_[f].total_dim();
        }
        return out;
    }

    const std::vector<std::size_t> &natural_to_composite() const { return to_composite_; }

    Vector from_natural(const Vector &v) const {
        Vector out(v.size());
        for (std::size_t i = 0; i < to_composite_.size(); ++i) out(to_composite_[i]) = v(i);
        return out;
    }
    Vector to_natural(const Vector &v) const {
        Vector out(v.size());
        for (std::size_t i = 0; i < to_composite_.size(); ++i) out(i) = v(to_composite_[i]);
        return out;
    }
    Matrix from_natural(const Matrix &m) const {
        const auto n = static_cast<Eigen::Index>(to_composite_.size());
        Matrix out(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                out(to_composite_[i], to_composite_[j]) = m(i, j);
        return out;
    }
    Matrix to_natural(const Matrix &m) const {
        const auto n = static_cast<Eigen::Index>(to_composite_.size());
        Matrix out(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                out(i, j) = m(to_composite_[i], to_composite_[j]);
        return out;
    }

    /// Product vector, one (factor-basis) vector per factor.
    Vector product(const std::vector<Vector> &parts) const {
        check_parts(parts.size());
        Vector acc = parts[0];
        for (std::size_t f = 1; f < parts.size(); ++f) acc = kron(acc, parts[f]);
        check_dim(acc.size());
        return from_natural(acc);
    }

    /// Product operator, one (factor-basis) matrix per factor.
    Matrix product(const std::vector<Matrix> &parts) const {
        check_parts(parts.size());
        Matrix acc = parts[0];
        for (std::size_t f = 1; f < parts.size(); ++f) acc = kron(acc, parts[f]);
        check_dim(acc.rows());
        return from_natural(acc);
    }

    /// Embeds an operator acting on a single factor.
    Matrix embed(std::size_t factor, const Matrix &op) const {
        std::vector<Matrix> parts;
        for (std::size_t f = 0; f < factors_.size(); ++f) {
            const auto d = static_cast<Eigen::Index>(factors_[f].total_dim());
            parts.push_back(f == factor ? op : Matrix::Identity(d, d));
        }
        return product(parts);
    }

    /// Reduced state on the listed factors (kept in increasing factor order),
    /// expressed in the natural basis of the kept factors.
    Matrix partial_trace(const Matrix &rho, std::vector<std::size_t> keep) const {
        std::sort(keep.begin(), keep.end());
        keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
        const Matrix nat = to_natural(rho);
        const std::size_t nf = factors_.size();
        std::vector<bool> kept(nf, false);
        for (auto k : keep) kept.at(k) = true;

        std::size_t dk = 1, dt = 1;
        for (std::size_t f = 0; f < nf; ++f) (kept[f] ? dk : dt) *= factors_[f].total_dim();
        Matrix out = Matrix::Zero(static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dk));

        const std::size_t total = to_composite_.size();
        std::vector<std::size_t> keep_idx(total), trace_idx(total);
        for (std::size_t idx = 0; idx < total; ++idx) {
            std::size_t rem = idx, ki = 0, ti = 0, km = 1, tm = 1;
            for (std::size_t f = nf; f-- > 0;) {
                const std::size_t d = factors_[f].total_dim();
                const std::size_t digit = rem % d;
                rem /= d;
                if (kept[f]) { ki += digit * km; km *= d; }
                else { ti += digit * tm; tm *= d; }
            }
            keep_idx[idx] = ki;
            trace_idx[idx] = ti;
        }
        for (std::size_t i = 0; i < total; ++i)
            for (std::size_t j = 0; j < total; ++j)
                if (trace_idx[i] == trace_idx[j])
                    out(static_cast<Eigen::Index>(keep_idx[i]), static_cast<Eigen::Index>(keep_idx[j])) +=
                        nat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        return out;
    }

private:
    void check_parts(std::size_t n) const {
        if (n != factors_.size()) throw Error("TensorProduct: wrong number of factor parts");
    }
    void check_dim(Eigen::Index n) const {
        if (static_cast<std::size_t>(n) != space_.total_dim())
            throw Error("TensorProduct: factor part dimension mismatch");
    }

    std::vector<GradedSpace> factors_;
    GradedSpace space_;
    std::vector<std::size_t> to_composite_;
    std::vector<std::size_t> to_natural_;
};

inline TensorProduct tensor(const GradedSpace &a, const GradedSpace &b) { return TensorProduct({a, b}); }

struct Observable {
    GradedSpace space;
    Matrix matrix;

    Observable(GradedSpace s, Matrix m) : space(std::move(s)), matrix(std::move(m)) {
        const auto d = static_cast<Eigen::Index>(space.total_dim());
        if (matrix.rows() != d || matrix.cols() != d) throw Error("Observable: dimension mismatch");
        if (!is_hermitian(matrix)) throw Error("Observable: matrix is not Hermitian");
    }
};

struct PureState {
    GradedSpace space;
    Vector amplitudes;
    double tolerance = kNumTol;

    PureState(GradedSpace s, Vector amps, double tol = kNumTol)
        : space(std::move(s)), amplitudes(std::move(amps)), tolerance(tol) {
        if (static_cast<std::size_t>(amplitudes.size()) != space.total_dim())
            throw Error("PureState: amplitude count does not match space dimension");
        if (std::abs(amplitudes.norm() - 1.0) > tolerance) throw Error("PureState: state is not normalized");
    }

    Matrix density() const { return amplitudes * amplitudes.adjoint(); }
};

/// Density operator stored as one block per charge sector.
struct BlockState {
    GradedSpace space;
    std::vector<Matrix> blocks;  // aligned with space.charges()

    BlockState(GradedSpace s, std::vector<Matrix> b) : space(std::move(s)), blocks(std::move(b)) {
        if (blocks.size() != space.num_sectors()) throw Error("BlockState: one block per sector required");
        double tr = 0.0;
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            const auto d = space.sector_dims()[i];
            if (blocks[i].rows() != d || blocks[i].cols() != d) throw Error("BlockState: block dimension mismatch");
            if (!is_psd(blocks[i])) throw Error("BlockState: block is not Hermitian PSD");
            tr += blocks[i].trace().real();
        }
        if (std::abs(tr - 1.0) > kNumTol) throw Error("BlockState: total trace is not 1");
    }

    const Matrix &block(int charge) const { return blocks[space.sector_index(charge)]; }
    double sector_weight(int charge) const { return block(charge).trace().real(); }

    Matrix dense() const {
        const auto d = static_cast<Eigen::Index>(space.total_dim());
        Matrix out = Matrix::Zero(d, d);
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            const auto off = static_cast<Eigen::Index>(space.offset(space.charges()[i]));
            out.block(off, off, blocks[i].rows(), blocks[i].cols()) = blocks[i];
        }
        return out;
    }
};

inline Observable number_operator(const GradedSpace &space) {
    const auto d = static_cast<Eigen::Index>(space.total_dim());
    Matrix m = Matrix::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) m(i, i) = space.charge_of(static_cast<std::size_t>(i));
    return Observable(space, std::move(m));
}

inline Observable sector_projector(const GradedSpace &space, int n) {
    const auto off = static_cast<Eigen::Index>(space.offset(n));
    const auto dn = static_cast<Eigen::Index>(space.sector_dim(n));
    const auto d = static_cast<Eigen::Index>(space.total_dim());
    Matrix m = Matrix::Zero(d, d);
    m.block(off, off, dn, dn).setIdentity();
    return Observable(space, std::move(m));
}

/// Full-space matrix that is `block` on sector `charge` and zero elsewhere.
inline Matrix embed_sector(const GradedSpace &space, int charge, const Matrix &block) {
    const auto d = static_cast<Eigen::Index>(space.total_dim());
    const auto off = static_cast<Eigen::Index>(space.offset(charge));
    Matrix out = Matrix::Zero(d, d);
    out.block(off, off, block.rows(), block.cols()) = block;
    return out;
}

/// exp(i theta N)
inline Matrix phase_rotation(const GradedSpace &space, double theta) {
    const auto d = static_cast<Eigen::Index>(space.total_dim());
    Matrix u = Matrix::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) u(i, i) = std::polar(1.0, theta * space.charge_of(static_cast<std::size_t>(i)));
    return u;
}

/// Group average over U(1); keeps the diagonal sector blocks of rho.
inline BlockState g_twirl(const Matrix &rho, const GradedSpace &space) {
    require_density(rho, static_cast<Eigen::Index>(space.total_dim()), "g_twirl");
    std::vector<Matrix> blocks;
    blocks.reserve(space.num_sectors());
    for (int n : space.charges()) {
        const auto off = static_cast<Eigen::Index>(space.offset(n));
        const auto dn = static_cast<Eigen::Index>(space.sector_dim(n));
        Matrix b = rho.block(off, off, dn, dn);
        b = (b + b.adjoint()) / 2.0;
        blocks.push_back(std::move(b));
    }
    return BlockState(space, std::move(blocks));
}

inline BlockState g_twirl(const PureState &psi) { return g_twirl(psi.density(), psi.space); }
inline BlockState g_twirl(const BlockState &s) { return g_twirl(s.dense(), s.space); }

inline double expectation(const Observable &obs, const Matrix &rho) {
    if (rho.rows() != obs.matrix.rows() || rho.cols() != obs.matrix.cols())
        throw Error("expectation: dimension mismatch");
    return (obs.matrix * rho).trace().real();
}
inline double expectation(const Observable &obs, const PureState &psi) {
    if (!(psi.space == obs.space)) throw Error("expectation: state and observable live on different spaces");
    return expectation(obs, psi.density());
}
inline double expectation(const Observable &obs, const BlockState &s) {
    if (!(s.space == obs.space)) throw Error("expectation: state and observable live on different spaces");
    return expectation(obs, s.dense());
}

inline double variance(const Observable &obs, const Matrix &rho) {
    if (rho.rows() != obs.matrix.rows() || rho.cols() != obs.matrix.cols())
        throw Error("variance: dimension mismatch");
    const double m1 = (obs.matrix * rho).trace().real();
    const double m2 = (obs.matrix * obs.matrix * rho).trace().real();
    return m2 - m1 * m1;
}
inline double variance(const Observable &obs, const PureState &psi) {
    if (!(psi.space == obs.space)) throw Error("variance: state and observable live on different spaces");
    return variance(obs, psi.density());
}
inline double variance(const Observable &obs, const BlockState &s) {
    if (!(s.space == obs.space)) throw Error("variance: state and observable live on different spaces");
    return variance(obs, s.dense());
}

/// Number eigenstate |n> on levels 0..max_charge.
inline PureState number_state(int n, int max_charge) {
    auto space = GradedSpace::levels(max_charge);
    Vector v = Vector::Zero(static_cast<Eigen::Index>(space.total_dim()));
    v(static_cast<Eigen::Index>(space.offset(n))) = 1.0;
    return PureState(std::move(space), std::move(v));
}

/// Equal-weight superposition of |0>..|M>.
inline PureState uniform_state(int M) {
    if (M < 0) throw Error("uniform_state: M must be >= 0");
    auto space = GradedSpace::levels(M);
    Vector v = Vector::Constant(M + 1, cplx(1.0 / std::sqrt(static_cast<double>(M + 1)), 0.0));
    return PureState(std::move(space), std::move(v));
}

struct CoherentTruncation {
    int cutoff = 0;              // highest retained level
    double discarded_mass = 0.0; // Poisson mass above the cutoff before renormalizing
};

namespace detail {

inline double log_poisson(double mean, int n) {
    if (mean == 0.0) return n == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    return -mean + n * std::log(mean) - std::lgamma(n + 1.0);
}

inline CoherentTruncation coherent_cutoff(double mean, double tail_mass) {
    if (mean == 0.0) return {0, 0.0};
    // Far enough out that the remaining Poisson mass is below double precision.
    const int n_max = static_cast<int>(std::ceil(mean + 40.0 + 40.0 * std::sqrt(mean)));
    std::vector<double> tail(static_cast<std::size_t>(n_max) + 2, 0.0);
    for (int n = n_max; n >= 0; --n)
        tail[static_cast<std::size_t>(n)] = tail[static_cast<std::size_t>(n) + 1] + std::exp(log_poisson(mean, n));
    for (int k = 0; k <= n_max; ++k) {
        const double above = tail[static_cast<std::size_t>(k) + 1];
        if (above < tail_mass) return {k, above};
    }
    return {n_max, tail[static_cast<std::size_t>(n_max) + 1]};
}

}  // namespace detail

inline CoherentTruncation coherent_truncation(double alpha, double tail_mass) {
    if (!(alpha >= 0.0)) throw Error("coherent_state: alpha must be >= 0");
    if (!(tail_mass > 0.0 && tail_mass < 1.0)) throw Error("coherent_state: tail_mass must lie in (0, 1)");
    return detail::coherent_cutoff(alpha * alpha, tail_mass);
}

/// Real-amplitude coherent state truncated where the discarded Poisson mass
/// first drops below `tail_mass`, then renormalized.
inline PureState coherent_state(double alpha, double tail_mass = 1e-12) {
    const auto trunc = coherent_truncation(alpha, tail_mass);
    const double mean = alpha * alpha;
    Vector v(trunc.cutoff + 1);
    for (int n = 0; n <= trunc.cutoff; ++n) v(n) = std::exp(0.5 * detail::log_poisson(mean, n));
    v /= v.norm();
    return PureState(GradedSpace::levels(trunc.cutoff), std::move(v));
}

/// Amplitudes proportional to sin((n+1) pi / (M+2)), n = 0..M, normalized numerically.
inline PureState opt_phase_state(int M) {
    if (M < 0) throw Error("opt_phase_state: M must be >= 0");
    const double x = std::numbers::pi / (M + 2);
    Vector v(M + 1);
    for (int n = 0; n <= M; ++n) v(n) = std::sin((n + 1) * x);
    v /= v.norm();
    return PureState(GradedSpace::levels(M), std::move(v));
}

/// Closed-form C^{-2} for the opt-phase amplitudes, with x = pi/(M+2):
/// (1 + 2M - csc(x) sin((2M+1)x)) / 4 + sin^2((M+1)x). Cross-check only.
inline double opt_phase_inverse_norm_sq_closed_form(int M) {
    const double x = std::numbers::pi / (M + 2);
    const double s = std::sin((M + 1) * x);
    return 0.25 * (1.0 + 2.0 * M - std::sin((2 * M + 1) * x) / std::sin(x)) + s * s;
}

}  // namespace way
