#pragma once

#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace way {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

// Hermiticity / PSD / norm checks.
inline constexpr double kNumTol = 1e-10;
// Eigenvalue threshold for rank and support decisions.
inline constexpr double kRankTol = 1e-9;
// Residual threshold for the convertibility LP.
inline constexpr double kFeasibilityTol = 1e-8;

/// Raised for violated preconditions on inputs (bad shapes, invalid states,
/// unsupported structure). Internal invariant failures use std::logic_error.
class Error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline double hermiticity_defect(const Matrix &m) {
    if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
    if (m.size() == 0) return 0.0;
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const Matrix &m, double tol = kNumTol) {
    return hermiticity_defect(m) <= tol;
}

inline RealVector hermitian_eigenvalues(const Matrix &m) {
    if (m.size() == 0) return RealVector{};
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

inline double min_eigenvalue(const Matrix &m) {
    if (m.size() == 0) return 0.0;
    return hermitian_eigenvalues(m).minCoeff();
}

inline bool is_psd(const Matrix &m, double tol = kNumTol) {
    return is_hermitian(m, tol) && min_eigenvalue(m) >= -tol;
}

/// Largest singular value.
inline double operator_norm(const Matrix &m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

inline double trace_norm(const Matrix &hermitian) {
    return hermitian_eigenvalues(hermitian).cwiseAbs().sum();
}

inline Matrix commutator(const Matrix &a, const Matrix &b) { return a * b - b * a; }

/// Projector onto the span of eigenvectors whose eigenvalue exceeds `tol`.
inline Matrix support_projector(const Matrix &psd, double tol = kRankTol) {
    const auto n = psd.rows();
    Matrix out = Matrix::Zero(n, n);
    if (n == 0) return out;
    Eigen::SelfAdjointEigenSolver<Matrix> es(psd);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (es.eigenvalues()(i) > tol) {
            const Vector v = es.eigenvectors().col(i);
            out += v * v.adjoint();
        }
    }
    return out;
}

inline Eigen::Index numerical_rank(const Matrix &psd, double tol = kRankTol) {
    if (psd.size() == 0) return 0;
    const RealVector ev = hermitian_eigenvalues(psd);
    return (ev.array() > tol).count();
}

inline Matrix kron(const Matrix &a, const Matrix &b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Vector kron(const Vector &a, const Vector &b) {
    Vector out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

/// Throws unless `rho` is a Hermitian PSD unit-trace matrix of dimension `dim`.
inline void require_density(const Matrix &rho, Eigen::Index dim, const char *what) {
    using std::string;
    if (rho.rows() != dim || rho.cols() != dim)
        throw Error(string(what) + ": expected " + std::to_string(dim) + "x" + std::to_string(dim) +
                    " density matrix, got " + std::to_string(rho.rows()) + "x" +
                    std::to_string(rho.cols()));
    if (!is_hermitian(rho)) throw Error(string(what) + ": matrix is not Hermitian");
    if (min_eigenvalue(rho) < -kNumTol) throw Error(string(what) + ": matrix is not positive semidefinite");
    if (std::abs(rho.trace().real() - 1.0) > kNumTol) throw Error(string(what) + ": trace is not 1");
}

}  // namespace way
