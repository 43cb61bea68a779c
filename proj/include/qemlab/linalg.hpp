#pragma once

// Small dense linear-algebra helpers on top of Eigen.

#include <complex>
#include <stdexcept>

#include <Eigen/Dense>

namespace qemlab {

using cplx = std::complex<double>;

inline Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline bool is_unitary(const Eigen::MatrixXcd& u, double tol = 1e-10) {
    Eigen::MatrixXcd d = u.adjoint() * u - Eigen::MatrixXcd::Identity(u.cols(), u.cols());
    return d.cwiseAbs().maxCoeff() < tol;
}

// Max-abs distance between a and e^{i phi} b, minimised over the global
// phase phi (phase fixed at the largest entry of a).
inline double dist_up_to_phase(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("shape mismatch");
    Eigen::Index imax = 0, jmax = 0;
    a.cwiseAbs().maxCoeff(&imax, &jmax);
    if (std::abs(a(imax, jmax)) < 1e-300) return b.cwiseAbs().maxCoeff();
    cplx phase = b(imax, jmax) / a(imax, jmax);
    double m = std::abs(phase);
    phase = (m < 1e-300) ? cplx(1, 0) : phase / m;
    return (a * phase - b).cwiseAbs().maxCoeff();
}

// e^{-i H t} for Hermitian H, via eigendecomposition.
inline Eigen::MatrixXcd hermitian_evolution(const Eigen::MatrixXcd& h, double t) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    const auto& vals = es.eigenvalues();
    Eigen::VectorXcd phases(vals.size());
    for (Eigen::Index k = 0; k < vals.size(); ++k)
        phases(k) = std::exp(cplx(0, -vals(k) * t));
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

inline double min_eigenvalue_hermitian(const Eigen::MatrixXcd& h) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    return es.eigenvalues().minCoeff();
}

}  // namespace qemlab
