#pragma once

#include <cmath>
#include <sstream>
#include <string>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "eitlin/error.hpp"
#include "eitlin/forward.hpp"
#include "eitlin/jacobian.hpp"

namespace eitlin {

/// A = Q diag(values) Q^T with eigenvalues sorted in descending order.
struct EigenDecomposition {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;

    Eigen::MatrixXd reconstruct() const { return vectors * values.asDiagonal() * vectors.transpose(); }
};

/// Relative spacing below which two eigenvalues are treated as one in the
/// divided differences of the logarithm.
inline constexpr double kRecurrentEigenvalueTolerance = 1e-8;

inline EigenDecomposition sym_eig(const SymMatrix& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a.matrix());
    if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed to converge");
    // Eigen sorts ascending
    return {solver.eigenvalues().reverse(), solver.eigenvectors().rowwise().reverse()};
}

namespace detail {

inline void require_positive_spectrum(const EigenDecomposition& eig) {
    const double smallest = eig.values.minCoeff();
    if (!(smallest > 0.0)) {
        std::ostringstream msg;
        msg << "matrix logarithm undefined: smallest eigenvalue " << smallest << " is not positive";
        throw NumericalError(msg.str());
    }
}

inline SymMatrix spectral_map(const EigenDecomposition& eig, const Eigen::VectorXd& mapped) {
    return SymMatrix::symmetrized(eig.vectors * mapped.asDiagonal() * eig.vectors.transpose());
}

/// Divided differences of log on the spectrum:
/// (log a - log b)/(a - b), and 1/a on (near-)coincident pairs.
inline Eigen::MatrixXd log_divided_differences(const Eigen::VectorXd& mu) {
    const Eigen::Index n = mu.size();
    Eigen::MatrixXd phi(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = 0; k < n; ++k) {
            const double a = mu[j];
            const double b = mu[k];
            if (std::abs(a - b) <= kRecurrentEigenvalueTolerance * std::max(a, b)) {
                phi(j, k) = 2.0 / (a + b);
            } else {
                // log1p keeps full accuracy for close but distinct eigenvalues
                const double x = (a - b) / b;
                phi(j, k) = std::abs(x) < 0.5 ? std::log1p(x) / (a - b) : (std::log(a) - std::log(b)) / (a - b);
            }
        }
    }
    return phi;
}

} // namespace detail

/// Principal logarithm of a symmetric positive-definite matrix.
inline SymMatrix logm_spd(const SymMatrix& a) {
    const EigenDecomposition eig = sym_eig(a);
    detail::require_positive_spectrum(eig);
    return detail::spectral_map(eig, eig.values.array().log().matrix());
}

inline SymMatrix expm_sym(const SymMatrix& a) {
    const EigenDecomposition eig = sym_eig(a);
    return detail::spectral_map(eig, eig.values.array().exp().matrix());
}

/// Frechet derivative of the matrix logarithm at A in direction E,
/// Q [ (Q^T E Q) o Phi ] Q^T with Phi the divided differences of log.
/// The eigen-data is always that of the unperturbed A.
inline Eigen::MatrixXd dlogm(const EigenDecomposition& eig, const Eigen::MatrixXd& direction) {
    detail::require_positive_spectrum(eig);
    const Eigen::MatrixXd phi = detail::log_divided_differences(eig.values);
    const Eigen::MatrixXd rotated = eig.vectors.transpose() * direction * eig.vectors;
    return eig.vectors * rotated.cwiseProduct(phi) * eig.vectors.transpose();
}

inline SymMatrix dlogm(const SymMatrix& a, const SymMatrix& direction) {
    return SymMatrix::symmetrized(dlogm(sym_eig(a), direction.matrix()));
}

/// Jacobian of log(forward map) from a log-conductivity Jacobian of the map
/// at the point where A was measured. One eigendecomposition of A serves
/// every slice.
inline JacobianTensor log_forward_jacobian(const SymMatrix& a, const JacobianTensor& j) {
    if (j.kind() != ParamKind::LogConductivity || j.logarithmic()) {
        throw ArgumentError("log_forward_jacobian expects a log-conductivity jacobian of the forward map");
    }
    require(a.dim() == j.dim(), "matrix and jacobian dimensions differ");
    const EigenDecomposition eig = sym_eig(a);
    detail::require_positive_spectrum(eig);
    const Eigen::MatrixXd phi = detail::log_divided_differences(eig.values);
    const Eigen::MatrixXd& q = eig.vectors;
    const int n = j.dim();

    Eigen::MatrixXd columns(j.columns().rows(), j.columns().cols());
    Eigen::MatrixXd rotated(n, n);
    for (int i = 0; i < j.parameter_count(); ++i) {
        Eigen::Map<const Eigen::MatrixXd> slice(j.columns().col(i).data(), n, n);
        rotated.noalias() = q.transpose() * slice * q;
        Eigen::Map<Eigen::MatrixXd> out(columns.col(i).data(), n, n);
        out.noalias() = q * rotated.cwiseProduct(phi) * q.transpose();
    }
    return JacobianTensor(n, std::move(columns), ParamKind::LogConductivity, j.point(), j.cell_count(), true);
}

} // namespace eitlin
