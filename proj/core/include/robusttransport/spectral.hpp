#pragma once

#include <Eigen/Dense>

namespace rtr {

/// Full symmetric eigendecomposition, eigenvalues sorted descending.
/// eigenvectors stores v_i as columns, orthonormal.
struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;

  Eigen::MatrixXd reconstruct() const {
    return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
  }
};

// Cyclic Jacobi with a fixed sweep order, so the decomposition is
// deterministic given A. Throws if A deviates from symmetry beyond 1e-8
// (relative).
SpectralDecomposition sym_eig(const Eigen::MatrixXd& A);

// sum_i max(lambda_i(A) - shift, 0)
double positive_part_trace(const Eigen::MatrixXd& A, double shift);

// Orthogonal projector onto the span of eigenvectors of A - shift*I with
// nonnegative eigenvalue.
Eigen::MatrixXd nonneg_projector(const Eigen::MatrixXd& A, double shift);

// Spectral shrinkage A = sum_i min(1, 1/sqrt(lambda_i)) v_i v_i^T for a PSD
// covariance. Mapping a measure with covariance Sigma through A yields
// covariance <= I, with identity-coupling cost sum_{lambda_i>1}(sqrt(lambda_i)-1)^2.
Eigen::MatrixXd w2_shrink_map(const Eigen::MatrixXd& sigma);

// The identity-coupling cost above, computed directly from the spectrum.
double shrink_cost(const Eigen::MatrixXd& sigma);

}  // namespace rtr
