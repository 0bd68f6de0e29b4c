#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace flexstage {

struct SubspaceOptions {
  int max_iterations = 300;
  /// Convergence when every requested pair has relative residual below this.
  double residual_tolerance = 1e-10;
  /// Shift as a fraction of tr(K)/tr(M); keeps K + σM definite for
  /// free-free structures.
  double relative_shift = 1e-7;
  unsigned seed = 12345;
};

struct EigenPairs {
  Eigen::VectorXd values;   // ascending generalized eigenvalues λ = ω²
  Eigen::MatrixXd vectors;  // M-orthonormal columns
  Eigen::VectorXd residuals;
  int iterations = 0;
};

/// Smallest `count` eigenpairs of K φ = λ M φ by shifted subspace iteration
/// with Rayleigh–Ritz projection. K symmetric positive semi-definite, M
/// symmetric positive definite (else Error(kEigensolver)).
EigenPairs solve_smallest_eigenpairs(const Eigen::SparseMatrix<double>& stiffness,
                                     const Eigen::SparseMatrix<double>& mass,
                                     int count,
                                     const SubspaceOptions& options = {});

}  // namespace flexstage
