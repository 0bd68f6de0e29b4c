#include "flexstage/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "flexstage/error.hpp"

namespace flexstage {
namespace {

double trace(const Eigen::SparseMatrix<double>& a) {
  double t = 0.0;
  for (int k = 0; k < a.outerSize(); ++k) t += a.coeff(k, k);
  return t;
}

}  // namespace

EigenPairs solve_smallest_eigenpairs(const Eigen::SparseMatrix<double>& stiffness,
                                     const Eigen::SparseMatrix<double>& mass,
                                     int count,
                                     const SubspaceOptions& options) {
  const int n = static_cast<int>(stiffness.rows());
  if (count < 1 || count > n) {
    throw Error(ErrorKind::kInvalidArgument,
                "requested eigenpair count out of range");
  }

  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> mass_check(mass);
  if (mass_check.info() != Eigen::Success) {
    throw Error(ErrorKind::kEigensolver,
                "mass matrix is not positive definite");
  }

  // tr(K)/tr(M) sets the operator scale; rigid-mode residuals are measured
  // against it because ‖Kφ‖ vanishes for them.
  const double operator_scale = trace(stiffness) / trace(mass);
  const double shift = options.relative_shift * operator_scale;
  Eigen::SparseMatrix<double> shifted = stiffness + shift * mass;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(shifted);
  if (solver.info() != Eigen::Success ||
      solver.vectorD().minCoeff() <= 0.0) {
    throw Error(ErrorKind::kEigensolver,
                "shifted stiffness K + σM is not positive definite");
  }

  const int q = std::min(n, std::max(2 * count, count + 8));
  std::mt19937 rng(options.seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(n, q);
  for (int j = 0; j < q; ++j) {
    for (int i = 0; i < n; ++i) x(i, j) = normal(rng);
  }

  EigenPairs out;
  Eigen::VectorXd ritz;
  double worst = 0.0;
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    const Eigen::MatrixXd y = mass * x;
    const Eigen::MatrixXd xbar = solver.solve(y);
    Eigen::MatrixXd kr = xbar.transpose() * y;
    Eigen::MatrixXd mr = xbar.transpose() * (mass * xbar);
    kr = 0.5 * (kr + kr.transpose()).eval();
    mr = 0.5 * (mr + mr.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> small(kr, mr);
    if (small.info() != Eigen::Success) {
      throw Error(ErrorKind::kEigensolver,
                  "Rayleigh-Ritz projection failed at iteration " +
                      std::to_string(iter));
    }
    x = xbar * small.eigenvectors();
    ritz = small.eigenvalues().array() - shift;

    // Residuals of the wanted pairs.
    const Eigen::MatrixXd kx = stiffness * x.leftCols(count);
    const Eigen::MatrixXd mx = mass * x.leftCols(count);
    Eigen::VectorXd res(count);
    for (int j = 0; j < count; ++j) {
      const double scale = std::max(kx.col(j).norm(),
                                    1e-4 * operator_scale * mx.col(j).norm());
      res[j] = (kx.col(j) - ritz[j] * mx.col(j)).norm() / scale;
    }
    worst = res.maxCoeff();
    if (worst <= options.residual_tolerance) {
      out.values = ritz.head(count);
      out.vectors = x.leftCols(count);
      out.residuals = res;
      out.iterations = iter;
      return out;
    }
  }

  std::ostringstream msg;
  msg << "subspace iteration did not converge after "
      << options.max_iterations << " iterations (worst relative residual "
      << worst << ", tolerance " << options.residual_tolerance << ")";
  throw Error(ErrorKind::kEigensolver, msg.str());
}

}  // namespace flexstage
