/**
 * @file linalg_util.hpp
 * @brief Small Hermitian-matrix helpers shared by the BD and solver code.
 */
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace swipt::detail {

/// Eigenvalues below kPdFloorRatio * lambda_max make a matrix count as
/// numerically singular for the A^{-1/2} computations.
inline constexpr double kPdFloorRatio = 1e-12;

inline Eigen::MatrixXcd hermitize(const Eigen::MatrixXcd& m) {
  return 0.5 * (m + m.adjoint());
}

inline double lmax_hermitian(const Eigen::MatrixXcd& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(hermitize(m),
                                                      Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

inline double lmin_hermitian(const Eigen::MatrixXcd& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(hermitize(m),
                                                      Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

/// Inverse square root of a Hermitian positive definite matrix.
/// Returns false (and leaves `out` untouched) when the matrix fails the
/// positive-definiteness floor; the caller decides how to cut.
inline bool inv_sqrt_hermitian(const Eigen::MatrixXcd& a,
                               Eigen::MatrixXcd& out) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(hermitize(a));
  const Eigen::VectorXd& evals = eig.eigenvalues();
  const double floor = kPdFloorRatio * std::max(evals.maxCoeff(), 0.0);
  if (evals.minCoeff() <= floor || evals.maxCoeff() <= 0.0) return false;
  out = eig.eigenvectors() *
        evals.cwiseSqrt().cwiseInverse().asDiagonal() *
        eig.eigenvectors().adjoint();
  return true;
}

/// log2 det(I + H S H^H) for Hermitian PSD S; the workhorse rate formula.
inline double rate_log2det(const Eigen::MatrixXcd& h,
                           const Eigen::MatrixXcd& s) {
  const Eigen::MatrixXcd gram =
      Eigen::MatrixXcd::Identity(h.rows(), h.rows()) + h * s * h.adjoint();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(hermitize(gram),
                                                      Eigen::EigenvaluesOnly);
  double rate = 0.0;
  for (Eigen::Index k = 0; k < eig.eigenvalues().size(); ++k) {
    rate += std::log2(std::max(eig.eigenvalues()[k], 1e-300));
  }
  return rate;
}

/// Project onto the PSD cone by clipping negative eigenvalues.
inline Eigen::MatrixXcd psd_clip(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(hermitize(m));
  return eig.eigenvectors() *
         eig.eigenvalues().cwiseMax(0.0).asDiagonal() *
         eig.eigenvectors().adjoint();
}

}  // namespace swipt::detail
