#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <string>

#include "ulmc/errors.hpp"

namespace ulmc {

template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

template <class S>
inline Mat<S> symmetrized(const Mat<S>& m) {
  return ((m + m.transpose()) * S(0.5)).eval();
}

/// Cholesky factor of an SPD matrix; throws SingularMatrixError on failure.
template <class S>
inline Mat<S> cholesky_spd(const Mat<S>& m, const std::string& what) {
  Eigen::LLT<Mat<S>> llt(m);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError(what + ": matrix is not positive definite");
  }
  return llt.matrixL();
}

/// log(det M) for SPD M via Cholesky; throws SingularMatrixError.
template <class S>
inline S logdet_spd(const Mat<S>& m, const std::string& what) {
  Mat<S> l = cholesky_spd<S>(m, what);
  return S(2) * l.diagonal().array().log().sum();
}

/// Solve M x = b for SPD M.
template <class S>
inline Mat<S> solve_spd(const Mat<S>& m, const Mat<S>& b, const std::string& what) {
  Eigen::LLT<Mat<S>> llt(m);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError(what + ": matrix is not positive definite");
  }
  return llt.solve(b);
}

/// Principal square root of a symmetric PSD matrix (eigenvalues clipped at 0).
template <class S>
inline Mat<S> sqrt_psd(const Mat<S>& m) {
  Eigen::SelfAdjointEigenSolver<Mat<S>> es(symmetrized<S>(m));
  Vec<S> lam = es.eigenvalues().cwiseMax(S(0));
  return es.eigenvectors() * lam.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

template <class S>
inline S max_eigenvalue_sym(const Mat<S>& m) {
  Eigen::SelfAdjointEigenSolver<Mat<S>> es(symmetrized<S>(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

template <class S>
inline S min_eigenvalue_sym(const Mat<S>& m) {
  Eigen::SelfAdjointEigenSolver<Mat<S>> es(symmetrized<S>(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Spectral radius of a general square matrix.
template <class S>
inline S spectral_radius(const Mat<S>& a) {
  Eigen::EigenSolver<Mat<S>> es(a, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Largest singular value (operator 2-norm).
template <class S>
inline S operator_norm(const Mat<S>& a) {
  Eigen::SelfAdjointEigenSolver<Mat<S>> es((a.transpose() * a).eval(), Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(S(0), es.eigenvalues().maxCoeff()));
}

}  // namespace ulmc
