#pragma once

#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/Dense>

namespace secrecy {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

namespace linalg {

inline bool allFinite(const CMatrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
  return true;
}

// Number of singular values strictly above relTol * sigma_max.
inline int numericalRank(const RVector& singularValues, double relTol) {
  if (singularValues.size() == 0) return 0;
  const double smax = singularValues.maxCoeff();
  if (smax <= 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < singularValues.size(); ++i)
    if (singularValues(i) > relTol * smax) ++rank;
  return rank;
}

inline int numericalRank(const CMatrix& m, double relTol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  return numericalRank(svd.singularValues(), relTol);
}

// Orthonormal basis (columns) of null(m), size cols x (cols - rank).
inline CMatrix nullSpace(const CMatrix& m, double relTol) {
  const Eigen::Index n = m.cols();
  if (m.rows() == 0) return CMatrix::Identity(n, n);
  Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeFullV);
  const int rank = numericalRank(svd.singularValues(), relTol);
  return svd.matrixV().rightCols(n - rank);
}

// Orthonormal basis of range(m^H), i.e. the row space, size cols x rank.
inline CMatrix rowSpace(const CMatrix& m, double relTol) {
  if (m.rows() == 0) return CMatrix(m.cols(), 0);
  Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeFullV);
  const int rank = numericalRank(svd.singularValues(), relTol);
  return svd.matrixV().leftCols(rank);
}

// dim(span(a) ∩ span(b)) for orthonormal column bases a and b.
inline int intersectionDim(const CMatrix& a, const CMatrix& b, double relTol) {
  if (a.cols() == 0 || b.cols() == 0) return 0;
  CMatrix joined(a.rows(), a.cols() + b.cols());
  joined << a, b;
  return static_cast<int>(a.cols() + b.cols()) - numericalRank(joined, relTol);
}

inline double unitarityError(const CMatrix& u) {
  if (u.size() == 0) return 0.0;
  return (u.adjoint() * u - CMatrix::Identity(u.cols(), u.cols())).norm();
}

}  // namespace linalg
}  // namespace secrecy
