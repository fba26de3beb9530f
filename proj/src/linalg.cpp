#include "ici/linalg.hpp"

#include <Eigen/SVD>
#include <stdexcept>
#include <string>

namespace ici {

namespace {

void check_input(const Matrix& a, const char* op) {
  if (a.rows() == 0 || a.cols() == 0) {
    throw std::invalid_argument(std::string(op) + ": matrix must be non-empty");
  }
  if (!a.allFinite()) {
    throw std::invalid_argument(std::string(op) + ": matrix entries must be finite");
  }
}

}  // namespace

Matrix pseudo_inverse(const Matrix& a) {
  check_input(a, "pseudo_inverse");
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double cutoff = kSvdRelTol * sv(0);
  Vector inv = Vector::Zero(sv.size());
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff && sv(i) > 0.0) inv(i) = 1.0 / sv(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix hat_matrix(const Matrix& x) {
  check_input(x, "hat_matrix");
  // X (X^T X)^+ X^T equals U_r U_r^T where U_r spans the singular directions
  // above the rank cutoff; forming it this way avoids squaring the condition
  // number through X^T X.
  Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU);
  const Vector& sv = svd.singularValues();
  const double cutoff = kSvdRelTol * sv(0);
  Index rank = 0;
  while (rank < sv.size() && sv(rank) > cutoff && sv(rank) > 0.0) ++rank;
  const auto u = svd.matrixU().leftCols(rank);
  return u * u.transpose();
}

Matrix annihilator(const Matrix& x) {
  return Matrix::Identity(x.rows(), x.rows()) - hat_matrix(x);
}

}  // namespace ici
