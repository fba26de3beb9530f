#include "ici/dimred.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ici {

Vector l2_normalize(const Vector& v) {
  const double norm = v.norm();
  if (norm == 0.0) return v;
  return v / norm;
}

void l2_normalize_rows(Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    const double norm = m.row(i).norm();
    if (norm != 0.0) m.row(i) /= norm;
  }
}

PcaModel pca_fit(const Matrix& data, Index d_out) {
  const Index n = data.rows();
  const Index d_in = data.cols();
  if (n < 2) {
    throw std::invalid_argument("pca_fit: need at least 2 rows, got " + std::to_string(n));
  }
  if (d_out < 1 || d_out > std::min(n - 1, d_in)) {
    throw std::invalid_argument("pca_fit: d_out " + std::to_string(d_out) +
                                " outside [1, min(n-1, d_in)] = [1, " +
                                std::to_string(std::min(n - 1, d_in)) + "]");
  }

  PcaModel model;
  model.mean = data.colwise().mean();
  Matrix centered = data.rowwise() - model.mean.transpose();

  Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinV);
  model.components = svd.matrixV().leftCols(d_out);
  model.explained_variance =
      svd.singularValues().head(d_out).array().square() / static_cast<double>(n - 1);

  // Sign convention: largest-magnitude entry of each component positive
  // (first such entry on exact ties).
  for (Index c = 0; c < d_out; ++c) {
    Index arg = 0;
    double best = -1.0;
    for (Index r = 0; r < d_in; ++r) {
      const double mag = std::abs(model.components(r, c));
      if (mag > best) {
        best = mag;
        arg = r;
      }
    }
    if (model.components(arg, c) < 0.0) model.components.col(c) = -model.components.col(c);
  }
  return model;
}

Matrix pca_transform(const PcaModel& model, const Matrix& data) {
  if (data.cols() != model.mean.size()) {
    throw std::invalid_argument("pca_transform: data has " + std::to_string(data.cols()) +
                                " columns, model expects " + std::to_string(model.mean.size()));
  }
  return (data.rowwise() - model.mean.transpose()) * model.components;
}

}  // namespace ici
