#pragma once

#include "ici/types.hpp"

namespace ici {

// Principal-component model fitted on mean-centered data. Columns of
// `components` are orthonormal; `explained_variance` is nonincreasing.
struct PcaModel {
  Vector mean;                // d_in
  Matrix components;          // d_in x d_out
  Vector explained_variance;  // d_out
};

// Scales v to unit Euclidean norm; the zero vector is returned unchanged.
Vector l2_normalize(const Vector& v);

// Normalizes every row of m in place (zero rows left alone).
void l2_normalize_rows(Matrix& m);

// Fits PCA on the rows of data. Components are the top right singular vectors
// of the centered data; the sign of each component is fixed so its
// largest-magnitude entry is positive. Requires n >= 2 and
// d_out <= min(n - 1, d_in).
PcaModel pca_fit(const Matrix& data, Index d_out);

// Projects rows of data: (data - mean) * components.
Matrix pca_transform(const PcaModel& model, const Matrix& data);

}  // namespace ici
