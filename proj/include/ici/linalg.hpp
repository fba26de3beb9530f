#pragma once

#include "ici/types.hpp"

namespace ici {

// Relative singular-value cutoff: singular values below kSvdRelTol times the
// largest one are treated as zero when inverting or computing rank.
inline constexpr double kSvdRelTol = 1e-12;

// Moore-Penrose pseudo-inverse via SVD.
Matrix pseudo_inverse(const Matrix& a);

// Hat matrix H = X (X^T X)^+ X^T, the orthogonal projector onto col(X).
Matrix hat_matrix(const Matrix& x);

// Annihilator I - H; maps col(X) to zero.
Matrix annihilator(const Matrix& x);

}  // namespace ici
