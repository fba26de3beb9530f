#pragma once

#include <cstdint>
#include <vector>

#include "ici/types.hpp"

namespace ici {

enum class ClassifierKind { logistic, svm };

// Linear multiclass model; column j of `weights` and entry j of `bias` score
// class `classes[j]`.
struct LinearModel {
  Matrix weights;  // D x N
  Vector bias;     // N
  std::vector<int> classes;
  ClassifierKind kind = ClassifierKind::logistic;
};

struct Prediction {
  std::vector<int> labels;  // m
  Matrix scores;            // m x N; softmax probabilities for logistic models
};

// Multinomial logistic regression: mean cross-entropy plus (l2/2)*||W||_F^2
// (bias unregularized), minimized by deterministic full-batch quasi-Newton
// iteration from zero initialization. Labels must cover every class id in
// [0, num_classes); num_classes = 0 infers max(labels) + 1. The seed is kept
// for interface stability; training is seed-independent.
LinearModel train_logistic(const Matrix& features, const std::vector<int>& labels, double l2 = 1.0,
                           std::uint64_t seed = 0, int num_classes = 0);

// One-vs-rest linear SVM per class k:
//   (1/2)*||w_k||^2 + c * sum_i max(0, 1 - s_i (w_k.x_i + b_k))^2,
// s_i = +/-1, bias unregularized, deterministic full-batch optimization.
LinearModel train_svm(const Matrix& features, const std::vector<int>& labels, double c = 1.0,
                      std::uint64_t seed = 0, int num_classes = 0);

// Argmax prediction; ties go to the smallest class index. Logistic scores are
// softmax probabilities, SVM scores raw decision values.
Prediction predict(const LinearModel& model, const Matrix& features);

namespace detail {

// Row-wise softmax with max-shift; each output row sums to 1.
Matrix softmax_rows(const Matrix& scores);

// Objective and gradients of the logistic training problem at (w, b);
// gradient outputs may be null. Exposed for finite-difference checks.
double logistic_loss(const Matrix& w, const Vector& b, const Matrix& x,
                     const std::vector<int>& y, int num_classes, double l2, Matrix* grad_w,
                     Vector* grad_b);

// Same for the one-vs-rest squared-hinge objective, summed over classes.
double svm_loss(const Matrix& w, const Vector& b, const Matrix& x, const std::vector<int>& y,
                int num_classes, double c, Matrix* grad_w, Vector* grad_b);

}  // namespace detail

}  // namespace ici
