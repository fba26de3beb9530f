#include "ici/classify.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <stdexcept>
#include <string>

namespace ici {

namespace {

constexpr double kGradTol = 1e-7;
constexpr int kMaxIterations = 1000;

int resolve_num_classes(const std::vector<int>& labels, int num_classes) {
  if (labels.empty()) throw std::invalid_argument("train: no labels");
  int max_label = 0;
  for (int y : labels) {
    if (y < 0) throw std::invalid_argument("train: negative class id");
    max_label = std::max(max_label, y);
  }
  if (num_classes == 0) num_classes = max_label + 1;
  if (max_label >= num_classes) {
    throw std::invalid_argument("train: label " + std::to_string(max_label) +
                                " outside [0, " + std::to_string(num_classes) + ")");
  }
  std::vector<int> seen(static_cast<std::size_t>(num_classes), 0);
  for (int y : labels) seen[static_cast<std::size_t>(y)] = 1;
  for (int k = 0; k < num_classes; ++k) {
    if (!seen[static_cast<std::size_t>(k)]) {
      throw std::invalid_argument("train: class " + std::to_string(k) + " absent from labels");
    }
  }
  return num_classes;
}

// Limited-memory BFGS with Armijo backtracking on a flat parameter vector.
// Fully deterministic: fixed memory, fixed step schedule, no randomness.
void minimize_lbfgs(const std::function<double(const Vector&, Vector&)>& value_and_grad,
                    Vector& x, double grad_tol, int max_iterations) {
  const int memory = 10;
  const Index dim = x.size();
  Vector grad(dim), new_grad(dim);
  double fx = value_and_grad(x, grad);

  std::deque<Vector> s_list, y_list;
  std::deque<double> rho_list;
  Vector q(dim), direction(dim), x_try(dim);

  for (int iter = 0; iter < max_iterations; ++iter) {
    if (grad.norm() <= grad_tol) break;

    // Two-loop recursion.
    q = grad;
    std::vector<double> alpha(s_list.size());
    for (std::size_t j = s_list.size(); j-- > 0;) {
      alpha[j] = rho_list[j] * s_list[j].dot(q);
      q -= alpha[j] * y_list[j];
    }
    if (!s_list.empty()) {
      const Vector& s = s_list.back();
      const Vector& y = y_list.back();
      q *= s.dot(y) / y.squaredNorm();
    }
    for (std::size_t j = 0; j < s_list.size(); ++j) {
      const double beta = rho_list[j] * y_list[j].dot(q);
      q += (alpha[j] - beta) * s_list[j];
    }
    direction = -q;

    double dir_deriv = grad.dot(direction);
    if (dir_deriv >= 0.0) {  // curvature lost; restart from steepest descent
      direction = -grad;
      dir_deriv = -grad.squaredNorm();
      s_list.clear();
      y_list.clear();
      rho_list.clear();
    }

    double step = 1.0;
    double f_try = fx;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_try = x + step * direction;
      f_try = value_and_grad(x_try, new_grad);
      if (f_try <= fx + 1e-4 * step * dir_deriv) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no descent at machine precision

    const Vector s = x_try - x;
    const Vector y = new_grad - grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_list.push_back(s);
      y_list.push_back(y);
      rho_list.push_back(1.0 / sy);
      if (static_cast<int>(s_list.size()) > memory) {
        s_list.pop_front();
        y_list.pop_front();
        rho_list.pop_front();
      }
    }
    x = x_try;
    grad = new_grad;
    fx = f_try;
  }
}

LinearModel train_linear(const Matrix& features, const std::vector<int>& labels, int num_classes,
                         ClassifierKind kind,
                         const std::function<double(const Matrix&, const Vector&, Matrix*,
                                                    Vector*)>& loss) {
  const Index n = features.rows();
  const Index dim = features.cols();
  if (static_cast<Index>(labels.size()) != n) {
    throw std::invalid_argument("train: features/labels size mismatch");
  }
  const int num = resolve_num_classes(labels, num_classes);
  if (n < num) throw std::invalid_argument("train: need at least one example per class");

  // Parameters are packed column-major as [W (D*N); b (N)].
  Vector params = Vector::Zero(dim * num + num);
  Matrix grad_w(dim, num);
  Vector grad_b(num);
  const auto value_and_grad = [&](const Vector& x, Vector& grad) {
    const Eigen::Map<const Matrix> w(x.data(), dim, num);
    const Eigen::Map<const Vector> b(x.data() + dim * num, num);
    const double value = loss(w, b, &grad_w, &grad_b);
    grad.resize(x.size());
    Eigen::Map<Matrix>(grad.data(), dim, num) = grad_w;
    Eigen::Map<Vector>(grad.data() + dim * num, num) = grad_b;
    return value;
  };

  minimize_lbfgs(value_and_grad, params, kGradTol, kMaxIterations);

  LinearModel model;
  model.kind = kind;
  model.weights = Eigen::Map<const Matrix>(params.data(), dim, num);
  model.bias = Eigen::Map<const Vector>(params.data() + dim * num, num);
  model.classes.resize(static_cast<std::size_t>(num));
  for (int k = 0; k < num; ++k) model.classes[static_cast<std::size_t>(k)] = k;
  return model;
}

}  // namespace

namespace detail {

Matrix softmax_rows(const Matrix& scores) {
  Matrix probs(scores.rows(), scores.cols());
  for (Index i = 0; i < scores.rows(); ++i) {
    const double shift = scores.row(i).maxCoeff();
    probs.row(i) = (scores.row(i).array() - shift).exp();
    probs.row(i) /= probs.row(i).sum();
  }
  return probs;
}

double logistic_loss(const Matrix& w, const Vector& b, const Matrix& x,
                     const std::vector<int>& y, int num_classes, double l2, Matrix* grad_w,
                     Vector* grad_b) {
  const Index n = x.rows();
  Matrix scores = x * w;
  scores.rowwise() += b.transpose();
  const Matrix probs = softmax_rows(scores);

  double nll = 0.0;
  for (Index i = 0; i < n; ++i) {
    nll -= std::log(std::max(probs(i, y[static_cast<std::size_t>(i)]), 1e-300));
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  const double value = nll * inv_n + 0.5 * l2 * w.squaredNorm();

  if (grad_w || grad_b) {
    Matrix delta = probs;  // P - Y
    for (Index i = 0; i < n; ++i) delta(i, y[static_cast<std::size_t>(i)]) -= 1.0;
    if (grad_w) {
      grad_w->resize(x.cols(), num_classes);
      grad_w->noalias() = x.transpose() * delta;
      *grad_w *= inv_n;
      *grad_w += l2 * w;
    }
    if (grad_b) *grad_b = delta.colwise().sum().transpose() * inv_n;
  }
  return value;
}

double svm_loss(const Matrix& w, const Vector& b, const Matrix& x, const std::vector<int>& y,
                int num_classes, double c, Matrix* grad_w, Vector* grad_b) {
  const Index n = x.rows();
  Matrix scores = x * w;
  scores.rowwise() += b.transpose();

  // slack(i,k) = max(0, 1 - s_ik * scores(i,k)) with s_ik = +1 for the true
  // class and -1 otherwise.
  Matrix sign(n, num_classes);
  sign.setConstant(-1.0);
  for (Index i = 0; i < n; ++i) sign(i, y[static_cast<std::size_t>(i)]) = 1.0;
  const Matrix slack = (1.0 - sign.array() * scores.array()).cwiseMax(0.0).matrix();

  const double value = 0.5 * w.squaredNorm() + c * slack.squaredNorm();

  if (grad_w || grad_b) {
    const Matrix delta = (-2.0 * c) * slack.cwiseProduct(sign);
    if (grad_w) {
      grad_w->resize(x.cols(), num_classes);
      grad_w->noalias() = x.transpose() * delta;
      *grad_w += w;
    }
    if (grad_b) *grad_b = delta.colwise().sum().transpose();
  }
  return value;
}

}  // namespace detail

LinearModel train_logistic(const Matrix& features, const std::vector<int>& labels, double l2,
                           std::uint64_t /*seed*/, int num_classes) {
  const int num = resolve_num_classes(labels, num_classes);
  return train_linear(features, labels, num, ClassifierKind::logistic,
                      [&](const Matrix& w, const Vector& b, Matrix* gw, Vector* gb) {
                        return detail::logistic_loss(w, b, features, labels, num, l2, gw, gb);
                      });
}

LinearModel train_svm(const Matrix& features, const std::vector<int>& labels, double c,
                      std::uint64_t /*seed*/, int num_classes) {
  const int num = resolve_num_classes(labels, num_classes);
  return train_linear(features, labels, num, ClassifierKind::svm,
                      [&](const Matrix& w, const Vector& b, Matrix* gw, Vector* gb) {
                        return detail::svm_loss(w, b, features, labels, num, c, gw, gb);
                      });
}

Prediction predict(const LinearModel& model, const Matrix& features) {
  if (features.cols() != model.weights.rows()) {
    throw std::invalid_argument("predict: feature width " + std::to_string(features.cols()) +
                                " does not match model dimension " +
                                std::to_string(model.weights.rows()));
  }
  Matrix scores = features * model.weights;
  scores.rowwise() += model.bias.transpose();
  if (model.kind == ClassifierKind::logistic) scores = detail::softmax_rows(scores);

  Prediction pred;
  pred.scores = scores;
  pred.labels.resize(static_cast<std::size_t>(features.rows()));
  for (Index i = 0; i < features.rows(); ++i) {
    Index best = 0;
    for (Index k = 1; k < scores.cols(); ++k) {
      if (scores(i, k) > scores(i, best)) best = k;  // strict: ties keep the smaller index
    }
    pred.labels[static_cast<std::size_t>(i)] = model.classes[static_cast<std::size_t>(best)];
  }
  return pred;
}

}  // namespace ici
