#include "ici/glasso_path.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ici {

namespace {

constexpr double kTinyColumn = 1e-28;  // squared-norm floor for dead predictors

// One cyclic pass over the given groups. Updates gamma and the residual
// r = y_tilde - x_tilde * gamma in place; returns the largest absolute
// coefficient change.
double sweep(const PathProblem& p, double threshold, const Vector& col_sq, Matrix& gamma,
             Matrix& residual, const std::vector<Index>& order) {
  double max_change = 0.0;
  const Index num_responses = p.num_responses();
  Eigen::RowVectorXd z(num_responses);
  Eigen::RowVectorXd updated(num_responses);
  Eigen::RowVectorXd delta(num_responses);
  for (const Index i : order) {
    const auto column = p.x_tilde.col(i);
    if (col_sq(i) <= kTinyColumn) {
      // Dead predictor: the penalty drives the row to zero and the fit is
      // unaffected.
      const double mag = gamma.row(i).cwiseAbs().maxCoeff();
      if (mag > 0.0) {
        max_change = std::max(max_change, mag);
        gamma.row(i).setZero();
      }
      continue;
    }
    // z = column^T (residual + column * gamma_i) done without forming the
    // partial residual.
    z.noalias() = column.transpose() * residual;
    z += col_sq(i) * gamma.row(i);

    const double z_norm = z.norm();
    if (z_norm <= threshold) {
      updated.setZero();
    } else {
      updated = ((1.0 - threshold / z_norm) / col_sq(i)) * z;
    }
    delta = updated - gamma.row(i);
    const double change = delta.cwiseAbs().maxCoeff();
    if (change > 0.0) {
      residual.noalias() -= column * delta;
      gamma.row(i) = updated;
      max_change = std::max(max_change, change);
    }
  }
  return max_change;
}

std::vector<Index> all_indices(Index n) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  return idx;
}

}  // namespace

double lambda_max(const PathProblem& p) {
  if (p.n() < 1) throw std::invalid_argument("lambda_max: empty problem");
  double best = 0.0;
  for (Index i = 0; i < p.n(); ++i) {
    best = std::max(best, (p.x_tilde.col(i).transpose() * p.y_tilde).norm());
  }
  return best / static_cast<double>(p.n());
}

std::vector<double> lambda_grid(double lmax, int k, double eps) {
  if (lmax < 0.0) throw std::invalid_argument("lambda_grid: lmax must be nonnegative");
  if (lmax == 0.0) return {0.0};
  if (k < 2) throw std::invalid_argument("lambda_grid: need at least 2 grid points");
  if (eps <= 0.0 || eps >= 1.0) throw std::invalid_argument("lambda_grid: eps must be in (0,1)");
  std::vector<double> grid(static_cast<std::size_t>(k));
  const double log_min = std::log(eps * lmax);
  const double log_max = std::log(lmax);
  for (int j = 0; j < k; ++j) {
    grid[static_cast<std::size_t>(j)] =
        std::exp(log_min + (log_max - log_min) * static_cast<double>(j) /
                               static_cast<double>(k - 1));
  }
  grid.front() = eps * lmax;
  grid.back() = lmax;
  return grid;
}

Vector group_soft_threshold(const Vector& z, double t) {
  if (t < 0.0) throw std::invalid_argument("group_soft_threshold: t must be nonnegative");
  const double norm = z.norm();
  if (norm <= t) return Vector::Zero(z.size());
  return (1.0 - t / norm) * z;
}

Matrix solve_at_lambda(const PathProblem& p, double lambda, const Matrix& warm_start,
                       const SolveOptions& opts, SolveInfo* info) {
  const Index n = p.n();
  if (warm_start.rows() != n || warm_start.cols() != p.num_responses()) {
    throw std::invalid_argument("solve_at_lambda: warm_start must be n x N");
  }
  if (lambda < 0.0) throw std::invalid_argument("solve_at_lambda: lambda must be nonnegative");

  Vector col_sq(n);
  for (Index i = 0; i < n; ++i) col_sq(i) = p.x_tilde.col(i).squaredNorm();
  const double threshold = static_cast<double>(n) * lambda;

  Matrix gamma = warm_start;
  Matrix residual = p.y_tilde;
  if (!gamma.isZero(0.0)) residual.noalias() -= p.x_tilde * gamma;

  const std::vector<Index> full_order = all_indices(n);
  SolveInfo local;
  SolveInfo& out = info ? *info : local;
  out.converged = false;
  out.sweeps = 0;
  out.objectives.clear();

  const auto after_sweep = [&](double change) {
    ++out.sweeps;
    out.last_change = change;
    if (out.record_objectives) out.objectives.push_back(objective_value(p, lambda, gamma));
  };

  // glmnet-style schedule: full sweeps establish the active set, inner sweeps
  // iterate it to convergence, and a final full sweep certifies no group was
  // left behind.
  while (out.sweeps < opts.max_sweeps) {
    const double full_change = sweep(p, threshold, col_sq, gamma, residual, full_order);
    after_sweep(full_change);
    if (full_change < opts.tol) {
      out.converged = true;
      break;
    }

    std::vector<Index> active;
    for (Index i = 0; i < n; ++i) {
      if (gamma.row(i).cwiseAbs().maxCoeff() > 0.0) active.push_back(i);
    }
    while (out.sweeps < opts.max_sweeps) {
      const double change = sweep(p, threshold, col_sq, gamma, residual, active);
      after_sweep(change);
      if (change < opts.tol) break;
    }
  }
  return gamma;
}

IncidentalPath solve_path(const PathProblem& p, const std::vector<double>& grid,
                          const SolveOptions& opts, bool keep_gamma) {
  if (grid.empty()) throw std::invalid_argument("solve_path: empty grid");
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (grid[k] <= grid[k - 1]) {
      throw std::invalid_argument("solve_path: grid must be strictly ascending");
    }
  }

  const Index n = p.n();
  const std::size_t num_points = grid.size();
  IncidentalPath path;
  path.lambda_grid = grid;
  path.gamma_norms = Matrix::Zero(static_cast<Index>(num_points), n);
  path.converged.assign(num_points, true);
  if (keep_gamma) path.gamma_full.resize(num_points);

  // Largest lambda first: the all-zero warm start is exact at lambda_max and
  // each solution seeds the next smaller lambda.
  Matrix warm = Matrix::Zero(n, p.num_responses());
  for (std::size_t k = num_points; k-- > 0;) {
    SolveInfo info;
    warm = solve_at_lambda(p, grid[k], warm, opts, &info);
    path.converged[k] = info.converged;
    for (Index i = 0; i < n; ++i) {
      path.gamma_norms(static_cast<Index>(k), i) = warm.row(i).norm();
    }
    if (keep_gamma) path.gamma_full[k] = warm;
    if (k == 0) path.final_gamma = warm;
  }
  return path;
}

VanishTable vanish_lambdas(const IncidentalPath& path, double zero_tol) {
  const Index n = path.gamma_norms.cols();
  const Index num_points = path.gamma_norms.rows();
  VanishTable table;
  table.vanish_lambda.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    Index k = num_points;
    while (k > 0 && path.gamma_norms(k - 1, i) <= zero_tol) --k;
    // Rows of gamma_norms at and above k are all zero; k == num_points means
    // the instance never vanished on the grid.
    table.vanish_lambda[static_cast<std::size_t>(i)] =
        (k == num_points) ? kVanishNever : path.lambda_grid[static_cast<std::size_t>(k)];
  }
  return table;
}

double objective_value(const PathProblem& p, double lambda, const Matrix& gamma) {
  const double fit = (p.y_tilde - p.x_tilde * gamma).squaredNorm();
  double penalty = 0.0;
  for (Index i = 0; i < gamma.rows(); ++i) penalty += gamma.row(i).norm();
  return 0.5 * fit / static_cast<double>(p.n()) + lambda * penalty;
}

double kkt_violation(const PathProblem& p, double lambda, const Matrix& gamma, double zero_tol) {
  const Matrix residual = p.y_tilde - p.x_tilde * gamma;
  const Matrix grad = (p.x_tilde.transpose() * residual) / static_cast<double>(p.n());
  double worst = 0.0;
  for (Index i = 0; i < gamma.rows(); ++i) {
    const double row_norm = gamma.row(i).norm();
    if (row_norm > zero_tol) {
      worst = std::max(worst, (grad.row(i) - lambda * gamma.row(i) / row_norm).norm());
    } else {
      worst = std::max(worst, grad.row(i).norm() - lambda);
    }
  }
  return std::max(worst, 0.0);
}

}  // namespace ici
