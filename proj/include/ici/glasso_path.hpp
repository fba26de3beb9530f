#pragma once

#include <limits>
#include <vector>

#include "ici/types.hpp"

namespace ici {

// Multi-response group-lasso problem
//
//   min over gamma in R^{n x N} of
//     (1/(2n)) * ||Y_tilde - X_tilde * gamma||_F^2 + lambda * sum_i ||gamma_i||_2
//
// with one group per row gamma_i (one per instance). X_tilde is the
// annihilator of the instance features, Y_tilde = X_tilde * Y for one-hot Y.
// The 1/(2n) scaling is the convention under which
// lambda_max = max_i ||X_tilde_col_i^T Y_tilde|| / n is exact.
struct PathProblem {
  Matrix x_tilde;  // n x n
  Matrix y_tilde;  // n x N

  Index n() const { return x_tilde.rows(); }
  Index num_responses() const { return y_tilde.cols(); }
};

struct SolveOptions {
  double tol = 1e-7;      // max absolute gamma change per sweep
  int max_sweeps = 10000;
  double kkt_tol = 1e-5;
  double zero_tol = 1e-10;
};

// Per-solve diagnostics. Set record_objectives before the call to capture the
// objective after every sweep.
struct SolveInfo {
  bool converged = true;
  int sweeps = 0;
  double last_change = 0.0;
  bool record_objectives = false;
  std::vector<double> objectives;
};

struct IncidentalPath {
  std::vector<double> lambda_grid;  // K values, ascending
  Matrix gamma_norms;               // K x n row norms ||gamma_i(lambda_k)||_2
  Matrix final_gamma;               // solution at the smallest grid lambda
  std::vector<Matrix> gamma_full;   // K solutions, kept only on request
  std::vector<bool> converged;      // per grid point
};

inline constexpr double kVanishNever = std::numeric_limits<double>::infinity();

// Per-instance vanish points: the smallest grid lambda at and above which the
// instance's row stays zero, or kVanishNever if nonzero at the grid maximum.
struct VanishTable {
  std::vector<double> vanish_lambda;
};

// Smallest penalty with all-zero solution: max_i ||X_tilde_col_i^T Y_tilde|| / n.
double lambda_max(const PathProblem& p);

// K log-spaced values from eps*lmax to lmax, ascending. lmax = 0 degenerates
// to the single-point grid {0}.
std::vector<double> lambda_grid(double lmax, int k, double eps);

// Proximal operator of t*||.||_2: zero when ||z|| <= t, else (1 - t/||z||) z.
Vector group_soft_threshold(const Vector& z, double t);

// Cyclic blockwise coordinate descent at a single lambda, warm-started.
// Non-convergence is reported through info (best iterate returned).
Matrix solve_at_lambda(const PathProblem& p, double lambda, const Matrix& warm_start,
                       const SolveOptions& opts = {}, SolveInfo* info = nullptr);

// Solves the grid from its largest lambda down with warm starts and records
// per-instance row norms at every grid point.
IncidentalPath solve_path(const PathProblem& p, const std::vector<double>& grid,
                          const SolveOptions& opts = {}, bool keep_gamma = false);

VanishTable vanish_lambdas(const IncidentalPath& path, double zero_tol = 1e-10);

// Scaled objective value at gamma.
double objective_value(const PathProblem& p, double lambda, const Matrix& gamma);

// Largest violation of the stationarity conditions at gamma: for active rows
// || grad_i - lambda * gamma_i/||gamma_i|| ||, for inactive rows
// max(0, ||grad_i|| - lambda), where grad = X_tilde^T (Y_tilde - X_tilde gamma) / n.
double kkt_violation(const PathProblem& p, double lambda, const Matrix& gamma,
                     double zero_tol = 1e-10);

}  // namespace ici
