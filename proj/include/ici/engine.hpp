#pragma once

#include <vector>

#include "ici/classify.hpp"
#include "ici/glasso_path.hpp"
#include "ici/rng.hpp"
#include "ici/types.hpp"

namespace ici {

// One pseudo-labeled instance under consideration for absorption.
struct Candidate {
  Index instance_index = 0;  // row in the episode feature table
  int pseudo_label = 0;
  double vanish_lambda = kVanishNever;
  double score = 0.0;  // classifier confidence for the claimed class
};

// Per-class candidate lists ordered ascending by vanish lambda (most credible
// first). `degenerate` marks a lambda_max = 0 problem where only tie-breakers
// ordered the lists.
struct CredibilityRanking {
  std::vector<std::vector<Candidate>> per_class;
  bool degenerate = false;
};

struct LabeledInstance {
  Index index = 0;
  int label = 0;
};

struct RegressionInputs {
  PathProblem problem;
  // Rows of the problem eligible for ranking (the pseudo rows); row
  // rankable[j] corresponds to the j-th pseudo instance passed in.
  std::vector<Index> rankable;
};

struct LoopState {
  std::vector<LabeledInstance> expanded_support;
  std::vector<Index> remaining_unlabeled;
  int iteration = 0;
  bool converged = false;
};

struct IterationRecord {
  int iteration = 0;
  std::vector<Candidate> selected;
};

struct GridParams {
  int num_points = 100;
  double eps = 0.01;
};

enum class SelectionStrategy { ici, random, confidence, nearest_neighbor };

struct LoopConfig {
  ClassifierKind classifier = ClassifierKind::logistic;
  double logistic_l2 = 1.0;
  double svm_c = 1.0;
  SelectionStrategy strategy = SelectionStrategy::ici;
  int quota = 5;
  // The loop stops once every class's remaining pseudo-labeled pool is at or
  // below this count; 0 means absorb everything.
  int stop_excluded_per_class = 5;
  // Hard cap on instances absorbed into any one class; < 0 disables.
  int absorb_cap_per_class = -1;
  GridParams grid;
  SolveOptions solver;
  int max_iterations = 100;
};

struct LoopResult {
  LinearModel model;
  LoopState state;
  std::vector<IterationRecord> trace;
};

// Stacks support rows (ground-truth one-hot) then pseudo rows (pseudo-label
// one-hot) into Y, forms X_tilde = I - H from the reduced features and
// Y_tilde = X_tilde * Y. Requires reduced dimension d < row count n.
RegressionInputs build_regression_inputs(const Matrix& features_reduced,
                                         const std::vector<LabeledInstance>& support,
                                         const std::vector<Candidate>& pseudo, int num_classes);

// Solves the regularization path of the problem and ranks candidates by their
// vanish lambda (candidates[j] owns problem row inputs.rankable[j]). Ties are
// broken by smaller residual row norm at the smallest grid lambda, then by
// instance index.
CredibilityRanking rank_by_ici(const RegressionInputs& inputs,
                               const std::vector<Candidate>& candidates, int num_classes,
                               const GridParams& grid = {}, const SolveOptions& solver = {});

// Takes up to quota top-ranked candidates per class; short classes contribute
// what they have, with no cross-class backfilling.
std::vector<Candidate> select_stratified(const CredibilityRanking& ranking, int quota);

// Ablation selection strategies: per-class uniform sample (random), per-class
// descending classifier score (confidence), per-class ascending distance to
// the class's expanded-support mean (nearest_neighbor).
std::vector<Candidate> select_baseline(SelectionStrategy strategy,
                                       const std::vector<Candidate>& candidates,
                                       const Matrix& features,
                                       const std::vector<LabeledInstance>& support,
                                       int num_classes, int quota, Rng& rng);

// The self-taught expansion loop: train on the expanded support, pseudo-label
// the remaining pool, rank, absorb the selected subset, and repeat until the
// stop rule fires; then train the final classifier. classifier_features feed
// the classifier, reduced_features the credibility regression; both index the
// same episode table rows.
LoopResult run_ici_loop(const Matrix& classifier_features, const Matrix& reduced_features,
                        const std::vector<LabeledInstance>& support,
                        const std::vector<Index>& unlabeled_pool, int num_classes,
                        const LoopConfig& config, Rng& rng);

}  // namespace ici
