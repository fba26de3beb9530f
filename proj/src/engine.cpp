#include "ici/engine.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

#include "ici/linalg.hpp"

namespace ici {

namespace {

Matrix gather_rows(const Matrix& table, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), table.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = table.row(rows[i]);
  return out;
}

// Candidates in a canonical order so selection never depends on caller order.
std::vector<std::vector<Candidate>> by_class_canonical(const std::vector<Candidate>& candidates,
                                                       int num_classes) {
  std::vector<std::vector<Candidate>> per_class(static_cast<std::size_t>(num_classes));
  for (const Candidate& c : candidates) {
    if (c.pseudo_label < 0 || c.pseudo_label >= num_classes) {
      throw std::invalid_argument("candidate pseudo_label outside episode classes");
    }
    per_class[static_cast<std::size_t>(c.pseudo_label)].push_back(c);
  }
  for (auto& list : per_class) {
    std::sort(list.begin(), list.end(),
              [](const Candidate& a, const Candidate& b) { return a.instance_index < b.instance_index; });
  }
  return per_class;
}

std::vector<Candidate> take_per_class(const std::vector<std::vector<Candidate>>& per_class,
                                      const std::vector<int>& quotas) {
  std::vector<Candidate> out;
  for (std::size_t k = 0; k < per_class.size(); ++k) {
    const int take = std::min<int>(quotas[k], static_cast<int>(per_class[k].size()));
    out.insert(out.end(), per_class[k].begin(), per_class[k].begin() + take);
  }
  return out;
}

std::vector<Candidate> select_stratified_quotas(const CredibilityRanking& ranking,
                                                const std::vector<int>& quotas) {
  return take_per_class(ranking.per_class, quotas);
}

std::vector<Candidate> select_baseline_quotas(SelectionStrategy strategy,
                                              const std::vector<Candidate>& candidates,
                                              const Matrix& features,
                                              const std::vector<LabeledInstance>& support,
                                              int num_classes, const std::vector<int>& quotas,
                                              Rng& rng) {
  auto per_class = by_class_canonical(candidates, num_classes);

  switch (strategy) {
    case SelectionStrategy::random:
      for (auto& list : per_class) {
        rng.partial_shuffle(list, list.size());  // full shuffle, then truncate by quota
      }
      break;
    case SelectionStrategy::confidence:
      for (auto& list : per_class) {
        std::stable_sort(list.begin(), list.end(),
                         [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
      }
      break;
    case SelectionStrategy::nearest_neighbor: {
      // Distance to the class mean over the current expanded support.
      Matrix means = Matrix::Zero(num_classes, features.cols());
      std::vector<int> counts(static_cast<std::size_t>(num_classes), 0);
      for (const LabeledInstance& s : support) {
        means.row(s.label) += features.row(s.index);
        ++counts[static_cast<std::size_t>(s.label)];
      }
      for (int k = 0; k < num_classes; ++k) {
        if (counts[static_cast<std::size_t>(k)] > 0) means.row(k) /= counts[static_cast<std::size_t>(k)];
      }
      for (std::size_t k = 0; k < per_class.size(); ++k) {
        std::stable_sort(per_class[k].begin(), per_class[k].end(),
                         [&](const Candidate& a, const Candidate& b) {
                           const double da = (features.row(a.instance_index) -
                                              means.row(static_cast<Index>(k))).norm();
                           const double db = (features.row(b.instance_index) -
                                              means.row(static_cast<Index>(k))).norm();
                           return da < db;
                         });
      }
      break;
    }
    case SelectionStrategy::ici:
      throw std::invalid_argument("select_baseline: use rank_by_ici for the ici strategy");
  }
  return take_per_class(per_class, quotas);
}

}  // namespace

RegressionInputs build_regression_inputs(const Matrix& features_reduced,
                                         const std::vector<LabeledInstance>& support,
                                         const std::vector<Candidate>& pseudo, int num_classes) {
  const Index n = static_cast<Index>(support.size() + pseudo.size());
  const Index d = features_reduced.cols();
  if (n == 0) throw std::invalid_argument("build_regression_inputs: no instances");
  if (d >= n) {
    throw std::invalid_argument("build_regression_inputs: reduced dimension " + std::to_string(d) +
                                " must be below instance count " + std::to_string(n));
  }

  Matrix x(n, d);
  Matrix y = Matrix::Zero(n, num_classes);
  Index row = 0;
  for (const LabeledInstance& s : support) {
    if (s.label < 0 || s.label >= num_classes) {
      throw std::invalid_argument("build_regression_inputs: support label outside classes");
    }
    x.row(row) = features_reduced.row(s.index);
    y(row, s.label) = 1.0;
    ++row;
  }
  RegressionInputs inputs;
  inputs.rankable.reserve(pseudo.size());
  for (const Candidate& c : pseudo) {
    if (c.pseudo_label < 0 || c.pseudo_label >= num_classes) {
      throw std::invalid_argument("build_regression_inputs: pseudo label outside classes");
    }
    x.row(row) = features_reduced.row(c.instance_index);
    y(row, c.pseudo_label) = 1.0;
    inputs.rankable.push_back(row);
    ++row;
  }

  inputs.problem.x_tilde = annihilator(x);
  inputs.problem.y_tilde = inputs.problem.x_tilde * y;
  return inputs;
}

CredibilityRanking rank_by_ici(const RegressionInputs& inputs,
                               const std::vector<Candidate>& candidates, int num_classes,
                               const GridParams& grid, const SolveOptions& solver) {
  if (candidates.size() != inputs.rankable.size()) {
    throw std::invalid_argument("rank_by_ici: candidates must match rankable rows");
  }

  CredibilityRanking ranking;
  ranking.per_class.resize(static_cast<std::size_t>(num_classes));
  if (candidates.empty()) return ranking;

  const double lmax = lambda_max(inputs.problem);
  ranking.degenerate = (lmax == 0.0);

  std::vector<double> vanish(inputs.problem.n(), 0.0);
  Vector residual_row_norm = Vector::Zero(inputs.problem.n());
  if (!ranking.degenerate) {
    const std::vector<double> grid_values = lambda_grid(lmax, grid.num_points, grid.eps);
    const IncidentalPath path = solve_path(inputs.problem, grid_values, solver);
    const VanishTable table = vanish_lambdas(path, solver.zero_tol);
    vanish = table.vanish_lambda;
    const Matrix residual = inputs.problem.y_tilde - inputs.problem.x_tilde * path.final_gamma;
    residual_row_norm = residual.rowwise().norm();
  } else {
    // lambda_max = 0 means Y_tilde = 0: every gamma row vanishes immediately
    // and only the tie-breakers order the candidates.
    residual_row_norm = inputs.problem.y_tilde.rowwise().norm();
  }

  std::vector<Candidate> ranked = candidates;
  for (std::size_t j = 0; j < ranked.size(); ++j) {
    ranked[j].vanish_lambda = vanish[static_cast<std::size_t>(inputs.rankable[j])];
  }
  std::vector<std::size_t> order(ranked.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Candidate& ca = ranked[a];
    const Candidate& cb = ranked[b];
    if (ca.vanish_lambda != cb.vanish_lambda) return ca.vanish_lambda < cb.vanish_lambda;
    const double ra = residual_row_norm(inputs.rankable[a]);
    const double rb = residual_row_norm(inputs.rankable[b]);
    if (ra != rb) return ra < rb;
    return ca.instance_index < cb.instance_index;
  });
  for (const std::size_t j : order) {
    ranking.per_class[static_cast<std::size_t>(ranked[j].pseudo_label)].push_back(ranked[j]);
  }
  return ranking;
}

std::vector<Candidate> select_stratified(const CredibilityRanking& ranking, int quota) {
  if (quota < 1) throw std::invalid_argument("select_stratified: quota must be >= 1");
  return select_stratified_quotas(ranking,
                                  std::vector<int>(ranking.per_class.size(), quota));
}

std::vector<Candidate> select_baseline(SelectionStrategy strategy,
                                       const std::vector<Candidate>& candidates,
                                       const Matrix& features,
                                       const std::vector<LabeledInstance>& support,
                                       int num_classes, int quota, Rng& rng) {
  if (quota < 1) throw std::invalid_argument("select_baseline: quota must be >= 1");
  return select_baseline_quotas(strategy, candidates, features, support, num_classes,
                                std::vector<int>(static_cast<std::size_t>(num_classes), quota),
                                rng);
}

LoopResult run_ici_loop(const Matrix& classifier_features, const Matrix& reduced_features,
                        const std::vector<LabeledInstance>& support,
                        const std::vector<Index>& unlabeled_pool, int num_classes,
                        const LoopConfig& config, Rng& rng) {
  {
    std::set<Index> support_set;
    for (const LabeledInstance& s : support) support_set.insert(s.index);
    for (const Index u : unlabeled_pool) {
      if (support_set.count(u)) {
        throw std::invalid_argument("run_ici_loop: unlabeled pool overlaps the support set");
      }
    }
  }

  const auto train = [&](const std::vector<LabeledInstance>& labeled) {
    std::vector<Index> rows;
    std::vector<int> labels;
    rows.reserve(labeled.size());
    labels.reserve(labeled.size());
    for (const LabeledInstance& s : labeled) {
      rows.push_back(s.index);
      labels.push_back(s.label);
    }
    const Matrix x = gather_rows(classifier_features, rows);
    return config.classifier == ClassifierKind::logistic
               ? train_logistic(x, labels, config.logistic_l2, 0, num_classes)
               : train_svm(x, labels, config.svm_c, 0, num_classes);
  };

  LoopResult result;
  result.state.expanded_support = support;
  result.state.remaining_unlabeled = unlabeled_pool;
  std::sort(result.state.remaining_unlabeled.begin(), result.state.remaining_unlabeled.end());

  std::vector<int> absorbed_per_class(static_cast<std::size_t>(num_classes), 0);
  bool model_fresh = false;

  for (int iteration = 1; iteration <= config.max_iterations; ++iteration) {
    result.state.iteration = iteration - 1;
    result.model = train(result.state.expanded_support);
    model_fresh = true;

    if (result.state.remaining_unlabeled.empty()) {
      result.state.converged = true;
      break;
    }

    // Refresh pseudo-labels of the remaining pool with the newest classifier.
    const Matrix pool_x = gather_rows(classifier_features, result.state.remaining_unlabeled);
    const Prediction pred = predict(result.model, pool_x);
    std::vector<Candidate> candidates(result.state.remaining_unlabeled.size());
    std::vector<int> per_class_count(static_cast<std::size_t>(num_classes), 0);
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      Candidate& c = candidates[j];
      c.instance_index = result.state.remaining_unlabeled[j];
      c.pseudo_label = pred.labels[j];
      c.score = pred.scores(static_cast<Index>(j), c.pseudo_label);
      ++per_class_count[static_cast<std::size_t>(c.pseudo_label)];
    }

    const int worst = *std::max_element(per_class_count.begin(), per_class_count.end());
    if (worst <= config.stop_excluded_per_class) {
      result.state.converged = true;
      break;
    }

    std::vector<int> quotas(static_cast<std::size_t>(num_classes), config.quota);
    if (config.absorb_cap_per_class >= 0) {
      for (int k = 0; k < num_classes; ++k) {
        quotas[static_cast<std::size_t>(k)] =
            std::min(config.quota,
                     config.absorb_cap_per_class - absorbed_per_class[static_cast<std::size_t>(k)]);
        quotas[static_cast<std::size_t>(k)] = std::max(0, quotas[static_cast<std::size_t>(k)]);
      }
    }

    std::vector<Candidate> selected;
    if (config.strategy == SelectionStrategy::ici) {
      const RegressionInputs inputs = build_regression_inputs(
          reduced_features, result.state.expanded_support, candidates, num_classes);
      const CredibilityRanking ranking =
          rank_by_ici(inputs, candidates, num_classes, config.grid, config.solver);
      selected = select_stratified_quotas(ranking, quotas);
    } else {
      selected = select_baseline_quotas(config.strategy, candidates, classifier_features,
                                        result.state.expanded_support, num_classes, quotas, rng);
    }

    if (selected.empty()) {
      // Nothing absorbable (e.g. every class at its cap): the expansion is done.
      result.state.converged = true;
      break;
    }

    std::set<Index> taken;
    for (const Candidate& c : selected) {
      result.state.expanded_support.push_back({c.instance_index, c.pseudo_label});
      ++absorbed_per_class[static_cast<std::size_t>(c.pseudo_label)];
      taken.insert(c.instance_index);
    }
    std::erase_if(result.state.remaining_unlabeled,
                  [&](Index idx) { return taken.count(idx) > 0; });
    result.state.iteration = iteration;
    result.trace.push_back({iteration, std::move(selected)});
    model_fresh = false;
  }

  if (!model_fresh) result.model = train(result.state.expanded_support);
  return result;
}

}  // namespace ici
