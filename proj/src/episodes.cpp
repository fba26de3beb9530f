#include "ici/episodes.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "ici/dimred.hpp"
#include "ici/rng.hpp"

namespace ici {

namespace {

// Flattened per-episode data in episode table order: support rows first, then
// the pool, then (for semi) the held-out queries.
struct EpisodeData {
  Matrix table;              // (support + pool) x dim, L2-normalized
  Matrix query;              // query x dim, L2-normalized
  std::vector<LabeledInstance> support;
  std::vector<Index> pool;        // table row indices
  std::vector<int> query_labels;  // episode-local
};

Matrix rows_from_store(const FeatureStore& store, const std::vector<int>& class_ids,
                       const std::vector<std::vector<Index>>& lists) {
  Index count = 0;
  for (const auto& l : lists) count += static_cast<Index>(l.size());
  Matrix out(count, store.dim);
  Index row = 0;
  for (std::size_t slot = 0; slot < lists.size(); ++slot) {
    const auto& instances = store.classes[static_cast<std::size_t>(class_ids[slot])];
    for (const Index idx : lists[slot]) {
      out.row(row++) = instances[static_cast<std::size_t>(idx)];
    }
  }
  return out;
}

EpisodeData assemble(const FeatureStore& store, const Episode& episode, const EpisodeSpec& spec) {
  EpisodeData data;
  const bool transductive = spec.setting == Setting::transductive;

  const Matrix support_x = rows_from_store(store, episode.class_ids, episode.support);
  const Matrix query_x = rows_from_store(store, episode.class_ids, episode.query);
  const Matrix pool_x = transductive
                            ? query_x
                            : rows_from_store(store, episode.class_ids, episode.unlabeled);

  data.table.resize(support_x.rows() + pool_x.rows(), store.dim);
  data.table << support_x, pool_x;
  l2_normalize_rows(data.table);

  if (transductive) {
    data.query = data.table.bottomRows(pool_x.rows());
  } else {
    data.query = query_x;
    l2_normalize_rows(data.query);
  }

  Index row = 0;
  for (std::size_t slot = 0; slot < episode.support.size(); ++slot) {
    for (std::size_t j = 0; j < episode.support[slot].size(); ++j) {
      data.support.push_back({row++, static_cast<int>(slot)});
    }
  }
  for (Index i = 0; i < pool_x.rows(); ++i) data.pool.push_back(row++);

  for (std::size_t slot = 0; slot < episode.query.size(); ++slot) {
    for (std::size_t j = 0; j < episode.query[slot].size(); ++j) {
      data.query_labels.push_back(static_cast<int>(slot));
    }
  }
  return data;
}

}  // namespace

Episode sample_episode(const FeatureStore& store, const EpisodeSpec& spec, Index episode_index) {
  if (spec.ways < 2 || spec.shots < 1 || spec.queries < 1 || spec.unlabeled < 0) {
    throw std::invalid_argument("sample_episode: invalid episode spec");
  }
  const Index num_classes = store.num_classes();
  if (num_classes < spec.ways) {
    throw std::invalid_argument("sample_episode: store has " + std::to_string(num_classes) +
                                " classes, episode needs " + std::to_string(spec.ways));
  }

  Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(episode_index)));

  std::vector<Index> class_order(static_cast<std::size_t>(num_classes));
  for (Index c = 0; c < num_classes; ++c) class_order[static_cast<std::size_t>(c)] = c;
  rng.partial_shuffle(class_order, static_cast<std::size_t>(spec.ways));

  Episode episode;
  episode.class_ids.resize(static_cast<std::size_t>(spec.ways));
  episode.support.resize(static_cast<std::size_t>(spec.ways));
  episode.query.resize(static_cast<std::size_t>(spec.ways));
  episode.unlabeled.resize(static_cast<std::size_t>(spec.ways));

  const bool want_unlabeled = spec.setting == Setting::semi;
  for (int slot = 0; slot < spec.ways; ++slot) {
    const int class_id = static_cast<int>(class_order[static_cast<std::size_t>(slot)]);
    episode.class_ids[static_cast<std::size_t>(slot)] = class_id;
    const Index available =
        static_cast<Index>(store.classes[static_cast<std::size_t>(class_id)].size());

    if (available < spec.shots + spec.queries) {
      throw std::invalid_argument("sample_episode: class " + std::to_string(class_id) + " has " +
                                  std::to_string(available) + " instances, episode needs " +
                                  std::to_string(spec.shots + spec.queries) +
                                  " for support + query");
    }
    Index take_unlabeled = 0;
    if (want_unlabeled) {
      take_unlabeled = std::min<Index>(spec.unlabeled, available - spec.shots - spec.queries);
      if (take_unlabeled < spec.unlabeled) episode.unlabeled_clamped = true;
    }

    std::vector<Index> order(static_cast<std::size_t>(available));
    for (Index i = 0; i < available; ++i) order[static_cast<std::size_t>(i)] = i;
    rng.shuffle(order);

    auto& sup = episode.support[static_cast<std::size_t>(slot)];
    auto& qry = episode.query[static_cast<std::size_t>(slot)];
    auto& unl = episode.unlabeled[static_cast<std::size_t>(slot)];
    sup.assign(order.begin(), order.begin() + spec.shots);
    qry.assign(order.begin() + spec.shots, order.begin() + spec.shots + spec.queries);
    unl.assign(order.begin() + spec.shots + spec.queries,
               order.begin() + spec.shots + spec.queries + take_unlabeled);
  }
  return episode;
}

EpisodeOutcome run_episode_pipeline(const FeatureStore& store, const Episode& episode,
                                    const EpisodeSpec& spec, const PipelineConfig& config,
                                    std::uint64_t pipeline_seed) {
  EpisodeData data = assemble(store, episode, spec);
  const int num_classes = spec.ways;
  Rng rng(pipeline_seed);

  EpisodeOutcome outcome;
  LinearModel model;

  if (data.pool.empty()) {
    // No pool: the loop degenerates to the plain classifier and the reduced
    // space is never needed.
    std::vector<Index> rows;
    std::vector<int> labels;
    for (const LabeledInstance& s : data.support) {
      rows.push_back(s.index);
      labels.push_back(s.label);
    }
    Matrix x(static_cast<Index>(rows.size()), data.table.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) x.row(static_cast<Index>(i)) = data.table.row(rows[i]);
    model = config.loop.classifier == ClassifierKind::logistic
                ? train_logistic(x, labels, config.loop.logistic_l2, 0, num_classes)
                : train_svm(x, labels, config.loop.svm_c, 0, num_classes);
  } else {
    const PcaModel pca = pca_fit(data.table, config.reduced_dim);
    const Matrix reduced = pca_transform(pca, data.table);
    const Matrix& classifier_table =
        config.classifier_space == ClassifierSpace::full ? data.table : reduced;

    LoopResult loop = run_ici_loop(classifier_table, reduced, data.support, data.pool,
                                   num_classes, config.loop, rng);
    outcome.iterations = static_cast<int>(loop.trace.size());
    outcome.loop_converged = loop.state.converged;
    if (config.collect_trace) outcome.trace = std::move(loop.trace);
    model = std::move(loop.model);

    if (config.classifier_space == ClassifierSpace::reduced) {
      data.query = pca_transform(pca, data.query);
    }
  }

  const Prediction pred = predict(model, data.query);
  Index correct = 0;
  for (std::size_t i = 0; i < data.query_labels.size(); ++i) {
    if (pred.labels[i] == data.query_labels[i]) ++correct;
  }
  outcome.accuracy = static_cast<double>(correct) / static_cast<double>(data.query_labels.size());
  return outcome;
}

RunReport evaluate(const FeatureStore& store, const EpisodeSpec& spec, Index episodes,
                   const PipelineConfig& config, int threads) {
  if (episodes < 1) throw std::invalid_argument("evaluate: need at least one episode");
  std::vector<EpisodeOutcome> outcomes;
  detail::run_indexed(
      episodes, threads,
      [&](Index idx) {
        const Episode episode = sample_episode(store, spec, idx);
        const std::uint64_t pipeline_seed =
            mix_seed(mix_seed(spec.seed, static_cast<std::uint64_t>(idx)), detail::kPipelineSalt);
        return run_episode_pipeline(store, episode, spec, config, pipeline_seed);
      },
      outcomes);
  return detail::aggregate(std::move(outcomes), config.collect_trace);
}

std::string config_fingerprint(const std::string& canonical) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (const unsigned char ch : canonical) {
    hash ^= ch;
    hash *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

namespace detail {

RunReport aggregate(std::vector<EpisodeOutcome>&& outcomes, bool keep_traces) {
  RunReport report;
  report.accuracies.reserve(outcomes.size());
  report.iterations.reserve(outcomes.size());
  for (auto& o : outcomes) {
    report.accuracies.push_back(o.accuracy);
    report.iterations.push_back(o.iterations);
    if (keep_traces) report.traces.push_back(std::move(o.trace));
  }
  const double count = static_cast<double>(report.accuracies.size());
  double sum = 0.0;
  for (const double a : report.accuracies) sum += a;
  report.mean = sum / count;
  if (report.accuracies.size() > 1) {
    double ss = 0.0;
    for (const double a : report.accuracies) ss += (a - report.mean) * (a - report.mean);
    const double sd = std::sqrt(ss / (count - 1.0));
    report.ci95 = 1.96 * sd / std::sqrt(count);
  }
  return report;
}

void run_indexed(Index episodes, int threads, const std::function<EpisodeOutcome(Index)>& work,
                 std::vector<EpisodeOutcome>& out) {
  out.resize(static_cast<std::size_t>(episodes));
  threads = std::max(1, std::min<int>(threads, static_cast<int>(episodes)));
  if (threads == 1) {
    for (Index i = 0; i < episodes; ++i) out[static_cast<std::size_t>(i)] = work(i);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (;;) {
        const Index i = next.fetch_add(1);
        if (i >= episodes) return;
        try {
          out[static_cast<std::size_t>(i)] = work(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

}  // namespace ici
