#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ici/dataset_io.hpp"
#include "ici/engine.hpp"
#include "ici/types.hpp"

namespace ici {

enum class Setting { inductive, transductive, semi };

struct EpisodeSpec {
  int ways = 5;
  int shots = 1;
  int queries = 15;
  int unlabeled = 0;  // per class; ignored in the transductive setting
  Setting setting = Setting::semi;
  std::uint64_t seed = 0;
};

// One sampled task: per-class disjoint store row lists. Lists are indexed by
// episode-local class slot; class_ids maps slots back to store classes.
struct Episode {
  std::vector<int> class_ids;
  std::vector<std::vector<Index>> support;
  std::vector<std::vector<Index>> query;
  std::vector<std::vector<Index>> unlabeled;
  bool unlabeled_clamped = false;
};

enum class ClassifierSpace { full, reduced };

// Everything the per-episode pipeline needs beyond the episode itself.
struct PipelineConfig {
  Index reduced_dim = 5;
  ClassifierSpace classifier_space = ClassifierSpace::full;
  LoopConfig loop;
  bool collect_trace = false;
};

struct EpisodeOutcome {
  double accuracy = 0.0;
  int iterations = 0;
  bool loop_converged = true;
  std::vector<IterationRecord> trace;
};

struct RunReport {
  std::vector<double> accuracies;
  std::vector<int> iterations;
  double mean = 0.0;
  double ci95 = 0.0;
  std::string fingerprint;
  std::vector<std::vector<IterationRecord>> traces;  // filled when collect_trace
};

// Seeded, reproducible sampling: N classes without replacement, then a
// within-class shuffle split into support / query / unlabeled. The unlabeled
// count is clamped to availability (with a flag); support + query counts are
// hard requirements.
Episode sample_episode(const FeatureStore& store, const EpisodeSpec& spec, Index episode_index);

// Runs E episodes through the self-taught pipeline and aggregates mean
// accuracy with a 1.96 * sd / sqrt(E) interval. Episodes may be fanned across
// threads; the report is identical regardless of thread count.
RunReport evaluate(const FeatureStore& store, const EpisodeSpec& spec, Index episodes,
                   const PipelineConfig& config, int threads = 1);

// Same aggregation with a caller-supplied per-episode pipeline (test seam).
template <typename Fn>
RunReport evaluate_with(const FeatureStore& store, const EpisodeSpec& spec, Index episodes,
                        Fn&& pipeline, int threads = 1);

// Single-episode pipeline: normalize, reduce, run the loop (or the plain
// classifier when there is no pool), score the query set.
EpisodeOutcome run_episode_pipeline(const FeatureStore& store, const Episode& episode,
                                    const EpisodeSpec& spec, const PipelineConfig& config,
                                    std::uint64_t pipeline_seed);

// FNV-1a hash of the canonical configuration string, as a 16-digit hex
// fingerprint.
std::string config_fingerprint(const std::string& canonical);

namespace detail {
RunReport aggregate(std::vector<EpisodeOutcome>&& outcomes, bool keep_traces);
void run_indexed(Index episodes, int threads, const std::function<EpisodeOutcome(Index)>& work,
                 std::vector<EpisodeOutcome>& out);
constexpr std::uint64_t kPipelineSalt = 0x1CEB00DA;  // pipeline stream != sampling stream
}  // namespace detail

template <typename Fn>
RunReport evaluate_with(const FeatureStore& store, const EpisodeSpec& spec, Index episodes,
                        Fn&& pipeline, int threads) {
  std::vector<EpisodeOutcome> outcomes;
  detail::run_indexed(
      episodes, threads,
      [&](Index idx) {
        const Episode episode = sample_episode(store, spec, idx);
        return pipeline(episode, idx);
      },
      outcomes);
  return detail::aggregate(std::move(outcomes), /*keep_traces=*/false);
}

}  // namespace ici
