#ifndef PFB_ENGINE_HPP
#define PFB_ENGINE_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "pfb/core.hpp"
#include "pfb/exploration.hpp"
#include "pfb/learner.hpp"
#include "pfb/regions.hpp"

namespace pfb {

struct IterationReport {
  int t = 0;
  double revenue = 0.0;
  std::optional<double> fdr;  // undefined when no positive prediction
  double stat_rate = 0.0;     // statistical-rate disparity
  double tpr_disparity = 0.0;
  std::vector<double> tpr_group;  // indexed by group - 1; NaN when undefined
  std::size_t n_exploit = 0;      // positive predictions in the exploit region
  std::size_t n_explore = 0;      // sampled explore-region points
  std::size_t explore_budget = 0;
  bool infeasible_fallback = false;
};

// One Algorithm-1 run over a batch stream. The engine may read a batch
// label only after predicting that sample positive; evaluation metrics use
// the simulation's ground truth separately.
class Engine {
 public:
  // When exploit_everywhere is set the region machinery is bypassed: every
  // sample is treated as exploitable and nothing is ever explored (the
  // iterative-reuse baseline).
  Engine(const AlgorithmConfig& config, UtilityCoefficients gamma, double c1, double c2,
         int group_count, LinearClassifier f0, std::vector<LabeledExample> initial_labeled,
         bool exploit_everywhere = false);

  // Trains f0 from the biased pools and seeds the labeled history with L0.
  static Engine from_initial_pools(const AlgorithmConfig& config, UtilityCoefficients gamma,
                                   double c1, double c2, int group_count,
                                   const std::vector<Sample>& labeled0,
                                   const std::vector<Sample>& unlabeled0,
                                   bool exploit_everywhere = false);

  IterationReport run_iteration(IterationBatch& batch);

  const LinearClassifier& classifier() const { return current_; }
  const RegionState& regions() const { return regions_; }
  const std::vector<LabeledExample>& labeled_history() const { return labeled_; }
  int iterations_run() const { return next_t_ - 1; }

 private:
  AlgorithmConfig config_;
  UtilityCoefficients gamma_;
  double c1_, c2_;
  int group_count_;
  bool exploit_everywhere_;
  RegionState regions_;
  LinearClassifier current_;
  std::vector<LabeledExample> labeled_;
  int next_t_ = 1;
};

struct RepetitionData {
  std::vector<Sample> labeled0;    // labels visible
  std::vector<Sample> unlabeled0;  // labels hidden
  std::vector<IterationBatch> batches;
};

// Builds one repetition's stream; called with a repetition-specific seed.
using StreamFactory = std::function<RepetitionData(std::uint64_t seed)>;

struct RunInput {
  AlgorithmConfig config;
  UtilityCoefficients gamma = UtilityCoefficients::revenue(500.0, 200.0);
  double c1 = 500.0;
  double c2 = 200.0;
  int group_count = 2;
  int repetitions = 1;
  int workers = 1;
  bool exploit_everywhere = false;
};

struct MetricSummary {
  double mean = 0.0;
  double stderr_ = 0.0;
  int repetitions_used = 0;
};

struct ExperimentTable {
  std::vector<std::vector<IterationReport>> repetitions;
  MetricSummary revenue;
  MetricSummary fdr;  // averaged over defined iterations only
  MetricSummary stat_rate;
  MetricSummary tpr_disparity;
};

// Runs `repetitions` independent seeded runs (optionally on a worker pool)
// and aggregates run-level means with their standard errors.
ExperimentTable run_experiment(const RunInput& input, const StreamFactory& factory);

// Aggregation alone: run-level means (FDR over defined iterations only),
// then mean and standard error across repetitions.
ExperimentTable summarize_experiment(std::vector<std::vector<IterationReport>> repetitions);

}  // namespace pfb

#endif  // PFB_ENGINE_HPP
