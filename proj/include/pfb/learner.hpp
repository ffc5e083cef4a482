#ifndef PFB_LEARNER_HPP
#define PFB_LEARNER_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "pfb/core.hpp"

namespace pfb {

// A sample whose outcome has been observed, together with the probability
// that it entered the labeled set at the iteration it arrived. Exploited
// positives and the initial pool have propensity 1; explored samples carry
// their draw's inclusion probability.
struct LabeledExample {
  Sample sample;  // label set
  int labeled_at = 0;
  double propensity = 1.0;
};

struct PoolEntry {
  Sample sample;
  double weight = 0.0;
};

// Weighted labeled pool standing in for the true distribution restricted to
// the exploit region. Entries with identical (features, group, label) are
// merged; the weighted empirical measure is unchanged by the merge.
struct ReweightedPool {
  std::vector<PoolEntry> entries;
  double total_weight = 0.0;

  bool has_both_labels() const;
};

// weight = [exploit indicator] * 1/propensity
ReweightedPool build_eta_weights(std::span<const LabeledExample> labeled,
                                 const std::function<bool(const Sample&)>& in_exploit);

struct TrainingProblem {
  ReweightedPool pool;
  UtilityCoefficients gamma;
  double alpha_exploit = 0.075;
  double lambda = 0.0;
  double epsilon = 1e-3;
  std::optional<double> fairness_bound;  // statistical-rate cap
  std::uint64_t seed = 0;
  int group_count = 1;
  bool shared_weights = false;

  void validate() const;
};

enum class TrainStatus { ok, infeasible, degenerate_pool };

struct TrainResult {
  TrainStatus status = TrainStatus::ok;
  LinearClassifier classifier;
};

// Two stages: (1) weighted logistic fit with quadratic penalties for the
// soft constraints on one half of the pool, (2) threshold sweep that
// maximizes Util(gamma) on the held-out half among thresholds that satisfy
// the FDR / selection-rate / fairness constraints on the whole pool.
TrainResult train_constrained(const TrainingProblem& problem);

struct F0Options {
  int group_count = 1;
  bool shared_weights = false;
};

// logistic separation of pool membership: L0 rows get dummy label 1, U0
// rows dummy label 0; threshold stays at 0.5
LinearClassifier train_f0(std::span<const Sample> labeled_pool,
                          std::span<const Sample> unlabeled_pool, const F0Options& options);

}  // namespace pfb

#endif  // PFB_LEARNER_HPP
