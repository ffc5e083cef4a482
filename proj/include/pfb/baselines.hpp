#ifndef PFB_BASELINES_HPP
#define PFB_BASELINES_HPP

#include <span>
#include <string>
#include <vector>

#include "pfb/engine.hpp"
#include "pfb/learner.hpp"

namespace pfb {

// The full-information reference: trains on a completely labeled pool with
// uniform weights under the plain alpha-FDR constraint (no selection or
// fairness terms).
TrainResult train_opt_offline(std::span<const Sample> fully_labeled,
                              const UtilityCoefficients& gamma, double alpha, int group_count,
                              bool shared_weights, std::uint64_t seed);

// Evaluates the fixed classifier over the stream; no learning, no regions.
std::vector<IterationReport> run_opt_offline(const LinearClassifier& classifier,
                                             std::vector<IterationBatch>& batches, double c1,
                                             double c2, int group_count);

// Retrains every iteration on its own positive predictions plus L0, with the
// statistical-rate constraint always active and no exploration at all.
ExperimentTable run_fair_clf(RunInput input, const StreamFactory& factory);

inline constexpr double kDefaultFairnessBound = 0.05;

struct ImportedRow {
  int t = 0;
  double revenue = 0.0;
  double fdr = 0.0;
  double stat_rate = 0.0;
  double tpr_disparity = 0.0;
};

// Externally produced metric tables merged into comparison reports;
// the header must read exactly: t,revenue,fdr,stat_rate,tpr_disparity
std::vector<ImportedRow> load_imported_baseline(const std::string& path);

}  // namespace pfb

#endif  // PFB_BASELINES_HPP
