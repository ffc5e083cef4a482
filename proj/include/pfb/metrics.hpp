#ifndef PFB_METRICS_HPP
#define PFB_METRICS_HPP

#include <optional>
#include <span>

#include "pfb/core.hpp"

namespace pfb {

struct PredictionRecord {
  int predicted = 0;
  int actual = 0;
  int group = 1;
};

// Sum over cells of payoff * empirical cell probability.
double utility(std::span<const PredictionRecord> records, const UtilityCoefficients& gamma);

// utility restricted to records of group z; throws if z is absent
double group_utility(std::span<const PredictionRecord> records,
                     const UtilityCoefficients& gamma, int z);

// c2 * (#true positives) - c1 * (#false positives)
double revenue(std::span<const PredictionRecord> records, double c1, double c2);

// #false positives / #positive predictions; nullopt when nothing was
// predicted positive (the conditional is undefined, not zero)
std::optional<double> empirical_fdr(std::span<const PredictionRecord> records);

// max over group pairs of an absolute rate gap; degenerate when fewer than
// two groups contributed
struct Disparity {
  double value = 0.0;
  int groups_used = 0;
  bool degenerate() const { return groups_used < 2; }
};

Disparity statistical_rate_disparity(std::span<const PredictionRecord> records);

// groups with no actual positives are excluded (their TPR is undefined)
Disparity tpr_disparity(std::span<const PredictionRecord> records);

}  // namespace pfb

#endif  // PFB_METRICS_HPP
