#include "pfb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace pfb {

namespace {

struct CellCounts {
  double tn = 0, fn = 0, fp = 0, tp = 0;
  double total() const { return tn + fn + fp + tp; }

  void add(const PredictionRecord& r) {
    if (r.predicted == 1) {
      (r.actual == 1 ? tp : fp) += 1.0;
    } else {
      (r.actual == 1 ? fn : tn) += 1.0;
    }
  }
};

double payoff(const CellCounts& c, const UtilityCoefficients& g) {
  return g.true_negative * c.tn + g.false_negative * c.fn + g.false_positive * c.fp +
         g.true_positive * c.tp;
}

}  // namespace

double utility(std::span<const PredictionRecord> records, const UtilityCoefficients& gamma) {
  if (records.empty()) throw std::invalid_argument("utility: empty record list");
  CellCounts counts;
  for (const auto& r : records) counts.add(r);
  return payoff(counts, gamma) / counts.total();
}

double group_utility(std::span<const PredictionRecord> records,
                     const UtilityCoefficients& gamma, int z) {
  CellCounts counts;
  for (const auto& r : records) {
    if (r.group == z) counts.add(r);
  }
  if (counts.total() == 0.0) {
    throw std::invalid_argument("group_utility: group " + std::to_string(z) + " absent");
  }
  return payoff(counts, gamma) / counts.total();
}

double revenue(std::span<const PredictionRecord> records, double c1, double c2) {
  return utility(records, UtilityCoefficients::revenue(c1, c2)) *
         static_cast<double>(records.size());
}

std::optional<double> empirical_fdr(std::span<const PredictionRecord> records) {
  double positives = 0, false_positives = 0;
  for (const auto& r : records) {
    if (r.predicted == 1) {
      positives += 1.0;
      if (r.actual == 0) false_positives += 1.0;
    }
  }
  if (positives == 0.0) return std::nullopt;
  return false_positives / positives;
}

namespace {

Disparity max_pairwise_gap(const std::map<int, double>& rate_by_group) {
  Disparity result;
  result.groups_used = static_cast<int>(rate_by_group.size());
  for (auto a = rate_by_group.begin(); a != rate_by_group.end(); ++a) {
    for (auto b = std::next(a); b != rate_by_group.end(); ++b) {
      result.value = std::max(result.value, std::abs(a->second - b->second));
    }
  }
  return result;
}

}  // namespace

Disparity statistical_rate_disparity(std::span<const PredictionRecord> records) {
  std::map<int, std::pair<double, double>> counts;  // group -> (positives, total)
  for (const auto& r : records) {
    auto& [pos, total] = counts[r.group];
    total += 1.0;
    if (r.predicted == 1) pos += 1.0;
  }
  std::map<int, double> rates;
  for (const auto& [z, c] : counts) rates[z] = c.first / c.second;
  return max_pairwise_gap(rates);
}

Disparity tpr_disparity(std::span<const PredictionRecord> records) {
  std::map<int, std::pair<double, double>> counts;  // group -> (tp, actual positives)
  for (const auto& r : records) {
    if (r.actual != 1) continue;
    auto& [tp, pos] = counts[r.group];
    pos += 1.0;
    if (r.predicted == 1) tp += 1.0;
  }
  std::map<int, double> rates;
  for (const auto& [z, c] : counts) rates[z] = c.first / c.second;
  return max_pairwise_gap(rates);
}

}  // namespace pfb
