#include "pfb/exploration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pfb {

namespace {

double share_for(const GroupShares& shares, int group) {
  auto it = shares.find(group);
  if (it == shares.end() || it->second <= 0.0) {
    throw std::invalid_argument("exploration strategy: missing group share for group " +
                                std::to_string(group));
  }
  return it->second;
}

}  // namespace

double evaluate(const ExplorationStrategy& strategy, const Sample& sample, double score,
                const GroupShares& shares) {
  double value = 1.0;
  switch (strategy.kind) {
    case StrategyKind::uniform:
      value = 1.0;
      break;
    case StrategyKind::clf:
      value = strategy.beta + (1.0 - strategy.beta) * score;
      break;
    case StrategyKind::fair:
      value = (strategy.beta + (1.0 - strategy.beta) * score) * share_for(shares, sample.group);
      break;
    case StrategyKind::inverse:
      value = 1.0 / share_for(shares, sample.group);
      break;
  }
  return std::max(value, kStrategyFloor);
}

long explore_budget(long n_exploit, double alpha, double alpha_exploit, double epsilon,
                    BudgetForm form) {
  const double slack = form == BudgetForm::step6 ? epsilon : 0.0;
  const double raw = (alpha - alpha_exploit - slack) * static_cast<double>(n_exploit) /
                     (1.0 - alpha);
  if (raw <= 0.0) return 0;
  return static_cast<long>(std::floor(raw));
}

std::vector<std::size_t> sample_explore(std::span<const double> g_values,
                                        std::size_t n_explore, Rng& rng) {
  const std::size_t m = g_values.size();
  std::vector<std::size_t> selected;
  if (m == 0 || n_explore == 0) return selected;
  if (n_explore >= m) {
    selected.resize(m);
    std::iota(selected.begin(), selected.end(), std::size_t{0});
    return selected;
  }

  // Efraimidis-Spirakis: the n smallest exponential keys e_i = -ln(u_i)/g_i
  // form a without-replacement sample proportional to g
  std::vector<std::pair<double, std::size_t>> keys;
  keys.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (g_values[i] <= 0.0) {
      throw std::invalid_argument("sample_explore: g values must be strictly positive");
    }
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    keys.emplace_back(-std::log(u) / g_values[i], i);
  }
  std::nth_element(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(n_explore - 1),
                   keys.end());
  selected.reserve(n_explore);
  for (std::size_t i = 0; i < n_explore; ++i) selected.push_back(keys[i].second);
  std::sort(selected.begin(), selected.end());
  return selected;
}

double inclusion_propensity(double g_value, double g_total, std::size_t n_explore,
                            std::size_t set_size) {
  if (n_explore >= set_size) return 1.0;
  if (n_explore == 0 || g_total <= 0.0) return 0.0;
  const double p = g_value / g_total;
  return 1.0 - std::pow(1.0 - p, static_cast<double>(n_explore));
}

SigmaReport sigma_from_values(std::span<const double> g_values, std::span<const int> groups) {
  if (g_values.empty() || g_values.size() != groups.size()) {
    throw std::invalid_argument("sigma: empty domain or misaligned groups");
  }
  double total = 0.0;
  double global_min = g_values[0];
  std::map<int, double> group_min;
  for (std::size_t i = 0; i < g_values.size(); ++i) {
    total += g_values[i];
    global_min = std::min(global_min, g_values[i]);
    auto [it, inserted] = group_min.try_emplace(groups[i], g_values[i]);
    if (!inserted) it->second = std::min(it->second, g_values[i]);
  }
  SigmaReport report;
  report.sigma = global_min / total;
  for (const auto& [z, m] : group_min) report.per_group[z] = m / total;
  return report;
}

SigmaReport sigma(const ExplorationStrategy& strategy, std::span<const Sample> samples,
                  const LinearClassifier& classifier, const GroupShares& shares) {
  std::vector<double> values;
  std::vector<int> groups;
  values.reserve(samples.size());
  groups.reserve(samples.size());
  for (const auto& s : samples) {
    values.push_back(evaluate(strategy, s, classifier.score(s), shares));
    groups.push_back(s.group);
  }
  return sigma_from_values(values, groups);
}

}  // namespace pfb
