#ifndef PFB_EXPLORATION_HPP
#define PFB_EXPLORATION_HPP

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "pfb/core.hpp"
#include "pfb/rng.hpp"

namespace pfb {

// group id -> share of the reference population; which population depends on
// the strategy (explore region for fair, the whole batch for inverse)
using GroupShares = std::map<int, double>;

struct ExplorationStrategy {
  StrategyKind kind = StrategyKind::uniform;
  double beta = 0.0;
};

// every strategy value is floored here so g stays strictly positive
inline constexpr double kStrategyFloor = 1e-6;

// g(x,z; f_t): uniform -> 1, clf -> beta + (1-beta)*score,
// fair -> clf * share(z), inverse -> 1 / share(z)
double evaluate(const ExplorationStrategy& strategy, const Sample& sample, double score,
                const GroupShares& shares);

// floor((alpha - alpha_exploit [- epsilon]) * n_exploit / (1 - alpha)),
// clamped at zero; step6 includes the epsilon term, text omits it
long explore_budget(long n_exploit, double alpha, double alpha_exploit, double epsilon,
                    BudgetForm form = BudgetForm::step6);

// n_explore distinct indices drawn without replacement with probability
// proportional to g_values (exponential-keys method); asking for more than
// the set size returns every index
std::vector<std::size_t> sample_explore(std::span<const double> g_values,
                                        std::size_t n_explore, Rng& rng);

// inclusion probability of one item under the draw above, approximated by
// the with-replacement marginal 1 - (1 - p)^k with p = g / sum(g)
double inclusion_propensity(double g_value, double g_total, std::size_t n_explore,
                            std::size_t set_size);

struct SigmaReport {
  double sigma = 0.0;
  std::map<int, double> per_group;
};

// sigma = min g / sum g; sigma(z) uses the minimum within group z over the
// same total mass
SigmaReport sigma_from_values(std::span<const double> g_values, std::span<const int> groups);

SigmaReport sigma(const ExplorationStrategy& strategy, std::span<const Sample> samples,
                  const LinearClassifier& classifier, const GroupShares& shares);

}  // namespace pfb

#endif  // PFB_EXPLORATION_HPP
