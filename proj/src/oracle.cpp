#include "pfb/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "pfb/learner.hpp"
#include "pfb/rng.hpp"

namespace pfb {
namespace {

double payoff(const UtilityCoefficients& gamma, int predicted, int actual) {
  if (predicted == 1) return actual == 1 ? gamma.true_positive : gamma.false_positive;
  return actual == 1 ? gamma.false_negative : gamma.true_negative;
}

std::string format(double value) {
  std::ostringstream out;
  out << value;
  return out.str();
}

struct TrialRun {
  std::vector<LinearClassifier> classifiers;  // f_0, f_1, ..., f_T
  std::vector<IterationReport> reports;
  RegionState regions;
  std::vector<LabeledExample> labeled;
};

// One seeded engine run on the fixture: fully labeled initial pool, batches
// drawn i.i.d. from mu.
TrialRun run_trial(const OracleSetup& setup, const VerificationConfig& config,
                   const AlgorithmConfig& algorithm, const UtilityCoefficients& gamma,
                   int trial) {
  const std::uint64_t trial_seed = mix_seed(config.seed, 0x0ac1e000ULL + trial);
  Rng rng(mix_seed(trial_seed, 0));
  const std::size_t pool_size =
      setup.initial_pool_size > 0 ? setup.initial_pool_size : config.n;
  std::vector<Sample> initial = setup.domain.draw(pool_size, rng);
  std::vector<LabeledExample> labeled0;
  labeled0.reserve(initial.size());
  for (Sample& sample : initial) labeled0.push_back({std::move(sample), 0, 1.0});

  AlgorithmConfig engine_config = algorithm;
  engine_config.seed = trial_seed;
  Engine engine(engine_config, gamma, 500.0, 200.0, setup.domain.group_count,
                setup.domain.subset_classifier(setup.f0_mask), std::move(labeled0));

  TrialRun run{{engine.classifier()}, {}, RegionState(algorithm.tau), {}};
  for (int t = 1; t <= config.iterations; ++t) {
    IterationBatch batch = setup.domain.draw_batch(t, config.n, rng);
    run.reports.push_back(engine.run_iteration(batch));
    run.classifiers.push_back(engine.classifier());
  }
  run.regions = engine.regions();
  run.labeled = engine.labeled_history();
  return run;
}

void require_feasible_f0(const OracleSetup& setup, double alpha, double lambda,
                         const char* where) {
  const LinearClassifier f0 = setup.domain.subset_classifier(setup.f0_mask);
  const std::optional<double> fdr = exact_fdr(setup.domain, f0);
  if (fdr && *fdr > alpha + 1e-12)
    throw std::invalid_argument(std::string(where) + ": f_0 violates the FDR premise");
  if (exact_selection_rate(setup.domain, f0) + 1e-12 < lambda)
    throw std::invalid_argument(std::string(where) + ": f_0 violates the selection premise");
}

}  // namespace

void VerificationConfig::validate() const {
  if (trials < 20) throw std::invalid_argument("VerificationConfig: trials must be >= 20");
  if (!(delta > 0.0) || delta > 1.0)
    throw std::invalid_argument("VerificationConfig: delta must lie in (0, 1]");
  if (!(tolerance > 0.0)) throw std::invalid_argument("VerificationConfig: tolerance must be > 0");
  if (n == 0) throw std::invalid_argument("VerificationConfig: n must be >= 1");
  if (iterations < 1) throw std::invalid_argument("VerificationConfig: iterations must be >= 1");
}

BruteForceResult brute_force_fopt(const ExactDomain& domain, const UtilityCoefficients& gamma,
                                  double alpha) {
  if (domain.points.size() > 20)
    throw std::invalid_argument("brute_force_fopt: domain too large to enumerate");
  BruteForceResult best;
  bool have_best = false;
  const std::uint32_t limit = 1u << domain.points.size();
  for (std::uint32_t mask = 0; mask < limit; ++mask) {
    double util = 0.0;
    double positive_mass = 0.0;
    double false_positive_mass = 0.0;
    for (std::size_t i = 0; i < domain.points.size(); ++i) {
      const DomainPoint& point = domain.points[i];
      const int predicted = (mask >> i) & 1u;
      util += domain.mu(i, 1) * payoff(gamma, predicted, 1) +
              domain.mu(i, 0) * payoff(gamma, predicted, 0);
      if (predicted == 1) {
        positive_mass += point.mass;
        false_positive_mass += domain.mu(i, 0);
      }
    }
    const bool feasible =
        positive_mass <= 0.0 || false_positive_mass <= alpha * positive_mass + 1e-12;
    if (!feasible) continue;
    if (!have_best || util > best.utility + 1e-12) {
      best.mask = mask;
      best.utility = util;
      have_best = true;
    }
  }
  best.classifier = domain.subset_classifier(best.mask);
  return best;
}

double exact_utility(const ExactDomain& domain, const LinearClassifier& classifier,
                     const UtilityCoefficients& gamma) {
  double util = 0.0;
  for (std::size_t i = 0; i < domain.points.size(); ++i) {
    const int predicted = classifier.predict(domain.cell(i));
    util += domain.mu(i, 1) * payoff(gamma, predicted, 1) +
            domain.mu(i, 0) * payoff(gamma, predicted, 0);
  }
  return util;
}

double exact_group_utility(const ExactDomain& domain, const LinearClassifier& classifier,
                           const UtilityCoefficients& gamma, int group) {
  double util = 0.0;
  double mass = 0.0;
  for (std::size_t i = 0; i < domain.points.size(); ++i) {
    if (domain.points[i].group != group) continue;
    mass += domain.points[i].mass;
    const int predicted = classifier.predict(domain.cell(i));
    util += domain.mu(i, 1) * payoff(gamma, predicted, 1) +
            domain.mu(i, 0) * payoff(gamma, predicted, 0);
  }
  if (mass <= 0.0) throw std::invalid_argument("exact_group_utility: group has no mass");
  return util / mass;
}

std::optional<double> exact_fdr(const ExactDomain& domain, const LinearClassifier& classifier) {
  double positive_mass = 0.0;
  double false_positive_mass = 0.0;
  for (std::size_t i = 0; i < domain.points.size(); ++i) {
    if (classifier.predict(domain.cell(i)) != 1) continue;
    positive_mass += domain.points[i].mass;
    false_positive_mass += domain.mu(i, 0);
  }
  if (positive_mass <= 0.0) return std::nullopt;
  return false_positive_mass / positive_mass;
}

double exact_selection_rate(const ExactDomain& domain, const LinearClassifier& classifier) {
  double positive_mass = 0.0;
  for (std::size_t i = 0; i < domain.points.size(); ++i)
    if (classifier.predict(domain.cell(i)) == 1) positive_mass += domain.points[i].mass;
  return positive_mass;
}

std::optional<double> exact_region_group_utility(const ExactDomain& domain,
                                                 const LinearClassifier& classifier,
                                                 const RegionState& regions, int advances,
                                                 const UtilityCoefficients& gamma, int group) {
  double util = 0.0;
  double mass = 0.0;
  for (std::size_t i = 0; i < domain.points.size(); ++i) {
    if (domain.points[i].group != group) continue;
    if (!regions.in_exploit_at(domain.cell(i), advances)) continue;
    mass += domain.points[i].mass;
    const int predicted = classifier.predict(domain.cell(i));
    util += domain.mu(i, 1) * payoff(gamma, predicted, 1) +
            domain.mu(i, 0) * payoff(gamma, predicted, 0);
  }
  if (mass <= 0.0) return std::nullopt;
  return util / mass;
}

CheckReport verify_feasibility(const OracleSetup& setup, const VerificationConfig& config,
                               const AlgorithmConfig& algorithm) {
  config.validate();
  require_feasible_f0(setup, algorithm.alpha, algorithm.lambda, "verify_feasibility");

  long defined = 0;
  long violations = 0;
  for (int trial = 0; trial < config.trials; ++trial) {
    const TrialRun run =
        run_trial(setup, config, algorithm, UtilityCoefficients::accuracy(), trial);
    for (const IterationReport& report : run.reports) {
      if (!report.fdr) continue;
      ++defined;
      if (*report.fdr > algorithm.alpha + config.tolerance) ++violations;
    }
  }
  const double fraction =
      defined == 0 ? 0.0 : static_cast<double>(violations) / static_cast<double>(defined);

  CheckReport report;
  report.name = "feasibility";
  report.passed = fraction <= config.delta;
  report.details = {"trials=" + std::to_string(config.trials),
                    "iterations=" + std::to_string(config.iterations),
                    "n=" + std::to_string(config.n),
                    "alpha=" + format(algorithm.alpha),
                    "tolerance=" + format(config.tolerance),
                    "defined_fdr_iterations=" + std::to_string(defined),
                    "violations=" + std::to_string(violations),
                    "violation_fraction=" + format(fraction),
                    "delta=" + format(config.delta)};
  return report;
}

CheckReport verify_convergence(const OracleSetup& setup, const VerificationConfig& config,
                               const AlgorithmConfig& algorithm,
                               const UtilityCoefficients& gamma) {
  config.validate();
  // The convergence statement fixes a constant exploit budget of
  // alpha - epsilon; the remaining epsilon share funds exploration, which is
  // the budget form without the epsilon subtraction.
  AlgorithmConfig pinned = algorithm;
  pinned.exploration_strategy = StrategyKind::uniform;
  pinned.alpha_exploit_scale = algorithm.alpha - algorithm.epsilon;
  pinned.alpha_exploit_exponent = 0.0;
  pinned.budget_form = BudgetForm::text;
  require_feasible_f0(setup, algorithm.alpha - algorithm.epsilon, algorithm.lambda,
                      "verify_convergence");

  const BruteForceResult optimum = brute_force_fopt(setup.domain, gamma, pinned.alpha);
  std::map<int, double> target;
  for (int z = 1; z <= setup.domain.group_count; ++z)
    target[z] = exact_group_utility(setup.domain, optimum.classifier, gamma, z);

  const std::vector<double> uniform_g(setup.domain.points.size(), 1.0);
  std::vector<int> groups;
  for (const DomainPoint& point : setup.domain.points) groups.push_back(point.group);
  const SigmaReport sigmas = sigma_from_values(uniform_g, groups);
  std::map<int, int> threshold_iteration;
  for (const auto& [z, sigma_z] : sigmas.per_group) {
    threshold_iteration[z] = static_cast<int>(std::ceil(1.0 / sigma_z));
    if (threshold_iteration[z] > config.iterations)
      throw std::invalid_argument("verify_convergence: iterations must reach 1/sigma(z)");
  }

  int passing = 0;
  double worst_gap = 0.0;
  for (int trial = 0; trial < config.trials; ++trial) {
    const TrialRun run = run_trial(setup, config, pinned, gamma, trial);
    bool ok = true;
    for (const auto& [z, first_t] : threshold_iteration) {
      for (int t = first_t; t <= config.iterations; ++t) {
        const double util = exact_group_utility(setup.domain, run.classifiers[t], gamma, z);
        worst_gap = std::max(worst_gap, target[z] - util);
        if (util < target[z] - config.tolerance) ok = false;
      }
    }
    if (ok) ++passing;
  }
  const double fraction = static_cast<double>(passing) / static_cast<double>(config.trials);

  CheckReport report;
  report.name = "convergence";
  report.passed = fraction >= 1.0 - config.delta;
  report.details = {"trials=" + std::to_string(config.trials),
                    "iterations=" + std::to_string(config.iterations),
                    "n=" + std::to_string(config.n),
                    "optimum_mask=" + std::to_string(optimum.mask),
                    "optimum_utility=" + format(optimum.utility),
                    "passing_fraction=" + format(fraction),
                    "worst_group_gap=" + format(worst_gap),
                    "tolerance=" + format(config.tolerance),
                    "delta=" + format(config.delta)};
  for (const auto& [z, first_t] : threshold_iteration)
    report.details.push_back("group_" + std::to_string(z) +
                             "_threshold_t=" + std::to_string(first_t));
  return report;
}

CheckReport verify_monotonicity(const OracleSetup& setup, const VerificationConfig& config,
                                const AlgorithmConfig& algorithm,
                                const UtilityCoefficients& gamma) {
  config.validate();
  require_feasible_f0(setup, algorithm.alpha, algorithm.lambda, "verify_monotonicity");

  int passing = 0;
  double worst_drop = 0.0;
  for (int trial = 0; trial < config.trials; ++trial) {
    const TrialRun run = run_trial(setup, config, algorithm, gamma, trial);
    bool ok = true;
    for (int t = 1; t <= config.iterations; ++t) {
      const int advances = t - 1;  // region state that iteration t trained against
      for (int z = 1; z <= setup.domain.group_count; ++z) {
        const std::optional<double> current = exact_region_group_utility(
            setup.domain, run.classifiers[t], run.regions, advances, gamma, z);
        if (!current) continue;
        double best_previous = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < t; ++i) {
          const std::optional<double> previous = exact_region_group_utility(
              setup.domain, run.classifiers[i], run.regions, advances, gamma, z);
          if (previous) best_previous = std::max(best_previous, *previous);
        }
        if (!std::isfinite(best_previous)) continue;
        worst_drop = std::max(worst_drop, best_previous - *current);
        if (*current < best_previous - config.tolerance) ok = false;
      }
    }
    if (ok) ++passing;
  }
  const double fraction = static_cast<double>(passing) / static_cast<double>(config.trials);

  CheckReport report;
  report.name = "monotonicity";
  report.passed = fraction >= 1.0 - config.delta;
  report.details = {"trials=" + std::to_string(config.trials),
                    "iterations=" + std::to_string(config.iterations),
                    "n=" + std::to_string(config.n),
                    "passing_fraction=" + format(fraction),
                    "worst_drop=" + format(worst_drop),
                    "tolerance=" + format(config.tolerance),
                    "delta=" + format(config.delta)};
  return report;
}

CheckReport verify_reweighting(const OracleSetup& setup, const VerificationConfig& config,
                               const AlgorithmConfig& algorithm) {
  config.validate();
  require_feasible_f0(setup, algorithm.alpha, algorithm.lambda, "verify_reweighting");
  const std::vector<bool> excluded = setup.domain.low_mass(algorithm.epsilon);

  int passing = 0;
  double total_final_tv = 0.0;
  for (int trial = 0; trial < config.trials; ++trial) {
    const TrialRun run =
        run_trial(setup, config, algorithm, UtilityCoefficients::accuracy(), trial);

    const auto in_exploit = [&](const Sample& sample) { return run.regions.in_exploit(sample); };
    const ReweightedPool pool = build_eta_weights(run.labeled, in_exploit);

    // Cell masses of the normalized pool vs mu restricted to the exploit
    // region, summed over cells above the low-mass cutoff.
    std::vector<double> pool_cell(setup.domain.points.size() * 2, 0.0);
    for (const PoolEntry& entry : pool.entries) {
      const std::size_t point = setup.domain.index_of(entry.sample);
      pool_cell[2 * point + static_cast<std::size_t>(entry.sample.label.value())] +=
          entry.weight;
    }
    double exploit_mass = 0.0;
    for (std::size_t i = 0; i < setup.domain.points.size(); ++i)
      if (run.regions.in_exploit(setup.domain.cell(i))) exploit_mass += setup.domain.points[i].mass;

    double tv = 0.0;
    if (pool.total_weight > 0.0 && exploit_mass > 0.0) {
      for (std::size_t i = 0; i < setup.domain.points.size(); ++i) {
        if (excluded[i]) continue;
        if (!run.regions.in_exploit(setup.domain.cell(i))) continue;
        for (int y = 0; y <= 1; ++y) {
          const double pool_share =
              pool_cell[2 * i + static_cast<std::size_t>(y)] / pool.total_weight;
          const double mu_share = setup.domain.mu(i, y) / exploit_mass;
          tv += std::abs(pool_share - mu_share);
        }
      }
      tv *= 0.5;
    } else {
      tv = 1.0;
    }
    total_final_tv += tv;
    if (tv <= config.tolerance) ++passing;
  }
  const double fraction = static_cast<double>(passing) / static_cast<double>(config.trials);
  const double mean_tv = total_final_tv / static_cast<double>(config.trials);

  CheckReport report;
  report.name = "reweighting";
  report.passed = fraction >= 1.0 - config.delta;
  report.details = {"trials=" + std::to_string(config.trials),
                    "iterations=" + std::to_string(config.iterations),
                    "n=" + std::to_string(config.n),
                    "mean_final_tv=" + format(mean_tv),
                    "passing_fraction=" + format(fraction),
                    "tolerance=" + format(config.tolerance),
                    "delta=" + format(config.delta)};
  return report;
}

}  // namespace pfb
