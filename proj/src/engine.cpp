#include "pfb/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "pfb/metrics.hpp"
#include "pfb/rng.hpp"

namespace pfb {
namespace {

// Every configured group gets a strictly positive share so that stored
// snapshots can be re-evaluated for arbitrary samples later; groups with no
// arrivals sit at the strategy floor, which the g floor absorbs anyway.
GroupShares floored_shares(const std::vector<int>& groups, int group_count) {
  GroupShares shares;
  for (int g = 1; g <= group_count; ++g) shares[g] = kStrategyFloor;
  if (groups.empty()) return shares;
  const double unit = 1.0 / static_cast<double>(groups.size());
  for (int g : groups) shares[g] += unit;
  return shares;
}

double mean_of(const std::vector<double>& values) {
  double total = 0.0;
  for (double v : values) total += v;
  return values.empty() ? 0.0 : total / static_cast<double>(values.size());
}

MetricSummary summarize(const std::vector<double>& per_repetition) {
  MetricSummary summary;
  summary.repetitions_used = static_cast<int>(per_repetition.size());
  if (per_repetition.empty()) return summary;
  summary.mean = mean_of(per_repetition);
  if (per_repetition.size() > 1) {
    double ss = 0.0;
    for (double v : per_repetition) ss += (v - summary.mean) * (v - summary.mean);
    const double variance = ss / static_cast<double>(per_repetition.size() - 1);
    summary.stderr_ = std::sqrt(variance / static_cast<double>(per_repetition.size()));
  }
  return summary;
}

}  // namespace

Engine::Engine(const AlgorithmConfig& config, UtilityCoefficients gamma, double c1, double c2,
               int group_count, LinearClassifier f0, std::vector<LabeledExample> initial_labeled,
               bool exploit_everywhere)
    : config_(config),
      gamma_(gamma),
      c1_(c1),
      c2_(c2),
      group_count_(group_count),
      exploit_everywhere_(exploit_everywhere),
      regions_(config.tau),
      current_(std::move(f0)),
      labeled_(std::move(initial_labeled)) {
  config_.validate();
  if (group_count_ < 1) throw std::invalid_argument("Engine: group_count must be >= 1");
  for (const LabeledExample& example : labeled_)
    if (!example.sample.label) throw std::invalid_argument("Engine: unlabeled initial example");
}

Engine Engine::from_initial_pools(const AlgorithmConfig& config, UtilityCoefficients gamma,
                                  double c1, double c2, int group_count,
                                  const std::vector<Sample>& labeled0,
                                  const std::vector<Sample>& unlabeled0,
                                  bool exploit_everywhere) {
  F0Options options;
  options.group_count = group_count;
  options.shared_weights = config.shared_weights;
  LinearClassifier f0 = train_f0(labeled0, unlabeled0, options);
  std::vector<LabeledExample> labeled;
  labeled.reserve(labeled0.size());
  for (const Sample& sample : labeled0) labeled.push_back({sample, 0, 1.0});
  return Engine(config, gamma, c1, c2, group_count, std::move(f0), std::move(labeled),
                exploit_everywhere);
}

IterationReport Engine::run_iteration(IterationBatch& batch) {
  const int t = next_t_;
  if (batch.index() != t)
    throw std::logic_error("Engine: expected batch index " + std::to_string(t));

  IterationReport report;
  report.t = t;

  // Learn. At t=1 the exploit region is empty, so f_1 = f_0 by definition;
  // afterwards train on the reweighted pool and keep the previous classifier
  // when the solver reports an infeasible or degenerate problem.
  if (t > 1) {
    const auto in_exploit = [this](const Sample& sample) {
      return exploit_everywhere_ || regions_.in_exploit(sample);
    };
    TrainingProblem problem;
    problem.pool = build_eta_weights(labeled_, in_exploit);
    problem.gamma = gamma_;
    problem.alpha_exploit = config_.alpha_exploit(t);
    problem.lambda = config_.lambda;
    problem.epsilon = config_.epsilon;
    problem.fairness_bound = config_.exploit_fairness;
    problem.seed = mix_seed(config_.seed, 0x11000000ULL + static_cast<std::uint64_t>(t));
    problem.group_count = group_count_;
    problem.shared_weights = config_.shared_weights;
    const TrainResult result = train_constrained(problem);
    if (result.status == TrainStatus::ok)
      current_ = result.classifier;
    else
      report.infeasible_fallback = true;
  }

  // Exploit: positively classify the exploit-region arrivals with f_t.
  std::vector<std::size_t> exploit_index, explore_index;
  if (exploit_everywhere_) {
    exploit_index.resize(batch.size());
    std::iota(exploit_index.begin(), exploit_index.end(), std::size_t{0});
  } else {
    std::tie(exploit_index, explore_index) = regions_.partition(batch);
  }
  std::vector<std::size_t> positives;
  for (std::size_t i : exploit_index)
    if (current_.predict(batch.sample(i)) == 1) positives.push_back(i);
  report.n_exploit = positives.size();

  // Explore: draw the FDR-budgeted number of explore-region arrivals with
  // probability proportional to g.
  ExplorationStrategy strategy{config_.exploration_strategy, config_.beta};
  GroupShares snapshot_shares;
  std::vector<std::size_t> drawn;
  std::vector<double> g_values(explore_index.size(), 0.0);
  double g_total = 0.0;
  if (!exploit_everywhere_) {
    report.explore_budget = static_cast<std::size_t>(
        explore_budget(static_cast<long>(report.n_exploit), config_.alpha,
                       config_.alpha_exploit(t), config_.epsilon, config_.budget_form));
    if (strategy.kind == StrategyKind::fair) {
      std::vector<int> groups;
      for (std::size_t i : explore_index) groups.push_back(batch.sample(i).group);
      snapshot_shares = floored_shares(groups, group_count_);
    } else if (strategy.kind == StrategyKind::inverse) {
      std::vector<int> groups;
      for (const Sample& sample : batch.samples()) groups.push_back(sample.group);
      snapshot_shares = floored_shares(groups, group_count_);
    }
    for (std::size_t j = 0; j < explore_index.size(); ++j) {
      const Sample& sample = batch.sample(explore_index[j]);
      g_values[j] = evaluate(strategy, sample, current_.score(sample), snapshot_shares);
      g_total += g_values[j];
    }
    if (report.explore_budget > 0 && !explore_index.empty()) {
      Rng draw_rng(mix_seed(config_.seed, 0x22000000ULL + static_cast<std::uint64_t>(t)));
      drawn = sample_explore(g_values, report.explore_budget, draw_rng);
    }
  }
  report.n_explore = drawn.size();

  // Observation: reveal outcomes of every positive prediction (and nothing
  // else), then fold them into the labeled history.
  for (std::size_t i : positives) {
    Sample labeled_sample = batch.sample(i);
    labeled_sample.label = batch.observe_label(i);
    labeled_.push_back({std::move(labeled_sample), t, 1.0});
  }
  for (std::size_t j : drawn) {
    const std::size_t i = explore_index[j];
    Sample labeled_sample = batch.sample(i);
    labeled_sample.label = batch.observe_label(i);
    const double propensity =
        inclusion_propensity(g_values[j], g_total, drawn.size(), explore_index.size());
    labeled_.push_back({std::move(labeled_sample), t, propensity});
  }

  // Audit the partial-feedback contract: exactly the positive predictions
  // were read this iteration.
  std::vector<std::size_t> expected = positives;
  for (std::size_t j : drawn) expected.push_back(explore_index[j]);
  std::sort(expected.begin(), expected.end());
  if (batch.access_log() != expected)
    throw std::logic_error("Engine: label access log does not match positive predictions");

  // Region update.
  if (!exploit_everywhere_) regions_.advance(t, {current_, strategy, snapshot_shares});

  // Reporting against the simulation's ground truth. Explored samples count
  // as positive predictions.
  std::vector<bool> predicted(batch.size(), false);
  for (std::size_t i : positives) predicted[i] = true;
  for (std::size_t j : drawn) predicted[explore_index[j]] = true;
  std::vector<PredictionRecord> records(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i)
    records[i] = {predicted[i] ? 1 : 0, batch.ground_truth_label(i), batch.sample(i).group};

  report.revenue = revenue(records, c1_, c2_);
  report.fdr = empirical_fdr(records);
  report.stat_rate = statistical_rate_disparity(records).value;
  report.tpr_disparity = tpr_disparity(records).value;
  report.tpr_group.assign(group_count_, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> group_tp(group_count_, 0.0), group_pos(group_count_, 0.0);
  for (const PredictionRecord& record : records) {
    if (record.actual != 1) continue;
    group_pos[record.group - 1] += 1.0;
    if (record.predicted == 1) group_tp[record.group - 1] += 1.0;
  }
  for (int g = 0; g < group_count_; ++g)
    if (group_pos[g] > 0.0) report.tpr_group[g] = group_tp[g] / group_pos[g];

  ++next_t_;
  return report;
}

ExperimentTable run_experiment(const RunInput& input, const StreamFactory& factory) {
  if (input.repetitions < 1)
    throw std::invalid_argument("run_experiment: repetitions must be >= 1");
  input.config.validate();

  ExperimentTable table;
  table.repetitions.resize(input.repetitions);
  std::vector<std::exception_ptr> failures(input.repetitions);

  const auto run_one = [&](int r) {
    try {
      const std::uint64_t rep_seed =
          mix_seed(input.config.seed, 0x33000000ULL + static_cast<std::uint64_t>(r));
      RepetitionData data = factory(rep_seed);
      if (data.batches.empty()) throw std::invalid_argument("run_experiment: empty batch stream");
      AlgorithmConfig config = input.config;
      config.seed = rep_seed;
      Engine engine =
          Engine::from_initial_pools(config, input.gamma, input.c1, input.c2, input.group_count,
                                     data.labeled0, data.unlabeled0, input.exploit_everywhere);
      std::vector<IterationReport> reports;
      reports.reserve(data.batches.size());
      for (IterationBatch& batch : data.batches) reports.push_back(engine.run_iteration(batch));
      table.repetitions[r] = std::move(reports);
    } catch (...) {
      failures[r] = std::current_exception();
    }
  };

  const int workers = std::max(1, std::min(input.workers, input.repetitions));
  if (workers == 1) {
    for (int r = 0; r < input.repetitions; ++r) run_one(r);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (int r = w; r < input.repetitions; r += workers) run_one(r);
      });
    for (std::thread& thread : pool) thread.join();
  }
  for (int r = 0; r < input.repetitions; ++r)
    if (failures[r]) std::rethrow_exception(failures[r]);

  return summarize_experiment(std::move(table.repetitions));
}

ExperimentTable summarize_experiment(std::vector<std::vector<IterationReport>> repetitions) {
  ExperimentTable table;
  table.repetitions = std::move(repetitions);
  std::vector<double> revenue_means, fdr_means, stat_means, tpr_means;
  for (const std::vector<IterationReport>& reports : table.repetitions) {
    std::vector<double> revenues, fdrs, stats, tprs;
    for (const IterationReport& report : reports) {
      revenues.push_back(report.revenue);
      if (report.fdr) fdrs.push_back(*report.fdr);
      stats.push_back(report.stat_rate);
      tprs.push_back(report.tpr_disparity);
    }
    revenue_means.push_back(mean_of(revenues));
    if (!fdrs.empty()) fdr_means.push_back(mean_of(fdrs));
    stat_means.push_back(mean_of(stats));
    tpr_means.push_back(mean_of(tprs));
  }
  table.revenue = summarize(revenue_means);
  table.fdr = summarize(fdr_means);
  table.stat_rate = summarize(stat_means);
  table.tpr_disparity = summarize(tpr_means);
  return table;
}

}  // namespace pfb
