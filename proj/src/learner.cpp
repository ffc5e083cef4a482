#include "pfb/learner.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "pfb/rng.hpp"

namespace pfb {
namespace {

std::string entry_key(const Sample& sample) {
  std::string key;
  key.resize(sample.features.size() * sizeof(double) + 2 * sizeof(int));
  char* out = key.data();
  std::memcpy(out, sample.features.data(), sample.features.size() * sizeof(double));
  out += sample.features.size() * sizeof(double);
  std::memcpy(out, &sample.group, sizeof(int));
  out += sizeof(int);
  const int label = sample.label.value();
  std::memcpy(out, &label, sizeof(int));
  return key;
}

struct GdOptions {
  int rounds = 1;
  int steps_per_round = 2000;
  double step = 0.1;
  double tolerance = 1e-3;  // loss improvement per 100-step window
  double penalty_start = 1.0;
  double penalty_growth = 10.0;
};

// Soft-constraint targets; a disabled constraint is marked by a negative
// bound so the penalty never activates.
struct SoftConstraints {
  double fdr_bound = -1.0;        // weighted soft FDR <= bound
  double selection_floor = -1.0;  // weighted soft positive rate >= floor
  double fairness_bound = -1.0;   // pairwise soft statistical-rate gap <= bound
};

// log(1 + e^m) - y*m, stable for large |m|
double cross_entropy(double margin, int label) {
  const double softplus =
      margin > 0 ? margin + std::log1p(std::exp(-margin)) : std::log1p(std::exp(margin));
  return softplus - label * margin;
}

struct FlatParams {
  // One block of (weights, intercept) per group, or a single block when the
  // classifier shares weights across groups.
  std::vector<double> values;
  std::size_t dimension = 0;
  int blocks = 1;

  double* block(int index) { return values.data() + static_cast<std::size_t>(index) * (dimension + 1); }
  const double* block(int index) const {
    return values.data() + static_cast<std::size_t>(index) * (dimension + 1);
  }
};

struct Workspace {
  std::vector<double> margin;
  std::vector<double> score;
  std::vector<double> grad_margin;
  std::vector<double> group_weight;   // per block
  std::vector<double> group_soft;     // per block, weighted soft positives
  std::vector<double> gradient;
};

int block_index(const Sample& sample, bool shared) { return shared ? 0 : sample.group - 1; }

// Computes the penalized loss and, when grad is non-null, its gradient.
double penalized_loss(const FlatParams& params, std::span<const PoolEntry> entries,
                      std::span<const std::size_t> subset, const SoftConstraints& constraints,
                      double penalty, bool shared, Workspace& ws, std::vector<double>* grad) {
  double subset_weight = 0.0;
  for (std::size_t k : subset) subset_weight += entries[k].weight;
  if (subset_weight <= 0.0) return 0.0;

  const std::size_t n = subset.size();
  ws.margin.resize(n);
  ws.score.resize(n);
  ws.grad_margin.assign(n, 0.0);
  ws.group_weight.assign(params.blocks, 0.0);
  ws.group_soft.assign(params.blocks, 0.0);

  double ce = 0.0;
  double soft_positive = 0.0;
  double soft_false_positive = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const PoolEntry& entry = entries[subset[i]];
    const int b = block_index(entry.sample, shared);
    const double* theta = params.block(b);
    double m = theta[params.dimension];
    for (std::size_t j = 0; j < params.dimension; ++j) m += theta[j] * entry.sample.features[j];
    const double s = 1.0 / (1.0 + std::exp(-m));
    ws.margin[i] = m;
    ws.score[i] = s;
    const int y = entry.sample.label.value();
    ce += entry.weight * cross_entropy(m, y);
    soft_positive += entry.weight * s;
    if (y == 0) soft_false_positive += entry.weight * s;
    ws.group_weight[b] += entry.weight;
    ws.group_soft[b] += entry.weight * s;
  }

  double loss = ce / subset_weight;

  // FDR: soft_fp - bound * soft_pos <= 0 (scaled by subset weight)
  double fdr_residual = 0.0;
  if (constraints.fdr_bound >= 0.0) {
    fdr_residual =
        std::max(0.0, (soft_false_positive - constraints.fdr_bound * soft_positive) / subset_weight);
    loss += penalty * fdr_residual * fdr_residual;
  }
  double selection_residual = 0.0;
  if (constraints.selection_floor > 0.0) {
    selection_residual = std::max(0.0, constraints.selection_floor - soft_positive / subset_weight);
    loss += penalty * selection_residual * selection_residual;
  }

  // Pairwise soft statistical-rate gaps. Only meaningful with per-group
  // blocks; in shared mode group totals are folded into block 0 and the
  // fairness penalty is skipped (the threshold stage still enforces it).
  std::vector<double> rate(params.blocks, 0.0);
  std::vector<double> pair_residual;
  std::vector<std::pair<int, int>> pairs;
  if (constraints.fairness_bound >= 0.0 && !shared) {
    for (int b = 0; b < params.blocks; ++b)
      rate[b] = ws.group_weight[b] > 0.0 ? ws.group_soft[b] / ws.group_weight[b] : 0.0;
    for (int a = 0; a < params.blocks; ++a) {
      if (ws.group_weight[a] <= 0.0) continue;
      for (int b = a + 1; b < params.blocks; ++b) {
        if (ws.group_weight[b] <= 0.0) continue;
        const double residual =
            std::max(0.0, std::abs(rate[a] - rate[b]) - constraints.fairness_bound);
        if (residual > 0.0) {
          pairs.emplace_back(a, b);
          pair_residual.push_back(residual);
          loss += penalty * residual * residual;
        }
      }
    }
  }

  if (grad == nullptr) return loss;

  for (std::size_t i = 0; i < n; ++i) {
    const PoolEntry& entry = entries[subset[i]];
    const double s = ws.score[i];
    const double slope = s * (1.0 - s);
    const int y = entry.sample.label.value();
    double d = entry.weight * (s - y) / subset_weight;
    if (fdr_residual > 0.0)
      d += penalty * 2.0 * fdr_residual * entry.weight * slope *
           ((y == 0 ? 1.0 : 0.0) - constraints.fdr_bound) / subset_weight;
    if (selection_residual > 0.0)
      d -= penalty * 2.0 * selection_residual * entry.weight * slope / subset_weight;
    if (!pairs.empty()) {
      const int b = block_index(entry.sample, false);
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto [ga, gb] = pairs[p];
        if (b != ga && b != gb) continue;
        const double sign = rate[ga] >= rate[gb] ? 1.0 : -1.0;
        const double direction = (b == ga ? sign : -sign);
        d += penalty * 2.0 * pair_residual[p] * direction * entry.weight * slope /
             ws.group_weight[b];
      }
    }
    ws.grad_margin[i] = d;
  }

  grad->assign(params.values.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const PoolEntry& entry = entries[subset[i]];
    const int b = block_index(entry.sample, shared);
    double* g = grad->data() + static_cast<std::size_t>(b) * (params.dimension + 1);
    const double d = ws.grad_margin[i];
    for (std::size_t j = 0; j < params.dimension; ++j) g[j] += d * entry.sample.features[j];
    g[params.dimension] += d;
  }
  return loss;
}

void run_penalty_descent(FlatParams& params, std::span<const PoolEntry> entries,
                         std::span<const std::size_t> subset, const SoftConstraints& constraints,
                         bool shared, const GdOptions& options) {
  Workspace ws;
  std::vector<double> grad;
  double penalty = options.penalty_start;
  for (int round = 0; round < options.rounds; ++round) {
    double window_loss = std::numeric_limits<double>::infinity();
    for (int step = 0; step < options.steps_per_round; ++step) {
      const double loss =
          penalized_loss(params, entries, subset, constraints, penalty, shared, ws, &grad);
      if (step % 100 == 0) {
        if (window_loss - loss < options.tolerance) break;
        window_loss = loss;
      }
      double peak = 0.0;
      for (double g : grad) peak = std::max(peak, std::abs(g));
      const double scale = peak > 100.0 ? 100.0 / peak : 1.0;
      for (std::size_t j = 0; j < params.values.size(); ++j)
        params.values[j] -= options.step * scale * grad[j];
    }
    penalty *= options.penalty_growth;
  }
}

LinearClassifier classifier_from_params(const FlatParams& params, std::span<const PoolEntry> entries,
                                        int group_count, bool shared, double threshold) {
  LinearClassifier classifier;
  classifier.shared = shared;
  classifier.threshold = threshold;
  const int blocks = shared ? 1 : group_count;
  classifier.blocks.resize(blocks);
  std::vector<bool> seen(blocks, shared);
  for (const PoolEntry& entry : entries) seen[block_index(entry.sample, shared)] = true;
  for (int b = 0; b < blocks; ++b) {
    GroupWeights& block = classifier.blocks[b];
    const double* theta = params.block(b);
    block.weights.assign(theta, theta + params.dimension);
    block.intercept = theta[params.dimension];
    block.trained = seen[b];
  }
  return classifier;
}

// Alternating halves after a seeded shuffle. Entries sharing one
// (features, group, label) key alternate sides so that both halves carry
// roughly half of every such key's weight; distinct per-sample entries
// degenerate to the plain shuffled alternation.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_halves(
    std::span<const PoolEntry> entries, std::uint64_t seed) {
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(mix_seed(seed, 0x5eedULL));
  rng.shuffle(order);
  std::vector<std::size_t> fit, holdout;
  std::unordered_map<std::string, int> side;
  for (std::size_t idx : order) {
    auto [it, inserted] = side.try_emplace(entry_key(entries[idx].sample), 0);
    if (inserted) it->second = rng.bernoulli(0.5) ? 1 : 0;
    (it->second == 0 ? fit : holdout).push_back(idx);
    it->second ^= 1;
  }
  return {std::move(fit), std::move(holdout)};
}

struct ThresholdPick {
  bool feasible = false;
  double threshold = 1.0;
  double objective = -std::numeric_limits<double>::infinity();
};

// Sweeps candidate thresholds from high to low, keeping running weighted
// counts so each candidate costs O(groups). Feasibility (FDR, selection
// rate, fairness) is checked on the whole pool; the objective is the
// weighted utility on the held-out half. A pool with no weighted positives
// at a threshold has undefined FDR and counts as satisfying the bound.
ThresholdPick sweep_threshold(const FlatParams& params, const TrainingProblem& problem,
                              std::span<const std::size_t> holdout) {
  const auto& entries = problem.pool.entries;
  const std::size_t n = entries.size();
  std::vector<double> score(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* theta = params.block(block_index(entries[i].sample, problem.shared_weights));
    double m = theta[params.dimension];
    for (std::size_t j = 0; j < params.dimension; ++j)
      m += theta[j] * entries[i].sample.features[j];
    score[i] = 1.0 / (1.0 + std::exp(-m));
  }

  std::vector<bool> in_holdout(n, false);
  for (std::size_t k : holdout) in_holdout[k] = true;

  double holdout_weight = 0.0;
  double holdout_base = 0.0;  // utility mass with everything rejected
  for (std::size_t k : holdout) {
    holdout_weight += entries[k].weight;
    const int y = entries[k].sample.label.value();
    holdout_base +=
        entries[k].weight * (y == 1 ? problem.gamma.false_negative : problem.gamma.true_negative);
  }
  if (holdout_weight <= 0.0) holdout_weight = 1.0;

  std::vector<std::size_t> by_score(n);
  std::iota(by_score.begin(), by_score.end(), std::size_t{0});
  std::sort(by_score.begin(), by_score.end(), [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return a < b;
  });

  const double fdr_bound = problem.alpha_exploit + problem.epsilon;
  const double selection_floor = problem.lambda - problem.epsilon;
  const double slack = 1e-9;

  double accepted = 0.0;
  double accepted_fp = 0.0;
  double holdout_delta = 0.0;
  std::vector<double> group_total(problem.group_count, 0.0);
  std::vector<double> group_accepted(problem.group_count, 0.0);
  for (const PoolEntry& entry : entries) group_total[entry.sample.group - 1] += entry.weight;

  ThresholdPick best;
  const auto consider = [&](double threshold) {
    const bool fdr_ok = accepted <= 0.0 || accepted_fp <= fdr_bound * accepted + slack;
    const bool selection_ok =
        accepted / problem.pool.total_weight >= selection_floor - slack;
    bool fairness_ok = true;
    if (problem.fairness_bound) {
      double low = 2.0, high = -1.0;
      for (int g = 0; g < problem.group_count; ++g) {
        if (group_total[g] <= 0.0) continue;
        const double rate = group_accepted[g] / group_total[g];
        low = std::min(low, rate);
        high = std::max(high, rate);
      }
      fairness_ok = high < low || high - low <= *problem.fairness_bound + slack;
    }
    if (!fdr_ok || !selection_ok || !fairness_ok) return;
    const double objective = (holdout_base + holdout_delta) / holdout_weight;
    // Ties go to the larger threshold, i.e. the earlier candidate.
    if (!best.feasible || objective > best.objective + slack) {
      best.feasible = true;
      best.threshold = threshold;
      best.objective = objective;
    }
  };

  consider(1.0);  // reject everything
  std::size_t i = 0;
  while (i < n) {
    const double threshold = score[by_score[i]];
    while (i < n && score[by_score[i]] == threshold) {
      const std::size_t k = by_score[i];
      const double w = entries[k].weight;
      const int y = entries[k].sample.label.value();
      accepted += w;
      if (y == 0) accepted_fp += w;
      group_accepted[entries[k].sample.group - 1] += w;
      if (in_holdout[k]) {
        const double reject =
            y == 1 ? problem.gamma.false_negative : problem.gamma.true_negative;
        const double accept =
            y == 1 ? problem.gamma.true_positive : problem.gamma.false_positive;
        holdout_delta += w * (accept - reject);
      }
      ++i;
    }
    consider(threshold);
  }
  return best;
}

}  // namespace

bool ReweightedPool::has_both_labels() const {
  bool positive = false, negative = false;
  for (const PoolEntry& entry : entries) {
    (entry.sample.label.value() == 1 ? positive : negative) = true;
    if (positive && negative) return true;
  }
  return false;
}

ReweightedPool build_eta_weights(std::span<const LabeledExample> labeled,
                                 const std::function<bool(const Sample&)>& in_exploit) {
  // Identical (features, group, label) samples are merged into two
  // round-robin buckets instead of one so the trainer's half split can put
  // part of every key's weight on each side.
  struct KeySlots {
    std::size_t entry[2] = {SIZE_MAX, SIZE_MAX};
    std::size_t copies = 0;
  };
  ReweightedPool pool;
  std::unordered_map<std::string, KeySlots> slots;
  for (const LabeledExample& example : labeled) {
    if (!example.sample.label)
      throw std::invalid_argument("build_eta_weights: sample without observed label");
    if (!(example.propensity > 0.0) || example.propensity > 1.0)
      throw std::invalid_argument("build_eta_weights: propensity must be in (0, 1]");
    if (!in_exploit(example.sample)) continue;
    const double weight = 1.0 / example.propensity;
    KeySlots& key_slots = slots[entry_key(example.sample)];
    const std::size_t bucket = key_slots.copies++ % 2;
    if (key_slots.entry[bucket] == SIZE_MAX) {
      key_slots.entry[bucket] = pool.entries.size();
      pool.entries.push_back({example.sample, weight});
    } else {
      pool.entries[key_slots.entry[bucket]].weight += weight;
    }
    pool.total_weight += weight;
  }
  return pool;
}

void TrainingProblem::validate() const {
  if (!(alpha_exploit > 0.0) || alpha_exploit + epsilon >= 1.0)
    throw std::invalid_argument("TrainingProblem: alpha_exploit + epsilon must lie in (0, 1)");
  if (epsilon < 0.0) throw std::invalid_argument("TrainingProblem: epsilon must be >= 0");
  if (lambda - epsilon > 1.0)
    throw std::invalid_argument("TrainingProblem: lambda - epsilon must be <= 1");
  if (fairness_bound && (*fairness_bound < 0.0 || *fairness_bound > 1.0))
    throw std::invalid_argument("TrainingProblem: fairness bound must lie in [0, 1]");
  if (group_count < 1) throw std::invalid_argument("TrainingProblem: group_count must be >= 1");
  for (const PoolEntry& entry : pool.entries) {
    if (!entry.sample.label) throw std::invalid_argument("TrainingProblem: unlabeled pool entry");
    if (entry.sample.group < 1 || entry.sample.group > group_count)
      throw std::invalid_argument("TrainingProblem: entry group out of range");
  }
}

TrainResult train_constrained(const TrainingProblem& problem) {
  problem.validate();
  TrainResult result;
  if (problem.pool.entries.empty() || !problem.pool.has_both_labels()) {
    result.status = TrainStatus::degenerate_pool;
    return result;
  }

  const std::size_t dimension = problem.pool.entries.front().sample.features.size();
  for (const PoolEntry& entry : problem.pool.entries)
    if (entry.sample.features.size() != dimension)
      throw std::invalid_argument("train_constrained: inconsistent feature dimension");

  FlatParams params;
  params.dimension = dimension;
  params.blocks = problem.shared_weights ? 1 : problem.group_count;
  params.values.assign(static_cast<std::size_t>(params.blocks) * (dimension + 1), 0.0);

  auto [fit_half, holdout_half] = split_halves(problem.pool.entries, problem.seed);
  if (holdout_half.empty()) holdout_half = fit_half;
  if (fit_half.empty()) fit_half = holdout_half;

  SoftConstraints constraints;
  constraints.fdr_bound = problem.alpha_exploit + problem.epsilon;
  if (problem.lambda - problem.epsilon > 0.0)
    constraints.selection_floor = problem.lambda - problem.epsilon;
  if (problem.fairness_bound) constraints.fairness_bound = *problem.fairness_bound;

  GdOptions options;
  options.rounds = 5;
  options.steps_per_round = 500;
  run_penalty_descent(params, problem.pool.entries, fit_half, constraints,
                      problem.shared_weights, options);

  const ThresholdPick pick = sweep_threshold(params, problem, holdout_half);
  if (!pick.feasible) {
    result.status = TrainStatus::infeasible;
    return result;
  }
  result.classifier = classifier_from_params(params, problem.pool.entries, problem.group_count,
                                             problem.shared_weights, pick.threshold);
  return result;
}

LinearClassifier train_f0(std::span<const Sample> labeled_pool,
                          std::span<const Sample> unlabeled_pool, const F0Options& options) {
  if (labeled_pool.empty() || unlabeled_pool.empty())
    throw std::invalid_argument("train_f0: both pools must be non-empty");

  std::vector<PoolEntry> entries;
  entries.reserve(labeled_pool.size() + unlabeled_pool.size());
  for (const Sample& sample : labeled_pool) {
    PoolEntry entry{sample, 1.0};
    entry.sample.label = 1;
    entries.push_back(std::move(entry));
  }
  for (const Sample& sample : unlabeled_pool) {
    PoolEntry entry{sample, 1.0};
    entry.sample.label = 0;
    entries.push_back(std::move(entry));
  }

  const std::size_t dimension = entries.front().sample.features.size();
  FlatParams params;
  params.dimension = dimension;
  params.blocks = options.shared_weights ? 1 : options.group_count;
  params.values.assign(static_cast<std::size_t>(params.blocks) * (dimension + 1), 0.0);

  std::vector<std::size_t> all(entries.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  GdOptions gd;
  gd.rounds = 1;
  gd.steps_per_round = 2000;
  gd.tolerance = 1e-6;
  run_penalty_descent(params, entries, all, SoftConstraints{}, options.shared_weights, gd);
  return classifier_from_params(params, entries, options.group_count, options.shared_weights, 0.5);
}

}  // namespace pfb
