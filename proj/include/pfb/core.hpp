#ifndef PFB_CORE_HPP
#define PFB_CORE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pfb {

using FeatureVector = std::vector<double>;

// One individual: z-scored features, group id in {1..p}, and an outcome that
// stays unset until it has been observed.
struct Sample {
  FeatureVector features;
  int group = 1;
  std::optional<int> label;
};

// The set S_t arriving at iteration t. Ground-truth outcomes are stored
// privately; the decision path may read a label only through observe_label,
// which records the access so tests can audit the partial-feedback contract.
// ground_truth_label bypasses the gate and exists solely for evaluation code.
class IterationBatch {
 public:
  IterationBatch(int index, std::vector<Sample> samples, std::vector<int> true_labels);

  int index() const { return index_; }
  std::size_t size() const { return samples_.size(); }
  const Sample& sample(std::size_t i) const { return samples_.at(i); }
  const std::vector<Sample>& samples() const { return samples_; }

  int observe_label(std::size_t i);
  int ground_truth_label(std::size_t i) const { return true_labels_.at(i); }

  // sorted indices of every sample whose label was revealed via observe_label
  std::vector<std::size_t> access_log() const;

 private:
  int index_ = 0;
  std::vector<Sample> samples_;
  std::vector<int> true_labels_;
  std::vector<bool> observed_;
};

// Payoff per (prediction, outcome) cell. Named constructors cover the
// standard metrics; revenue keeps c1, c2 as positive magnitudes and applies
// the false-positive sign itself.
struct UtilityCoefficients {
  double true_negative = 0.0;   // f=0, y=0
  double false_negative = 0.0;  // f=0, y=1
  double false_positive = 0.0;  // f=1, y=0
  double true_positive = 0.0;   // f=1, y=1

  static UtilityCoefficients accuracy() { return {1.0, 0.0, 0.0, 1.0}; }
  static UtilityCoefficients positive_rate() { return {0.0, 0.0, 1.0, 1.0}; }
  static UtilityCoefficients revenue(double c1, double c2);
  // group-conditional TPR: pass that group's positive base rate Pr[Y=1 | Z=z]
  static UtilityCoefficients tpr(double positive_base_rate);
};

// One affine block of a classifier. trained=false marks a group for which no
// labeled evidence exists yet; such groups are rejected outright.
struct GroupWeights {
  FeatureVector weights;
  double intercept = 0.0;
  bool trained = true;
};

// Logistic scorer with a decision threshold. Holds either a single shared
// block or one block per group (the per-group form is the default hypothesis
// class).
struct LinearClassifier {
  std::vector<GroupWeights> blocks;
  double threshold = 0.5;
  bool shared = true;

  static LinearClassifier make_shared_weights(FeatureVector weights, double intercept,
                                              double threshold = 0.5);
  static LinearClassifier make_per_group(std::vector<GroupWeights> blocks,
                                         double threshold = 0.5);

  const GroupWeights& block_for(int group) const;
  // logistic of the affine form, clamped into the open interval (0,1)
  double score(const Sample& sample) const;
  // 1 iff score >= threshold (ties positive) and the group's block is trained
  int predict(const Sample& sample) const;
};

double logistic(double margin);

enum class StrategyKind { uniform, clf, fair, inverse };
enum class BudgetForm { step6, text };  // step6 subtracts epsilon, text does not

std::string to_string(StrategyKind kind);
StrategyKind strategy_from_string(const std::string& name);

// Everything Algorithm-level: the FDR budget alpha, the exploit-FDR schedule
// alpha_exploit(t) = min(scale * t^exponent, alpha - epsilon), the slack
// epsilon, selection-rate floor lambda, region threshold tau, and the
// exploration strategy.
struct AlgorithmConfig {
  double alpha = 0.15;
  double alpha_exploit_scale = 0.075;
  double alpha_exploit_exponent = 0.2;
  double epsilon = 1e-3;
  double lambda = 0.0;
  double tau = 0.5;
  double beta = 0.0;
  StrategyKind exploration_strategy = StrategyKind::clf;
  std::optional<double> exploit_fairness;  // statistical-rate cap
  std::uint64_t seed = 0;
  BudgetForm budget_form = BudgetForm::step6;
  bool shared_weights = false;

  double alpha_exploit(int t) const;
  void validate() const;  // throws std::invalid_argument with the field name
};

}  // namespace pfb

#endif  // PFB_CORE_HPP
