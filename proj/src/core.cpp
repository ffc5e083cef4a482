#include "pfb/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pfb {

IterationBatch::IterationBatch(int index, std::vector<Sample> samples,
                               std::vector<int> true_labels)
    : index_(index),
      samples_(std::move(samples)),
      true_labels_(std::move(true_labels)),
      observed_(samples_.size(), false) {
  if (samples_.size() != true_labels_.size()) {
    throw std::invalid_argument("IterationBatch: samples and labels differ in length");
  }
  for (auto& s : samples_) s.label.reset();
}

int IterationBatch::observe_label(std::size_t i) {
  observed_.at(i) = true;
  return true_labels_[i];
}

std::vector<std::size_t> IterationBatch::access_log() const {
  std::vector<std::size_t> log;
  for (std::size_t i = 0; i < observed_.size(); ++i) {
    if (observed_[i]) log.push_back(i);
  }
  return log;
}

UtilityCoefficients UtilityCoefficients::revenue(double c1, double c2) {
  if (c1 <= 0.0 || c2 <= 0.0) {
    throw std::invalid_argument("revenue coefficients c1, c2 must be positive magnitudes");
  }
  return {0.0, 0.0, -c1, c2};
}

UtilityCoefficients UtilityCoefficients::tpr(double positive_base_rate) {
  if (positive_base_rate <= 0.0) {
    throw std::invalid_argument("tpr coefficients need a positive base rate");
  }
  return {0.0, 0.0, 0.0, 1.0 / positive_base_rate};
}

double logistic(double margin) {
  const double value = 1.0 / (1.0 + std::exp(-margin));
  // keep scores in the open interval so a reject-all threshold of 1.0 exists
  return std::clamp(value, 1e-300, 1.0 - 1e-12);
}

LinearClassifier LinearClassifier::make_shared_weights(FeatureVector weights,
                                                       double intercept,
                                                       double threshold) {
  LinearClassifier clf;
  clf.blocks.push_back(GroupWeights{std::move(weights), intercept, true});
  clf.threshold = threshold;
  clf.shared = true;
  return clf;
}

LinearClassifier LinearClassifier::make_per_group(std::vector<GroupWeights> blocks,
                                                  double threshold) {
  LinearClassifier clf;
  clf.blocks = std::move(blocks);
  clf.threshold = threshold;
  clf.shared = false;
  return clf;
}

const GroupWeights& LinearClassifier::block_for(int group) const {
  if (shared) return blocks.at(0);
  if (group < 1 || static_cast<std::size_t>(group) > blocks.size()) {
    throw std::out_of_range("LinearClassifier: no weight block for group " +
                            std::to_string(group));
  }
  return blocks[static_cast<std::size_t>(group - 1)];
}

double LinearClassifier::score(const Sample& sample) const {
  const GroupWeights& block = block_for(sample.group);
  if (block.weights.size() != sample.features.size()) {
    throw std::invalid_argument("LinearClassifier: feature dimension mismatch");
  }
  double margin = block.intercept;
  for (std::size_t j = 0; j < block.weights.size(); ++j) {
    margin += block.weights[j] * sample.features[j];
  }
  return logistic(margin);
}

int LinearClassifier::predict(const Sample& sample) const {
  if (!block_for(sample.group).trained) return 0;
  return score(sample) >= threshold ? 1 : 0;
}

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::uniform: return "uniform";
    case StrategyKind::clf: return "clf";
    case StrategyKind::fair: return "fair";
    case StrategyKind::inverse: return "inverse";
  }
  return "unknown";
}

StrategyKind strategy_from_string(const std::string& name) {
  if (name == "uniform") return StrategyKind::uniform;
  if (name == "clf") return StrategyKind::clf;
  if (name == "fair") return StrategyKind::fair;
  if (name == "inverse") return StrategyKind::inverse;
  throw std::invalid_argument("unknown exploration strategy: " + name);
}

double AlgorithmConfig::alpha_exploit(int t) const {
  const double scheduled = alpha_exploit_scale * std::pow(static_cast<double>(t),
                                                          alpha_exploit_exponent);
  return std::min(scheduled, alpha - epsilon);
}

void AlgorithmConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in (0,1]");
  if (!(epsilon > 0.0 && epsilon < alpha)) {
    throw std::invalid_argument("epsilon must be in (0, alpha)");
  }
  if (!(alpha_exploit_scale > 0.0)) {
    throw std::invalid_argument("alpha_exploit_scale must be positive");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must be in [0,1]");
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must be in (0,1]");
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must be in [0,1]");
  if (exploit_fairness && !(*exploit_fairness >= 0.0 && *exploit_fairness <= 1.0)) {
    throw std::invalid_argument("exploit_fairness must be in [0,1]");
  }
}

}  // namespace pfb
