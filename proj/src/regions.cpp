#include "pfb/regions.hpp"

#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace pfb {

namespace {

constexpr char kMagic[8] = {'P', 'F', 'B', 'R', 'S', '0', '0', '1'};

std::string sample_key(const Sample& sample) {
  std::string key;
  key.resize(sample.features.size() * sizeof(double) + sizeof(int));
  std::memcpy(key.data(), sample.features.data(), sample.features.size() * sizeof(double));
  std::memcpy(key.data() + sample.features.size() * sizeof(double), &sample.group,
              sizeof(int));
  return key;
}

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  if (!in) throw std::runtime_error("RegionState::load: truncated stream");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

void write_f64(std::ostream& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  write_u64(out, bits);
}

double read_f64(std::istream& in) {
  const std::uint64_t bits = read_u64(in);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

void write_classifier(std::ostream& out, const LinearClassifier& clf) {
  write_u64(out, clf.shared ? 1 : 0);
  write_f64(out, clf.threshold);
  write_u64(out, clf.blocks.size());
  for (const auto& block : clf.blocks) {
    write_u64(out, block.trained ? 1 : 0);
    write_f64(out, block.intercept);
    write_u64(out, block.weights.size());
    for (double w : block.weights) write_f64(out, w);
  }
}

LinearClassifier read_classifier(std::istream& in) {
  LinearClassifier clf;
  clf.shared = read_u64(in) != 0;
  clf.threshold = read_f64(in);
  clf.blocks.resize(read_u64(in));
  for (auto& block : clf.blocks) {
    block.trained = read_u64(in) != 0;
    block.intercept = read_f64(in);
    block.weights.resize(read_u64(in));
    for (double& w : block.weights) w = read_f64(in);
  }
  return clf;
}

}  // namespace

RegionState::RegionState(double tau, bool discrete_cache)
    : tau_(tau), discrete_cache_(discrete_cache) {
  if (tau <= 0.0) throw std::invalid_argument("RegionState: tau must be positive");
}

double RegionState::snapshot_value(const StrategySnapshot& snap, const Sample& sample) const {
  const double score = snap.classifier.score(sample);
  return evaluate(snap.strategy, sample, score, snap.group_shares);
}

double RegionState::weight_of(const Sample& sample) const {
  return weight_at(sample, static_cast<int>(history_.size()));
}

double RegionState::weight_at(const Sample& sample, int iterations) const {
  if (iterations < 0 || static_cast<std::size_t>(iterations) > history_.size()) {
    throw std::out_of_range("RegionState::weight_at: iteration prefix out of range");
  }
  const auto upto = static_cast<std::size_t>(iterations);
  if (!discrete_cache_) {
    double weight = 0.0;
    for (std::size_t i = 0; i < upto; ++i) weight += snapshot_value(history_[i], sample);
    return weight;
  }

  // discrete mode: fold only the snapshots recorded since the last lookup
  auto& entry = cache_[sample_key(sample)];
  if (entry.upto > upto) {
    // prefix queries below the cached point are rare; recompute directly
    double weight = 0.0;
    for (std::size_t i = 0; i < upto; ++i) weight += snapshot_value(history_[i], sample);
    return weight;
  }
  while (entry.upto < upto) {
    entry.weight += snapshot_value(history_[entry.upto], sample);
    ++entry.upto;
  }
  return entry.weight;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> RegionState::partition(
    const IterationBatch& batch) const {
  std::vector<std::size_t> exploit, explore;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    (in_exploit(batch.sample(i)) ? exploit : explore).push_back(i);
  }
  return {std::move(exploit), std::move(explore)};
}

void RegionState::advance(int t, StrategySnapshot snapshot) {
  if (t != last_advanced_ + 1) {
    throw std::logic_error("RegionState::advance: expected iteration " +
                           std::to_string(last_advanced_ + 1) + ", got " + std::to_string(t));
  }
  history_.push_back(std::move(snapshot));
  last_advanced_ = t;
}

void RegionState::save(std::ostream& out) const {
  out.write(kMagic, sizeof(kMagic));
  write_f64(out, tau_);
  write_u64(out, discrete_cache_ ? 1 : 0);
  write_u64(out, static_cast<std::uint64_t>(last_advanced_));
  write_u64(out, history_.size());
  for (const auto& snap : history_) {
    write_classifier(out, snap.classifier);
    write_u64(out, static_cast<std::uint64_t>(snap.strategy.kind));
    write_f64(out, snap.strategy.beta);
    write_u64(out, snap.group_shares.size());
    for (const auto& [group, share] : snap.group_shares) {
      write_u64(out, static_cast<std::uint64_t>(group));
      write_f64(out, share);
    }
  }
}

RegionState RegionState::load(std::istream& in) {
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("RegionState::load: bad magic or unsupported version");
  }
  const double tau = read_f64(in);
  const bool discrete = read_u64(in) != 0;
  RegionState state(tau, discrete);
  state.last_advanced_ = static_cast<int>(read_u64(in));
  const std::uint64_t count = read_u64(in);
  state.history_.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    StrategySnapshot snap;
    snap.classifier = read_classifier(in);
    snap.strategy.kind = static_cast<StrategyKind>(read_u64(in));
    snap.strategy.beta = read_f64(in);
    const std::uint64_t shares = read_u64(in);
    for (std::uint64_t s = 0; s < shares; ++s) {
      const int group = static_cast<int>(read_u64(in));
      snap.group_shares[group] = read_f64(in);
    }
    state.history_.push_back(std::move(snap));
  }
  return state;
}

}  // namespace pfb
