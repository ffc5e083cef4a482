#ifndef PFB_REGIONS_HPP
#define PFB_REGIONS_HPP

#include <iosfwd>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pfb/core.hpp"
#include "pfb/exploration.hpp"

namespace pfb {

// Everything needed to re-evaluate g(x,z; f_i) for a past iteration: the
// classifier of that iteration, the strategy, and the group shares the
// strategy saw (frozen here because the explore region keeps shrinking).
struct StrategySnapshot {
  LinearClassifier classifier;
  ExplorationStrategy strategy;
  GroupShares group_shares;
};

// The Exploit/Explore partition, realized as accumulated exploration mass
// w_t(x,z) = sum_i g(x,z; f_i) compared against tau. Weights only grow, so a
// point that crosses tau stays in the exploit region. Starts empty: before
// any advance, every sample is in the explore region.
class RegionState {
 public:
  explicit RegionState(double tau, bool discrete_cache = false);

  double tau() const { return tau_; }
  int iterations_recorded() const { return static_cast<int>(history_.size()); }
  const std::vector<StrategySnapshot>& history() const { return history_; }

  double weight_of(const Sample& sample) const;
  // accumulated mass using only the first `iterations` snapshots; lets
  // verification code reconstruct Exploit_t for any past t
  double weight_at(const Sample& sample, int iterations) const;
  bool in_exploit(const Sample& sample) const { return weight_of(sample) > tau_; }
  bool in_exploit_at(const Sample& sample, int iterations) const {
    return weight_at(sample, iterations) > tau_;
  }

  // disjoint covering split of the batch: (exploit indices, explore indices)
  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> partition(
      const IterationBatch& batch) const;

  // records iteration t's snapshot; must be called exactly once per iteration
  void advance(int t, StrategySnapshot snapshot);

  // versioned little-endian binary snapshot; round-trips bit-exactly
  void save(std::ostream& out) const;
  static RegionState load(std::istream& in);

 private:
  double tau_ = 0.5;
  bool discrete_cache_ = false;
  std::vector<StrategySnapshot> history_;
  int last_advanced_ = 0;

  struct CacheEntry {
    std::size_t upto = 0;  // snapshots folded into weight so far
    double weight = 0.0;
  };
  mutable std::unordered_map<std::string, CacheEntry> cache_;

  double snapshot_value(const StrategySnapshot& snap, const Sample& sample) const;
};

}  // namespace pfb

#endif  // PFB_REGIONS_HPP
