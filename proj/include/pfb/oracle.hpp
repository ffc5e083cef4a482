#ifndef PFB_ORACLE_HPP
#define PFB_ORACLE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pfb/core.hpp"
#include "pfb/data.hpp"
#include "pfb/engine.hpp"

namespace pfb {

// Desk-scale verification harness: runs the engine on small exact domains
// and compares against brute-force ground truth.
struct VerificationConfig {
  int trials = 50;
  double delta = 0.05;      // tolerated failure probability
  double tolerance = 0.05;  // absolute slack on probabilities / utilities
  std::size_t n = 2000;     // batch size per iteration
  int iterations = 12;      // T
  std::uint64_t seed = 0;

  void validate() const;  // trials >= 20 and sane ranges
};

// A fixture: the domain plus the initial accept region defining f_0. Each
// trial draws a fully labeled initial pool of initial_pool_size points (0
// means "use n") so the checks do not also depend on the biased-pool
// protocol of the empirical harness.
struct OracleSetup {
  ExactDomain domain;
  std::uint32_t f0_mask = 0;
  std::size_t initial_pool_size = 0;
};

struct BruteForceResult {
  std::uint32_t mask = 0;
  LinearClassifier classifier;
  double utility = 0.0;
};

// Exhaustive search over every cell subset; candidates whose positive mass
// is zero satisfy the FDR constraint vacuously, so the all-negative
// classifier is always feasible.
BruteForceResult brute_force_fopt(const ExactDomain& domain, const UtilityCoefficients& gamma,
                                  double alpha);

// Exact quantities under mu.
double exact_utility(const ExactDomain& domain, const LinearClassifier& classifier,
                     const UtilityCoefficients& gamma);
double exact_group_utility(const ExactDomain& domain, const LinearClassifier& classifier,
                           const UtilityCoefficients& gamma, int group);
std::optional<double> exact_fdr(const ExactDomain& domain, const LinearClassifier& classifier);
double exact_selection_rate(const ExactDomain& domain, const LinearClassifier& classifier);

// Utility of `classifier` under mu restricted to group `group` and to the
// exploit region after `advances` recorded iterations; nullopt when that
// restriction has zero mass.
std::optional<double> exact_region_group_utility(const ExactDomain& domain,
                                                 const LinearClassifier& classifier,
                                                 const RegionState& regions, int advances,
                                                 const UtilityCoefficients& gamma, int group);

struct CheckReport {
  std::string name;
  bool passed = false;
  std::vector<std::string> details;  // measured quantities, one per line
};

// Fraction of engine iterations whose realized FDR exceeds alpha + tolerance
// must stay at or below delta. Requires an (alpha, lambda)-feasible f_0.
CheckReport verify_feasibility(const OracleSetup& setup, const VerificationConfig& config,
                               const AlgorithmConfig& algorithm);

// Group-wise convergence to the brute-force optimum: for t >= ceil(1/sigma(z)),
// Util_mu(f_t, gamma, z) >= Util_mu(f_opt, gamma, z) - tolerance in at least
// a 1 - delta fraction of trials. Pins the uniform strategy with a constant
// alpha_exploit = alpha - epsilon and the epsilon-share explore budget.
CheckReport verify_convergence(const OracleSetup& setup, const VerificationConfig& config,
                               const AlgorithmConfig& algorithm, const UtilityCoefficients& gamma);

// Group-wise monotone improvement on the exploit region: every f_t must be
// within tolerance of the best previous classifier under mu restricted to
// its own exploit region.
CheckReport verify_monotonicity(const OracleSetup& setup, const VerificationConfig& config,
                                const AlgorithmConfig& algorithm,
                                const UtilityCoefficients& gamma);

// Total-variation distance between the normalized reweighted pool and
// mu restricted to the exploit region, excluding cells of mass at most
// epsilon / |D|, must be at or below tolerance at the final iteration.
CheckReport verify_reweighting(const OracleSetup& setup, const VerificationConfig& config,
                               const AlgorithmConfig& algorithm);

}  // namespace pfb

#endif  // PFB_ORACLE_HPP
