#ifndef PFB_SYNTH_HPP
#define PFB_SYNTH_HPP

#include <cstddef>
#include <cstdint>
#include <string>

namespace pfb {

// Synthetic lending table with the census-style shape the experiment
// protocol expects: four numeric features, a small minority group, and a
// noisy logistic outcome whose conditional noise makes the FDR bound bind.
struct SynthConfig {
  std::size_t rows = 8200;
  double minority_share = 0.07;
  std::uint64_t seed = 0;
};

// Deterministic CSV text with header f1,f2,f3,f4,grp,repaid; grp takes the
// values A (majority) and B, repaid the values yes/no.
std::string make_synth_csv(const SynthConfig& config);

}  // namespace pfb

#endif  // PFB_SYNTH_HPP
