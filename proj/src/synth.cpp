#include "pfb/synth.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "pfb/io.hpp"
#include "pfb/rng.hpp"

namespace pfb {

std::string make_synth_csv(const SynthConfig& config) {
  if (config.rows == 0) throw std::invalid_argument("make_synth_csv: rows must be positive");
  if (config.minority_share <= 0.0 || config.minority_share >= 1.0)
    throw std::invalid_argument("make_synth_csv: minority_share must lie in (0, 1)");

  // Feature loadings and logistic slope chosen so that the revenue-optimal
  // acceptance region carries roughly 15% conditional negatives: a tighter
  // FDR bound then genuinely constrains the learned threshold.
  constexpr double kLoadings[4] = {0.9, 0.7, 0.5, 0.3};
  constexpr double kSlope = 1.3;
  constexpr double kOffset = -0.4;
  constexpr double kMinorityShift = -0.3;

  Rng rng(mix_seed(config.seed, 0x5e17));
  std::ostringstream out;
  out << "f1,f2,f3,f4,grp,repaid\n";
  for (std::size_t row = 0; row < config.rows; ++row) {
    const bool minority = rng.uniform() < config.minority_share;
    double score = minority ? kMinorityShift : 0.0;
    double features[4];
    for (int j = 0; j < 4; ++j) {
      features[j] = rng.normal();
      score += kLoadings[j] * features[j];
    }
    const double p = 1.0 / (1.0 + std::exp(-(kSlope * score + kOffset)));
    const bool repaid = rng.bernoulli(p);
    for (int j = 0; j < 4; ++j) out << format_g6(features[j]) << ',';
    out << (minority ? 'B' : 'A') << ',' << (repaid ? "yes" : "no") << '\n';
  }
  return out.str();
}

}  // namespace pfb
