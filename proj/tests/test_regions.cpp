#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "pfb/regions.hpp"
#include "pfb/rng.hpp"

using namespace pfb;

namespace {

Sample point(double x, int group = 1) {
  Sample s;
  s.features = {x};
  s.group = group;
  return s;
}

LinearClassifier constant_score(double score) {
  return LinearClassifier::make_shared_weights({0.0}, std::log(score / (1.0 - score)));
}

StrategySnapshot uniform_snapshot() {
  return {constant_score(0.5), {StrategyKind::uniform, 0.0}, {}};
}

}  // namespace

TEST_SUITE("regions") {

TEST_CASE("no history means zero mass and a fully explored batch") {
  RegionState state(0.5);
  CHECK(state.weight_of(point(1.0)) == doctest::Approx(0.0));
  CHECK_FALSE(state.in_exploit(point(1.0)));

  IterationBatch batch(1, {point(0.1), point(0.2), point(0.3)}, {1, 0, 1});
  const auto [exploit, explore] = state.partition(batch);
  CHECK(exploit.empty());
  CHECK(explore.size() == 3);
}

TEST_CASE("uniform strategy crosses a half threshold after one iteration") {
  RegionState state(0.5);
  state.advance(1, uniform_snapshot());
  CHECK(state.weight_of(point(-7.0)) == doctest::Approx(1.0));
  CHECK(state.in_exploit(point(-7.0)));
}

TEST_CASE("a constant score of point two accumulates past a half in three steps") {
  RegionState state(0.5);
  const StrategySnapshot snap{constant_score(0.2), {StrategyKind::clf, 0.0}, {}};
  state.advance(1, snap);
  state.advance(2, snap);
  CHECK(state.weight_of(point(0.0)) == doctest::Approx(0.4));
  CHECK_FALSE(state.in_exploit(point(0.0)));
  state.advance(3, snap);
  CHECK(state.weight_of(point(0.0)) == doctest::Approx(0.6));
  CHECK(state.in_exploit(point(0.0)));
}

TEST_CASE("advance enforces the iteration ordering") {
  RegionState state(0.5);
  state.advance(1, uniform_snapshot());
  CHECK_THROWS_AS(state.advance(1, uniform_snapshot()), std::logic_error);
  CHECK_THROWS_AS(state.advance(3, uniform_snapshot()), std::logic_error);
  CHECK_NOTHROW(state.advance(2, uniform_snapshot()));
}

TEST_CASE("accumulated mass never decreases and exploit membership is sticky") {
  Rng rng(0xbeef);
  RegionState state(0.35);
  std::vector<Sample> probes;
  for (int i = 0; i < 12; ++i) probes.push_back(point(rng.normal(), 1 + (i % 2)));

  std::vector<double> last(probes.size(), 0.0);
  std::vector<bool> was_exploit(probes.size(), false);
  for (int t = 1; t <= 10; ++t) {
    const double score = 0.05 + 0.9 * rng.uniform();
    const StrategySnapshot snap{constant_score(score),
                                {t % 2 == 0 ? StrategyKind::clf : StrategyKind::fair, 0.1},
                                {{1, 0.6}, {2, 0.4}}};
    state.advance(t, snap);
    for (std::size_t i = 0; i < probes.size(); ++i) {
      const double now = state.weight_of(probes[i]);
      CHECK(now >= last[i] - 1e-12);
      last[i] = now;
      if (was_exploit[i]) CHECK(state.in_exploit(probes[i]));
      was_exploit[i] = state.in_exploit(probes[i]);
    }
  }
}

TEST_CASE("each advance adds exactly the snapshot's strategy value") {
  RegionState state(0.5);
  const Sample probe = point(0.7, 2);
  const StrategySnapshot snap{constant_score(0.3),
                              {StrategyKind::fair, 0.25},
                              {{1, 0.5}, {2, 0.5}}};
  const double before = state.weight_of(probe);
  state.advance(1, snap);
  const double expected =
      evaluate(snap.strategy, probe, snap.classifier.score(probe), snap.group_shares);
  CHECK(state.weight_of(probe) - before == doctest::Approx(expected));
}

TEST_CASE("prefix weights reconstruct any earlier iteration") {
  RegionState state(0.5);
  state.advance(1, {constant_score(0.2), {StrategyKind::clf, 0.0}, {}});
  state.advance(2, {constant_score(0.4), {StrategyKind::clf, 0.0}, {}});
  const Sample probe = point(0.0);
  CHECK(state.weight_at(probe, 0) == doctest::Approx(0.0));
  CHECK(state.weight_at(probe, 1) == doctest::Approx(0.2));
  CHECK(state.weight_at(probe, 2) == doctest::Approx(0.6));
  CHECK_FALSE(state.in_exploit_at(probe, 1));
  CHECK(state.in_exploit_at(probe, 2));
}

TEST_CASE("threshold must be positive and is compared strictly") {
  CHECK_THROWS_AS(RegionState(0.0), std::invalid_argument);
  CHECK_THROWS_AS(RegionState(-0.5), std::invalid_argument);

  RegionState state(1e-12);
  CHECK_FALSE(state.in_exploit(point(1.0)));  // no history yet: weight 0 <= tau
  state.advance(1, {constant_score(0.1), {StrategyKind::clf, 0.0}, {}});
  CHECK(state.in_exploit(point(1.0)));
}

TEST_CASE("partition splits a batch disjointly and covers it") {
  RegionState state(0.5);
  state.advance(1, {constant_score(0.9), {StrategyKind::clf, 0.0}, {}});

  std::vector<Sample> samples;
  std::vector<int> labels;
  Rng rng(0x7e57);
  for (int i = 0; i < 40; ++i) {
    samples.push_back(point(rng.normal()));
    labels.push_back(rng.bernoulli(0.5) ? 1 : 0);
  }
  IterationBatch batch(1, samples, labels);
  const auto [exploit, explore] = state.partition(batch);
  CHECK(exploit.size() + explore.size() == batch.size());
  std::vector<bool> seen(batch.size(), false);
  for (std::size_t i : exploit) {
    CHECK_FALSE(seen[i]);
    seen[i] = true;
    CHECK(state.in_exploit(batch.sample(i)));
  }
  for (std::size_t i : explore) {
    CHECK_FALSE(seen[i]);
    seen[i] = true;
    CHECK_FALSE(state.in_exploit(batch.sample(i)));
  }
}

TEST_CASE("a mixed two-point history splits the way the sums say") {
  // point a scores 0.4 under both classifiers, point b scores 0.1
  const Sample a = point(0.0);
  const Sample b = point(-1.0);
  std::vector<GroupWeights> block{{{2.0}, std::log(0.4 / 0.6), true}};
  LinearClassifier f = LinearClassifier::make_per_group(block);
  // margins: a -> log(2/3); b -> log(2/3) - 2  => scores 0.4 and ~0.0832
  RegionState state(0.5);
  const StrategySnapshot snap{f, {StrategyKind::clf, 0.0}, {}};
  state.advance(1, snap);
  state.advance(2, snap);
  CHECK(state.weight_of(a) == doctest::Approx(0.8));
  CHECK(state.in_exploit(a));
  CHECK(state.weight_of(b) < 0.5);
  CHECK_FALSE(state.in_exploit(b));
}

TEST_CASE("snapshots round-trip through serialization bit-exactly") {
  RegionState state(0.4);
  state.advance(1, {constant_score(0.7), {StrategyKind::clf, 0.0}, {}});
  state.advance(2, {constant_score(0.2), {StrategyKind::fair, 0.3}, {{1, 0.25}, {2, 0.75}}});
  state.advance(3, uniform_snapshot());

  std::ostringstream first;
  state.save(first);
  std::istringstream in(first.str());
  RegionState loaded = RegionState::load(in);

  CHECK(loaded.tau() == doctest::Approx(state.tau()));
  CHECK(loaded.iterations_recorded() == state.iterations_recorded());
  Rng rng(0x10ad);
  for (int i = 0; i < 25; ++i) {
    const Sample probe = point(rng.normal(), 1 + static_cast<int>(rng.below(2)));
    CHECK(loaded.weight_of(probe) == doctest::Approx(state.weight_of(probe)).epsilon(1e-15));
  }
  std::ostringstream second;
  loaded.save(second);
  CHECK(first.str() == second.str());

  // a loaded state keeps advancing from where it stopped
  CHECK_THROWS_AS(loaded.advance(3, uniform_snapshot()), std::logic_error);
  CHECK_NOTHROW(loaded.advance(4, uniform_snapshot()));
}

TEST_CASE("corrupt serialization headers are rejected") {
  std::istringstream bad("XXXXXXXXgarbage");
  CHECK_THROWS_AS(RegionState::load(bad), std::runtime_error);
}

}  // TEST_SUITE
