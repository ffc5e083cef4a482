#include <algorithm>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "pfb/metrics.hpp"
#include "pfb/rng.hpp"

using namespace pfb;

namespace {

std::vector<PredictionRecord> counted(int tp, int fp, int fn, int tn, int group = 1) {
  std::vector<PredictionRecord> records;
  for (int i = 0; i < tp; ++i) records.push_back({1, 1, group});
  for (int i = 0; i < fp; ++i) records.push_back({1, 0, group});
  for (int i = 0; i < fn; ++i) records.push_back({0, 1, group});
  for (int i = 0; i < tn; ++i) records.push_back({0, 0, group});
  return records;
}

std::vector<PredictionRecord> random_records(Rng& rng, std::size_t count, int groups) {
  std::vector<PredictionRecord> records(count);
  for (PredictionRecord& record : records)
    record = {rng.bernoulli(0.4) ? 1 : 0, rng.bernoulli(0.5) ? 1 : 0,
              1 + static_cast<int>(rng.below(groups))};
  return records;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("accuracy utility of an all-correct record set is one") {
  CHECK(utility(counted(3, 0, 0, 7), UtilityCoefficients::accuracy()) == doctest::Approx(1.0));
}

TEST_CASE("revenue utility matches the hand-counted cell sum") {
  // 100 records: 10 true positives, 2 false positives, the rest correct rejections
  const auto records = counted(10, 2, 0, 88);
  REQUIRE(records.size() == 100);
  const double expected = (200.0 * 10 - 500.0 * 2) / 100.0;
  CHECK(utility(records, UtilityCoefficients::revenue(500.0, 200.0)) ==
        doctest::Approx(expected));
  CHECK(expected == doctest::Approx(10.0));
}

TEST_CASE("positive-rate utility counts the predicted-positive share") {
  CHECK(utility(counted(3, 2, 1, 4), UtilityCoefficients::positive_rate()) ==
        doctest::Approx(0.5));
}

TEST_CASE("utility rejects an empty record set") {
  CHECK_THROWS_AS(utility({}, UtilityCoefficients::accuracy()), std::invalid_argument);
}

TEST_CASE("accuracy plus error rate is one for any record set") {
  Rng rng(11);
  const UtilityCoefficients error{0.0, 1.0, 1.0, 0.0};
  for (int round = 0; round < 20; ++round) {
    const auto records = random_records(rng, 97, 3);
    const double total = utility(records, UtilityCoefficients::accuracy()) +
                         utility(records, error);
    CHECK(total == doctest::Approx(1.0));
  }
}

TEST_CASE("group utility restricts to one group") {
  auto records = counted(5, 0, 0, 5, 1);
  SUBCASE("single group equals the unrestricted value") {
    CHECK(group_utility(records, UtilityCoefficients::accuracy(), 1) ==
          doctest::Approx(utility(records, UtilityCoefficients::accuracy())));
  }
  SUBCASE("an all-correct group scores one under accuracy") {
    const auto noisy = counted(1, 5, 3, 1, 2);
    records.insert(records.end(), noisy.begin(), noisy.end());
    CHECK(group_utility(records, UtilityCoefficients::accuracy(), 1) == doctest::Approx(1.0));
  }
  SUBCASE("absent group throws") {
    CHECK_THROWS_AS(group_utility(records, UtilityCoefficients::accuracy(), 2),
                    std::invalid_argument);
  }
}

TEST_CASE("two-group utilities match direct counting") {
  std::vector<PredictionRecord> records = counted(4, 1, 2, 3, 1);
  const auto second = counted(2, 2, 4, 2, 2);
  records.insert(records.end(), second.begin(), second.end());
  // direct counts: group 1 has 7 of 10 correct, group 2 has 4 of 10 correct
  CHECK(group_utility(records, UtilityCoefficients::accuracy(), 1) == doctest::Approx(0.7));
  CHECK(group_utility(records, UtilityCoefficients::accuracy(), 2) == doctest::Approx(0.4));
}

TEST_CASE("revenue is the signed count expression") {
  CHECK(revenue(counted(0, 0, 4, 6), 500.0, 200.0) == doctest::Approx(0.0));
  CHECK(revenue(counted(10, 2, 0, 88), 500.0, 200.0) == doctest::Approx(1000.0));
  CHECK(revenue(counted(0, 7, 0, 3), 500.0, 200.0) == doctest::Approx(-500.0 * 7));
}

TEST_CASE("revenue equals c2 tp minus c1 fp on random records") {
  Rng rng(23);
  for (int round = 0; round < 20; ++round) {
    const auto records = random_records(rng, 61, 2);
    long tp = 0, fp = 0;
    for (const PredictionRecord& record : records) {
      if (record.predicted != 1) continue;
      (record.actual == 1 ? tp : fp) += 1;
    }
    CHECK(revenue(records, 500.0, 200.0) == doctest::Approx(200.0 * tp - 500.0 * fp));
  }
}

TEST_CASE("false-discovery rate over positive predictions") {
  CHECK(*empirical_fdr(counted(9, 0, 1, 2)) == doctest::Approx(0.0));
  CHECK(*empirical_fdr(counted(10, 2, 0, 0)) == doctest::Approx(1.0 / 6.0));
  CHECK_FALSE(empirical_fdr(counted(0, 0, 5, 5)).has_value());
}

TEST_CASE("false-discovery rate ignores record order") {
  auto records = counted(7, 3, 4, 6);
  const double value = *empirical_fdr(records);
  Rng rng(5);
  for (int round = 0; round < 10; ++round) {
    rng.shuffle(records);
    CHECK(*empirical_fdr(records) == doctest::Approx(value));
  }
}

TEST_CASE("statistical-rate disparity is the largest pairwise gap") {
  SUBCASE("identical acceptance rates") {
    auto records = counted(3, 2, 2, 3, 1);  // 5 positive of 10
    const auto second = counted(1, 1, 1, 1, 2);  // also rate 0.5
    records.insert(records.end(), second.begin(), second.end());
    CHECK(statistical_rate_disparity(records).value == doctest::Approx(0.0));
  }
  SUBCASE("rates one half and three tenths") {
    auto records = counted(3, 2, 1, 4, 1);  // 5 positive of 10
    const auto second = counted(2, 1, 4, 3, 2);  // 3 positive of 10
    records.insert(records.end(), second.begin(), second.end());
    const Disparity d = statistical_rate_disparity(records);
    CHECK(d.value == doctest::Approx(0.2));
    CHECK_FALSE(d.degenerate());
  }
  SUBCASE("a single group is degenerate with value zero") {
    const Disparity d = statistical_rate_disparity(counted(3, 2, 1, 4, 1));
    CHECK(d.value == doctest::Approx(0.0));
    CHECK(d.degenerate());
  }
}

TEST_CASE("three-group disparity takes the maximum over pairs") {
  std::vector<PredictionRecord> records;
  for (auto [group, positives] : {std::pair{1, 8}, {2, 5}, {3, 2}}) {
    const auto part = counted(positives, 0, 10 - positives, 0, group);
    records.insert(records.end(), part.begin(), part.end());
  }
  CHECK(statistical_rate_disparity(records).value == doctest::Approx(0.6));
}

TEST_CASE("true-positive-rate disparity") {
  SUBCASE("perfect classifier has none") {
    auto records = counted(5, 0, 0, 5, 1);
    const auto second = counted(4, 0, 0, 6, 2);
    records.insert(records.end(), second.begin(), second.end());
    CHECK(tpr_disparity(records).value == doctest::Approx(0.0));
  }
  SUBCASE("rates point eight and point six") {
    auto records = counted(8, 0, 2, 0, 1);
    const auto second = counted(6, 0, 4, 0, 2);
    records.insert(records.end(), second.begin(), second.end());
    CHECK(tpr_disparity(records).value == doctest::Approx(0.2));
  }
  SUBCASE("groups with no actual positives are excluded") {
    auto records = counted(8, 0, 2, 0, 1);
    auto second = counted(6, 0, 4, 0, 2);
    auto third = counted(0, 3, 0, 7, 3);  // no positives at all
    records.insert(records.end(), second.begin(), second.end());
    records.insert(records.end(), third.begin(), third.end());
    const Disparity d = tpr_disparity(records);
    CHECK(d.value == doctest::Approx(0.2));
    CHECK(d.groups_used == 2);
  }
}

TEST_CASE("disparities always lie in the unit interval") {
  Rng rng(37);
  for (int round = 0; round < 30; ++round) {
    const auto records = random_records(rng, 53, 3);
    const double sr = statistical_rate_disparity(records).value;
    const double tpr = tpr_disparity(records).value;
    CHECK(sr >= 0.0);
    CHECK(sr <= 1.0);
    CHECK(tpr >= 0.0);
    CHECK(tpr <= 1.0);
  }
}

}  // TEST_SUITE
