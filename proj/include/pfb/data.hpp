#ifndef PFB_DATA_HPP
#define PFB_DATA_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pfb/core.hpp"
#include "pfb/rng.hpp"

namespace pfb {

enum class SplitMode { partition, bootstrap };

struct DatasetSpec {
  std::string source_path;
  std::vector<std::string> feature_columns;
  std::string label_column;
  std::string positive_label;  // cell value mapped to label 1
  std::string group_column;
  std::vector<std::string> group_values;  // value at index k maps to group k+1;
                                          // rows with other values are dropped
  SplitMode split_mode = SplitMode::partition;
  int iterations = 1;      // T
  int bootstrap_size = 0;  // per-iteration draw size in bootstrap mode

  void validate() const;
};

struct Dataset {
  std::vector<std::string> feature_names;  // retained columns, post variance filter
  std::vector<double> feature_mean;        // scaling parameters of retained columns
  std::vector<double> feature_stdev;
  std::vector<Sample> rows;  // ground-truth labels always present
  int group_count = 0;
};

// Parses the CSV, drops rows with missing cells or unmapped group values,
// z-scores every feature column, and drops zero-variance columns with a
// warning on standard error.
Dataset load_and_preprocess(const DatasetSpec& spec);

// Columnar binary snapshot including scaling parameters; round-trips
// bit-exactly.
void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

struct Stream {
  std::vector<Sample> initial;          // S_0, ground-truth labels present
  std::vector<IterationBatch> batches;  // S_1..S_T
};

// partition mode: a seeded shuffle split into T+1 equal parts (remainder
// dropped); bootstrap mode: S_0 drawn without replacement, then T draws of
// bootstrap_size with replacement from the full dataset.
Stream make_stream(const Dataset& dataset, const DatasetSpec& spec, std::uint64_t seed);

struct InitialPools {
  std::vector<Sample> labeled;    // L_0, labels visible
  std::vector<Sample> unlabeled;  // U_0, labels hidden
};

// L_0 takes positive_share of S_0's label-1 rows and (1 - positive_share)
// of its label-0 rows; everything else forms U_0.
InitialPools build_biased_initial(std::span<const Sample> initial, double positive_share,
                                  std::uint64_t seed);

struct DomainPoint {
  FeatureVector features;  // one-hot encoding of the point index
  int group = 1;
  double mass = 0.0;           // mu marginal of (x, z)
  double positive_rate = 0.0;  // Pr[Y = 1 | x, z]
};

// Finite domain with exact probabilities; the candidate family is the set
// of all cell-subset classifiers, enumerable for |D| <= 16.
struct ExactDomain {
  std::vector<DomainPoint> points;
  int group_count = 1;

  double mu(std::size_t point, int label) const;
  Sample cell(std::size_t point) const;  // label unset
  std::size_t index_of(const Sample& sample) const;
  std::vector<bool> low_mass(double epsilon) const;  // mass <= epsilon/|D|
  LinearClassifier subset_classifier(std::uint32_t mask) const;
  bool accepts(const LinearClassifier& classifier, std::size_t point) const;
  std::vector<Sample> draw(std::size_t count, Rng& rng) const;  // i.i.d. from mu
  IterationBatch draw_batch(int index, std::size_t count, Rng& rng) const;
};

ExactDomain make_exact_domain(std::span<const double> masses,
                              std::span<const double> positive_rates,
                              std::span<const int> groups, int group_count);

}  // namespace pfb

#endif  // PFB_DATA_HPP
