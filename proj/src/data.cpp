#include "pfb/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace pfb {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream stream(line);
  while (std::getline(stream, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t start = 0;
    while (start < cell.size() && cell[start] == ' ') ++start;
    cells.push_back(cell.substr(start));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool missing_cell(const std::string& cell) { return cell.empty() || cell == "?"; }

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end())
    throw std::invalid_argument("load_and_preprocess: missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

void write_u64(std::ostream& out, std::uint64_t value) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

std::uint64_t read_u64(std::istream& in) {
  char bytes[8];
  in.read(bytes, 8);
  std::uint64_t value = 0;
  for (int i = 0; i < 8; ++i)
    value |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
  return value;
}

void write_f64(std::ostream& out, double value) {
  std::uint64_t bits;
  std::memcpy(&bits, &value, 8);
  write_u64(out, bits);
}

double read_f64(std::istream& in) {
  const std::uint64_t bits = read_u64(in);
  double value;
  std::memcpy(&value, &bits, 8);
  return value;
}

void write_string(std::ostream& out, const std::string& text) {
  write_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

std::string read_string(std::istream& in) {
  const std::uint64_t size = read_u64(in);
  std::string text(size, '\0');
  in.read(text.data(), static_cast<std::streamsize>(size));
  return text;
}

IterationBatch batch_from_rows(int index, std::vector<Sample> rows) {
  std::vector<int> truth(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) truth[i] = rows[i].label.value();
  return IterationBatch(index, std::move(rows), truth);
}

constexpr char kDatasetMagic[8] = {'P', 'F', 'B', 'D', 'S', '0', '0', '1'};

}  // namespace

void DatasetSpec::validate() const {
  if (source_path.empty()) throw std::invalid_argument("dataset: source path is required");
  if (feature_columns.empty()) throw std::invalid_argument("dataset: feature columns are required");
  if (label_column.empty()) throw std::invalid_argument("dataset: label column is required");
  if (group_column.empty()) throw std::invalid_argument("dataset: group column is required");
  if (group_values.size() < 2)
    throw std::invalid_argument("dataset: at least two group values are required");
  if (iterations < 1) throw std::invalid_argument("dataset: iterations must be >= 1");
  if (split_mode == SplitMode::bootstrap && bootstrap_size < 1)
    throw std::invalid_argument("dataset: bootstrap_size must be >= 1 in bootstrap mode");
}

Dataset load_and_preprocess(const DatasetSpec& spec) {
  spec.validate();
  std::ifstream in(spec.source_path);
  if (!in) throw std::invalid_argument("load_and_preprocess: cannot open " + spec.source_path);

  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument("load_and_preprocess: empty file " + spec.source_path);
  const std::vector<std::string> header = split_csv_line(line);

  std::vector<std::size_t> feature_index;
  feature_index.reserve(spec.feature_columns.size());
  for (const std::string& name : spec.feature_columns)
    feature_index.push_back(column_index(header, name));
  const std::size_t label_index = column_index(header, spec.label_column);
  const std::size_t group_index = column_index(header, spec.group_column);

  std::vector<FeatureVector> raw;
  std::vector<int> groups;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw std::invalid_argument("load_and_preprocess: row width mismatch in " +
                                  spec.source_path);
    const std::string& group_value = cells[group_index];
    const auto group_it =
        std::find(spec.group_values.begin(), spec.group_values.end(), group_value);
    if (group_it == spec.group_values.end()) continue;  // group filter
    if (missing_cell(cells[label_index])) continue;
    bool incomplete = false;
    FeatureVector features(feature_index.size());
    for (std::size_t j = 0; j < feature_index.size(); ++j) {
      const std::string& cell = cells[feature_index[j]];
      if (missing_cell(cell)) {
        incomplete = true;
        break;
      }
      std::size_t parsed = 0;
      features[j] = std::stod(cell, &parsed);
      if (parsed != cell.size())
        throw std::invalid_argument("load_and_preprocess: non-numeric value '" + cell +
                                    "' in column " + spec.feature_columns[j]);
    }
    if (incomplete) continue;
    raw.push_back(std::move(features));
    groups.push_back(static_cast<int>(group_it - spec.group_values.begin()) + 1);
    labels.push_back(cells[label_index] == spec.positive_label ? 1 : 0);
  }
  if (raw.empty())
    throw std::invalid_argument("load_and_preprocess: no rows left after filtering");

  const std::size_t n = raw.size();
  const std::size_t d = feature_index.size();
  std::vector<double> mean(d, 0.0), stdev(d, 0.0);
  for (const FeatureVector& row : raw)
    for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
  for (std::size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(n);
  for (const FeatureVector& row : raw)
    for (std::size_t j = 0; j < d; ++j) {
      const double centered = row[j] - mean[j];
      stdev[j] += centered * centered;
    }
  for (std::size_t j = 0; j < d; ++j) stdev[j] = std::sqrt(stdev[j] / static_cast<double>(n));

  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < d; ++j) {
    if (stdev[j] > 1e-12) {
      kept.push_back(j);
    } else {
      std::cerr << "warning: dropping zero-variance feature '" << spec.feature_columns[j]
                << "'\n";
    }
  }
  if (kept.empty())
    throw std::invalid_argument("load_and_preprocess: every feature has zero variance");

  Dataset dataset;
  dataset.group_count = static_cast<int>(spec.group_values.size());
  for (std::size_t j : kept) {
    dataset.feature_names.push_back(spec.feature_columns[j]);
    dataset.feature_mean.push_back(mean[j]);
    dataset.feature_stdev.push_back(stdev[j]);
  }
  dataset.rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Sample sample;
    sample.features.resize(kept.size());
    for (std::size_t j = 0; j < kept.size(); ++j)
      sample.features[j] = (raw[i][kept[j]] - mean[kept[j]]) / stdev[kept[j]];
    sample.group = groups[i];
    sample.label = labels[i];
    dataset.rows.push_back(std::move(sample));
  }
  return dataset;
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_dataset: cannot open " + path);
  out.write(kDatasetMagic, sizeof(kDatasetMagic));
  write_u64(out, static_cast<std::uint64_t>(dataset.group_count));
  write_u64(out, dataset.feature_names.size());
  for (const std::string& name : dataset.feature_names) write_string(out, name);
  for (double value : dataset.feature_mean) write_f64(out, value);
  for (double value : dataset.feature_stdev) write_f64(out, value);
  write_u64(out, dataset.rows.size());
  for (std::size_t j = 0; j < dataset.feature_names.size(); ++j)
    for (const Sample& row : dataset.rows) write_f64(out, row.features[j]);
  for (const Sample& row : dataset.rows) write_u64(out, static_cast<std::uint64_t>(row.group));
  for (const Sample& row : dataset.rows)
    write_u64(out, static_cast<std::uint64_t>(row.label.value()));
  if (!out) throw std::runtime_error("save_dataset: write failed for " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kDatasetMagic, 8) != 0)
    throw std::runtime_error("load_dataset: bad snapshot header in " + path);
  Dataset dataset;
  dataset.group_count = static_cast<int>(read_u64(in));
  const std::uint64_t d = read_u64(in);
  dataset.feature_names.resize(d);
  for (std::string& name : dataset.feature_names) name = read_string(in);
  dataset.feature_mean.resize(d);
  for (double& value : dataset.feature_mean) value = read_f64(in);
  dataset.feature_stdev.resize(d);
  for (double& value : dataset.feature_stdev) value = read_f64(in);
  const std::uint64_t n = read_u64(in);
  dataset.rows.resize(n);
  for (Sample& row : dataset.rows) row.features.resize(d);
  for (std::uint64_t j = 0; j < d; ++j)
    for (Sample& row : dataset.rows) row.features[j] = read_f64(in);
  for (Sample& row : dataset.rows) row.group = static_cast<int>(read_u64(in));
  for (Sample& row : dataset.rows) row.label = static_cast<int>(read_u64(in));
  if (!in) throw std::runtime_error("load_dataset: truncated snapshot " + path);
  return dataset;
}

Stream make_stream(const Dataset& dataset, const DatasetSpec& spec, std::uint64_t seed) {
  spec.validate();
  Stream stream;
  Rng rng(mix_seed(seed, 0xda7a));
  std::vector<std::size_t> order(dataset.rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);

  if (spec.split_mode == SplitMode::partition) {
    const std::size_t parts = static_cast<std::size_t>(spec.iterations) + 1;
    const std::size_t part_size = dataset.rows.size() / parts;
    if (part_size == 0)
      throw std::invalid_argument("make_stream: not enough rows for the requested split");
    for (std::size_t i = 0; i < part_size; ++i)
      stream.initial.push_back(dataset.rows[order[i]]);
    for (int t = 1; t <= spec.iterations; ++t) {
      std::vector<Sample> rows;
      rows.reserve(part_size);
      const std::size_t offset = static_cast<std::size_t>(t) * part_size;
      for (std::size_t i = 0; i < part_size; ++i)
        rows.push_back(dataset.rows[order[offset + i]]);
      stream.batches.push_back(batch_from_rows(t, std::move(rows)));
    }
    return stream;
  }

  const std::size_t draw = static_cast<std::size_t>(spec.bootstrap_size);
  if (dataset.rows.size() < draw)
    throw std::invalid_argument("make_stream: not enough rows for the bootstrap draw");
  for (std::size_t i = 0; i < draw; ++i) stream.initial.push_back(dataset.rows[order[i]]);
  for (int t = 1; t <= spec.iterations; ++t) {
    std::vector<Sample> rows;
    rows.reserve(draw);
    for (std::size_t i = 0; i < draw; ++i)
      rows.push_back(dataset.rows[rng.below(dataset.rows.size())]);
    stream.batches.push_back(batch_from_rows(t, std::move(rows)));
  }
  return stream;
}

InitialPools build_biased_initial(std::span<const Sample> initial, double positive_share,
                                  std::uint64_t seed) {
  if (positive_share < 0.0 || positive_share > 1.0)
    throw std::invalid_argument("build_biased_initial: positive_share must lie in [0, 1]");
  std::vector<std::size_t> positives, negatives;
  for (std::size_t i = 0; i < initial.size(); ++i) {
    if (!initial[i].label)
      throw std::invalid_argument(
          "build_biased_initial: every initial sample needs a ground-truth label");
    (*initial[i].label == 1 ? positives : negatives).push_back(i);
  }
  if (positives.empty() || negatives.empty())
    throw std::invalid_argument("build_biased_initial: both label classes must be present");

  Rng rng(mix_seed(seed, 0xb1a5));
  rng.shuffle(positives);
  rng.shuffle(negatives);
  const auto take_positive = static_cast<std::size_t>(
      std::llround(positive_share * static_cast<double>(positives.size())));
  const auto take_negative = static_cast<std::size_t>(
      std::llround((1.0 - positive_share) * static_cast<double>(negatives.size())));

  InitialPools pools;
  std::vector<bool> in_labeled(initial.size(), false);
  for (std::size_t i = 0; i < take_positive; ++i) in_labeled[positives[i]] = true;
  for (std::size_t i = 0; i < take_negative; ++i) in_labeled[negatives[i]] = true;
  for (std::size_t i = 0; i < initial.size(); ++i) {
    if (in_labeled[i]) {
      pools.labeled.push_back(initial[i]);
    } else {
      Sample hidden = initial[i];
      hidden.label.reset();
      pools.unlabeled.push_back(std::move(hidden));
    }
  }
  return pools;
}

double ExactDomain::mu(std::size_t point, int label) const {
  const DomainPoint& cell = points.at(point);
  return cell.mass * (label == 1 ? cell.positive_rate : 1.0 - cell.positive_rate);
}

Sample ExactDomain::cell(std::size_t point) const {
  Sample sample;
  sample.features = points.at(point).features;
  sample.group = points.at(point).group;
  return sample;
}

std::size_t ExactDomain::index_of(const Sample& sample) const {
  for (std::size_t j = 0; j < sample.features.size(); ++j)
    if (sample.features[j] == 1.0) return j;
  throw std::invalid_argument("ExactDomain: sample is not a domain cell");
}

std::vector<bool> ExactDomain::low_mass(double epsilon) const {
  const double cutoff = epsilon / static_cast<double>(points.size());
  std::vector<bool> flags(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) flags[i] = points[i].mass <= cutoff;
  return flags;
}

LinearClassifier ExactDomain::subset_classifier(std::uint32_t mask) const {
  // One-hot features make every cell subset linearly realizable: a margin of
  // +/-12 saturates the logistic far from the 0.5 threshold.
  FeatureVector weights(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    weights[i] = (mask >> i) & 1u ? 24.0 : 0.0;
  return LinearClassifier::make_shared_weights(std::move(weights), -12.0, 0.5);
}

bool ExactDomain::accepts(const LinearClassifier& classifier, std::size_t point) const {
  return classifier.predict(cell(point)) == 1;
}

std::vector<Sample> ExactDomain::draw(std::size_t count, Rng& rng) const {
  std::vector<Sample> samples;
  samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double u = rng.uniform();
    double cumulative = 0.0;
    std::size_t point = points.size() - 1;
    for (std::size_t j = 0; j < points.size(); ++j) {
      cumulative += points[j].mass;
      if (u < cumulative) {
        point = j;
        break;
      }
    }
    Sample sample = cell(point);
    sample.label = rng.bernoulli(points[point].positive_rate) ? 1 : 0;
    samples.push_back(std::move(sample));
  }
  return samples;
}

IterationBatch ExactDomain::draw_batch(int index, std::size_t count, Rng& rng) const {
  return batch_from_rows(index, draw(count, rng));
}

ExactDomain make_exact_domain(std::span<const double> masses,
                              std::span<const double> positive_rates,
                              std::span<const int> groups, int group_count) {
  if (masses.empty() || masses.size() != positive_rates.size() || masses.size() != groups.size())
    throw std::invalid_argument("make_exact_domain: aligned non-empty inputs required");
  if (masses.size() > 32)
    throw std::invalid_argument("make_exact_domain: at most 32 points are supported");
  double total = 0.0;
  for (double mass : masses) {
    if (mass < 0.0) throw std::invalid_argument("make_exact_domain: negative mass");
    total += mass;
  }
  if (total <= 0.0) throw std::invalid_argument("make_exact_domain: total mass must be positive");

  ExactDomain domain;
  domain.group_count = group_count;
  domain.points.resize(masses.size());
  for (std::size_t i = 0; i < masses.size(); ++i) {
    if (positive_rates[i] < 0.0 || positive_rates[i] > 1.0)
      throw std::invalid_argument("make_exact_domain: positive rate outside [0, 1]");
    if (groups[i] < 1 || groups[i] > group_count)
      throw std::invalid_argument("make_exact_domain: group id outside 1..p");
    DomainPoint& point = domain.points[i];
    point.features.assign(masses.size(), 0.0);
    point.features[i] = 1.0;
    point.group = groups[i];
    point.mass = masses[i] / total;
    point.positive_rate = positive_rates[i];
  }
  return domain;
}

}  // namespace pfb
