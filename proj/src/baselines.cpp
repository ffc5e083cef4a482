#include "pfb/baselines.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "pfb/metrics.hpp"

namespace pfb {

TrainResult train_opt_offline(std::span<const Sample> fully_labeled,
                              const UtilityCoefficients& gamma, double alpha, int group_count,
                              bool shared_weights, std::uint64_t seed) {
  TrainingProblem problem;
  problem.pool.entries.reserve(fully_labeled.size());
  for (const Sample& sample : fully_labeled) {
    if (!sample.label)
      throw std::invalid_argument("train_opt_offline: every sample must carry its label");
    problem.pool.entries.push_back({sample, 1.0});
    problem.pool.total_weight += 1.0;
  }
  problem.gamma = gamma;
  problem.alpha_exploit = alpha;  // bound is exactly alpha: no slack terms
  problem.epsilon = 0.0;
  problem.lambda = 0.0;
  problem.seed = seed;
  problem.group_count = group_count;
  problem.shared_weights = shared_weights;
  return train_constrained(problem);
}

std::vector<IterationReport> run_opt_offline(const LinearClassifier& classifier,
                                             std::vector<IterationBatch>& batches, double c1,
                                             double c2, int group_count) {
  std::vector<IterationReport> reports;
  reports.reserve(batches.size());
  for (IterationBatch& batch : batches) {
    IterationReport report;
    report.t = batch.index();
    std::vector<PredictionRecord> records(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const int predicted = classifier.predict(batch.sample(i));
      records[i] = {predicted, batch.ground_truth_label(i), batch.sample(i).group};
      if (predicted == 1) ++report.n_exploit;
    }
    report.revenue = revenue(records, c1, c2);
    report.fdr = empirical_fdr(records);
    report.stat_rate = statistical_rate_disparity(records).value;
    report.tpr_disparity = tpr_disparity(records).value;
    report.tpr_group.assign(group_count, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> tp(group_count, 0.0), pos(group_count, 0.0);
    for (const PredictionRecord& record : records) {
      if (record.actual != 1) continue;
      pos[record.group - 1] += 1.0;
      if (record.predicted == 1) tp[record.group - 1] += 1.0;
    }
    for (int g = 0; g < group_count; ++g)
      if (pos[g] > 0.0) report.tpr_group[g] = tp[g] / pos[g];
    reports.push_back(std::move(report));
  }
  return reports;
}

ExperimentTable run_fair_clf(RunInput input, const StreamFactory& factory) {
  input.exploit_everywhere = true;
  if (!input.config.exploit_fairness) input.config.exploit_fairness = kDefaultFairnessBound;
  return run_experiment(input, factory);
}

std::vector<ImportedRow> load_imported_baseline(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("imported baseline: cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument("imported baseline: empty file " + path);
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
  if (line != "t,revenue,fdr,stat_rate,tpr_disparity")
    throw std::invalid_argument("imported baseline: unexpected header in " + path);

  std::vector<ImportedRow> rows;
  int line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    std::stringstream stream(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(stream, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5)
      throw std::invalid_argument("imported baseline: bad row at line " +
                                  std::to_string(line_number) + " in " + path);
    try {
      ImportedRow row;
      std::size_t used = 0;
      row.t = std::stoi(cells[0], &used);
      row.revenue = std::stod(cells[1]);
      row.fdr = std::stod(cells[2]);
      row.stat_rate = std::stod(cells[3]);
      row.tpr_disparity = std::stod(cells[4]);
      rows.push_back(row);
    } catch (const std::exception&) {
      throw std::invalid_argument("imported baseline: non-numeric cell at line " +
                                  std::to_string(line_number) + " in " + path);
    }
  }
  return rows;
}

}  // namespace pfb
