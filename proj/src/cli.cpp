#include "pfb/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pfb/baselines.hpp"
#include "pfb/data.hpp"
#include "pfb/engine.hpp"
#include "pfb/io.hpp"
#include "pfb/oracle.hpp"
#include "pfb/rng.hpp"

namespace pfb {
namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;

// ---- config access with field-path diagnostics ----------------------------

std::string joined(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

const json& need(const json& node, const std::string& prefix, const std::string& key) {
  if (!node.is_object() || !node.contains(key))
    throw ConfigError("missing config field '" + joined(prefix, key) + "'");
  return node.at(key);
}

double need_number(const json& node, const std::string& prefix, const std::string& key) {
  const json& value = need(node, prefix, key);
  if (!value.is_number())
    throw ConfigError("config field '" + joined(prefix, key) + "' must be a number");
  return value.get<double>();
}

double number_or(const json& node, const std::string& prefix, const std::string& key,
                 double fallback) {
  if (!node.is_object() || !node.contains(key)) return fallback;
  return need_number(node, prefix, key);
}

long need_integer(const json& node, const std::string& prefix, const std::string& key) {
  const json& value = need(node, prefix, key);
  if (!value.is_number_integer())
    throw ConfigError("config field '" + joined(prefix, key) + "' must be an integer");
  return value.get<long>();
}

long integer_or(const json& node, const std::string& prefix, const std::string& key,
                long fallback) {
  if (!node.is_object() || !node.contains(key)) return fallback;
  return need_integer(node, prefix, key);
}

bool flag_or(const json& node, const std::string& prefix, const std::string& key, bool fallback) {
  if (!node.is_object() || !node.contains(key)) return fallback;
  const json& value = node.at(key);
  if (!value.is_boolean())
    throw ConfigError("config field '" + joined(prefix, key) + "' must be a boolean");
  return value.get<bool>();
}

std::string need_string(const json& node, const std::string& prefix, const std::string& key) {
  const json& value = need(node, prefix, key);
  if (!value.is_string())
    throw ConfigError("config field '" + joined(prefix, key) + "' must be a string");
  return value.get<std::string>();
}

std::string string_or(const json& node, const std::string& prefix, const std::string& key,
                      const std::string& fallback) {
  if (!node.is_object() || !node.contains(key)) return fallback;
  return need_string(node, prefix, key);
}

std::vector<std::string> need_string_array(const json& node, const std::string& prefix,
                                           const std::string& key) {
  const json& value = need(node, prefix, key);
  if (!value.is_array())
    throw ConfigError("config field '" + joined(prefix, key) + "' must be an array");
  std::vector<std::string> out;
  for (const json& item : value) {
    if (!item.is_string())
      throw ConfigError("config field '" + joined(prefix, key) + "' must hold strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::vector<double> need_number_array(const json& node, const std::string& prefix,
                                      const std::string& key) {
  const json& value = need(node, prefix, key);
  if (!value.is_array())
    throw ConfigError("config field '" + joined(prefix, key) + "' must be an array");
  std::vector<double> out;
  for (const json& item : value) {
    if (!item.is_number())
      throw ConfigError("config field '" + joined(prefix, key) + "' must hold numbers");
    out.push_back(item.get<double>());
  }
  return out;
}

json parse_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

// ---- typed sections --------------------------------------------------------

StrategyKind parse_strategy(const std::string& name, const std::string& field) {
  if (name == "uniform") return StrategyKind::uniform;
  if (name == "clf") return StrategyKind::clf;
  if (name == "fair") return StrategyKind::fair;
  if (name == "inverse") return StrategyKind::inverse;
  throw ConfigError("config field '" + field +
                    "' must be one of uniform, clf, fair, inverse (got '" + name + "')");
}

AlgorithmConfig parse_algorithm(const json& root) {
  const json empty = json::object();
  const json& node = root.contains("algorithm") ? root.at("algorithm") : empty;
  const std::string prefix = "algorithm";
  AlgorithmConfig config;
  config.alpha = number_or(node, prefix, "alpha", config.alpha);
  config.alpha_exploit_scale =
      number_or(node, prefix, "alpha_exploit_scale", config.alpha_exploit_scale);
  config.alpha_exploit_exponent =
      number_or(node, prefix, "alpha_exploit_exponent", config.alpha_exploit_exponent);
  config.epsilon = number_or(node, prefix, "epsilon", config.epsilon);
  config.lambda = number_or(node, prefix, "lambda", config.lambda);
  config.tau = number_or(node, prefix, "tau", config.tau);
  config.beta = number_or(node, prefix, "beta", config.beta);
  config.exploration_strategy = parse_strategy(
      string_or(node, prefix, "exploration_strategy", "clf"), "algorithm.exploration_strategy");
  if (node.contains("exploit_fairness"))
    config.exploit_fairness = need_number(node, prefix, "exploit_fairness");
  const std::string form = string_or(node, prefix, "budget_form", "step6");
  if (form == "step6")
    config.budget_form = BudgetForm::step6;
  else if (form == "text")
    config.budget_form = BudgetForm::text;
  else
    throw ConfigError("config field 'algorithm.budget_form' must be step6 or text");
  config.shared_weights = flag_or(node, prefix, "shared_weights", config.shared_weights);
  try {
    config.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("algorithm config: ") + e.what());
  }
  return config;
}

struct GammaSpec {
  UtilityCoefficients gamma = UtilityCoefficients::revenue(500.0, 200.0);
  double c1 = 500.0;  // revenue-metric coefficients, used regardless of kind
  double c2 = 200.0;
};

GammaSpec parse_gamma(const json& root) {
  GammaSpec spec;
  if (!root.contains("gamma")) return spec;
  const json& node = root.at("gamma");
  const std::string prefix = "gamma";
  spec.c1 = number_or(node, prefix, "c1", spec.c1);
  spec.c2 = number_or(node, prefix, "c2", spec.c2);
  if (spec.c1 <= 0.0 || spec.c2 <= 0.0)
    throw ConfigError("config fields 'gamma.c1' and 'gamma.c2' must be positive magnitudes");
  const std::string kind = string_or(node, prefix, "kind", "revenue");
  if (kind == "revenue")
    spec.gamma = UtilityCoefficients::revenue(spec.c1, spec.c2);
  else if (kind == "accuracy")
    spec.gamma = UtilityCoefficients::accuracy();
  else if (kind == "positive_rate")
    spec.gamma = UtilityCoefficients::positive_rate();
  else if (kind == "tpr")
    spec.gamma = UtilityCoefficients::tpr(need_number(node, prefix, "base_rate"));
  else
    throw ConfigError(
        "config field 'gamma.kind' must be one of revenue, accuracy, positive_rate, tpr");
  return spec;
}

struct DatasetSection {
  DatasetSpec spec;
  double positive_share = 0.9;
};

DatasetSection parse_dataset(const json& root) {
  if (!root.contains("dataset")) throw ConfigError("missing config field 'dataset'");
  const json& node = root.at("dataset");
  const std::string prefix = "dataset";
  DatasetSection section;
  section.spec.source_path = need_string(node, prefix, "source");
  section.spec.feature_columns = need_string_array(node, prefix, "feature_columns");
  section.spec.label_column = need_string(node, prefix, "label_column");
  section.spec.positive_label = need_string(node, prefix, "positive_label");
  section.spec.group_column = need_string(node, prefix, "group_column");
  section.spec.group_values = need_string_array(node, prefix, "group_values");
  const std::string mode = string_or(node, prefix, "split_mode", "partition");
  if (mode == "partition")
    section.spec.split_mode = SplitMode::partition;
  else if (mode == "bootstrap")
    section.spec.split_mode = SplitMode::bootstrap;
  else
    throw ConfigError("config field 'dataset.split_mode' must be partition or bootstrap");
  section.spec.iterations = static_cast<int>(need_integer(node, prefix, "iterations"));
  section.spec.bootstrap_size =
      static_cast<int>(integer_or(node, prefix, "bootstrap_size", section.spec.bootstrap_size));
  section.positive_share = number_or(node, prefix, "positive_share", section.positive_share);
  if (section.positive_share < 0.0 || section.positive_share > 1.0)
    throw ConfigError("config field 'dataset.positive_share' must lie in [0, 1]");
  try {
    section.spec.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("dataset config: ") + e.what());
  }
  if (!std::filesystem::exists(section.spec.source_path))
    throw ConfigError("config field 'dataset.source' names a missing file: '" +
                      section.spec.source_path + "'");
  return section;
}

// The four experiment variants: each toggles the statistical-rate bound on
// the learner and swaps the exploration strategy to its fairness-weighted
// form.
struct Variant {
  std::string name;
  bool exploit_fair = false;
  bool explore_fair = false;
};

Variant variant_of(const std::string& name) {
  if (name == "none") return {name, false, false};
  if (name == "exploit") return {name, true, false};
  if (name == "explore") return {name, false, true};
  if (name == "both") return {name, true, true};
  throw ConfigError("config field 'variants' must hold none, exploit, explore, both (got '" +
                    name + "')");
}

AlgorithmConfig apply_variant(AlgorithmConfig base, const Variant& variant,
                              double fairness_bound) {
  base.exploit_fairness =
      variant.exploit_fair ? std::optional<double>(fairness_bound) : std::nullopt;
  if (variant.explore_fair) base.exploration_strategy = StrategyKind::fair;
  return base;
}

// ---- shared wiring ---------------------------------------------------------

struct CommonRun {
  json root;
  std::string out_dir;
  std::uint64_t seed = 1;
  int workers = 1;
  int repetitions = 1;
  std::uint64_t config_hash = 0;
};

CommonRun load_common(const CliOptions& options) {
  CommonRun common;
  common.root = parse_config(options.config_path);
  try {
    common.config_hash = fnv1a(read_file(options.config_path));
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (options.out_dir)
    common.out_dir = *options.out_dir;
  else
    common.out_dir = need_string(common.root, "", "output_dir");
  common.seed = options.seed ? *options.seed
                             : static_cast<std::uint64_t>(integer_or(common.root, "", "seed", 1));
  common.workers =
      options.workers ? *options.workers : static_cast<int>(integer_or(common.root, "", "workers", 1));
  if (common.workers < 1) throw ConfigError("config field 'workers' must be >= 1");
  common.repetitions = static_cast<int>(integer_or(common.root, "", "repetitions", 1));
  if (common.repetitions < 1) throw ConfigError("config field 'repetitions' must be >= 1");
  std::filesystem::create_directories(common.out_dir);
  return common;
}

StreamFactory biased_factory(const Dataset& dataset, DatasetSpec spec, double positive_share) {
  return [&dataset, spec = std::move(spec), positive_share](std::uint64_t seed) {
    Stream stream = make_stream(dataset, spec, seed);
    InitialPools pools =
        build_biased_initial(stream.initial, positive_share, mix_seed(seed, 0xb1a5));
    return RepetitionData{std::move(pools.labeled), std::move(pools.unlabeled),
                          std::move(stream.batches)};
  };
}

std::string iteration_header(int group_count) {
  std::string header = "variant,repetition,t,revenue,fdr,fdr_defined,stat_rate,tpr_disparity";
  for (int z = 1; z <= group_count; ++z) header += ",tpr_group_" + std::to_string(z);
  header += ",n_exploit,n_explore,infeasible_fallback\n";
  return header;
}

void append_iteration_rows(std::string& csv, const std::string& variant,
                           const std::vector<std::vector<IterationReport>>& repetitions,
                           int group_count) {
  for (std::size_t r = 0; r < repetitions.size(); ++r) {
    for (const IterationReport& report : repetitions[r]) {
      csv += variant;
      csv += ',' + std::to_string(r + 1);
      csv += ',' + std::to_string(report.t);
      csv += ',' + format_g6(report.revenue);
      csv += ',' + format_g6(report.fdr ? *report.fdr : 0.0);
      csv += report.fdr ? ",1" : ",0";
      csv += ',' + format_g6(report.stat_rate);
      csv += ',' + format_g6(report.tpr_disparity);
      for (int z = 0; z < group_count; ++z) csv += ',' + format_g6(report.tpr_group[z]);
      csv += ',' + std::to_string(report.n_exploit);
      csv += ',' + std::to_string(report.n_explore);
      csv += report.infeasible_fallback ? ",1\n" : ",0\n";
    }
  }
}

void append_summary_rows(std::string& csv, const std::string& variant,
                         const ExperimentTable& table) {
  const auto row = [&](const char* metric, const MetricSummary& summary) {
    csv += variant;
    csv += ',';
    csv += metric;
    csv += ',' + format_g6(summary.mean);
    csv += ',' + format_g6(summary.stderr_);
    csv += ',' + std::to_string(summary.repetitions_used);
    csv += '\n';
  };
  row("revenue", table.revenue);
  row("fdr", table.fdr);
  row("stat_rate", table.stat_rate);
  row("tpr_disparity", table.tpr_disparity);
}

std::string hash_string(std::uint64_t hash) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "0x%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

void write_manifest(const CommonRun& common, const std::vector<std::string>& outputs) {
  json manifest;
  manifest["config_hash"] = hash_string(common.config_hash);
  manifest["outputs"] = outputs;
  manifest["schema_version"] = kSchemaVersion;
  manifest["seed"] = common.seed;
  write_file(common.out_dir + "/manifest.json", manifest.dump(2) + "\n");
}

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int cmd_run(const CliOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const CommonRun common = load_common(options);
    const AlgorithmConfig base = parse_algorithm(common.root);
    const double fairness_bound =
        base.exploit_fairness ? *base.exploit_fairness : kDefaultFairnessBound;
    const GammaSpec gamma = parse_gamma(common.root);
    const DatasetSection dataset_section = parse_dataset(common.root);

    std::vector<Variant> variants;
    if (common.root.contains("variants")) {
      for (const std::string& name : need_string_array(common.root, "", "variants"))
        variants.push_back(variant_of(name));
    } else {
      variants = {variant_of("none"), variant_of("exploit"), variant_of("explore"),
                  variant_of("both")};
    }
    if (variants.empty()) throw ConfigError("config field 'variants' must not be empty");

    const Dataset dataset = load_and_preprocess(dataset_section.spec);
    const StreamFactory factory =
        biased_factory(dataset, dataset_section.spec, dataset_section.positive_share);

    std::string iterations_csv = iteration_header(dataset.group_count);
    std::string summary_csv = "variant,metric,mean,stderr,repetitions\n";
    for (const Variant& variant : variants) {
      RunInput input;
      input.config = apply_variant(base, variant, fairness_bound);
      input.config.seed = common.seed;
      input.gamma = gamma.gamma;
      input.c1 = gamma.c1;
      input.c2 = gamma.c2;
      input.group_count = dataset.group_count;
      input.repetitions = common.repetitions;
      input.workers = common.workers;
      const ExperimentTable table = run_experiment(input, factory);
      append_iteration_rows(iterations_csv, variant.name, table.repetitions,
                            dataset.group_count);
      append_summary_rows(summary_csv, variant.name, table);
    }

    write_file(common.out_dir + "/iterations.csv", iterations_csv);
    write_file(common.out_dir + "/summary.csv", summary_csv);
    write_manifest(common, {"iterations.csv", "summary.csv"});
    out << "wrote " << common.out_dir << "/iterations.csv\n";
    out << "wrote " << common.out_dir << "/summary.csv\n";
    out << "wrote " << common.out_dir << "/manifest.json\n";
    return 0;
  });
}

int cmd_verify(const CliOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const CommonRun common = load_common(options);
    const std::vector<std::string> checks = need_string_array(common.root, "", "checks");
    for (const std::string& check : checks)
      if (check != "feasibility" && check != "convergence" && check != "monotonicity" &&
          check != "reweighting")
        throw ConfigError("unknown check name '" + check + "' in config field 'checks'");
    if (checks.empty()) {
      out << "no checks requested\n";
      return 0;
    }

    const AlgorithmConfig algorithm = parse_algorithm(common.root);
    const GammaSpec gamma = parse_gamma(common.root);

    if (!common.root.contains("domain")) throw ConfigError("missing config field 'domain'");
    const json& domain_node = common.root.at("domain");
    const std::vector<double> masses = need_number_array(domain_node, "domain", "masses");
    const std::vector<double> rates = need_number_array(domain_node, "domain", "positive_rates");
    std::vector<int> groups;
    for (double g : need_number_array(domain_node, "domain", "groups"))
      groups.push_back(static_cast<int>(g));
    const int group_count = static_cast<int>(need_integer(domain_node, "domain", "group_count"));

    OracleSetup setup;
    setup.domain = make_exact_domain(masses, rates, groups, group_count);
    setup.f0_mask =
        static_cast<std::uint32_t>(need_integer(domain_node, "domain", "f0_mask"));
    setup.initial_pool_size = static_cast<std::size_t>(
        integer_or(domain_node, "domain", "initial_pool_size", 0));

    const json empty = json::object();
    const json& vnode =
        common.root.contains("verification") ? common.root.at("verification") : empty;
    VerificationConfig verification;
    verification.trials =
        static_cast<int>(integer_or(vnode, "verification", "trials", verification.trials));
    verification.delta = number_or(vnode, "verification", "delta", verification.delta);
    verification.tolerance =
        number_or(vnode, "verification", "tolerance", verification.tolerance);
    verification.n = static_cast<std::size_t>(
        integer_or(vnode, "verification", "n", static_cast<long>(verification.n)));
    verification.iterations =
        static_cast<int>(integer_or(vnode, "verification", "iterations", verification.iterations));
    verification.seed = common.seed;
    try {
      verification.validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("verification config: ") + e.what());
    }

    bool all_passed = true;
    std::vector<std::string> outputs;
    for (const std::string& check : checks) {
      CheckReport report;
      if (check == "feasibility")
        report = verify_feasibility(setup, verification, algorithm);
      else if (check == "convergence")
        report = verify_convergence(setup, verification, algorithm, gamma.gamma);
      else if (check == "monotonicity")
        report = verify_monotonicity(setup, verification, algorithm, gamma.gamma);
      else
        report = verify_reweighting(setup, verification, algorithm);

      std::string text = "check: " + report.name + "\n";
      text += std::string("status: ") + (report.passed ? "PASS" : "FAIL") + "\n";
      for (const std::string& line : report.details) text += line + "\n";
      const std::string file_name = "verify_" + report.name + ".txt";
      write_file(common.out_dir + "/" + file_name, text);
      outputs.push_back(file_name);
      out << report.name << ": " << (report.passed ? "PASS" : "FAIL") << '\n';
      all_passed = all_passed && report.passed;
    }
    write_manifest(common, outputs);
    return all_passed ? 0 : 1;
  });
}

int cmd_baselines(const CliOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const CommonRun common = load_common(options);
    const AlgorithmConfig base = parse_algorithm(common.root);
    const GammaSpec gamma = parse_gamma(common.root);
    const DatasetSection dataset_section = parse_dataset(common.root);
    const Dataset dataset = load_and_preprocess(dataset_section.spec);

    std::string iterations_csv = iteration_header(dataset.group_count);
    std::string summary_csv = "variant,metric,mean,stderr,repetitions\n";

    // Full-information reference: trains once per repetition on the fully
    // labeled initial part, then scores the stream without learning.
    std::vector<std::vector<IterationReport>> offline_reports(common.repetitions);
    for (int r = 0; r < common.repetitions; ++r) {
      const std::uint64_t rep_seed =
          mix_seed(common.seed, 0x33000000ULL + static_cast<std::uint64_t>(r));
      Stream stream = make_stream(dataset, dataset_section.spec, rep_seed);
      const TrainResult trained =
          train_opt_offline(stream.initial, gamma.gamma, base.alpha, dataset.group_count,
                            base.shared_weights, mix_seed(rep_seed, 0x0ff1));
      if (trained.status != TrainStatus::ok)
        throw std::runtime_error("opt_offline training failed on repetition " +
                                 std::to_string(r));
      offline_reports[r] = run_opt_offline(trained.classifier, stream.batches, gamma.c1,
                                           gamma.c2, dataset.group_count);
    }
    const ExperimentTable offline = summarize_experiment(std::move(offline_reports));
    append_iteration_rows(iterations_csv, "opt_offline", offline.repetitions,
                          dataset.group_count);
    append_summary_rows(summary_csv, "opt_offline", offline);

    RunInput fair_input;
    fair_input.config = base;
    fair_input.config.seed = common.seed;
    fair_input.gamma = gamma.gamma;
    fair_input.c1 = gamma.c1;
    fair_input.c2 = gamma.c2;
    fair_input.group_count = dataset.group_count;
    fair_input.repetitions = common.repetitions;
    fair_input.workers = common.workers;
    const StreamFactory factory =
        biased_factory(dataset, dataset_section.spec, dataset_section.positive_share);
    const ExperimentTable fair = run_fair_clf(fair_input, factory);
    append_iteration_rows(iterations_csv, "fair_clf", fair.repetitions, dataset.group_count);
    append_summary_rows(summary_csv, "fair_clf", fair);

    if (common.root.contains("imports")) {
      const json& imports = common.root.at("imports");
      if (!imports.is_array()) throw ConfigError("config field 'imports' must be an array");
      for (const json& import : imports) {
        const std::string name = need_string(import, "imports[]", "name");
        const std::string path = need_string(import, "imports[]", "path");
        std::vector<ImportedRow> rows;
        try {
          rows = load_imported_baseline(path);
        } catch (const std::exception& e) {
          throw ConfigError("import '" + name + "': " + e.what());
        }
        std::vector<IterationReport> as_reports;
        for (const ImportedRow& row : rows) {
          IterationReport report;
          report.t = row.t;
          report.revenue = row.revenue;
          report.fdr = row.fdr;
          report.stat_rate = row.stat_rate;
          report.tpr_disparity = row.tpr_disparity;
          as_reports.push_back(report);
        }
        // Each imported row stands alone (no repetition structure), so the
        // spread is taken across rows rather than across runs.
        std::vector<std::vector<IterationReport>> singles;
        for (IterationReport& report : as_reports) singles.push_back({report});
        append_summary_rows(summary_csv, name, summarize_experiment(std::move(singles)));
      }
    }

    write_file(common.out_dir + "/baseline_iterations.csv", iterations_csv);
    write_file(common.out_dir + "/baseline_summary.csv", summary_csv);
    write_manifest(common, {"baseline_iterations.csv", "baseline_summary.csv"});
    out << "wrote " << common.out_dir << "/baseline_iterations.csv\n";
    out << "wrote " << common.out_dir << "/baseline_summary.csv\n";
    out << "wrote " << common.out_dir << "/manifest.json\n";
    return 0;
  });
}

}  // namespace pfb
