#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pfb/cli.hpp"

namespace {

struct SubArgs {
  CLI::App* sub = nullptr;
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int workers = 0;
  CLI::Option* out_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* workers_opt = nullptr;
};

SubArgs add_subcommand(CLI::App& app, const std::string& name, const std::string& description) {
  SubArgs args;
  args.sub = app.add_subcommand(name, description);
  args.sub->add_option("--config", args.config, "configuration file (JSON)")->required();
  args.out_opt = args.sub->add_option("--out", args.out, "output directory (overrides config)");
  args.seed_opt = args.sub->add_option("--seed", args.seed, "seed (overrides config)");
  args.workers_opt =
      args.sub->add_option("--workers", args.workers, "worker threads (overrides config)");
  return args;
}

pfb::CliOptions to_options(const SubArgs& args) {
  pfb::CliOptions options;
  options.config_path = args.config;
  if (args.out_opt->count() > 0) options.out_dir = args.out;
  if (args.seed_opt->count() > 0) options.seed = args.seed;
  if (args.workers_opt->count() > 0) options.workers = args.workers;
  return options;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"partial-feedback classification: experiments, baselines, verification"};
  app.require_subcommand(1);

  SubArgs run = add_subcommand(app, "run", "run the experiment variants on a dataset");
  SubArgs verify = add_subcommand(app, "verify", "run exact-domain verification checks");
  SubArgs baselines = add_subcommand(app, "baselines", "run comparison policies");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad flags are configuration errors
  }

  if (run.sub->parsed()) return pfb::cmd_run(to_options(run), std::cout, std::cerr);
  if (verify.sub->parsed()) return pfb::cmd_verify(to_options(verify), std::cout, std::cerr);
  return pfb::cmd_baselines(to_options(baselines), std::cout, std::cerr);
}
