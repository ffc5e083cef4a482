#ifndef PFB_CLI_HPP
#define PFB_CLI_HPP

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

namespace pfb {

// Command-line overrides layered on top of the config file; the file is the
// primary source of truth and flags replace individual values.
struct CliOptions {
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

// Raised for every configuration-level problem (unreadable file, missing or
// ill-typed field, unknown check name, malformed import); the message names
// the offending field or file.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exit codes shared by all subcommands: 0 success, 1 runtime failure
// (including a failing verification check), 2 configuration error.
int cmd_run(const CliOptions& options, std::ostream& out, std::ostream& err);
int cmd_verify(const CliOptions& options, std::ostream& out, std::ostream& err);
int cmd_baselines(const CliOptions& options, std::ostream& out, std::ostream& err);

}  // namespace pfb

#endif  // PFB_CLI_HPP
