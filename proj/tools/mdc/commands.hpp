#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mdc::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitVerificationFailed = 1,
  kExitConfigError = 2,
  kExitBudgetError = 3,
  kExitCalibrationError = 4,
};

/// Command-line overrides; unset fields fall back to the config file.
struct CliOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> budget;
  std::optional<std::uint64_t> n_samples;
  std::optional<std::vector<double>> t;
};

int cmd_describe(const CliOptions& opts, std::ostream& out, std::ostream& err);
int cmd_matrix(const CliOptions& opts, std::ostream& out, std::ostream& err);
int cmd_bounds(const CliOptions& opts, std::ostream& out, std::ostream& err);
int cmd_verify(const CliOptions& opts, std::ostream& out, std::ostream& err);
int cmd_sweep(const CliOptions& opts, std::ostream& out, std::ostream& err);

/// Runs one command by name and maps library exceptions to exit codes.
int run_command(const std::string& name, const CliOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace mdc::cli
