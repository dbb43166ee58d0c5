#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mpo/run_config.hpp"

namespace mpo {

/// Flag values that take precedence over the config file.
struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<double> gamma_sigma;
  std::optional<double> gamma_trade;
  std::optional<int> horizon;
  std::optional<std::vector<std::string>> exclude;
  std::optional<std::filesystem::path> out;
  std::optional<std::vector<double>> grid;
};

void apply_overrides(RunConfig& config, const CliOverrides& overrides);

// Commands write their artifacts under config.output and a one-line summary to
// `out`; warnings go to `err`. Errors propagate as exceptions.
void cmd_backtest(const RunConfig& config, std::ostream& out, std::ostream& err);
void cmd_tune(const RunConfig& config, std::ostream& out, std::ostream& err);
void cmd_sweep(const RunConfig& config, std::ostream& out, std::ostream& err);
void cmd_benchmark(const RunConfig& config, std::ostream& out, std::ostream& err);
/// Writes the synthetic market as CSV files plus a config.yaml that reads them.
void cmd_synth(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses arguments, runs one command and maps failures to exit codes:
/// 0 success, 1 input error, 2 numerical failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mpo
