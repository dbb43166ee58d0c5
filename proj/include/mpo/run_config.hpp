#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mpo/backtest.hpp"
#include "mpo/regime_signals.hpp"
#include "mpo/tuning.hpp"

namespace mpo {

struct DataFiles {
  std::vector<std::filesystem::path> prices;
  std::filesystem::path cash;
  std::filesystem::path signals;
  int max_ffill = 5;
};

/// Everything a command needs, after file values and flag overrides are merged.
/// Paths are absolute (relative entries resolve against the config file).
struct RunConfig {
  std::optional<DataFiles> data;  ///< absent: generate the synthetic market
  SynthConfig synthetic;
  std::uint64_t seed = 42;  ///< synthetic market and search sampling

  BacktestConfig backtest;
  std::optional<std::string> test_start, test_end;

  std::optional<std::string> tune_start, tune_end;
  int folds = 1;
  int gap = 15;
  SearchSpace search;

  std::vector<double> sweep_grid{0.01, 0.1262, 1.0, 10.0, 100.0};
  std::vector<std::string> exclude;
  std::filesystem::path output = "out";

  /// Throws ConfigError naming the first missing file or bad value.
  void validate() const;
};

/// Reads the YAML file. Unknown sections are a ConfigError.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& yaml_text, const std::filesystem::path& base_dir);

/// YAML that `load_run_config` reads back to the same configuration.
std::string to_yaml(const RunConfig& config);
nlohmann::json to_json(const RunConfig& config);

struct Market {
  AlignedPanel panel;
  SignalPanel signals;
};

/// Loads and aligns the data files (or generates the synthetic market), then
/// drops excluded assets.
Market load_market(const RunConfig& config);

/// Inclusive index range on the panel calendar.
struct DateWindow {
  std::size_t first = 0;
  std::size_t last = 0;
};

/// Test window; defaults to the first date with enough history through the last date.
DateWindow test_window(const RunConfig& config, const AlignedPanel& panel);
/// Tuning window; both ends must be configured.
DateWindow tune_window(const RunConfig& config, const AlignedPanel& panel);

}  // namespace mpo
