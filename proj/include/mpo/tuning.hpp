#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mpo/backtest.hpp"
#include "mpo/date.hpp"
#include "mpo/kernels.hpp"

namespace mpo {

/// Index ranges are half-open and refer to the calendar passed to make_pgts.
struct PgtsFold {
  std::size_t train_begin = 0, train_end = 0;
  std::size_t valid_begin = 0, valid_end = 0;
  Date train_first{}, train_last{};
  Date valid_first{}, valid_last{};
};

struct PgtsSplit {
  std::vector<PgtsFold> folds;
  int gap = 15;
};

/// Cuts the calendar into n_folds + 1 contiguous groups of near-equal size.
/// Fold k trains on groups 0..k and validates on group k+1 with its first
/// `gap` dates purged. Throws ValidationError if a purged validation block
/// would be empty.
PgtsSplit make_pgts(std::span<const Date> dates, int n_folds, int gap = 15);

struct SearchSpace {
  double gamma_sigma_lo = 0.01, gamma_sigma_hi = 1000.0;
  double gamma_trade_lo = 1e-4, gamma_trade_hi = 25.0;
  int trials = 100;
  std::uint64_t seed = 0;

  void validate() const;
  /// The seeded log-uniform sequence of (gamma_sigma, gamma_trade) points.
  std::vector<std::pair<double, double>> sample() const;
};

struct TrialRecord {
  int trial = 0;
  double gamma_sigma = 0.0;
  double gamma_trade = 0.0;
  /// Means over folds of the validation metrics; NaN if the trial failed.
  double sortino = 0.0;
  double sharpe = 0.0;
  double ann_return = 0.0;
  double ann_volatility = 0.0;
  std::string error;
};

struct TuneResult {
  double gamma_sigma = 0.0;
  double gamma_trade = 0.0;
  int best_trial = -1;
  std::vector<TrialRecord> trials;
};

/// Random search maximising the mean validation Sortino. Each validation
/// backtest sees the panel only up to its fold's last validation date and
/// starts from a fresh book; earlier dates serve as estimator history. Trials
/// run concurrently under Execution::Parallel and are logged by index.
/// Throws ConfigError if every trial fails.
TuneResult tune(const AlignedPanel& panel, const SignalPanel& signals, const BacktestConfig& base,
                const SearchSpace& space, const PgtsSplit& split,
                kernels::Execution ex = kernels::Execution::Parallel);

/// `trial,gamma_sigma,gamma_trade,sortino,sharpe,ann_return,ann_vol`.
void write_trial_log(const std::filesystem::path& path, std::span<const TrialRecord> trials);

}  // namespace mpo
