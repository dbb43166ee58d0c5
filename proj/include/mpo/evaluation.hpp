#pragma once

#include <cstddef>
#include <filesystem>
#include <json.hpp>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mpo/backtest.hpp"
#include "mpo/kernels.hpp"

namespace mpo {

inline constexpr double kTradingDays = 252.0;

// Building blocks over daily series. Ratio sentinels: a zero denominator gives
// 0 when the numerator is 0, +/-inf otherwise; the information ratio is NaN
// (undefined) when the tracking error is 0.
double mean(std::span<const double> x);
/// Sample standard deviation (divisor n-1); 0 for fewer than two points.
double sample_std(std::span<const double> x);
/// Root mean square of min(x, 0) over all days.
double downside_deviation(std::span<const double> x);
double annualised_return(double daily_mean);
double sharpe_ratio(std::span<const double> excess);
double sortino_ratio(std::span<const double> excess);
/// max over t of 1 - v_t / max_{s<=t} v_s.
double max_drawdown(std::span<const double> values);
double information_ratio(std::span<const double> returns, std::span<const double> benchmark);

struct PerformanceReport {
  std::string name;
  double mean_excess = 0.0;
  double ann_mean_excess = 0.0;
  double volatility = 0.0;
  double ann_volatility = 0.0;
  double sharpe = 0.0;
  double sortino = 0.0;
  double max_drawdown = 0.0;
  /// (benchmark name, annualised IR); NaN when undefined.
  std::vector<std::pair<std::string, double>> information_ratios;

  double information_ratio(const std::string& benchmark) const;
};

/// Metrics of `result`'s excess returns and value path, with IRs against each
/// benchmark. Throws ValidationError if any benchmark covers different dates.
PerformanceReport compute_report(const BacktestResult& result, std::span<const BacktestResult> benchmarks = {});

/// Row labels of the comparison table, in order.
const std::vector<std::string>& comparison_row_labels();

/// Text table with one column per report. IR rows name the benchmarks
/// "buy-and-hold" and "1/N"; a report compared with itself shows n/a.
std::string comparison_table(std::span<const PerformanceReport> reports);

/// Non-finite values are written as "inf", "-inf" or null.
nlohmann::json report_json(const PerformanceReport& report);

struct SweepRow {
  double gamma_sigma = 0.0;
  double ann_return = 0.0;  ///< annualised mean excess return
  double ann_volatility = 0.0;
  double sharpe = 0.0;
  double sortino = 0.0;
  bool max_sharpe = false;
  bool max_sortino = false;
};

/// One MPC backtest per risk-aversion value, everything else fixed. Runs are
/// independent and execute concurrently under Execution::Parallel.
std::vector<SweepRow> gamma_sigma_sweep(const AlignedPanel& panel, const SignalPanel& signals,
                                        const BacktestConfig& config, std::size_t start, std::size_t end,
                                        std::span<const double> grid,
                                        kernels::Execution ex = kernels::Execution::Parallel);

/// `gamma_sigma,ann_return,ann_volatility,sharpe,sortino,max_sharpe,max_sortino`.
void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepRow> rows);

}  // namespace mpo
