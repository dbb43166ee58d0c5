#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "mpo/date.hpp"
#include "mpo/estimators.hpp"
#include "mpo/market_data.hpp"
#include "mpo/mpc_optimizer.hpp"
#include "mpo/regime_signals.hpp"

namespace mpo {

/// Holdings in currency at a date's close. Cash may dip marginally below zero
/// when a rebalance into zero cash is settled against it.
struct PortfolioState {
  Date date{};
  Eigen::VectorXd holdings;  ///< N risky assets
  double cash = 0.0;

  double total() const { return holdings.sum() + cash; }
};

struct BacktestConfig {
  MpcConfig mpc;
  EstimatorConfig estimators;
  double spread = 0.002;
  double initial_value = 26000.0;
  /// Rebalance period in trading days for the 1/N benchmark.
  int rebalance_every = 1;
};

/// One simulated portfolio over dates[start..end].
///
/// Entry d of every per-day vector refers to dates[d]. A trade decided on day d
/// executes at that close; its cost (currency) is settled from cash when the
/// next day's returns accrue, so
///
///     values[d+1] = values[d] * (1 + w[d]'r[d+1] + w_cash[d] rf[d+1]) - costs[d]
///
/// where w[d] are the post-trade weights in `weights[d]`. The last day carries
/// the drifted weights and no trade.
struct BacktestResult {
  std::string name;
  std::vector<std::string> assets;
  std::string cash_label;
  std::size_t start_index = 0;  ///< panel row of dates[0]
  std::vector<Date> dates;
  std::vector<double> values;
  std::vector<Eigen::VectorXd> weights;  ///< N+1 entries, cash last
  std::vector<Eigen::VectorXd> trades;   ///< executed weight change, N+1 entries
  std::vector<double> costs;             ///< currency
  std::vector<double> turnover;          ///< sum of |risky weight change|
  std::vector<double> cash_returns;      ///< rf over (d-1, d]; entry 0 is 0
  /// Cost-adjusted portfolio return over (d-1, d] for d = 1..D-1; size D-1.
  std::vector<double> returns;
  std::vector<double> excess_returns;    ///< returns minus the cash rate, size D-1
  std::vector<SolverStatus> solver_status;  ///< MPC only, one per trade day
  PortfolioState final_state;

  std::size_t num_days() const { return dates.size(); }
  double total_turnover() const;
  double total_cost() const;
};

struct MonthlyWeights {
  std::string month;  ///< YYYY-MM
  Eigen::VectorXd average;
};

/// Average daily weights per calendar month, in date order.
std::vector<MonthlyWeights> monthly_weights(const BacktestResult& result);

/// Estimates from data before each day's close, solves, executes the first
/// planned step. Starts from equal risky weights and no cash. Throws
/// WarmupError before trading if `start` lacks history, InfeasibleError if a
/// solve is infeasible and BankruptcyError if the value reaches zero.
BacktestResult run_mpc_backtest(const AlignedPanel& panel, const SignalPanel& signals, const BacktestConfig& config,
                                std::size_t start, std::size_t end);

/// Equal risky weights on `start`, never rebalanced, no costs.
BacktestResult run_buy_and_hold(const AlignedPanel& panel, std::size_t start, std::size_t end,
                                double initial_value = 26000.0);

/// Rebalances to equal risky weights every `config.rebalance_every` days,
/// paying costs under the same model as the MPC portfolio.
BacktestResult run_equal_weight(const AlignedPanel& panel, std::size_t start, std::size_t end,
                                const BacktestConfig& config);

/// Largest relative error of the daily value identity; 0 for an exact path.
double accounting_error(const AlignedPanel& panel, const BacktestResult& result);

/// `date,value,excess_return,cost,w_<asset>...,w_<cash>`; the first row has an empty return.
void write_daily_csv(const std::filesystem::path& path, const BacktestResult& result);
/// `month,w_<asset>...,w_<cash>`.
void write_monthly_csv(const std::filesystem::path& path, const BacktestResult& result);
nlohmann::json summary_json(const BacktestResult& result);

}  // namespace mpo
