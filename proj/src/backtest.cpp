#include "mpo/backtest.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <string>

#include "mpo/cost_model.hpp"
#include "mpo/error.hpp"

namespace mpo {

double BacktestResult::total_turnover() const {
  double s = 0.0;
  for (double x : turnover) s += x;
  return s;
}

double BacktestResult::total_cost() const {
  double s = 0.0;
  for (double x : costs) s += x;
  return s;
}

namespace {

void check_range(const AlignedPanel& panel, std::size_t start, std::size_t end) {
  if (panel.num_assets() == 0) throw ValidationError("backtest: panel has no risky assets");
  if (start > end) throw ValidationError("backtest: start after end");
  if (end >= panel.num_dates()) throw ValidationError("backtest: end beyond the calendar");
}

struct Decision {
  Eigen::VectorXd target;  ///< N+1 weights
  double cost = 0.0;       ///< currency
};

// Threads holdings through the days and records the result. `decide` returns
// the post-trade weights and cost for a day, or nothing to hold.
template <class Decide>
BacktestResult simulate(const AlignedPanel& panel, std::size_t start, std::size_t end, double initial_value,
                        std::string name, Decide&& decide) {
  if (!(initial_value > 0.0)) throw ValidationError("backtest: initial value must be positive");
  const auto N = static_cast<Eigen::Index>(panel.num_assets());
  const auto D = end - start + 1;

  BacktestResult out;
  out.name = std::move(name);
  out.assets = panel.assets();
  out.cash_label = panel.cash_label();
  out.start_index = start;
  out.dates.assign(panel.dates().begin() + static_cast<std::ptrdiff_t>(start),
                   panel.dates().begin() + static_cast<std::ptrdiff_t>(end) + 1);
  out.values.reserve(D);
  out.weights.reserve(D);

  Eigen::VectorXd holdings = Eigen::VectorXd::Constant(N, initial_value / static_cast<double>(N));
  double cash = 0.0;
  for (std::size_t t = start; t <= end; ++t) {
    const double value = holdings.sum() + cash;
    Eigen::VectorXd w(N + 1);
    w.head(N) = holdings / value;
    w(N) = cash / value;

    if (t > start) {
      const double prev = out.values.back();
      out.returns.push_back(value / prev - 1.0);
      const double rf = panel.cash_rate()(static_cast<Eigen::Index>(t));
      out.excess_returns.push_back(out.returns.back() - rf);
      out.cash_returns.push_back(rf);
    } else {
      out.cash_returns.push_back(0.0);
    }
    out.values.push_back(value);

    Eigen::VectorXd trade = Eigen::VectorXd::Zero(N + 1);
    double cost = 0.0;
    if (t < end) {
      if (std::optional<Decision> d = decide(t, w, value)) {
        trade = d->target - w;
        cost = d->cost;
        w = d->target;
        holdings = w.head(N) * value;
        cash = w(N) * value;
      }
    }
    out.weights.push_back(w);
    out.trades.push_back(trade);
    out.costs.push_back(cost);
    out.turnover.push_back(trade.head(N).cwiseAbs().sum());

    if (t < end) {
      const auto next = static_cast<Eigen::Index>(t + 1);
      holdings.array() *= 1.0 + panel.returns().row(next).transpose().array();
      cash = cash * (1.0 + panel.cash_rate()(next)) - cost;
      const double after = holdings.sum() + cash;
      if (!(after > 0.0)) {
        throw BankruptcyError("backtest: portfolio value reached " + fmt::format("{}", after) + " on " +
                              format_date(panel.dates()[static_cast<std::size_t>(next)]));
      }
    }
  }
  out.final_state = {out.dates.back(), holdings, cash};
  return out;
}

Eigen::VectorXd equal_risky(Eigen::Index n) {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n + 1, 1.0 / static_cast<double>(n));
  w(n) = 0.0;
  return w;
}

}  // namespace

BacktestResult run_mpc_backtest(const AlignedPanel& panel, const SignalPanel& signals, const BacktestConfig& config,
                                std::size_t start, std::size_t end) {
  check_range(panel, start, end);
  config.mpc.validate();
  const auto needed = EstimatorPipeline::required_history(config.mpc.horizon, config.estimators);
  if (start < needed) {
    throw WarmupError("backtest: first decision on " + format_date(panel.dates()[start]) + " needs " +
                      std::to_string(needed) + " dates of history, found " + std::to_string(start));
  }
  if (config.mpc.min_weight * static_cast<double>(panel.num_assets()) > 1.0 + 1e-12) {
    throw InfeasibleError("backtest: risky floors exceed the budget");
  }
  EstimatorPipeline pipeline(panel, signals, config.mpc.horizon, config.estimators);
  std::vector<SolverStatus> statuses;
  auto decide = [&](std::size_t t, const Eigen::VectorXd& w, double value) -> std::optional<Decision> {
    const auto est = pipeline.next(t);
    const auto plan = solve(est, w, config.mpc, config.spread, value);
    if (plan.status == SolverStatus::Infeasible) {
      throw InfeasibleError("backtest: allocation problem infeasible on " + format_date(est.date));
    }
    statuses.push_back(plan.status);
    Decision d;
    d.target = plan.weights.front();
    const auto N = static_cast<Eigen::Index>(panel.num_assets());
    const CostParams params{config.spread, est.ewm_sigma, est.ewm_volume, value};
    d.cost = total_transaction_cost((d.target - w).head(N), params) * value;
    return d;
  };
  auto result = simulate(panel, start, end, config.initial_value, "MPC", decide);
  result.solver_status = std::move(statuses);
  return result;
}

BacktestResult run_buy_and_hold(const AlignedPanel& panel, std::size_t start, std::size_t end, double initial_value) {
  check_range(panel, start, end);
  auto hold = [](std::size_t, const Eigen::VectorXd&, double) -> std::optional<Decision> { return std::nullopt; };
  return simulate(panel, start, end, initial_value, "Buy-and-hold", hold);
}

BacktestResult run_equal_weight(const AlignedPanel& panel, std::size_t start, std::size_t end,
                                const BacktestConfig& config) {
  check_range(panel, start, end);
  if (config.rebalance_every < 1) throw ConfigError("1/N: rebalance period must be >= 1");
  const auto N = static_cast<Eigen::Index>(panel.num_assets());
  const CostSnapshots snapshots(panel, config.estimators.ema_window, config.estimators.execution);
  const Eigen::VectorXd target = equal_risky(N);
  auto decide = [&](std::size_t t, const Eigen::VectorXd& w, double value) -> std::optional<Decision> {
    if ((t - start) % static_cast<std::size_t>(config.rebalance_every) != 0) return std::nullopt;
    Decision d{target, 0.0};
    const Eigen::VectorXd delta = (target - w).head(N);
    if (delta.cwiseAbs().maxCoeff() > 0.0) {
      const CostParams params{config.spread, snapshots.sigma_before(t), snapshots.volume_before(t), value};
      d.cost = total_transaction_cost(delta, params) * value;
    }
    return d;
  };
  return simulate(panel, start, end, config.initial_value, "1/N", decide);
}

double accounting_error(const AlignedPanel& panel, const BacktestResult& result) {
  double worst = 0.0;
  const auto N = static_cast<Eigen::Index>(result.assets.size());
  for (std::size_t d = 0; d + 1 < result.num_days(); ++d) {
    const auto next = static_cast<Eigen::Index>(result.start_index + d + 1);
    const auto& w = result.weights[d];
    const double growth = w.head(N).dot(panel.returns().row(next).transpose()) + w(N) * panel.cash_rate()(next);
    const double expect = result.values[d] * (1.0 + growth) - result.costs[d];
    worst = std::max(worst, std::abs(result.values[d + 1] - expect) / std::abs(expect));
  }
  return worst;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

std::string weight_header(const BacktestResult& r) {
  std::string h;
  for (const auto& a : r.assets) h += ",w_" + a;
  h += ",w_" + r.cash_label;
  return h;
}

std::string weight_fields(const Eigen::VectorXd& w) {
  std::string s;
  for (Eigen::Index i = 0; i < w.size(); ++i) s += fmt::format(",{}", w(i));
  return s;
}

}  // namespace

std::vector<MonthlyWeights> monthly_weights(const BacktestResult& result) {
  std::vector<MonthlyWeights> out;
  std::size_t count = 0;
  for (std::size_t d = 0; d < result.num_days(); ++d) {
    const auto month = format_month(result.dates[d]);
    if (out.empty() || out.back().month != month) {
      if (!out.empty()) out.back().average /= static_cast<double>(count);
      out.push_back({month, Eigen::VectorXd::Zero(result.weights[d].size())});
      count = 0;
    }
    out.back().average += result.weights[d];
    ++count;
  }
  if (!out.empty()) out.back().average /= static_cast<double>(count);
  return out;
}

void write_daily_csv(const std::filesystem::path& path, const BacktestResult& result) {
  auto out = open_out(path);
  out << "date,value,excess_return,cost" << weight_header(result) << '\n';
  for (std::size_t d = 0; d < result.num_days(); ++d) {
    out << format_date(result.dates[d]) << ',' << fmt::format("{}", result.values[d]) << ','
        << (d == 0 ? std::string{} : fmt::format("{}", result.excess_returns[d - 1])) << ','
        << fmt::format("{}", result.costs[d]) << weight_fields(result.weights[d]) << '\n';
  }
}

void write_monthly_csv(const std::filesystem::path& path, const BacktestResult& result) {
  auto out = open_out(path);
  out << "month" << weight_header(result) << '\n';
  for (const auto& m : monthly_weights(result)) out << m.month << weight_fields(m.average) << '\n';
}

nlohmann::json summary_json(const BacktestResult& result) {
  nlohmann::json j;
  j["name"] = result.name;
  j["start"] = format_date(result.dates.front());
  j["end"] = format_date(result.dates.back());
  j["days"] = result.num_days();
  j["initial_value"] = result.values.front();
  j["final_value"] = result.values.back();
  j["total_turnover"] = result.total_turnover();
  j["total_cost"] = result.total_cost();
  if (!result.solver_status.empty()) {
    std::map<std::string, int> counts;
    for (auto s : result.solver_status) ++counts[std::string(to_string(s))];
    j["solver_status"] = counts;
  }
  return j;
}

}  // namespace mpo
