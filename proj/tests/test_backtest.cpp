#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "mpo/backtest.hpp"
#include "mpo/error.hpp"
#include "mpo/regime_signals.hpp"
#include "panels.hpp"
#include "scratch.hpp"

using mpo::BacktestConfig;

namespace {

BacktestConfig small_config() {
  BacktestConfig cfg;
  cfg.estimators.cov_window = 60;
  return cfg;
}

mpo::SyntheticMarket market(int n_assets, int n_days, std::uint64_t seed, double eps = 0.0) {
  mpo::SynthConfig cfg;
  cfg.n_assets = n_assets;
  cfg.n_days = n_days;
  cfg.epsilon = eps;
  return mpo::generate_synthetic(cfg, seed);
}

}  // namespace

TEST_CASE("no-motion economy keeps its value") {
  const Eigen::MatrixXd prices = Eigen::MatrixXd::Constant(120, 1, 50.0);
  const auto panel = gen::panel_from_prices(prices, 1e7, 0.0);
  const mpo::SignalPanel signals(panel.assets(), panel.dates());
  auto cfg = small_config();
  cfg.spread = 0.0;
  const auto r = mpo::run_mpc_backtest(panel, signals, cfg, 80, 119);
  for (double v : r.values) CHECK(v == doctest::Approx(26000.0).epsilon(1e-12));
  CHECK(r.final_state.total() == doctest::Approx(26000.0).epsilon(1e-12));
}

TEST_CASE("buy-and-hold drifts with prices") {
  Eigen::MatrixXd prices(5, 2);
  prices << 10, 7, 12, 7, 15, 7, 18, 7, 20, 7;
  const auto panel = gen::panel_from_prices(prices, 1e7, 0.0);
  const auto r = mpo::run_buy_and_hold(panel, 0, 4, 26000.0);
  CHECK(r.values.back() == doctest::Approx(1.5 * 26000.0).epsilon(1e-12));
  CHECK(r.weights.back()(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(r.weights.back()(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(r.total_cost() == 0.0);
  CHECK(r.total_turnover() == 0.0);

  const auto flat = mpo::run_buy_and_hold(gen::panel_from_prices(Eigen::MatrixXd::Constant(30, 3, 4.0), 1e7, 0.0), 0, 29);
  for (double v : flat.values) CHECK(v == 26000.0);
}

TEST_CASE("1/N on flat prices never trades") {
  const auto panel = gen::panel_from_prices(Eigen::MatrixXd::Constant(40, 3, 4.0), 1e7, 0.0);
  BacktestConfig cfg;
  cfg.spread = 0.002;
  const auto r = mpo::run_equal_weight(panel, 2, 39, cfg);
  for (double v : r.values) CHECK(v == doctest::Approx(26000.0).epsilon(1e-14));
  CHECK(r.total_cost() == 0.0);
}

TEST_CASE("1/N with a linearly doubling asset matches hand compounding") {
  Eigen::MatrixXd prices(13, 2);
  for (Eigen::Index t = 0; t < 13; ++t) {
    prices(t, 0) = t < 3 ? 100.0 : 100.0 + 10.0 * static_cast<double>(t - 2);
    prices(t, 1) = 50.0;
  }
  // Huge volume makes market impact vanish; b = 0 removes the spread.
  const auto panel = gen::panel_from_prices(prices, 1e18, 0.0);
  BacktestConfig cfg;
  cfg.spread = 0.0;
  const auto r = mpo::run_equal_weight(panel, 2, 12, cfg);
  double expected = 26000.0;
  for (int k = 1; k <= 10; ++k) expected *= 1.0 + 0.5 * (10.0 / (100.0 + 10.0 * (k - 1)));
  CHECK(std::abs(r.values.back() / expected - 1.0) <= 1e-9);
  CHECK(prices(12, 0) == 200.0);
}

TEST_CASE("mpc backtest on a synthetic market") {
  const auto m = market(4, 400, 17, 0.1);
  const auto cfg = small_config();
  const auto r = mpo::run_mpc_backtest(m.panel, m.signals, cfg, 200, 399);

  CHECK(r.num_days() == 200);
  CHECK(r.returns.size() == 199);
  CHECK(r.solver_status.size() == 199);
  for (auto s : r.solver_status) CHECK(s == mpo::SolverStatus::Optimal);
  CHECK(mpo::accounting_error(m.panel, r) <= 1e-9);

  for (std::size_t d = 0; d < r.num_days(); ++d) {
    const auto& w = r.weights[d];
    CHECK(std::abs(w.sum() - 1.0) <= 1e-9);
    if (d + 1 < r.num_days()) {
      for (Eigen::Index i = 0; i < 4; ++i) CHECK(w(i) >= cfg.mpc.min_weight - 1e-9);
    }
    const auto& st = r.final_state;
    CHECK(std::abs(st.total() - r.values.back()) <= 1e-6);
  }
  for (std::size_t d = 0; d + 1 < r.num_days(); ++d) {
    CHECK(r.excess_returns[d] == doctest::Approx(r.returns[d] - m.panel.cash_rate()(200 + d + 1)).epsilon(1e-15));
    // Value path from returns.
    CHECK(r.values[d + 1] == doctest::Approx(r.values[d] * (1.0 + r.returns[d])).epsilon(1e-12));
  }
}

TEST_CASE("prohibitive trading penalty freezes the book after day one") {
  const auto m = market(4, 400, 18);
  auto cfg = small_config();
  cfg.mpc.gamma_trade = 1e9;
  const auto r = mpo::run_mpc_backtest(m.panel, m.signals, cfg, 200, 399);
  double later = 0.0;
  for (std::size_t d = 1; d < r.num_days(); ++d) later += r.turnover[d];
  CHECK(later < 1e-3);
}

TEST_CASE("uninformative signals with a prohibitive penalty track buy-and-hold") {
  auto m = market(3, 400, 19);
  const mpo::SignalPanel other(m.panel.assets(), m.panel.dates());
  auto cfg = small_config();
  cfg.mpc.gamma_trade = 1e9;
  const auto mpc = mpo::run_mpc_backtest(m.panel, other, cfg, 200, 399);
  const auto bh = mpo::run_buy_and_hold(m.panel, 200, 399, cfg.initial_value);
  const double slack = mpc.total_cost() + 1e-6 * bh.values.back();
  for (std::size_t d = 0; d < bh.num_days(); ++d) {
    CHECK(std::abs(mpc.values[d] - bh.values[d]) <= slack + 1e-3 * bh.values[d]);
  }
}

TEST_CASE("decisions ignore data after the decision day") {
  const auto m = market(3, 300, 20, 0.3);
  const auto cfg = small_config();
  const std::size_t start = 150;
  const std::size_t cut = 200;

  Eigen::MatrixXd prices = m.panel.prices();
  Eigen::MatrixXd volume = m.panel.dollar_volume();
  Eigen::VectorXd rate = m.panel.cash_rate();
  const auto tail = static_cast<Eigen::Index>(300 - cut - 1);
  for (Eigen::Index t = 300 - tail; t < 300; ++t) prices.row(t) *= 1.0 + 0.5 * std::sin(static_cast<double>(t));
  volume.bottomRows(tail).setConstant(3.0);
  rate.tail(tail).setConstant(0.01);
  const mpo::AlignedPanel poisoned(m.panel.assets(), m.panel.dates(), prices, volume, rate);
  auto signals = m.signals;
  for (std::size_t t = cut + 1; t < 300; ++t) {
    for (std::size_t i = 0; i < 3; ++i) signals.at(t, i) = {mpo::RegimeClass::Bearish, 0.0, 1.0};
  }

  const auto a = mpo::run_mpc_backtest(m.panel, m.signals, cfg, start, 299);
  const auto b = mpo::run_mpc_backtest(poisoned, signals, cfg, start, 299);
  for (std::size_t d = 0; d <= cut - start; ++d) {
    CHECK(a.weights[d] == b.weights[d]);
    CHECK(a.values[d] == b.values[d]);
  }
  CHECK(a.values.back() != b.values.back());
}

TEST_CASE("backtest preconditions") {
  const auto m = market(3, 300, 21);
  auto cfg = small_config();
  const auto need = mpo::EstimatorPipeline::required_history(cfg.mpc.horizon, cfg.estimators);
  CHECK_THROWS_AS(mpo::run_mpc_backtest(m.panel, m.signals, cfg, need - 1, 299), mpo::WarmupError);
  CHECK_THROWS_AS(mpo::run_mpc_backtest(m.panel, m.signals, cfg, 250, 240), mpo::ValidationError);
  cfg.mpc.min_weight = 0.4;
  CHECK_THROWS_AS(mpo::run_mpc_backtest(m.panel, m.signals, cfg, need, 299), mpo::InfeasibleError);
}

TEST_CASE("impact costs beyond the book value halt the run") {
  Eigen::MatrixXd prices(8, 2);
  prices << 10, 10, 10, 10, 10, 10, 12, 9, 15, 8, 11, 12, 16, 7, 10, 13;
  // Almost no traded volume: rebalancing costs dwarf the portfolio.
  const auto panel = gen::panel_from_prices(prices, 1e-6, 0.0);
  BacktestConfig cfg;
  CHECK_THROWS_AS(mpo::run_equal_weight(panel, 2, 7, cfg), mpo::BankruptcyError);
  CHECK_NOTHROW(mpo::run_buy_and_hold(panel, 2, 7));
}

TEST_CASE("monthly weights and reports") {
  const auto m = market(2, 300, 22);
  const auto cfg = small_config();
  const auto r = mpo::run_mpc_backtest(m.panel, m.signals, cfg, 100, 299);
  const auto months = mpo::monthly_weights(r);
  REQUIRE(!months.empty());
  Eigen::VectorXd first = Eigen::VectorXd::Zero(3);
  int n = 0;
  for (std::size_t d = 0; d < r.num_days() && mpo::format_month(r.dates[d]) == months[0].month; ++d, ++n) {
    first += r.weights[d];
  }
  CHECK((months[0].average - first / n).cwiseAbs().maxCoeff() <= 1e-15);
  for (const auto& mw : months) CHECK(std::abs(mw.average.sum() - 1.0) <= 1e-9);

  gen::ScratchDir dir("bt");
  mpo::write_daily_csv(dir / "daily.csv", r);
  mpo::write_monthly_csv(dir / "monthly.csv", r);
  std::istringstream daily(gen::slurp(dir / "daily.csv"));
  std::string header, row1;
  std::getline(daily, header);
  std::getline(daily, row1);
  CHECK(header == "date,value,excess_return,cost,w_asset1,w_asset2,w_cash");
  CHECK(row1.rfind(mpo::format_date(r.dates[0]) + ",26000,,", 0) == 0);
  CHECK(gen::slurp(dir / "monthly.csv").rfind("month,w_asset1,w_asset2,w_cash\n", 0) == 0);

  const auto j = mpo::summary_json(r);
  CHECK(j["days"] == 200);
  CHECK(j["final_value"].get<double>() == r.values.back());
}
