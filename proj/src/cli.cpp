#include "mpo/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <sstream>

#include "mpo/error.hpp"
#include "mpo/evaluation.hpp"
#include "mpo/regime_signals.hpp"
#include "mpo/tuning.hpp"

namespace mpo {

namespace fs = std::filesystem;

void apply_overrides(RunConfig& config, const CliOverrides& o) {
  if (o.seed) {
    config.seed = *o.seed;
    config.search.seed = *o.seed;
  }
  if (o.trials) config.search.trials = *o.trials;
  if (o.gamma_sigma) config.backtest.mpc.gamma_sigma = *o.gamma_sigma;
  if (o.gamma_trade) config.backtest.mpc.gamma_trade = *o.gamma_trade;
  if (o.horizon) config.backtest.mpc.horizon = *o.horizon;
  if (o.exclude) config.exclude = *o.exclude;
  if (o.out) config.output = fs::absolute(*o.out);
  if (o.grid) config.sweep_grid = *o.grid;
}

namespace {

void write_json(const fs::path& path, const nlohmann::json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

nlohmann::json window_json(const AlignedPanel& panel, DateWindow w) {
  return {{"start", format_date(panel.dates()[w.first])}, {"end", format_date(panel.dates()[w.last])}};
}

void warn_on_overlap(const RunConfig& config, const AlignedPanel& panel, std::ostream& err) {
  if (!config.tune_start || !config.tune_end) return;
  const auto tune = tune_window(config, panel);
  const auto test = test_window(config, panel);
  if (tune.last + static_cast<std::size_t>(config.gap) >= test.first) {
    err << fmt::format("warning: tuning range ends {} but the test range starts {}, less than {} trading days later\n",
                       format_date(panel.dates()[tune.last]), format_date(panel.dates()[test.first]), config.gap);
  }
}

}  // namespace

void cmd_backtest(const RunConfig& config, std::ostream& out, std::ostream& err) {
  config.validate();
  const auto market = load_market(config);
  warn_on_overlap(config, market.panel, err);
  const auto w = test_window(config, market.panel);
  const auto result = run_mpc_backtest(market.panel, market.signals, config.backtest, w.first, w.last);
  const auto report = compute_report(result);
  write_daily_csv(config.output / "backtest_daily.csv", result);
  write_monthly_csv(config.output / "backtest_monthly.csv", result);
  nlohmann::json j;
  j["config"] = to_json(config);
  j["range"] = window_json(market.panel, w);
  j["summary"] = summary_json(result);
  j["report"] = report_json(report);
  write_json(config.output / "backtest.json", j);
  out << fmt::format("backtest {} .. {}: final value {:.2f}, ann. Sortino {:.4f}\n", format_date(result.dates.front()),
                     format_date(result.dates.back()), result.values.back(), report.sortino);
}

void cmd_tune(const RunConfig& config, std::ostream& out, std::ostream& err) {
  config.validate();
  const auto market = load_market(config);
  warn_on_overlap(config, market.panel, err);
  const auto w = tune_window(config, market.panel);
  const std::span<const Date> dates(market.panel.dates().data() + w.first, w.last - w.first + 1);
  const auto split = make_pgts(dates, config.folds, config.gap);
  const auto result = tune(market.panel, market.signals, config.backtest, config.search, split);
  write_trial_log(config.output / "tune_trials.csv", result.trials);
  nlohmann::json j;
  j["config"] = to_json(config);
  j["range"] = window_json(market.panel, w);
  for (const auto& f : split.folds) {
    j["folds"].push_back({{"train", {format_date(f.train_first), format_date(f.train_last)}},
                          {"validation", {format_date(f.valid_first), format_date(f.valid_last)}}});
  }
  const auto& best = result.trials[static_cast<std::size_t>(result.best_trial)];
  j["winner"] = {{"trial", best.trial},
                 {"gamma_sigma", best.gamma_sigma},
                 {"gamma_trade", best.gamma_trade},
                 {"sortino", best.sortino},
                 {"sharpe", best.sharpe}};
  std::size_t failed = 0;
  for (const auto& t : result.trials) failed += t.error.empty() ? 0 : 1;
  j["failed_trials"] = failed;
  write_json(config.output / "tune.json", j);
  out << fmt::format("tune: best trial {} gamma_sigma={} gamma_trade={} sortino={:.4f} ({} of {} trials failed)\n",
                     best.trial, best.gamma_sigma, best.gamma_trade, best.sortino, failed, result.trials.size());
}

void cmd_sweep(const RunConfig& config, std::ostream& out, std::ostream& err) {
  config.validate();
  const auto market = load_market(config);
  warn_on_overlap(config, market.panel, err);
  const auto w = test_window(config, market.panel);
  const auto rows = gamma_sigma_sweep(market.panel, market.signals, config.backtest, w.first, w.last, config.sweep_grid);
  write_sweep_csv(config.output / "sweep.csv", rows);
  nlohmann::json j;
  j["config"] = to_json(config);
  j["range"] = window_json(market.panel, w);
  for (const auto& r : rows) {
    if (r.max_sharpe) j["max_sharpe_gamma_sigma"] = r.gamma_sigma;
    if (r.max_sortino) j["max_sortino_gamma_sigma"] = r.gamma_sigma;
  }
  write_json(config.output / "sweep.json", j);
  out << fmt::format("sweep: {} points written to {}\n", rows.size(), (config.output / "sweep.csv").string());
}

void cmd_benchmark(const RunConfig& config, std::ostream& out, std::ostream& err) {
  config.validate();
  const auto market = load_market(config);
  warn_on_overlap(config, market.panel, err);
  const auto w = test_window(config, market.panel);
  std::vector<BacktestResult> runs;
  runs.push_back(run_mpc_backtest(market.panel, market.signals, config.backtest, w.first, w.last));
  runs.push_back(run_buy_and_hold(market.panel, w.first, w.last, config.backtest.initial_value));
  runs.push_back(run_equal_weight(market.panel, w.first, w.last, config.backtest));
  const std::span<const BacktestResult> benchmarks(runs.data() + 1, 2);
  std::vector<PerformanceReport> reports;
  for (const auto& r : runs) reports.push_back(compute_report(r, benchmarks));

  const auto table = comparison_table(reports);
  {
    fs::create_directories(config.output);
    std::ofstream txt(config.output / "benchmark.txt", std::ios::binary);
    txt << table;
  }
  const char* files[] = {"benchmark_mpc_daily.csv", "benchmark_buy_and_hold_daily.csv", "benchmark_equal_weight_daily.csv"};
  nlohmann::json j;
  j["config"] = to_json(config);
  j["range"] = window_json(market.panel, w);
  j["assets"] = market.panel.assets();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    write_daily_csv(config.output / files[i], runs[i]);
    j["portfolios"].push_back({{"summary", summary_json(runs[i])}, {"report", report_json(reports[i])}});
  }
  write_monthly_csv(config.output / "benchmark_mpc_monthly.csv", runs[0]);
  write_json(config.output / "benchmark.json", j);
  out << table;
}

void cmd_synth(const RunConfig& config, std::ostream& out, std::ostream&) {
  config.synthetic.validate();
  const auto market = generate_synthetic(config.synthetic, config.seed);
  const auto& dir = config.output;
  fs::create_directories(dir / "prices");
  RunConfig echo = config;
  DataFiles files;
  for (const auto& s : to_series(market.panel)) {
    const fs::path rel = fs::path("prices") / (s.asset + ".csv");
    write_price_csv(dir / rel, s);
    files.prices.push_back(rel);
  }
  write_cash_csv(dir / "cash.csv", market.panel);
  write_signals_csv(dir / "signals.csv", market.signals);
  files.cash = "cash.csv";
  files.signals = "signals.csv";
  echo.data = files;
  echo.output = "out";
  std::ofstream(dir / "config.yaml", std::ios::binary) << to_yaml(echo);
  out << fmt::format("synth: {} assets x {} dates written to {}\n", market.panel.num_assets(),
                     market.panel.num_dates(), dir.string());
}

namespace {

template <class T>
std::vector<T> split_list(const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if constexpr (std::is_same_v<T, double>) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(item, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != item.size()) throw ConfigError("not a number in list: '" + item + "'");
      out.push_back(v);
    } else {
      out.push_back(item);
    }
  }
  return out;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-period portfolio optimisation with regime signals"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  CliOverrides o;
  std::uint64_t seed = 0;
  int trials = 0, horizon = 0;
  double gs = 0.0, gt = 0.0;
  std::string exclude, out_dir, grid;
  auto* opt_seed = app.add_option("--seed", seed, "Random seed (market generation and search)");
  auto* opt_trials = app.add_option("--trials", trials, "Number of tuning trials");
  auto* opt_gs = app.add_option("--gamma-sigma", gs, "Risk-aversion parameter");
  auto* opt_gt = app.add_option("--gamma-trade", gt, "Trading-penalty parameter");
  auto* opt_h = app.add_option("--horizon", horizon, "Planning horizon in days");
  auto* opt_ex = app.add_option("--exclude", exclude, "Comma-separated assets to drop");
  auto* opt_out = app.add_option("--out", out_dir, "Output directory");
  auto* opt_grid = app.add_option("--grid", grid, "Comma-separated risk-aversion values for sweep");
  app.add_option("--config", config_path, "YAML configuration file");

  const char* names[] = {"backtest", "tune", "sweep", "benchmark", "synth"};
  const char* help[] = {"Run the MPC backtest over the test range", "Search the penalty parameters on the tuning range",
                        "Risk-aversion sweep over the test range", "Compare MPC with buy-and-hold and 1/N",
                        "Write a synthetic market fixture"};
  for (std::size_t i = 0; i < 5; ++i) app.add_subcommand(names[i], help[i]);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o_out, o_err;
    const int code = app.exit(e, o_out, o_err);
    out << o_out.str();
    err << o_err.str();
    return code == 0 ? 0 : 1;
  }

  try {
    if (*opt_seed) o.seed = seed;
    if (*opt_trials) o.trials = trials;
    if (*opt_gs) o.gamma_sigma = gs;
    if (*opt_gt) o.gamma_trade = gt;
    if (*opt_h) o.horizon = horizon;
    if (*opt_ex) o.exclude = split_list<std::string>(exclude);
    if (*opt_out) o.out = out_dir;
    if (*opt_grid) o.grid = split_list<double>(grid);

    RunConfig config = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    apply_overrides(config, o);
    if (config.output.is_relative()) config.output = fs::absolute(config.output);

    const auto command = app.get_subcommands().front()->get_name();
    if (command == "backtest") cmd_backtest(config, out, err);
    else if (command == "tune") cmd_tune(config, out, err);
    else if (command == "sweep") cmd_sweep(config, out, err);
    else if (command == "benchmark") cmd_benchmark(config, out, err);
    else cmd_synth(config, out, err);
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::Numerical ? 2 : 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace mpo
