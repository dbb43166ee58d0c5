#include "mpo/evaluation.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "mpo/error.hpp"
#include "mpo/parallel.hpp"

namespace mpo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

double ratio(double num, double den) {
  if (den > 0.0) return num / den;
  if (num == 0.0) return 0.0;
  return num > 0.0 ? kInf : -kInf;
}

}  // namespace

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_std(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  // A constant series has no dispersion even when its mean rounds.
  if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double downside_deviation(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double ss = 0.0;
  for (double v : x) {
    const double d = std::min(v, 0.0);
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(x.size()));
}

double annualised_return(double daily_mean) { return std::pow(1.0 + daily_mean, kTradingDays) - 1.0; }

double sharpe_ratio(std::span<const double> excess) {
  return ratio(mean(excess), sample_std(excess)) * std::sqrt(kTradingDays);
}

double sortino_ratio(std::span<const double> excess) {
  return ratio(mean(excess), downside_deviation(excess)) * std::sqrt(kTradingDays);
}

double max_drawdown(std::span<const double> values) {
  double peak = -kInf;
  double worst = 0.0;
  for (double v : values) {
    peak = std::max(peak, v);
    if (peak > 0.0) worst = std::max(worst, 1.0 - v / peak);
  }
  return std::clamp(worst, 0.0, 1.0);
}

double information_ratio(std::span<const double> returns, std::span<const double> benchmark) {
  if (returns.size() != benchmark.size()) throw ValidationError("information ratio: series lengths differ");
  std::vector<double> active(returns.size());
  for (std::size_t i = 0; i < returns.size(); ++i) active[i] = returns[i] - benchmark[i];
  const double te = sample_std(active);
  if (!(te > 0.0)) return kNaN;
  return mean(active) / te * std::sqrt(kTradingDays);
}

double PerformanceReport::information_ratio(const std::string& benchmark) const {
  for (const auto& [name, ir] : information_ratios) {
    if (name == benchmark) return ir;
  }
  throw ValidationError("report has no benchmark named " + benchmark);
}

PerformanceReport compute_report(const BacktestResult& result, std::span<const BacktestResult> benchmarks) {
  if (result.excess_returns.empty()) throw ValidationError("report: need at least two days");
  PerformanceReport r;
  r.name = result.name;
  r.mean_excess = mean(result.excess_returns);
  r.ann_mean_excess = annualised_return(r.mean_excess);
  r.volatility = sample_std(result.excess_returns);
  r.ann_volatility = r.volatility * std::sqrt(kTradingDays);
  r.sharpe = sharpe_ratio(result.excess_returns);
  r.sortino = sortino_ratio(result.excess_returns);
  r.max_drawdown = max_drawdown(result.values);
  for (const auto& b : benchmarks) {
    if (b.dates != result.dates) {
      throw ValidationError("report: benchmark " + b.name + " covers different dates than " + result.name);
    }
    r.information_ratios.emplace_back(b.name, information_ratio(result.returns, b.returns));
  }
  return r;
}

const std::vector<std::string>& comparison_row_labels() {
  static const std::vector<std::string> labels{"Mean excess returns",
                                               "Ann. mean excess returns",
                                               "Volatility",
                                               "Ann. volatility",
                                               "Ann. Sharpe ratio",
                                               "Ann. Sortino ratio",
                                               "Maximum drawdown",
                                               "Ann. IR (vs. buy-and-hold)",
                                               "Ann. IR (vs. 1/N)"};
  return labels;
}

namespace {

std::string percent(double x) { return std::isfinite(x) ? fmt::format("{:.2f}%", 100.0 * x) : fmt::format("{}", x); }
std::string plain(double x) { return std::isfinite(x) ? fmt::format("{:.2f}", x) : fmt::format("{}", x); }

std::string ir_cell(const PerformanceReport& r, const std::string& benchmark) {
  for (const auto& [name, ir] : r.information_ratios) {
    if (name == benchmark) return std::isnan(ir) ? "n/a" : plain(ir);
  }
  return "n/a";
}

}  // namespace

std::string comparison_table(std::span<const PerformanceReport> reports) {
  const auto& labels = comparison_row_labels();
  std::vector<std::vector<std::string>> cells(labels.size());
  for (const auto& r : reports) {
    cells[0].push_back(percent(r.mean_excess));
    cells[1].push_back(percent(r.ann_mean_excess));
    cells[2].push_back(percent(r.volatility));
    cells[3].push_back(percent(r.ann_volatility));
    cells[4].push_back(plain(r.sharpe));
    cells[5].push_back(plain(r.sortino));
    cells[6].push_back(percent(r.max_drawdown));
    cells[7].push_back(ir_cell(r, "Buy-and-hold"));
    cells[8].push_back(ir_cell(r, "1/N"));
  }
  std::size_t label_width = 0;
  for (const auto& l : labels) label_width = std::max(label_width, l.size());
  std::vector<std::size_t> width;
  for (const auto& r : reports) width.push_back(std::max<std::size_t>(r.name.size(), 10));
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out = fmt::format("{:<{}}", "", label_width);
  for (std::size_t c = 0; c < reports.size(); ++c) out += fmt::format("  {:>{}}", reports[c].name, width[c]);
  out += '\n';
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out += fmt::format("{:<{}}", labels[i], label_width);
    for (std::size_t c = 0; c < cells[i].size(); ++c) out += fmt::format("  {:>{}}", cells[i][c], width[c]);
    out += '\n';
  }
  return out;
}

namespace {

nlohmann::json number(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

}  // namespace

nlohmann::json report_json(const PerformanceReport& r) {
  nlohmann::json j;
  j["name"] = r.name;
  j["mean_excess_return"] = number(r.mean_excess);
  j["ann_mean_excess_return"] = number(r.ann_mean_excess);
  j["volatility"] = number(r.volatility);
  j["ann_volatility"] = number(r.ann_volatility);
  j["ann_sharpe"] = number(r.sharpe);
  j["ann_sortino"] = number(r.sortino);
  j["max_drawdown"] = number(r.max_drawdown);
  auto irs = nlohmann::json::object();
  for (const auto& [name, ir] : r.information_ratios) irs[name] = number(ir);
  j["ann_information_ratio"] = irs;
  return j;
}

std::vector<SweepRow> gamma_sigma_sweep(const AlignedPanel& panel, const SignalPanel& signals,
                                        const BacktestConfig& config, std::size_t start, std::size_t end,
                                        std::span<const double> grid, kernels::Execution ex) {
  if (grid.empty()) throw ConfigError("sweep: grid is empty");
  auto rows = parallel_map(
      grid.size(),
      [&](std::size_t i) {
        auto cfg = config;
        cfg.mpc.gamma_sigma = grid[i];
        const auto report = compute_report(run_mpc_backtest(panel, signals, cfg, start, end));
        return SweepRow{grid[i], report.ann_mean_excess, report.ann_volatility, report.sharpe, report.sortino};
      },
      ex);
  auto flag = [&](auto key, bool SweepRow::*mark) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (key(rows[i]) > key(rows[best]) || std::isnan(key(rows[best]))) best = i;
    }
    rows[best].*mark = true;
  };
  flag([](const SweepRow& r) { return r.sharpe; }, &SweepRow::max_sharpe);
  flag([](const SweepRow& r) { return r.sortino; }, &SweepRow::max_sortino);
  return rows;
}

void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepRow> rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "gamma_sigma,ann_return,ann_volatility,sharpe,sortino,max_sharpe,max_sortino\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{},{},{},{}\n", r.gamma_sigma, r.ann_return, r.ann_volatility, r.sharpe, r.sortino,
                       r.max_sharpe ? 1 : 0, r.max_sortino ? 1 : 0);
  }
}

}  // namespace mpo
