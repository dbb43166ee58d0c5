#include "mpo/tuning.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "mpo/error.hpp"
#include "mpo/evaluation.hpp"
#include "mpo/parallel.hpp"

namespace mpo {

PgtsSplit make_pgts(std::span<const Date> dates, int n_folds, int gap) {
  if (n_folds < 1) throw ConfigError("pgts: need at least one fold");
  if (gap < 0) throw ConfigError("pgts: gap must be nonnegative");
  const std::size_t n = dates.size();
  const auto groups = static_cast<std::size_t>(n_folds) + 1;
  if (n < groups) throw ValidationError("pgts: fewer dates than groups");
  std::vector<std::size_t> edge(groups + 1);
  for (std::size_t g = 0; g <= groups; ++g) edge[g] = g * n / groups;

  PgtsSplit split;
  split.gap = gap;
  for (std::size_t k = 0; k + 1 < groups; ++k) {
    PgtsFold f;
    f.train_begin = 0;
    f.train_end = edge[k + 1];
    f.valid_begin = edge[k + 1] + static_cast<std::size_t>(gap);
    f.valid_end = edge[k + 2];
    if (f.valid_begin >= f.valid_end) {
      throw ValidationError(fmt::format("pgts: fold {} has no validation dates after a {}-date purge", k + 1, gap));
    }
    f.train_first = dates[f.train_begin];
    f.train_last = dates[f.train_end - 1];
    f.valid_first = dates[f.valid_begin];
    f.valid_last = dates[f.valid_end - 1];
    split.folds.push_back(f);
  }
  return split;
}

void SearchSpace::validate() const {
  if (!(gamma_sigma_lo > 0.0) || !(gamma_trade_lo > 0.0)) throw ConfigError("search space: lower bounds must be positive");
  if (gamma_sigma_hi < gamma_sigma_lo || gamma_trade_hi < gamma_trade_lo) throw ConfigError("search space: empty range");
  if (trials < 1) throw ConfigError("search space: trials must be >= 1");
}

std::vector<std::pair<double, double>> SearchSpace::sample() const {
  validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> gs(std::log(gamma_sigma_lo), std::log(gamma_sigma_hi));
  std::uniform_real_distribution<double> gt(std::log(gamma_trade_lo), std::log(gamma_trade_hi));
  std::vector<std::pair<double, double>> out;
  for (int i = 0; i < trials; ++i) {
    const double a = std::exp(gs(rng));
    const double b = std::exp(gt(rng));
    out.emplace_back(a, b);
  }
  return out;
}

TuneResult tune(const AlignedPanel& panel, const SignalPanel& signals, const BacktestConfig& base,
                const SearchSpace& space, const PgtsSplit& split, kernels::Execution ex) {
  if (split.folds.empty()) throw ConfigError("tune: split has no folds");
  const auto points = space.sample();

  struct Window {
    std::size_t start, end;
  };
  std::vector<Window> windows;
  std::vector<AlignedPanel> panels;
  std::vector<SignalPanel> fold_signals;
  for (const auto& f : split.folds) {
    const auto s = panel.index_of(f.valid_first);
    const auto e = panel.index_of(f.valid_last);
    if (!s || !e) throw ValidationError("tune: validation dates are not on the panel calendar");
    windows.push_back({*s, *e});
    panels.push_back(panel.truncate(*e + 1));
    fold_signals.push_back(signals.truncate(*e + 1));
  }

  const auto nan = std::numeric_limits<double>::quiet_NaN();
  auto records = parallel_map(
      points.size(),
      [&](std::size_t i) {
        TrialRecord rec;
        rec.trial = static_cast<int>(i);
        rec.gamma_sigma = points[i].first;
        rec.gamma_trade = points[i].second;
        auto cfg = base;
        cfg.mpc.gamma_sigma = rec.gamma_sigma;
        cfg.mpc.gamma_trade = rec.gamma_trade;
        try {
          double so = 0.0, sh = 0.0, ar = 0.0, av = 0.0;
          for (std::size_t k = 0; k < windows.size(); ++k) {
            const auto result = run_mpc_backtest(panels[k], fold_signals[k], cfg, windows[k].start, windows[k].end);
            const auto report = compute_report(result);
            so += report.sortino;
            sh += report.sharpe;
            ar += report.ann_mean_excess;
            av += report.ann_volatility;
          }
          const auto folds = static_cast<double>(windows.size());
          rec.sortino = so / folds;
          rec.sharpe = sh / folds;
          rec.ann_return = ar / folds;
          rec.ann_volatility = av / folds;
        } catch (const std::exception& err) {
          rec.sortino = rec.sharpe = rec.ann_return = rec.ann_volatility = nan;
          rec.error = err.what();
        }
        return rec;
      },
      ex);

  TuneResult out;
  for (const auto& r : records) {
    if (!r.error.empty() || std::isnan(r.sortino)) continue;
    if (out.best_trial < 0 || r.sortino > records[static_cast<std::size_t>(out.best_trial)].sortino) {
      out.best_trial = r.trial;
    }
  }
  if (out.best_trial < 0) {
    std::string why = "tune: every trial failed";
    for (const auto& r : records) why += fmt::format("\n  trial {}: {}", r.trial, r.error);
    throw ConfigError(why);
  }
  out.gamma_sigma = records[static_cast<std::size_t>(out.best_trial)].gamma_sigma;
  out.gamma_trade = records[static_cast<std::size_t>(out.best_trial)].gamma_trade;
  out.trials = std::move(records);
  return out;
}

void write_trial_log(const std::filesystem::path& path, std::span<const TrialRecord> trials) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "trial,gamma_sigma,gamma_trade,sortino,sharpe,ann_return,ann_vol\n";
  for (const auto& t : trials) {
    out << fmt::format("{},{},{},{},{},{},{}\n", t.trial, t.gamma_sigma, t.gamma_trade, t.sortino, t.sharpe,
                       t.ann_return, t.ann_volatility);
  }
}

}  // namespace mpo
