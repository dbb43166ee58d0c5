#include "mpo/regime_signals.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>

#include <fmt/format.h>

#include "csv.hpp"
#include "mpo/error.hpp"

namespace mpo {

std::string_view to_string(RegimeClass c) {
  switch (c) {
    case RegimeClass::Bullish:
      return "BULLISH";
    case RegimeClass::Bearish:
      return "BEARISH";
    case RegimeClass::Other:
      return "OTHER";
  }
  return "OTHER";
}

RegimeClass parse_regime(std::string_view text) {
  std::string upper(text);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  if (upper == "BULLISH") return RegimeClass::Bullish;
  if (upper == "BEARISH") return RegimeClass::Bearish;
  if (upper == "OTHER") return RegimeClass::Other;
  throw ParseError("unknown regime class '" + std::string(text) + "'");
}

SignalPanel::SignalPanel(std::vector<std::string> assets, std::vector<Date> dates)
    : assets_(std::move(assets)), dates_(std::move(dates)), cells_(assets_.size() * dates_.size()) {}

SignalPanel SignalPanel::select(std::span<const std::string> keep) const {
  std::vector<std::size_t> cols;
  for (const auto& name : keep) {
    const auto it = std::find(assets_.begin(), assets_.end(), name);
    if (it == assets_.end()) throw ValidationError("unknown asset '" + name + "' in signal panel");
    cols.push_back(static_cast<std::size_t>(it - assets_.begin()));
  }
  SignalPanel out({keep.begin(), keep.end()}, dates_);
  for (std::size_t t = 0; t < dates_.size(); ++t) {
    for (std::size_t j = 0; j < cols.size(); ++j) out.at(t, j) = at(t, cols[j]);
  }
  out.filled_ = filled_;
  return out;
}

SignalPanel SignalPanel::truncate(std::size_t end) const {
  end = std::min(end, dates_.size());
  SignalPanel out(assets_, {dates_.begin(), dates_.begin() + static_cast<std::ptrdiff_t>(end)});
  std::copy(cells_.begin(), cells_.begin() + static_cast<std::ptrdiff_t>(end * assets_.size()), out.cells_.begin());
  out.filled_ = filled_;
  return out;
}

SignalPanel load_signals(const std::filesystem::path& path, const AlignedPanel& panel) {
  const auto table = csv::read(path);
  const auto c_date = table.column("date", path);
  const auto c_asset = table.column("asset", path);
  const auto c_pred = table.column("predicted", path);
  const auto c_bull = table.column("p_bull", path);
  const auto c_bear = table.column("p_bear", path);

  SignalPanel out(panel.assets(), panel.dates());
  std::vector<char> seen(panel.num_assets() * panel.num_dates(), 0);
  for (const auto& row : table.rows) {
    const auto where = path.string() + ":" + std::to_string(row.line);
    const auto& name = row.fields[c_asset];
    const auto it = std::find(panel.assets().begin(), panel.assets().end(), name);
    if (it == panel.assets().end()) throw ValidationError(where + ": unknown asset '" + name + "'");
    const auto asset = static_cast<std::size_t>(it - panel.assets().begin());

    RegimeSignal sig;
    try {
      sig.predicted = parse_regime(row.fields[c_pred]);
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    }
    sig.p_bull = csv::parse_double(row.fields[c_bull], path, row.line);
    sig.p_bear = csv::parse_double(row.fields[c_bear], path, row.line);
    if (sig.p_bull < 0.0 || sig.p_bull > 1.0 || sig.p_bear < 0.0 || sig.p_bear > 1.0) {
      throw ValidationError(where + ": probability outside [0,1]");
    }

    Date d;
    try {
      d = parse_date(row.fields[c_date]);
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    }
    const auto t = panel.index_of(d);
    if (!t) continue;
    out.at(*t, asset) = sig;
    seen[*t * panel.num_assets() + asset] = 1;
  }
  out.set_filled_cells(static_cast<std::size_t>(std::count(seen.begin(), seen.end(), 0)));
  return out;
}

void write_signals_csv(const std::filesystem::path& path, const SignalPanel& signals) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << "date,asset,predicted,p_bull,p_bear\n";
  for (std::size_t t = 0; t < signals.num_dates(); ++t) {
    for (std::size_t i = 0; i < signals.num_assets(); ++i) {
      const auto& s = signals.at(t, i);
      out << fmt::format("{},{},{},{},{}\n", format_date(signals.dates()[t]), signals.assets()[i],
                         to_string(s.predicted), s.p_bull, s.p_bear);
    }
  }
}

void write_price_csv(const std::filesystem::path& path, const PriceSeries& series) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << "date,close,volume\n";
  for (std::size_t t = 0; t < series.size(); ++t) {
    out << fmt::format("{},{},{}\n", format_date(series.dates[t]), series.close[t], series.volume[t]);
  }
}

void write_cash_csv(const std::filesystem::path& path, const AlignedPanel& panel) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << "date,annual_yield\n";
  for (std::size_t t = 0; t < panel.num_dates(); ++t) {
    out << fmt::format("{},{}\n", format_date(panel.dates()[t]), panel.cash_rate()(static_cast<Eigen::Index>(t)) * 252.0 * 100.0);
  }
}

void SynthConfig::validate() const {
  if (n_assets < 1) throw ConfigError("synthetic: n_assets must be >= 1");
  if (n_days < 2) throw ConfigError("synthetic: n_days must be >= 2");
  if (epsilon < 0.0 || epsilon > 1.0) throw ConfigError("synthetic: epsilon must lie in [0,1]");
  for (const auto& row : transition) {
    if (row[0] < 0.0 || row[1] < 0.0 || std::abs(row[0] + row[1] - 1.0) > 1e-9) {
      throw ConfigError("synthetic: transition matrix rows must be nonnegative and sum to 1");
    }
  }
  for (double v : volatility) {
    if (v < 0.0) throw ConfigError("synthetic: volatility must be nonnegative");
  }
  for (double d : drift) {
    if (d <= -1.0) throw ConfigError("synthetic: drift must exceed -1");
  }
  if (!(initial_price > 0.0) || !(mean_dollar_volume > 0.0) || volume_log_sd < 0.0) {
    throw ConfigError("synthetic: price and volume settings must be positive");
  }
  parse_date(start_date);
}

RegimeClass contrarian_label(double drift) {
  if (drift < 0.0) return RegimeClass::Bullish;
  if (drift > 0.0) return RegimeClass::Bearish;
  return RegimeClass::Other;
}

namespace {

RegimeSignal draw_signal(RegimeClass c, double a, double b) {
  RegimeSignal s;
  s.predicted = c;
  const double active = 0.7 + 0.3 * a;
  switch (c) {
    case RegimeClass::Bullish:
      s.p_bull = active;
      s.p_bear = (1.0 - active) * b;
      break;
    case RegimeClass::Bearish:
      s.p_bear = active;
      s.p_bull = (1.0 - active) * b;
      break;
    case RegimeClass::Other:
      s.p_bull = 0.15 * a;
      s.p_bear = 0.15 * b;
      break;
  }
  return s;
}

}  // namespace

SyntheticMarket generate_synthetic(const SynthConfig& config, std::uint64_t seed) {
  config.validate();
  const auto N = static_cast<std::size_t>(config.n_assets);
  const auto T = static_cast<std::size_t>(config.n_days);

  // Independent streams keep the price path identical across signal-noise levels.
  std::seed_seq price_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 1u};
  std::seed_seq signal_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 2u};
  std::mt19937_64 price_rng(price_seq);
  std::mt19937_64 signal_rng(signal_seq);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<Date> dates;
  Date d = parse_date(config.start_date);
  if (!is_weekday(d)) d = next_business_day(d);
  for (std::size_t t = 0; t < T; ++t) {
    dates.push_back(d);
    d = next_business_day(d);
  }

  const double p01 = config.transition[0][1];
  const double p10 = config.transition[1][0];
  const double stationary0 = (p01 + p10) > 0.0 ? p10 / (p01 + p10) : 1.0;

  // One extra regime step so the last date still has a next-day label.
  std::vector<std::vector<int>> regimes(T + 1, std::vector<int>(N, 0));
  Eigen::MatrixXd prices(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(N));
  Eigen::MatrixXd volume(prices.rows(), prices.cols());
  for (std::size_t i = 0; i < N; ++i) {
    regimes[0][i] = unif(price_rng) < stationary0 ? 0 : 1;
    for (std::size_t t = 1; t <= T; ++t) {
      const int prev = regimes[t - 1][i];
      regimes[t][i] = unif(price_rng) < config.transition[prev][0] ? 0 : 1;
    }
    const auto col = static_cast<Eigen::Index>(i);
    prices(0, col) = config.initial_price;
    for (std::size_t t = 0; t < T; ++t) {
      const auto row = static_cast<Eigen::Index>(t);
      if (t > 0) {
        const int k = regimes[t][i];
        const double v = config.volatility[k];
        const double z = normal(price_rng);
        const double r = std::expm1(std::log1p(config.drift[k]) - 0.5 * v * v + v * z);
        prices(row, col) = prices(row - 1, col) * (1.0 + r);
      }
      const double zv = normal(price_rng);
      const double s = config.volume_log_sd;
      volume(row, col) = config.mean_dollar_volume * std::exp(s * zv - 0.5 * s * s);
    }
  }

  std::vector<std::string> assets;
  for (std::size_t i = 0; i < N; ++i) assets.push_back(fmt::format("{}{}", config.asset_prefix, i + 1));
  Eigen::VectorXd cash = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(T), config.annual_cash_yield / 100.0 / 252.0);

  SignalPanel signals(assets, dates);
  SignalPanel oracle(assets, dates);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < N; ++i) {
      const double u_flip = unif(signal_rng);
      const auto random_class = static_cast<RegimeClass>(std::min(2, static_cast<int>(unif(signal_rng) * 3.0)));
      const double a = unif(signal_rng);
      const double b = unif(signal_rng);
      const RegimeClass truth = contrarian_label(config.drift[regimes[t + 1][i]]);
      const RegimeClass emitted = u_flip < config.epsilon ? random_class : truth;
      signals.at(t, i) = draw_signal(emitted, a, b);
      oracle.at(t, i) = draw_signal(truth, a, b);
    }
  }
  regimes.pop_back();

  SyntheticMarket out;
  out.panel = AlignedPanel(std::move(assets), std::move(dates), std::move(prices), std::move(volume), std::move(cash));
  out.signals = std::move(signals);
  out.oracle_signals = std::move(oracle);
  out.regimes = std::move(regimes);
  return out;
}

}  // namespace mpo
