#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mpo/market_data.hpp"

namespace mpo {

/// Upstream regime prediction for the next day. The labels keep the upstream
/// model's naming; downstream code interprets them contrarily (Bullish -> sell).
enum class RegimeClass { Bullish, Bearish, Other };

std::string_view to_string(RegimeClass c);
/// Case-insensitive BULLISH / BEARISH / OTHER.
RegimeClass parse_regime(std::string_view text);

struct RegimeSignal {
  RegimeClass predicted = RegimeClass::Other;
  double p_bull = 0.0;
  double p_bear = 0.0;

  friend bool operator==(const RegimeSignal&, const RegimeSignal&) = default;
};

/// Signals for every risky asset on every date of an AlignedPanel calendar.
class SignalPanel {
 public:
  SignalPanel() = default;
  SignalPanel(std::vector<std::string> assets, std::vector<Date> dates);

  const RegimeSignal& at(std::size_t t, std::size_t asset) const { return cells_[t * assets_.size() + asset]; }
  RegimeSignal& at(std::size_t t, std::size_t asset) { return cells_[t * assets_.size() + asset]; }

  const std::vector<std::string>& assets() const { return assets_; }
  const std::vector<Date>& dates() const { return dates_; }
  std::size_t num_assets() const { return assets_.size(); }
  std::size_t num_dates() const { return dates_.size(); }

  /// Cells that were not present in the source file and received the Other fill.
  std::size_t filled_cells() const { return filled_; }
  void set_filled_cells(std::size_t n) { filled_ = n; }

  SignalPanel select(std::span<const std::string> keep) const;
  SignalPanel truncate(std::size_t end) const;

  friend bool operator==(const SignalPanel&, const SignalPanel&) = default;

 private:
  std::vector<std::string> assets_;
  std::vector<Date> dates_;
  std::vector<RegimeSignal> cells_;
  std::size_t filled_ = 0;
};

/// Reads `date,asset,predicted,p_bull,p_bear` onto the panel's calendar.
/// Rows dated outside the calendar are ignored; missing cells become Other with
/// zero probabilities.
SignalPanel load_signals(const std::filesystem::path& path, const AlignedPanel& panel);

void write_signals_csv(const std::filesystem::path& path, const SignalPanel& signals);
void write_price_csv(const std::filesystem::path& path, const PriceSeries& series);
void write_cash_csv(const std::filesystem::path& path, const AlignedPanel& panel);

/// Two-state regime-switching market with per-asset Markov chains.
struct SynthConfig {
  int n_assets = 5;
  int n_days = 1300;
  std::string start_date = "2015-01-01";
  std::string asset_prefix = "asset";
  /// Daily simple-return drift and daily volatility for regime 0 and regime 1.
  std::array<double, 2> drift{0.003, -0.03};
  std::array<double, 2> volatility{0.006, 0.02};
  /// transition[a][b] = P(regime b tomorrow | regime a today).
  std::array<std::array<double, 2>, 2> transition{{{0.95, 0.05}, {0.70, 0.30}}};
  /// Probability that an emitted signal is replaced by a uniformly random class.
  double epsilon = 0.0;
  double initial_price = 100.0;
  double mean_dollar_volume = 5.0e7;
  double volume_log_sd = 0.3;
  /// Percent per year, as in the cash CSV.
  double annual_cash_yield = 2.0;

  /// Throws ConfigError for malformed settings.
  void validate() const;
};

struct SyntheticMarket {
  AlignedPanel panel;
  SignalPanel signals;
  /// regimes[t][i]: regime governing asset i's return on date t.
  std::vector<std::vector<int>> regimes;
  /// Noise-free signals (epsilon = 0) for the same path.
  SignalPanel oracle_signals;
};

/// Class a perfect contrarian predictor emits for a regime with this drift:
/// falling -> Bullish, rising -> Bearish, flat -> Other.
RegimeClass contrarian_label(double drift);

/// Pure function of (config, seed). The signal dated t is derived from the regime
/// of date t + 1.
SyntheticMarket generate_synthetic(const SynthConfig& config, std::uint64_t seed);

}  // namespace mpo
