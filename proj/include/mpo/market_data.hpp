#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpo/date.hpp"

namespace mpo {

/// One asset's daily closes and traded dollar volume, sorted by date.
struct PriceSeries {
  std::string asset;
  std::vector<Date> dates;
  std::vector<double> close;
  std::vector<double> volume;

  std::size_t size() const { return dates.size(); }

  /// Throws ValidationError unless dates strictly increase, close > 0, volume >= 0.
  void validate() const;
};

/// Daily risk-free return of the cash component.
struct RateSeries {
  std::vector<Date> dates;
  std::vector<double> daily_rate;

  std::size_t size() const { return dates.size(); }
};

/// Reads `date,close,volume`. Rows may arrive in any order; the result is sorted.
/// `asset` defaults to the file stem.
PriceSeries load_price_csv(const std::filesystem::path& path, std::string asset = {});

/// Reads `date,annual_yield` with the yield in percent; daily rate = yield / 100 / 252.
RateSeries load_cash_csv(const std::filesystem::path& path);

/// A constant daily rate on the given calendar.
RateSeries constant_rate(std::span<const Date> dates, double daily_rate);

/// Date-aligned panel of N risky assets plus cash.
///
/// Row t of `returns()` holds P[t]/P[t-1] - 1; row 0 has no predecessor and is NaN.
/// Cash is not a column of the matrices: its per-date return lives in `cash_rate()`,
/// and it is always the last component of any weight vector (index `num_assets()`).
class AlignedPanel {
 public:
  AlignedPanel() = default;
  AlignedPanel(std::vector<std::string> assets, std::vector<Date> dates, Eigen::MatrixXd prices,
               Eigen::MatrixXd dollar_volume, Eigen::VectorXd cash_rate, std::string cash_label = "cash");

  const std::vector<std::string>& assets() const { return assets_; }
  const std::string& cash_label() const { return cash_label_; }
  const std::vector<Date>& dates() const { return dates_; }
  const Eigen::MatrixXd& prices() const { return prices_; }
  const Eigen::MatrixXd& returns() const { return returns_; }
  const Eigen::MatrixXd& dollar_volume() const { return dollar_volume_; }
  const Eigen::VectorXd& cash_rate() const { return cash_rate_; }

  std::size_t num_assets() const { return assets_.size(); }
  std::size_t num_dates() const { return dates_.size(); }

  std::optional<std::size_t> index_of(Date d) const;
  /// First index whose date is >= d.
  std::optional<std::size_t> index_at_or_after(Date d) const;
  /// Last index whose date is <= d.
  std::optional<std::size_t> index_at_or_before(Date d) const;

  /// Panel restricted to the named risky assets, in the order given.
  AlignedPanel select(std::span<const std::string> keep) const;
  /// Panel with the named risky assets removed. Unknown names are a ValidationError.
  AlignedPanel exclude(std::span<const std::string> drop) const;
  /// Rows [0, end) only.
  AlignedPanel truncate(std::size_t end) const;

 private:
  std::vector<std::string> assets_;
  std::string cash_label_ = "cash";
  std::vector<Date> dates_;
  Eigen::MatrixXd prices_;
  Eigen::MatrixXd returns_;
  Eigen::MatrixXd dollar_volume_;
  Eigen::VectorXd cash_rate_;
};

/// Aligns the series onto a shared calendar.
///
/// The candidate calendar is the union of all series dates. A run of consecutive
/// candidate dates missing from one series is forward-filled (price carried,
/// volume 0) when it has at most `max_ffill` dates and lies between two observed
/// dates; otherwise every date of the run is dropped for all assets. Cash uses
/// the same rule. Throws AlignmentError if no date survives.
AlignedPanel align(std::span<const PriceSeries> series, const RateSeries& cash, int max_ffill = 5);

/// Splits a panel back into per-asset series and the cash rate series.
std::vector<PriceSeries> to_series(const AlignedPanel& panel);
RateSeries cash_series(const AlignedPanel& panel);

}  // namespace mpo
