#include "mpo/market_data.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "csv.hpp"
#include "mpo/error.hpp"

namespace mpo {

void PriceSeries::validate() const {
  if (close.size() != dates.size() || volume.size() != dates.size()) {
    throw ValidationError(asset + ": column lengths differ");
  }
  for (std::size_t i = 0; i < dates.size(); ++i) {
    if (i > 0 && !(dates[i - 1] < dates[i])) {
      throw ValidationError(asset + ": dates not strictly increasing at " + format_date(dates[i]));
    }
    if (!(close[i] > 0.0)) {
      throw ValidationError(asset + ": non-positive close on " + format_date(dates[i]));
    }
    if (!(volume[i] >= 0.0)) {
      throw ValidationError(asset + ": negative volume on " + format_date(dates[i]));
    }
  }
}

PriceSeries load_price_csv(const std::filesystem::path& path, std::string asset) {
  const auto table = csv::read(path);
  const auto c_date = table.column("date", path);
  const auto c_close = table.column("close", path);
  const auto c_volume = table.column("volume", path);

  struct Obs {
    Date date;
    double close;
    double volume;
  };
  std::vector<Obs> obs;
  obs.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    const auto where = path.string() + ":" + std::to_string(row.line);
    Date d;
    try {
      d = parse_date(row.fields[c_date]);
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    }
    const double close = csv::parse_double(row.fields[c_close], path, row.line);
    const double volume = csv::parse_double(row.fields[c_volume], path, row.line);
    if (!(close > 0.0)) throw ValidationError(where + ": close must be positive, got " + row.fields[c_close]);
    if (volume < 0.0) throw ValidationError(where + ": volume must be nonnegative, got " + row.fields[c_volume]);
    obs.push_back({d, close, volume});
  }
  std::stable_sort(obs.begin(), obs.end(), [](const Obs& a, const Obs& b) { return a.date < b.date; });

  PriceSeries out;
  out.asset = asset.empty() ? path.stem().string() : std::move(asset);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (i > 0 && obs[i].date == obs[i - 1].date) {
      throw ValidationError(path.string() + ": duplicate date " + format_date(obs[i].date));
    }
    out.dates.push_back(obs[i].date);
    out.close.push_back(obs[i].close);
    out.volume.push_back(obs[i].volume);
  }
  if (out.dates.empty()) throw ParseError(path.string() + ": no data rows");
  return out;
}

RateSeries load_cash_csv(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  const auto c_date = table.column("date", path);
  const auto c_yield = table.column("annual_yield", path);
  std::vector<std::pair<Date, double>> obs;
  for (const auto& row : table.rows) {
    Date d;
    try {
      d = parse_date(row.fields[c_date]);
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ":" + std::to_string(row.line) + ": " + e.what());
    }
    const double yield = csv::parse_double(row.fields[c_yield], path, row.line);
    obs.emplace_back(d, yield / 100.0 / 252.0);
  }
  std::stable_sort(obs.begin(), obs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  RateSeries out;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (i > 0 && obs[i].first == obs[i - 1].first) {
      throw ValidationError(path.string() + ": duplicate date " + format_date(obs[i].first));
    }
    out.dates.push_back(obs[i].first);
    out.daily_rate.push_back(obs[i].second);
  }
  return out;
}

RateSeries constant_rate(std::span<const Date> dates, double daily_rate) {
  RateSeries out;
  out.dates.assign(dates.begin(), dates.end());
  out.daily_rate.assign(dates.size(), daily_rate);
  return out;
}

AlignedPanel::AlignedPanel(std::vector<std::string> assets, std::vector<Date> dates, Eigen::MatrixXd prices,
                           Eigen::MatrixXd dollar_volume, Eigen::VectorXd cash_rate, std::string cash_label)
    : assets_(std::move(assets)),
      cash_label_(std::move(cash_label)),
      dates_(std::move(dates)),
      prices_(std::move(prices)),
      dollar_volume_(std::move(dollar_volume)),
      cash_rate_(std::move(cash_rate)) {
  const auto T = static_cast<Eigen::Index>(dates_.size());
  const auto N = static_cast<Eigen::Index>(assets_.size());
  if (prices_.rows() != T || prices_.cols() != N || dollar_volume_.rows() != T || dollar_volume_.cols() != N ||
      cash_rate_.size() != T) {
    throw ValidationError("panel dimensions do not match the calendar and asset list");
  }
  for (Eigen::Index t = 1; t < T; ++t) {
    if (!(dates_[t - 1] < dates_[t])) throw ValidationError("panel dates not strictly increasing");
  }
  if (!(prices_.array() > 0.0).all()) throw ValidationError("panel prices must be positive");
  if (!(dollar_volume_.array() >= 0.0).all()) throw ValidationError("panel volumes must be nonnegative");
  if (!cash_rate_.allFinite()) throw ValidationError("cash rate must be finite");

  returns_.resize(T, N);
  if (T > 0) returns_.row(0).setConstant(std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index t = 1; t < T; ++t) {
    for (Eigen::Index i = 0; i < N; ++i) returns_(t, i) = prices_(t, i) / prices_(t - 1, i) - 1.0;
  }
}

std::optional<std::size_t> AlignedPanel::index_of(Date d) const {
  const auto it = std::lower_bound(dates_.begin(), dates_.end(), d);
  if (it == dates_.end() || *it != d) return std::nullopt;
  return static_cast<std::size_t>(it - dates_.begin());
}

std::optional<std::size_t> AlignedPanel::index_at_or_after(Date d) const {
  const auto it = std::lower_bound(dates_.begin(), dates_.end(), d);
  if (it == dates_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - dates_.begin());
}

std::optional<std::size_t> AlignedPanel::index_at_or_before(Date d) const {
  const auto it = std::upper_bound(dates_.begin(), dates_.end(), d);
  if (it == dates_.begin()) return std::nullopt;
  return static_cast<std::size_t>(it - dates_.begin()) - 1;
}

AlignedPanel AlignedPanel::select(std::span<const std::string> keep) const {
  std::vector<Eigen::Index> cols;
  for (const auto& name : keep) {
    const auto it = std::find(assets_.begin(), assets_.end(), name);
    if (it == assets_.end()) throw ValidationError("unknown asset '" + name + "'");
    cols.push_back(it - assets_.begin());
  }
  Eigen::MatrixXd p(prices_.rows(), static_cast<Eigen::Index>(cols.size()));
  Eigen::MatrixXd v(p.rows(), p.cols());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    p.col(static_cast<Eigen::Index>(j)) = prices_.col(cols[j]);
    v.col(static_cast<Eigen::Index>(j)) = dollar_volume_.col(cols[j]);
  }
  return AlignedPanel({keep.begin(), keep.end()}, dates_, std::move(p), std::move(v), cash_rate_, cash_label_);
}

AlignedPanel AlignedPanel::exclude(std::span<const std::string> drop) const {
  for (const auto& name : drop) {
    if (std::find(assets_.begin(), assets_.end(), name) == assets_.end()) {
      throw ValidationError("cannot exclude unknown asset '" + name + "'");
    }
  }
  std::vector<std::string> keep;
  for (const auto& a : assets_) {
    if (std::find(drop.begin(), drop.end(), a) == drop.end()) keep.push_back(a);
  }
  if (keep.empty()) throw ValidationError("exclusion leaves no risky assets");
  return select(keep);
}

AlignedPanel AlignedPanel::truncate(std::size_t end) const {
  end = std::min(end, dates_.size());
  const auto n = static_cast<Eigen::Index>(end);
  return AlignedPanel(assets_, {dates_.begin(), dates_.begin() + static_cast<std::ptrdiff_t>(end)},
                      prices_.topRows(n), dollar_volume_.topRows(n), cash_rate_.head(n), cash_label_);
}

namespace {

// For each calendar position, the index into the source series supplying the value
// (observed or forward-filled), or npos when the position is unrecoverable.
std::vector<std::size_t> fill_map(const std::vector<Date>& calendar, const std::vector<Date>& source, int max_ffill) {
  constexpr auto npos = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> map(calendar.size(), npos);
  std::size_t j = 0;
  for (std::size_t u = 0; u < calendar.size(); ++u) {
    while (j < source.size() && source[j] < calendar[u]) ++j;
    if (j < source.size() && source[j] == calendar[u]) map[u] = j;
  }
  // Fill interior runs of missing positions that are short enough.
  std::size_t u = 0;
  while (u < calendar.size()) {
    if (map[u] != npos) {
      ++u;
      continue;
    }
    std::size_t end = u;
    while (end < calendar.size() && map[end] == npos) ++end;
    const bool interior = u > 0 && end < calendar.size();
    if (interior && end - u <= static_cast<std::size_t>(max_ffill)) {
      for (std::size_t k = u; k < end; ++k) map[k] = map[u - 1];
    }
    u = end;
  }
  return map;
}

}  // namespace

AlignedPanel align(std::span<const PriceSeries> series, const RateSeries& cash, int max_ffill) {
  if (series.empty()) throw AlignmentError("no price series to align");
  if (max_ffill < 0) throw AlignmentError("max_ffill must be nonnegative");
  for (const auto& s : series) s.validate();

  std::vector<Date> calendar;
  for (const auto& s : series) calendar.insert(calendar.end(), s.dates.begin(), s.dates.end());
  std::sort(calendar.begin(), calendar.end());
  calendar.erase(std::unique(calendar.begin(), calendar.end()), calendar.end());

  constexpr auto npos = std::numeric_limits<std::size_t>::max();
  std::vector<std::vector<std::size_t>> maps;
  maps.reserve(series.size());
  for (const auto& s : series) maps.push_back(fill_map(calendar, s.dates, max_ffill));
  const auto cash_map = fill_map(calendar, cash.dates, max_ffill);

  std::vector<std::size_t> keep;
  for (std::size_t u = 0; u < calendar.size(); ++u) {
    bool ok = cash_map[u] != npos;
    for (const auto& m : maps) ok = ok && m[u] != npos;
    if (ok) keep.push_back(u);
  }
  if (keep.empty()) throw AlignmentError("series share no recoverable dates");

  const auto T = static_cast<Eigen::Index>(keep.size());
  const auto N = static_cast<Eigen::Index>(series.size());
  Eigen::MatrixXd prices(T, N);
  Eigen::MatrixXd volume(T, N);
  Eigen::VectorXd rate(T);
  std::vector<Date> dates;
  std::vector<std::string> assets;
  for (const auto& s : series) assets.push_back(s.asset);
  for (Eigen::Index t = 0; t < T; ++t) {
    const auto u = keep[static_cast<std::size_t>(t)];
    dates.push_back(calendar[u]);
    for (Eigen::Index i = 0; i < N; ++i) {
      const auto& s = series[static_cast<std::size_t>(i)];
      const auto j = maps[static_cast<std::size_t>(i)][u];
      prices(t, i) = s.close[j];
      volume(t, i) = s.dates[j] == calendar[u] ? s.volume[j] : 0.0;
    }
    rate(t) = cash.daily_rate[cash_map[u]];
  }
  return AlignedPanel(std::move(assets), std::move(dates), std::move(prices), std::move(volume), std::move(rate));
}

std::vector<PriceSeries> to_series(const AlignedPanel& panel) {
  std::vector<PriceSeries> out;
  for (std::size_t i = 0; i < panel.num_assets(); ++i) {
    PriceSeries s;
    s.asset = panel.assets()[i];
    s.dates = panel.dates();
    const auto col = static_cast<Eigen::Index>(i);
    s.close.assign(panel.prices().col(col).data(), panel.prices().col(col).data() + panel.prices().rows());
    s.volume.assign(panel.dollar_volume().col(col).data(),
                    panel.dollar_volume().col(col).data() + panel.dollar_volume().rows());
    out.push_back(std::move(s));
  }
  return out;
}

RateSeries cash_series(const AlignedPanel& panel) {
  RateSeries r;
  r.dates = panel.dates();
  r.daily_rate.assign(panel.cash_rate().data(), panel.cash_rate().data() + panel.cash_rate().size());
  return r;
}

}  // namespace mpo
