#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mpo/market_data.hpp"

namespace gen {

inline std::vector<mpo::Date> business_days(Eigen::Index n, const char* first = "2010-01-04") {
  std::vector<mpo::Date> dates;
  mpo::Date d = mpo::parse_date(first);
  for (Eigen::Index t = 0; t < n; ++t, d = mpo::next_business_day(d)) dates.push_back(d);
  return dates;
}

/// Panel over consecutive business days with assets a0, a1, ...
inline mpo::AlignedPanel panel_from_prices(const Eigen::MatrixXd& prices, double volume = 1e7, double rate = 1e-4) {
  const auto T = prices.rows();
  const auto N = prices.cols();
  std::vector<std::string> assets;
  for (Eigen::Index i = 0; i < N; ++i) assets.push_back("a" + std::to_string(i));
  return {assets, business_days(T), prices, Eigen::MatrixXd::Constant(T, N, volume), Eigen::VectorXd::Constant(T, rate)};
}

/// Price path starting at 100 that realises `returns` (row 0 ignored).
inline mpo::AlignedPanel panel_from_returns(const Eigen::MatrixXd& r, double volume = 1e7, double rate = 1e-4) {
  Eigen::MatrixXd prices(r.rows(), r.cols());
  prices.row(0).setConstant(100.0);
  for (Eigen::Index t = 1; t < r.rows(); ++t) prices.row(t) = prices.row(t - 1).array() * (1.0 + r.row(t).array());
  return panel_from_prices(prices, volume, rate);
}

}  // namespace gen
