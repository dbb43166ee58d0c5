#include "mpo/estimators.hpp"

#include <limits>
#include <string>

#include "mpo/error.hpp"

namespace mpo {

EmaState ema_update(EmaState state, double x) {
  if (!state.seeded) {
    state.current = x;
    state.seeded = true;
    return state;
  }
  const double alpha = state.alpha();
  state.current = x * alpha + state.current * (1.0 - alpha);
  return state;
}

double estimate_return(const RegimeSignal& signal, double ema_r) {
  switch (signal.predicted) {
    case RegimeClass::Bullish:
      return -signal.p_bull * ema_r;
    case RegimeClass::Bearish:
      return signal.p_bear * ema_r;
    case RegimeClass::Other:
      return ema_r;
  }
  return ema_r;
}

KalmanState make_kalman(const KalmanParams& params) {
  if (!(params.q > 0.0) || !(params.r > 0.0) || !(params.initial_variance > 0.0)) {
    throw ConfigError("kalman: q, r and initial variance must be positive");
  }
  return {params.initial_level, params.initial_variance, params.q, params.r};
}

KalmanStep kalman_boost(const KalmanState& state, double raw, double realized_prev, double raw_prev) {
  KalmanStep out;
  out.boosted = raw + state.level;

  const double observation = realized_prev - raw_prev;
  const double prior_var = state.variance + state.q;
  const double gain = prior_var / (prior_var + state.r);
  out.state = state;
  out.state.level = state.level + gain * (observation - state.level);
  out.state.variance = (1.0 - gain) * prior_var;
  return out;
}

Eigen::MatrixXd return_ema(const AlignedPanel& panel, int window, kernels::Execution ex) {
  const auto T = static_cast<Eigen::Index>(panel.num_dates());
  const auto N = static_cast<Eigen::Index>(panel.num_assets());
  Eigen::MatrixXd out = Eigen::MatrixXd::Constant(T, N, std::numeric_limits<double>::quiet_NaN());
  if (T < 2) return out;
  const auto tail = panel.returns().bottomRows(T - 1);
  out.bottomRows(T - 1) =
      ex == kernels::Execution::Parallel ? kernels::ema_columns_parallel(tail, window) : kernels::ema_columns_serial(tail, window);
  return out;
}

Eigen::MatrixXd horizon_estimates(const AlignedPanel& panel, const SignalPanel& signals, std::size_t t, int horizon,
                                  int ema_window) {
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (t >= panel.num_dates() || t >= signals.num_dates()) throw WarmupError("decision index beyond the calendar");
  if (t < static_cast<std::size_t>(horizon + ema_window)) {
    throw WarmupError("need at least " + std::to_string(horizon + ema_window) + " dates of history before " +
                      format_date(panel.dates()[t]));
  }
  // Only rows strictly before t enter the EMA.
  const auto ema = return_ema(panel.truncate(t), ema_window, kernels::Execution::Serial);
  const auto N = panel.num_assets();
  Eigen::MatrixXd out(horizon, static_cast<Eigen::Index>(N));
  for (int k = 1; k <= horizon; ++k) {
    const auto row = ema_lag_index(t, k, horizon);
    for (std::size_t i = 0; i < N; ++i) {
      out(k - 1, static_cast<Eigen::Index>(i)) = estimate_return(signals.at(t, i), ema(row, static_cast<Eigen::Index>(i)));
    }
  }
  return out;
}

Eigen::MatrixXd rolling_covariance(const AlignedPanel& panel, std::size_t t, int window, double ridge,
                                   kernels::Execution ex) {
  if (window < 2) throw ConfigError("covariance window must be >= 2");
  if (t > panel.num_dates() || t < static_cast<std::size_t>(window) + 1) {
    throw WarmupError("need " + std::to_string(window) + " daily returns before the decision date");
  }
  const auto N = static_cast<Eigen::Index>(panel.num_assets());
  const auto block = panel.returns().middleRows(static_cast<Eigen::Index>(t) - window, window);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(N + 1, N + 1);
  out.topLeftCorner(N, N) = kernels::covariance(block, ex);
  out.topLeftCorner(N, N).diagonal().array() += ridge;
  return out;
}

CostSnapshots::CostSnapshots(const AlignedPanel& panel, int window, kernels::Execution ex) {
  const auto T = static_cast<Eigen::Index>(panel.num_dates());
  const auto N = static_cast<Eigen::Index>(panel.num_assets());
  ewm_sigma_ = Eigen::MatrixXd::Constant(T, N, std::numeric_limits<double>::quiet_NaN());
  if (T >= 2) {
    const auto tail = panel.returns().bottomRows(T - 1);
    ewm_sigma_.bottomRows(T - 1) = ex == kernels::Execution::Parallel ? kernels::ewm_std_columns_parallel(tail, window)
                                                                      : kernels::ewm_std_columns_serial(tail, window);
  }
  ewm_volume_ = ex == kernels::Execution::Parallel ? kernels::ema_columns_parallel(panel.dollar_volume(), window)
                                                   : kernels::ema_columns_serial(panel.dollar_volume(), window);
}

Eigen::VectorXd CostSnapshots::sigma_before(std::size_t t) const {
  if (t < 2 || t > static_cast<std::size_t>(ewm_sigma_.rows())) throw WarmupError("no volatility history before decision");
  return ewm_sigma_.row(static_cast<Eigen::Index>(t) - 1).transpose();
}

Eigen::VectorXd CostSnapshots::volume_before(std::size_t t) const {
  if (t < 1 || t > static_cast<std::size_t>(ewm_volume_.rows())) throw WarmupError("no volume history before decision");
  return ewm_volume_.row(static_cast<Eigen::Index>(t) - 1).transpose();
}

EstimatorPipeline::EstimatorPipeline(const AlignedPanel& panel, const SignalPanel& signals, int horizon,
                                     EstimatorConfig config)
    : panel_(&panel),
      signals_(&signals),
      horizon_(horizon),
      config_(config),
      ema_r_(return_ema(panel, config.ema_window, config.execution)),
      costs_(panel, config.ema_window, config.execution),
      kalman_(panel.num_assets(), make_kalman(config.kalman)) {
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (config.ema_window < 1) throw ConfigError("ema window must be >= 1");
  if (signals.num_assets() != panel.num_assets() || signals.num_dates() != panel.num_dates()) {
    throw ValidationError("signal panel does not match the price panel");
  }
}

std::size_t EstimatorPipeline::required_history(int horizon, const EstimatorConfig& config) {
  return static_cast<std::size_t>(config.cov_window + horizon + config.ema_window);
}

double EstimatorPipeline::raw_estimate(std::size_t decision, std::size_t asset, int step) const {
  const auto row = ema_lag_index(decision, step, horizon_);
  return estimate_return(signals_->at(decision, asset), ema_r_(row, static_cast<Eigen::Index>(asset)));
}

EstimateSet EstimatorPipeline::next(std::size_t t) {
  if (static_cast<std::ptrdiff_t>(t) <= last_t_) throw ConfigError("estimator pipeline must advance forward in time");
  if (t >= panel_->num_dates()) throw WarmupError("decision index beyond the calendar");
  if (t < required_history(horizon_, config_)) {
    throw WarmupError("decision on " + format_date(panel_->dates()[t]) + " needs " +
                      std::to_string(required_history(horizon_, config_)) + " dates of history");
  }
  last_t_ = static_cast<std::ptrdiff_t>(t);

  const auto N = panel_->num_assets();
  const auto n = static_cast<Eigen::Index>(N);
  EstimateSet out;
  out.date = panel_->dates()[t];
  out.index = t;
  out.raw.resize(horizon_, n + 1);
  out.boosted.resize(horizon_, n + 1);
  const double rf = panel_->cash_rate()(static_cast<Eigen::Index>(t) - 1);

  for (std::size_t i = 0; i < N; ++i) {
    // Yesterday's realised return against the one-step estimate made for it.
    const double realized_prev = panel_->returns()(static_cast<Eigen::Index>(t) - 1, static_cast<Eigen::Index>(i));
    const double raw_prev = raw_estimate(t - 2, i, 1);
    double level_before = kalman_[i].level;
    for (int k = 1; k <= horizon_; ++k) {
      const double raw = raw_estimate(t, i, k);
      out.raw(k - 1, static_cast<Eigen::Index>(i)) = raw;
      out.boosted(k - 1, static_cast<Eigen::Index>(i)) = raw + level_before;
    }
    kalman_[i] = kalman_boost(kalman_[i], out.raw(0, static_cast<Eigen::Index>(i)), realized_prev, raw_prev).state;
  }
  out.raw.col(n).setConstant(rf);
  out.boosted.col(n).setConstant(rf);

  out.covariance = rolling_covariance(*panel_, t, config_.cov_window, config_.ridge, config_.execution);
  out.ewm_sigma = costs_.sigma_before(t);
  out.ewm_volume = costs_.volume_before(t);
  return out;
}

}  // namespace mpo
