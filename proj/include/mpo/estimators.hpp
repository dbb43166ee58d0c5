#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "mpo/kernels.hpp"
#include "mpo/market_data.hpp"
#include "mpo/regime_signals.hpp"

namespace mpo {

/// Exponential moving average with smoothing factor 2/(window+1).
struct EmaState {
  int window = 10;
  double current = 0.0;
  bool seeded = false;

  double alpha() const { return 2.0 / (window + 1.0); }
};

/// current = x*alpha + current*(1-alpha); the first observation seeds the state.
EmaState ema_update(EmaState state, double x);

/// Regime-transformed return estimate from the lagged EMA of realised returns:
/// Bullish -> -p_bull*ema, Bearish -> p_bear*ema, Other -> ema.
double estimate_return(const RegimeSignal& signal, double ema_r);

struct KalmanParams {
  double q = 1e-6;  ///< process-noise variance of the hidden bias
  double r = 1e-4;  ///< observation-noise variance
  double initial_level = 0.0;
  double initial_variance = 1.0;
};

/// Scalar local-level filter tracking the bias between realised and estimated returns.
struct KalmanState {
  double level = 0.0;
  double variance = 1.0;
  double q = 1e-6;
  double r = 1e-4;
};

KalmanState make_kalman(const KalmanParams& params);

struct KalmanStep {
  KalmanState state;  ///< after incorporating the observation
  double boosted = 0.0;
};

/// Boosts `raw` by the filter level from before this call, then runs one
/// predict/update on the observation realized_prev - raw_prev.
KalmanStep kalman_boost(const KalmanState& state, double raw, double realized_prev, double raw_prev);

struct EstimatorConfig {
  int ema_window = 10;
  int cov_window = 504;
  double ridge = 1e-8;
  KalmanParams kalman;
  kernels::Execution execution = kernels::Execution::Parallel;
};

/// Everything the allocation problem needs at one decision date.
///
/// Weight-indexed quantities have N+1 entries with cash last.
struct EstimateSet {
  Date date;
  std::size_t index = 0;
  Eigen::MatrixXd raw;         ///< horizon x (N+1)
  Eigen::MatrixXd boosted;     ///< horizon x (N+1)
  Eigen::MatrixXd covariance;  ///< (N+1) x (N+1), cash row and column zero
  Eigen::VectorXd ewm_sigma;   ///< N
  Eigen::VectorXd ewm_volume;  ///< N

  int horizon() const { return static_cast<int>(raw.rows()); }
  std::size_t num_assets() const { return static_cast<std::size_t>(ewm_sigma.size()); }
};

/// Row of the return-EMA used for horizon step k (1-based) of a decision at t.
/// Target date t+k reads the EMA through t+k-H-1, so every step uses only
/// returns dated strictly before t.
inline std::ptrdiff_t ema_lag_index(std::size_t t, int step, int horizon) {
  return static_cast<std::ptrdiff_t>(t) + step - horizon - 1;
}

/// EMA of each asset's realised daily returns; row s covers returns[1..s], row 0 is NaN.
Eigen::MatrixXd return_ema(const AlignedPanel& panel, int window,
                           kernels::Execution ex = kernels::Execution::Parallel);

/// Raw per-asset estimates (horizon x N) for target dates t+1..t+H, using the
/// signal dated t. Throws WarmupError with fewer than H + ema_window dates before t.
Eigen::MatrixXd horizon_estimates(const AlignedPanel& panel, const SignalPanel& signals, std::size_t t, int horizon,
                                  int ema_window = 10);

/// Sample covariance of the `window` daily returns dated t-window..t-1, plus
/// `ridge` on the risky diagonal; (N+1) x (N+1) with zero cash row/column.
Eigen::MatrixXd rolling_covariance(const AlignedPanel& panel, std::size_t t, int window = 504, double ridge = 1e-8,
                                   kernels::Execution ex = kernels::Execution::Parallel);

/// Lagged cost-model snapshots: 10-day EWM volatility of returns and EMA of
/// dollar volume, both read at row t-1 for a decision at t.
class CostSnapshots {
 public:
  CostSnapshots() = default;
  CostSnapshots(const AlignedPanel& panel, int window, kernels::Execution ex = kernels::Execution::Parallel);

  Eigen::VectorXd sigma_before(std::size_t t) const;
  Eigen::VectorXd volume_before(std::size_t t) const;

 private:
  Eigen::MatrixXd ewm_sigma_;   // row s covers returns through s
  Eigen::MatrixXd ewm_volume_;  // row s covers volume through s
};

/// Stateful per-backtest estimator. Kalman states thread through successive
/// calls, so `next` must see strictly increasing decision indices.
class EstimatorPipeline {
 public:
  EstimatorPipeline(const AlignedPanel& panel, const SignalPanel& signals, int horizon, EstimatorConfig config = {});

  /// Minimum number of dates before the first decision.
  static std::size_t required_history(int horizon, const EstimatorConfig& config);

  EstimateSet next(std::size_t t);

  const KalmanState& kalman(std::size_t asset) const { return kalman_[asset]; }
  int horizon() const { return horizon_; }

 private:
  double raw_estimate(std::size_t decision, std::size_t asset, int step) const;

  const AlignedPanel* panel_;
  const SignalPanel* signals_;
  int horizon_;
  EstimatorConfig config_;
  Eigen::MatrixXd ema_r_;
  CostSnapshots costs_;
  std::vector<KalmanState> kalman_;
  std::ptrdiff_t last_t_ = -1;
};

}  // namespace mpo
