#pragma once

#include <Eigen/Dense>

namespace mpo {

/// Inputs of the transaction-cost model for one rebalance. Vectors cover the
/// N risky assets only; cash trades are free.
struct CostParams {
  double spread = 0.002;  ///< bid-ask spread b, as a fraction of value traded
  Eigen::VectorXd ewm_sigma;
  Eigen::VectorXd ewm_volume;
  double portfolio_value = 1.0;
};

/// Per-asset cost of trading `delta_w` (fractions of portfolio value):
///
///     cost_i = (b/2)|dw_i| + sigma_i |dw_i|^{3/2} / sqrt(volume_i / V)
///
/// The result is also a fraction of portfolio value. Throws IlliquidityError
/// when an asset with nonpositive volume is traded.
Eigen::VectorXd transaction_cost(const Eigen::Ref<const Eigen::VectorXd>& delta_w, const CostParams& params);

double total_transaction_cost(const Eigen::Ref<const Eigen::VectorXd>& delta_w, const CostParams& params);

/// cost_i = linear_i*|dw| + power_i*|dw|^{3/2}; the form the optimizer consumes.
struct CostCoefficients {
  Eigen::VectorXd linear;
  Eigen::VectorXd power;

  double cost(Eigen::Index i, double delta) const;
};

/// Throws IlliquidityError if any volume is nonpositive.
CostCoefficients cost_coefficients(const CostParams& params);

}  // namespace mpo
