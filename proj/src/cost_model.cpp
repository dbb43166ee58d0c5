#include "mpo/cost_model.hpp"

#include <cmath>
#include <string>

#include "mpo/error.hpp"

namespace mpo {

namespace {

void check_shapes(Eigen::Index n, const CostParams& params) {
  if (params.ewm_sigma.size() != n || params.ewm_volume.size() != n) {
    throw ValidationError("cost model: snapshot length does not match the trade vector");
  }
  if (params.spread < 0.0) throw ValidationError("cost model: spread must be nonnegative");
  if (!(params.portfolio_value > 0.0)) throw ValidationError("cost model: portfolio value must be positive");
}

}  // namespace

Eigen::VectorXd transaction_cost(const Eigen::Ref<const Eigen::VectorXd>& delta_w, const CostParams& params) {
  check_shapes(delta_w.size(), params);
  Eigen::VectorXd cost(delta_w.size());
  for (Eigen::Index i = 0; i < delta_w.size(); ++i) {
    const double a = std::abs(delta_w(i));
    if (a == 0.0) {
      cost(i) = 0.0;
      continue;
    }
    if (!(params.ewm_volume(i) > 0.0)) {
      throw IlliquidityError("cost model: asset " + std::to_string(i) + " has no traded volume");
    }
    const double participation = params.ewm_volume(i) / params.portfolio_value;
    cost(i) = 0.5 * params.spread * a + params.ewm_sigma(i) * a * std::sqrt(a) / std::sqrt(participation);
  }
  return cost;
}

double total_transaction_cost(const Eigen::Ref<const Eigen::VectorXd>& delta_w, const CostParams& params) {
  return transaction_cost(delta_w, params).sum();
}

double CostCoefficients::cost(Eigen::Index i, double delta) const {
  const double a = std::abs(delta);
  return linear(i) * a + power(i) * a * std::sqrt(a);
}

CostCoefficients cost_coefficients(const CostParams& params) {
  check_shapes(params.ewm_sigma.size(), params);
  const auto n = params.ewm_sigma.size();
  CostCoefficients c;
  c.linear = Eigen::VectorXd::Constant(n, 0.5 * params.spread);
  c.power.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(params.ewm_volume(i) > 0.0)) {
      throw IlliquidityError("cost model: asset " + std::to_string(i) + " has no traded volume");
    }
    c.power(i) = params.ewm_sigma(i) / std::sqrt(params.ewm_volume(i) / params.portfolio_value);
  }
  return c;
}

}  // namespace mpo
