#pragma once

#include <Eigen/Dense>
#include <span>
#include <string_view>
#include <vector>

#include "mpo/cost_model.hpp"
#include "mpo/date.hpp"
#include "mpo/estimators.hpp"

namespace mpo {

struct MpcConfig {
  int horizon = 2;
  double gamma_sigma = 0.1262;  ///< risk aversion
  double gamma_trade = 4.6670;  ///< trading penalty
  double min_weight = 0.01;     ///< floor on every risky weight; cash floor is 0
  double tolerance = 1e-8;      ///< certified objective gap, relative to max(1, |objective|)
  int max_iterations = 200;

  /// Throws ConfigError on H < 1, negative gammas or nonpositive tolerance.
  void validate() const;
};

enum class SolverStatus { Optimal, MaxIterations, Infeasible };
std::string_view to_string(SolverStatus s);

/// One multi-period allocation problem: maximise over w_1..w_H
///
///     sum_k  r_k'w_k - gamma_sigma w_k' S w_k - gamma_trade sum_i TC_i(w_k,i - w_{k-1},i)
///
/// subject to 1'w_k = 1, risky w_k,i >= min_weight, cash >= 0, with w_0 the
/// current portfolio. Weight vectors have N+1 entries, cash last.
struct MpcProblem {
  Eigen::MatrixXd returns;     ///< horizon x (N+1)
  Eigen::MatrixXd covariance;  ///< (N+1) x (N+1)
  CostCoefficients costs;      ///< N risky assets

  int horizon() const { return static_cast<int>(returns.rows()); }
  Eigen::Index num_risky() const { return returns.cols() - 1; }
};

/// Builds the problem from boosted estimates. Covariance and cost snapshots are
/// shared by every step of the horizon.
MpcProblem make_problem(const EstimateSet& estimates, double spread, double portfolio_value);

struct AllocationPlan {
  Date date{};
  std::vector<Eigen::VectorXd> weights;  ///< one vector per horizon step
  double objective = 0.0;                ///< true objective of `weights`
  double gap_bound = 0.0;                ///< certified bound on optimum - objective
  SolverStatus status = SolverStatus::Infeasible;
  int iterations = 0;
};

/// Objective value of a weight sequence chained from `w_current`.
double plan_objective(const MpcProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& w_current,
                      std::span<const Eigen::VectorXd> weights, const MpcConfig& config);

/// Primal-dual interior-point solve. The |dw|^{3/2} cost is handled by splitting
/// each trade into buy and sell parts, dw = p - m with p, m >= 0, which makes
/// the objective smooth and convex on the interior. Returns Infeasible when the
/// risky floors exceed the budget and MaxIterations with the last (feasible)
/// iterate if the gap is not certified in time.
AllocationPlan solve(const MpcProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& w_current,
                     const MpcConfig& config);

AllocationPlan solve(const EstimateSet& estimates, const Eigen::Ref<const Eigen::VectorXd>& w_current,
                     const MpcConfig& config, double spread, double portfolio_value);

/// Exhaustive search over the grid {k * grid_step} of the feasible simplex
/// product. Branch-and-bound pruning only discards points whose upper bound
/// cannot beat the incumbent, so the result is the exact grid argmax.
/// Throws GuardError for N > 4 risky assets, H > 2, or a step that does not divide 1.
AllocationPlan brute_force_oracle(const MpcProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& w_current,
                                  const MpcConfig& config, double grid_step);

/// Upper bound on how far the best grid point can fall below the continuous
/// optimum: a Lipschitz bound on the objective times the worst-case l1 distance
/// from any feasible point to the grid.
double grid_resolution_bound(const MpcProblem& problem, const MpcConfig& config, double grid_step);

}  // namespace mpo
