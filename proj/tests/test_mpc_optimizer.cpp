#include <doctest.h>

#include <cmath>
#include <vector>

#include "generators.hpp"
#include "mpo/error.hpp"
#include "mpo/mpc_optimizer.hpp"

using mpo::AllocationPlan;
using mpo::MpcConfig;
using mpo::MpcProblem;
using mpo::SolverStatus;

namespace {

void require_feasible(const AllocationPlan& plan, const MpcConfig& cfg) {
  for (const auto& w : plan.weights) {
    CHECK(std::abs(w.sum() - 1.0) <= 1e-8);
    for (Eigen::Index i = 0; i + 1 < w.size(); ++i) CHECK(w(i) >= cfg.min_weight - 1e-9);
    CHECK(w(w.size() - 1) >= -1e-9);
  }
}

MpcConfig config_for(int horizon, double gs = 0.1262, double gt = 4.6670) {
  MpcConfig cfg;
  cfg.horizon = horizon;
  cfg.gamma_sigma = gs;
  cfg.gamma_trade = gt;
  return cfg;
}

}  // namespace

TEST_CASE("config validation") {
  MpcConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.horizon = 0;
  CHECK_THROWS_AS(cfg.validate(), mpo::ConfigError);
  cfg = {};
  cfg.gamma_sigma = -1.0;
  CHECK_THROWS_AS(cfg.validate(), mpo::ConfigError);
  cfg = {};
  cfg.tolerance = 0.0;
  CHECK_THROWS_AS(cfg.validate(), mpo::ConfigError);
}

TEST_CASE("floors exceeding the budget are infeasible") {
  gen::Rng rng(1);
  auto p = gen::problem(rng, 3, 2);
  auto cfg = config_for(2);
  cfg.min_weight = 0.4;
  const Eigen::VectorXd w0 = Eigen::VectorXd::Constant(4, 0.25);
  CHECK(mpo::solve(p, w0, cfg).status == SolverStatus::Infeasible);
  CHECK(mpo::brute_force_oracle(p, w0, cfg, 0.01).status == SolverStatus::Infeasible);
}

TEST_CASE("floors that exhaust the budget leave a single point") {
  gen::Rng rng(2);
  auto p = gen::problem(rng, 4, 2);
  auto cfg = config_for(2);
  cfg.min_weight = 0.25;
  const Eigen::VectorXd w0 = Eigen::VectorXd::Constant(5, 0.2);
  const auto plan = mpo::solve(p, w0, cfg);
  REQUIRE(plan.status == SolverStatus::Optimal);
  for (const auto& w : plan.weights) {
    CHECK(w.head(4).isApprox(Eigen::VectorXd::Constant(4, 0.25)));
    CHECK(std::abs(w(4)) < 1e-12);
  }
}

TEST_CASE("identical assets keep equal weights") {
  MpcProblem p;
  p.returns = Eigen::MatrixXd(2, 3);
  p.returns << 0.001, 0.001, 0.0001, 0.001, 0.001, 0.0001;
  p.covariance = Eigen::MatrixXd::Zero(3, 3);
  p.covariance.topLeftCorner(2, 2) = 1e-4 * Eigen::MatrixXd::Identity(2, 2);
  p.costs.linear = Eigen::VectorXd::Constant(2, 0.001);
  p.costs.power = Eigen::VectorXd::Constant(2, 3e-4);
  Eigen::VectorXd w0(3);
  w0 << 0.5, 0.5, 0.0;
  const auto cfg = config_for(2);
  const auto plan = mpo::solve(p, w0, cfg);
  REQUIRE(plan.status == SolverStatus::Optimal);
  for (const auto& w : plan.weights) CHECK(std::abs(w(0) - w(1)) < 1e-7);
}

TEST_CASE("a huge trading penalty freezes the portfolio") {
  gen::Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = gen::problem(rng, 3, 2);
    const auto w0 = gen::simplex_point(rng, 3, 0.01);
    const auto cfg = config_for(2, 0.1262, 1e9);
    const auto plan = mpo::solve(p, w0, cfg);
    REQUIRE(plan.status == SolverStatus::Optimal);
    for (const auto& w : plan.weights) CHECK((w - w0).cwiseAbs().maxCoeff() < 1e-4);
  }
}

TEST_CASE("solver matches the grid oracle on small instances") {
  gen::Rng rng(4);
  for (int trial = 0; trial < 8; ++trial) {
    const Eigen::Index n = 1 + trial % 3;
    const int h = 1 + trial % 2;
    const auto p = gen::problem(rng, n, h);
    const auto w0 = gen::simplex_point(rng, n, 0.01);
    const auto cfg = config_for(h);
    const auto plan = mpo::solve(p, w0, cfg);
    const auto oracle = mpo::brute_force_oracle(p, w0, cfg, 0.005);
    REQUIRE(plan.status == SolverStatus::Optimal);
    require_feasible(plan, cfg);
    const double bound = mpo::grid_resolution_bound(p, cfg, 0.005);
    CHECK(plan.objective >= oracle.objective - bound);
    // The grid is a subset of the feasible set, so the solver can only be better.
    CHECK(plan.objective >= oracle.objective - 1e-9);
    CHECK(oracle.objective == doctest::Approx(mpo::plan_objective(p, w0, oracle.weights, cfg)).epsilon(1e-12));
  }
}

TEST_CASE("oracle guards") {
  gen::Rng rng(5);
  const auto cfg3 = config_for(3);
  const auto p3 = gen::problem(rng, 2, 3);
  const Eigen::VectorXd w0 = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  CHECK_THROWS_AS(mpo::brute_force_oracle(p3, w0, cfg3, 0.01), mpo::GuardError);
  const auto p5 = gen::problem(rng, 5, 1);
  CHECK_THROWS_AS(mpo::brute_force_oracle(p5, Eigen::VectorXd::Constant(6, 1.0 / 6.0), config_for(1), 0.01),
                  mpo::GuardError);
  const auto p1 = gen::problem(rng, 2, 1);
  CHECK_THROWS_AS(mpo::brute_force_oracle(p1, w0, config_for(1), 0.003), mpo::GuardError);
}

TEST_CASE("oracle on one risky asset matches the closed-form maximiser") {
  // r x + rc (1-x) - gs s2 x^2, maximised at x = (r - rc) / (2 gs s2) clipped to [floor, 1].
  for (double r : {0.0002, 0.001, 0.004, -0.001}) {
    MpcProblem p;
    p.returns = Eigen::MatrixXd(1, 2);
    p.returns << r, 0.0001;
    p.covariance = Eigen::MatrixXd::Zero(2, 2);
    p.covariance(0, 0) = 1e-4;
    p.costs.linear = Eigen::VectorXd::Zero(1);
    p.costs.power = Eigen::VectorXd::Zero(1);
    const auto cfg = config_for(1, 2.0, 0.0);
    Eigen::VectorXd w0(2);
    w0 << 0.5, 0.5;
    const double x = std::clamp((r - 0.0001) / (2.0 * 2.0 * 1e-4), 0.01, 1.0);
    const auto oracle = mpo::brute_force_oracle(p, w0, cfg, 0.005);
    CHECK(std::abs(oracle.weights[0](0) - x) <= 0.005);
    const auto plan = mpo::solve(p, w0, cfg);
    Eigen::VectorXd best(2);
    best << x, 1.0 - x;
    const double optimum = mpo::plan_objective(p, w0, std::vector<Eigen::VectorXd>{best}, cfg);
    CHECK(plan.objective >= optimum - 1e-10);
    CHECK(std::abs(plan.weights[0](0) - x) <= 1e-4);
  }
}

TEST_CASE("linear objective puts the free mass on the best asset") {
  MpcProblem p;
  p.returns = Eigen::MatrixXd(1, 4);
  p.returns << 0.001, 0.003, 0.002, 0.0001;
  p.covariance = Eigen::MatrixXd::Zero(4, 4);
  p.costs.linear = Eigen::VectorXd::Constant(3, 0.001);
  p.costs.power = Eigen::VectorXd::Constant(3, 1e-4);
  const auto cfg = config_for(1, 0.0, 0.0);
  const Eigen::VectorXd w0 = Eigen::VectorXd::Constant(4, 0.25);
  const auto oracle = mpo::brute_force_oracle(p, w0, cfg, 0.01);
  Eigen::VectorXd expect(4);
  expect << 0.01, 0.98, 0.01, 0.0;
  CHECK((oracle.weights[0] - expect).cwiseAbs().maxCoeff() < 1e-12);
  const auto plan = mpo::solve(p, w0, cfg);
  CHECK((plan.weights[0] - expect).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("scaling returns and both penalties leaves the argmax unchanged") {
  gen::Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    auto p = gen::problem(rng, 4, 2);
    const auto w0 = gen::simplex_point(rng, 4, 0.01);
    auto cfg = config_for(2, rng.log_uniform(0.01, 100.0), rng.log_uniform(0.01, 10.0));
    const auto a = mpo::solve(p, w0, cfg);
    const double c = rng.log_uniform(0.1, 10.0);
    p.returns *= c;
    cfg.gamma_sigma *= c;
    cfg.gamma_trade *= c;
    const auto b = mpo::solve(p, w0, cfg);
    REQUIRE(a.status == SolverStatus::Optimal);
    REQUIRE(b.status == SolverStatus::Optimal);
    CHECK(b.objective == doctest::Approx(c * a.objective).epsilon(1e-6).scale(1e-9));
    CHECK((a.weights[0] - b.weights[0]).cwiseAbs().maxCoeff() < 1e-4);
  }
}

TEST_CASE("turnover falls and risk falls as the penalties grow") {
  gen::Rng rng(7);
  const std::vector<double> trade_grid{0.01, 0.1, 1.0, 10.0};
  const std::vector<double> risk_grid{0.01, 0.1, 1.0, 10.0, 100.0};
  std::vector<double> turnover(trade_grid.size(), 0.0);
  std::vector<double> risk(risk_grid.size(), 0.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = gen::problem(rng, 4, 2);
    const auto w0 = gen::simplex_point(rng, 4, 0.01);
    for (std::size_t g = 0; g < trade_grid.size(); ++g) {
      const auto plan = mpo::solve(p, w0, config_for(2, 0.1262, trade_grid[g]));
      turnover[g] += (plan.weights[0] - w0).head(4).cwiseAbs().sum();
    }
    for (std::size_t g = 0; g < risk_grid.size(); ++g) {
      const auto plan = mpo::solve(p, w0, config_for(2, risk_grid[g], 4.667));
      const auto& w = plan.weights[0];
      risk[g] += w.dot(p.covariance * w);
    }
  }
  for (std::size_t g = 1; g < turnover.size(); ++g) CHECK(turnover[g] <= turnover[g - 1] + 1e-12);
  for (std::size_t g = 1; g < risk.size(); ++g) CHECK(risk[g] <= risk[g - 1] + 1e-15);
}

TEST_CASE("every plan is feasible and certified") {
  gen::Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = rng.integer(1, 8);
    const int h = rng.integer(1, 4);
    const auto p = gen::problem(rng, n, h);
    const auto w0 = gen::simplex_point(rng, n, 0.01);
    const auto cfg = config_for(h, rng.log_uniform(1e-3, 1e3), rng.log_uniform(1e-4, 25.0));
    const auto plan = mpo::solve(p, w0, cfg);
    CHECK(plan.status == SolverStatus::Optimal);
    CHECK(plan.gap_bound <= cfg.tolerance * std::max(1.0, std::abs(plan.objective)) + 1e-15);
    REQUIRE(plan.weights.size() == static_cast<std::size_t>(h));
    require_feasible(plan, cfg);
  }
}

TEST_CASE("max iterations returns a feasible iterate") {
  gen::Rng rng(9);
  const auto p = gen::problem(rng, 3, 2);
  const auto w0 = gen::simplex_point(rng, 3, 0.01);
  auto cfg = config_for(2);
  cfg.max_iterations = 1;
  const auto plan = mpo::solve(p, w0, cfg);
  CHECK(plan.status == SolverStatus::MaxIterations);
  require_feasible(plan, cfg);
}
