#include "mpo/mpc_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mpo/error.hpp"

namespace mpo {

void MpcConfig::validate() const {
  if (horizon < 1) throw ConfigError("mpc: horizon must be >= 1");
  if (!(gamma_sigma >= 0.0) || !(gamma_trade >= 0.0)) throw ConfigError("mpc: gammas must be nonnegative");
  if (!(min_weight >= 0.0)) throw ConfigError("mpc: min_weight must be nonnegative");
  if (!(tolerance > 0.0)) throw ConfigError("mpc: tolerance must be positive");
  if (max_iterations < 1) throw ConfigError("mpc: max_iterations must be >= 1");
}

std::string_view to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::Optimal:
      return "Optimal";
    case SolverStatus::MaxIterations:
      return "MaxIterations";
    case SolverStatus::Infeasible:
      return "Infeasible";
  }
  return "Infeasible";
}

MpcProblem make_problem(const EstimateSet& estimates, double spread, double portfolio_value) {
  MpcProblem p;
  p.returns = estimates.boosted;
  p.covariance = estimates.covariance;
  p.costs = cost_coefficients(CostParams{spread, estimates.ewm_sigma, estimates.ewm_volume, portfolio_value});
  return p;
}

double plan_objective(const MpcProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& w_current,
                      std::span<const Eigen::VectorXd> weights, const MpcConfig& config) {
  const auto N = problem.num_risky();
  double total = 0.0;
  Eigen::VectorXd prev = w_current;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const auto& w = weights[k];
    total += problem.returns.row(static_cast<Eigen::Index>(k)).dot(w);
    total -= config.gamma_sigma * w.dot(problem.covariance * w);
    double trade = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) trade += problem.costs.cost(i, w(i) - prev(i));
    total -= config.gamma_trade * trade;
    prev = w;
  }
  return total;
}

namespace {

void check_problem(const MpcProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& w_current,
                   const MpcConfig& config) {
  config.validate();
  const auto K = problem.returns.cols();
  const auto N = K - 1;
  if (N < 1) throw ValidationError("mpc: need at least one risky asset");
  if (problem.horizon() != config.horizon) throw ValidationError("mpc: estimate horizon differs from config horizon");
  if (problem.covariance.rows() != K || problem.covariance.cols() != K) throw ValidationError("mpc: covariance shape");
  if (problem.costs.linear.size() != N || problem.costs.power.size() != N) throw ValidationError("mpc: cost shape");
  if (w_current.size() != K) throw ValidationError("mpc: current weights have the wrong length");
  if (!problem.returns.allFinite() || !problem.covariance.allFinite() || !w_current.allFinite()) {
    throw ValidationError("mpc: non-finite inputs");
  }
}

std::vector<Eigen::VectorXd> floor_plan(Eigen::Index K, int H, double min_weight) {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(K, min_weight);
  w(K - 1) = 1.0 - min_weight * static_cast<double>(K - 1);
  return std::vector<Eigen::VectorXd>(static_cast<std::size_t>(H), w);
}

// Primal-dual interior-point method on the split formulation
//
//   min  sum_k [ -r_k'w_k + gs w_k'S w_k + gt sum_i (a_i s_ki + c_i s_ki^{3/2}) ],  s = p + m
//   s.t. 1'w_k = 1,  w_k,i - w_{k-1},i - p_ki + m_ki = 0,  w >= floor,  p, m >= 0.
//
// The iterate stays primal feasible; Newton systems are reduced to the weight
// block by eliminating each (p, m) pair and its difference row in closed form.
class InteriorPoint {
 public:
  InteriorPoint(const MpcProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& w0, const MpcConfig& config)
      : pb_(problem), cfg_(config), w0_(w0), H_(config.horizon), K_(problem.returns.cols()), N_(K_ - 1) {
    lower_ = Eigen::VectorXd::Constant(K_, config.min_weight);
    lower_(N_) = 0.0;
  }

  AllocationPlan run() {
    initialise();
    AllocationPlan plan;
    plan.status = SolverStatus::MaxIterations;
    plan.gap_bound = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd best = W_;
    int iter = 0;
    for (; iter < cfg_.max_iterations; ++iter) {
      evaluate();
      const double f = objective() / scale_;
      const double bound = certified_gap() / scale_;
      if (!std::isfinite(bound)) break;
      if (bound < plan.gap_bound) {
        plan.gap_bound = bound;
        best = W_;
      }
      if (bound <= cfg_.tolerance * std::max(1.0, std::abs(f))) {
        plan.status = SolverStatus::Optimal;
        break;
      }
      if (!step()) break;
    }
    plan.iterations = iter;
    for (int k = 0; k < H_; ++k) {
      Eigen::VectorXd w = best.row(k).transpose();
      w(N_) = 1.0 - w.head(N_).sum();
      plan.weights.push_back(std::move(w));
    }
    plan.objective = plan_objective(pb_, w0_, plan.weights, cfg_);
    return plan;
  }

 private:
  void initialise() {
    const double slack = 1.0 - cfg_.min_weight * static_cast<double>(N_);
    Eigen::VectorXd centre = lower_.array() + slack / static_cast<double>(K_);
    W_ = centre.transpose().replicate(H_, 1);
    Sw_ = Eigen::VectorXd::Constant(K_, slack / static_cast<double>(K_)).transpose().replicate(H_, 1);
    P_.resize(H_, N_);
    M_.resize(H_, N_);
    constexpr double offset = 0.05;
    for (int k = 0; k < H_; ++k) {
      for (Eigen::Index i = 0; i < N_; ++i) {
        const double prev = k == 0 ? w0_(i) : W_(k - 1, i);
        const double d = W_(k, i) - prev;
        P_(k, i) = std::max(d, 0.0) + offset;
        M_(k, i) = std::max(-d, 0.0) + offset;
      }
    }
    ysum_ = Eigen::VectorXd::Zero(H_);
    ydiff_ = Eigen::MatrixXd::Zero(H_, N_);

    // Scale the objective so its gradient is O(1) at the start.
    scale_ = 1.0;
    evaluate_gradient();
    const double gmax = std::max({Gw_.cwiseAbs().maxCoeff(), Gp_.size() ? Gp_.cwiseAbs().maxCoeff() : 0.0, 1e-12});
    scale_ = 1.0 / gmax;

    Zw_ = Eigen::MatrixXd::Ones(H_, K_);
    Zp_ = Eigen::MatrixXd::Ones(H_, N_);
    Zm_ = Eigen::MatrixXd::Ones(H_, N_);
  }

  // Distances to the weight bounds are stored, not recomputed from W_, so they
  // keep full precision as the iterate approaches a floor.
  const Eigen::MatrixXd& slack_w() const { return Sw_; }

  void evaluate_gradient() {
    const double gs = cfg_.gamma_sigma * scale_;
    const double gt = cfg_.gamma_trade * scale_;
    Gw_.resize(H_, K_);
    for (int k = 0; k < H_; ++k) {
      Gw_.row(k) = -scale_ * pb_.returns.row(k) + 2.0 * gs * (pb_.covariance * W_.row(k).transpose()).transpose();
    }
    Gp_.resize(H_, N_);
    Hpm_.resize(H_, N_);
    for (int k = 0; k < H_; ++k) {
      for (Eigen::Index i = 0; i < N_; ++i) {
        const double s = P_(k, i) + M_(k, i);
        const double root = std::sqrt(s);
        Gp_(k, i) = gt * (pb_.costs.linear(i) + 1.5 * pb_.costs.power(i) * root);
        Hpm_(k, i) = gt * 0.75 * pb_.costs.power(i) / root;
      }
    }
  }

  void evaluate() {
    evaluate_gradient();
    // Dual residuals g - A'y - z.
    Rw_.resize(H_, K_);
    for (int k = 0; k < H_; ++k) {
      for (Eigen::Index j = 0; j < K_; ++j) {
        double aty = ysum_(k);
        if (j < N_) aty += ydiff_(k, j) - (k + 1 < H_ ? ydiff_(k + 1, j) : 0.0);
        Rw_(k, j) = Gw_(k, j) - aty - Zw_(k, j);
      }
    }
    Rp_ = Gp_ + ydiff_ - Zp_;
    Rm_ = Gp_ - ydiff_ - Zm_;
  }

  double objective() const {
    double f = 0.0;
    for (int k = 0; k < H_; ++k) {
      const Eigen::VectorXd w = W_.row(k).transpose();
      f += -pb_.returns.row(k).dot(w) + cfg_.gamma_sigma * w.dot(pb_.covariance * w);
      for (Eigen::Index i = 0; i < N_; ++i) {
        const double s = P_(k, i) + M_(k, i);
        f += cfg_.gamma_trade * (pb_.costs.linear(i) * s + pb_.costs.power(i) * s * std::sqrt(s));
      }
    }
    return f * scale_;
  }

  // Complementarity plus the first-order effect of the dual residual over the
  // region where the optimum lives (weights in [0,1], minimal buy/sell split).
  double certified_gap() const {
    const auto& sw = slack_w();
    double gap = (sw.array() * Zw_.array()).sum() + (P_.array() * Zp_.array()).sum() + (M_.array() * Zm_.array()).sum();
    gap += (Rw_.array().abs() * (1.0 + W_.array().abs())).sum();
    gap += (Rp_.array().abs() * (1.0 + P_.array().abs())).sum();
    gap += (Rm_.array().abs() * (1.0 + M_.array().abs())).sum();
    return gap;
  }

  struct Direction {
    Eigen::MatrixXd dw, dp, dm, dzw, dzp, dzm, dydiff;
    Eigen::VectorXd dysum;
  };

  // Solves the Newton system for complementarity targets
  // (x - l) z -> target, given as per-variable right-hand sides rc = target - s z.
  Direction newton(const Eigen::MatrixXd& rcw, const Eigen::MatrixXd& rcp, const Eigen::MatrixXd& rcm) {
    const auto& sw = slack_w();
    const Eigen::MatrixXd Dw = Zw_.array() / sw.array();
    const Eigen::MatrixXd Dp = Zp_.array() / P_.array();
    const Eigen::MatrixXd Dm = Zm_.array() / M_.array();

    // R1 = -rd + S^{-1} rc
    const Eigen::MatrixXd R1w = -Rw_.array() + rcw.array() / sw.array();
    const Eigen::MatrixXd R1p = -Rp_.array() + rcp.array() / P_.array();
    const Eigen::MatrixXd R1m = -Rm_.array() + rcm.array() / M_.array();

    const Eigen::Index nw = H_ * K_;
    const Eigen::Index n = nw + H_;
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    const Eigen::MatrixXd Hw = 2.0 * cfg_.gamma_sigma * scale_ * pb_.covariance;
    auto at = [&](int k, Eigen::Index j) { return static_cast<Eigen::Index>(k) * K_ + j; };
    for (int k = 0; k < H_; ++k) {
      Q.block(at(k, 0), at(k, 0), K_, K_) = Hw;
      for (Eigen::Index j = 0; j < K_; ++j) {
        Q(at(k, j), at(k, j)) += Dw(k, j);
        rhs(at(k, j)) = R1w(k, j);
        Q(nw + k, at(k, j)) = 1.0;
        Q(at(k, j), nw + k) = 1.0;
      }
      rhs(nw + k) = 0.0;  // iterate stays on the budget constraint
    }

    // Eliminate each (p, m) pair and its difference row.
    Eigen::MatrixXd beta(H_, N_), rho(H_, N_);
    Eigen::MatrixXd binv11(H_, N_), binv12(H_, N_), binv22(H_, N_);
    for (int k = 0; k < H_; ++k) {
      for (Eigen::Index i = 0; i < N_; ++i) {
        const double h = Hpm_(k, i);
        const double b11 = h + Dp(k, i);
        const double b22 = h + Dm(k, i);
        const double det = b11 * b22 - h * h;
        binv11(k, i) = b22 / det;
        binv22(k, i) = b11 / det;
        binv12(k, i) = -h / det;
        // v = (-1, +1)
        const double vb_r = -(binv11(k, i) * R1p(k, i) + binv12(k, i) * R1m(k, i)) +
                            (binv12(k, i) * R1p(k, i) + binv22(k, i) * R1m(k, i));
        beta(k, i) = binv11(k, i) + binv22(k, i) - 2.0 * binv12(k, i);
        rho(k, i) = -vb_r;  // primal difference residual is zero
        const double inv = 1.0 / beta(k, i);
        Q(at(k, i), at(k, i)) += inv;
        rhs(at(k, i)) += rho(k, i) * inv;
        if (k > 0) {
          Q(at(k - 1, i), at(k - 1, i)) += inv;
          Q(at(k, i), at(k - 1, i)) -= inv;
          Q(at(k - 1, i), at(k, i)) -= inv;
          rhs(at(k - 1, i)) -= rho(k, i) * inv;
        }
      }
    }

    const Eigen::VectorXd sol = Q.partialPivLu().solve(rhs);
    Direction d;
    d.dw.resize(H_, K_);
    for (int k = 0; k < H_; ++k) d.dw.row(k) = sol.segment(at(k, 0), K_).transpose();
    d.dysum = -sol.tail(H_);

    d.dydiff.resize(H_, N_);
    d.dp.resize(H_, N_);
    d.dm.resize(H_, N_);
    for (int k = 0; k < H_; ++k) {
      for (Eigen::Index i = 0; i < N_; ++i) {
        const double ew = d.dw(k, i) - (k > 0 ? d.dw(k - 1, i) : 0.0);
        const double dy = (rho(k, i) - ew) / beta(k, i);
        d.dydiff(k, i) = dy;
        const double up = R1p(k, i) - dy;
        const double um = R1m(k, i) + dy;
        d.dp(k, i) = binv11(k, i) * up + binv12(k, i) * um;
        d.dm(k, i) = binv12(k, i) * up + binv22(k, i) * um;
      }
    }
    d.dzw = (rcw.array() - Zw_.array() * d.dw.array()) / sw.array();
    d.dzp = (rcp.array() - Zp_.array() * d.dp.array()) / P_.array();
    d.dzm = (rcm.array() - Zm_.array() * d.dm.array()) / M_.array();
    return d;
  }

  static double max_step(const Eigen::MatrixXd& x, const Eigen::MatrixXd& dx) {
    double alpha = 1.0;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      if (dx.data()[k] < 0.0) alpha = std::min(alpha, -x.data()[k] / dx.data()[k]);
    }
    return alpha;
  }

  double primal_step(const Direction& d) const {
    return std::min({max_step(slack_w(), d.dw), max_step(P_, d.dp), max_step(M_, d.dm)});
  }

  double dual_step(const Direction& d) const {
    return std::min({max_step(Zw_, d.dzw), max_step(Zp_, d.dzp), max_step(Zm_, d.dzm)});
  }

  // False when the Newton direction is unusable; the caller keeps its best iterate.
  bool step() {
    const auto& sw = slack_w();
    const double nb = static_cast<double>(sw.size() + P_.size() + M_.size());
    const double mu = ((sw.array() * Zw_.array()).sum() + (P_.array() * Zp_.array()).sum() +
                       (M_.array() * Zm_.array()).sum()) /
                      nb;

    // Predictor.
    const Eigen::MatrixXd rcw0 = -(sw.array() * Zw_.array());
    const Eigen::MatrixXd rcp0 = -(P_.array() * Zp_.array());
    const Eigen::MatrixXd rcm0 = -(M_.array() * Zm_.array());
    const Direction aff = newton(rcw0, rcp0, rcm0);
    const double ap = primal_step(aff);
    const double ad = dual_step(aff);
    const double mu_aff =
        (((sw + ap * aff.dw).array() * (Zw_ + ad * aff.dzw).array()).sum() +
         ((P_ + ap * aff.dp).array() * (Zp_ + ad * aff.dzp).array()).sum() +
         ((M_ + ap * aff.dm).array() * (Zm_ + ad * aff.dzm).array()).sum()) /
        nb;
    const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 1e-6, 0.9);

    // Corrector with centring.
    const Eigen::MatrixXd rcw = rcw0.array() + sigma * mu - aff.dw.array() * aff.dzw.array();
    const Eigen::MatrixXd rcp = rcp0.array() + sigma * mu - aff.dp.array() * aff.dzp.array();
    const Eigen::MatrixXd rcm = rcm0.array() + sigma * mu - aff.dm.array() * aff.dzm.array();
    const Direction d = newton(rcw, rcp, rcm);

    constexpr double fraction = 0.995;
    const double alpha = std::min(1.0, fraction * std::min(primal_step(d), dual_step(d)));
    if (!std::isfinite(alpha) || alpha <= 0.0 || !d.dw.allFinite() || !d.dzw.allFinite() || !d.dp.allFinite() ||
        !d.dm.allFinite() || !d.dzp.allFinite() || !d.dzm.allFinite()) {
      return false;
    }
    W_ += alpha * d.dw;
    Sw_ += alpha * d.dw;
    P_ += alpha * d.dp;
    M_ += alpha * d.dm;
    Zw_ += alpha * d.dzw;
    Zp_ += alpha * d.dzp;
    Zm_ += alpha * d.dzm;
    ysum_ += alpha * d.dysum;
    ydiff_ += alpha * d.dydiff;
    return true;
  }

  const MpcProblem& pb_;
  const MpcConfig& cfg_;
  Eigen::VectorXd w0_;
  int H_;
  Eigen::Index K_, N_;
  Eigen::VectorXd lower_;
  double scale_ = 1.0;

  Eigen::MatrixXd W_, Sw_, P_, M_;
  Eigen::MatrixXd Zw_, Zp_, Zm_;
  Eigen::VectorXd ysum_;
  Eigen::MatrixXd ydiff_;
  Eigen::MatrixXd Gw_, Gp_, Hpm_;
  Eigen::MatrixXd Rw_, Rp_, Rm_;
};

}  // namespace

AllocationPlan solve(const MpcProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& w_current,
                     const MpcConfig& config) {
  check_problem(problem, w_current, config);
  const auto K = problem.returns.cols();
  const auto N = K - 1;
  const double slack = 1.0 - config.min_weight * static_cast<double>(N);
  if (slack < -1e-12) {
    AllocationPlan plan;
    plan.status = SolverStatus::Infeasible;
    return plan;
  }
  if (slack <= 1e-12) {
    // The floors exhaust the budget: a single feasible point.
    AllocationPlan plan;
    plan.weights = floor_plan(K, config.horizon, config.min_weight);
    plan.objective = plan_objective(problem, w_current, plan.weights, config);
    plan.status = SolverStatus::Optimal;
    return plan;
  }
  InteriorPoint ipm(problem, w_current, config);
  return ipm.run();
}

AllocationPlan solve(const EstimateSet& estimates, const Eigen::Ref<const Eigen::VectorXd>& w_current,
                     const MpcConfig& config, double spread, double portfolio_value) {
  auto plan = solve(make_problem(estimates, spread, portfolio_value), w_current, config);
  plan.date = estimates.date;
  return plan;
}

double grid_resolution_bound(const MpcProblem& problem, const MpcConfig& config, double grid_step) {
  const auto K = problem.returns.cols();
  const auto N = K - 1;
  const int H = problem.horizon();
  double bound = 0.0;
  for (int k = 0; k < H; ++k) {
    double lmax = 0.0;
    const double trade_terms = k + 1 < H ? 2.0 : 1.0;
    for (Eigen::Index j = 0; j < K; ++j) {
      double l = std::abs(problem.returns(k, j)) + 2.0 * config.gamma_sigma * problem.covariance.row(j).cwiseAbs().sum();
      if (j < N) l += config.gamma_trade * trade_terms * (problem.costs.linear(j) + 1.5 * problem.costs.power(j));
      lmax = std::max(lmax, l);
    }
    bound += lmax * static_cast<double>(K) * grid_step;
  }
  return bound;
}

AllocationPlan brute_force_oracle(const MpcProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& w_current,
                                  const MpcConfig& config, double grid_step) {
  check_problem(problem, w_current, config);
  const auto K = problem.returns.cols();
  const auto N = K - 1;
  const int H = problem.horizon();
  if (N > 4 || H > 2) throw GuardError("oracle: instance too large (needs N <= 4 and H <= 2)");
  if (!(grid_step > 0.0)) throw GuardError("oracle: grid step must be positive");
  const double units_real = 1.0 / grid_step;
  const long units = std::lround(units_real);
  if (std::abs(units_real - static_cast<double>(units)) > 1e-9 * units_real) {
    throw GuardError("oracle: grid step must divide 1");
  }
  const long floor_units = static_cast<long>(std::ceil(config.min_weight / grid_step - 1e-9));
  AllocationPlan plan;
  if (floor_units * N > units) {
    plan.status = SolverStatus::Infeasible;
    return plan;
  }

  // Enumerate risky unit counts n_i >= floor_units with sum <= units; cash takes the rest.
  std::vector<std::int16_t> points;
  {
    std::vector<long> n(static_cast<std::size_t>(N), floor_units);
    const long free_units = units - floor_units * N;
    // Odometer over compositions of at most free_units extra units.
    std::vector<long> extra(static_cast<std::size_t>(N), 0);
    long used = 0;
    while (true) {
      for (Eigen::Index i = 0; i < N; ++i) points.push_back(static_cast<std::int16_t>(floor_units + extra[i]));
      Eigen::Index pos = 0;
      while (pos < N) {
        if (used < free_units) {
          ++extra[pos];
          ++used;
          break;
        }
        used -= extra[pos];
        extra[pos] = 0;
        ++pos;
      }
      if (pos == N) break;
    }
  }
  const std::size_t count = points.size() / static_cast<std::size_t>(N);
  if (H == 2 && count > 4'000'000) throw GuardError("oracle: grid too fine for a two-step search");

  auto weights_of = [&](std::size_t idx) {
    Eigen::VectorXd w(K);
    long used = 0;
    for (Eigen::Index i = 0; i < N; ++i) {
      const long u = points[idx * static_cast<std::size_t>(N) + static_cast<std::size_t>(i)];
      w(i) = static_cast<double>(u) * grid_step;
      used += u;
    }
    w(N) = static_cast<double>(units - used) * grid_step;
    return w;
  };
  auto step_value = [&](const Eigen::VectorXd& w, int k) {
    return problem.returns.row(k).dot(w) - config.gamma_sigma * w.dot(problem.covariance * w);
  };
  auto entry_cost = [&](const Eigen::VectorXd& w) {
    double c = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) c += problem.costs.cost(i, w(i) - w_current(i));
    return config.gamma_trade * c;
  };

  std::vector<double> g1(count);
  std::vector<double> g2(H == 2 ? count : 0);
  for (std::size_t idx = 0; idx < count; ++idx) {
    const auto w = weights_of(idx);
    g1[idx] = step_value(w, 0) - entry_cost(w);
    if (H == 2) g2[idx] = step_value(w, 1);
  }

  std::size_t best1 = 0;
  std::size_t best2 = 0;
  double best = -std::numeric_limits<double>::infinity();
  if (H == 1) {
    for (std::size_t idx = 0; idx < count; ++idx) {
      if (g1[idx] > best) {
        best = g1[idx];
        best1 = idx;
      }
    }
  } else {
    // Cost of moving d units in asset i between the two steps.
    std::vector<std::vector<double>> move_cost(static_cast<std::size_t>(N), std::vector<double>(2 * units + 1));
    for (Eigen::Index i = 0; i < N; ++i) {
      for (long d = -units; d <= units; ++d) {
        move_cost[i][d + units] = config.gamma_trade * problem.costs.cost(i, static_cast<double>(d) * grid_step);
      }
    }
    // Staying put is free, which gives the first incumbent.
    for (std::size_t idx = 0; idx < count; ++idx) {
      if (g1[idx] + g2[idx] > best) {
        best = g1[idx] + g2[idx];
        best1 = best2 = idx;
      }
    }
    std::vector<std::size_t> order1(count), order2(count);
    for (std::size_t i = 0; i < count; ++i) order1[i] = order2[i] = i;
    std::stable_sort(order1.begin(), order1.end(), [&](auto a, auto b) { return g1[a] > g1[b]; });
    std::stable_sort(order2.begin(), order2.end(), [&](auto a, auto b) { return g2[a] > g2[b]; });
    const double g2_max = g2[order2.front()];
    for (const auto i1 : order1) {
      if (g1[i1] + g2_max <= best) break;  // move costs are nonnegative
      const auto* p1 = &points[i1 * static_cast<std::size_t>(N)];
      for (const auto i2 : order2) {
        const double upper = g1[i1] + g2[i2];
        if (upper <= best) break;
        const auto* p2 = &points[i2 * static_cast<std::size_t>(N)];
        double v = upper;
        for (Eigen::Index i = 0; i < N; ++i) v -= move_cost[i][p2[i] - p1[i] + units];
        if (v > best) {
          best = v;
          best1 = i1;
          best2 = i2;
        }
      }
    }
  }

  plan.weights.push_back(weights_of(best1));
  if (H == 2) plan.weights.push_back(weights_of(best2));
  plan.objective = best;
  plan.status = SolverStatus::Optimal;
  plan.gap_bound = grid_resolution_bound(problem, config, grid_step);
  return plan;
}

}  // namespace mpo
