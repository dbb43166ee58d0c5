#include <doctest.h>

#include <cmath>
#include <vector>

#include "generators.hpp"
#include "kalman_reference.hpp"
#include "panels.hpp"
#include "mpo/error.hpp"
#include "mpo/estimators.hpp"
#include "mpo/regime_signals.hpp"

using mpo::EmaState;
using mpo::RegimeClass;
using mpo::RegimeSignal;

namespace {

RegimeSignal signal(RegimeClass c, double bull = 0.0, double bear = 0.0) { return {c, bull, bear}; }

using gen::panel_from_returns;

mpo::SynthConfig synth(int n_assets, int n_days, double eps = 0.2) {
  mpo::SynthConfig cfg;
  cfg.n_assets = n_assets;
  cfg.n_days = n_days;
  cfg.epsilon = eps;
  return cfg;
}

}  // namespace

TEST_CASE("ema recurrence") {
  EmaState s{10, 0.0, false};
  s = mpo::ema_update(s, 0.01);
  CHECK(s.current == 0.01);
  s = mpo::ema_update(s, 0.02);
  CHECK(s.current == doctest::Approx(0.02 * 2.0 / 11.0 + 0.01 * 9.0 / 11.0).epsilon(1e-15));
  CHECK(s.current == doctest::Approx(0.0118181818181818).epsilon(1e-12));

  EmaState c{7, 0.0, false};
  for (int i = 0; i < 100; ++i) c = mpo::ema_update(c, 0.003);
  CHECK(c.current == doctest::Approx(0.003).epsilon(1e-14));

  EmaState one{1, 0.0, false};
  one = mpo::ema_update(one, 5.0);
  one = mpo::ema_update(one, -2.0);
  CHECK(one.current == -2.0);
}

TEST_CASE("regime-transformed estimates") {
  CHECK(mpo::estimate_return(signal(RegimeClass::Other), 0.005) == 0.005);
  CHECK(mpo::estimate_return(signal(RegimeClass::Bullish, 0.8), 0.01) == doctest::Approx(-0.008));
  CHECK(mpo::estimate_return(signal(RegimeClass::Bearish, 0.0, 0.6), -0.01) == doctest::Approx(-0.006));

  gen::Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.normal(0.0, 0.05);
    const auto bull = signal(RegimeClass::Bullish, rng.uniform(), rng.uniform());
    CHECK(mpo::estimate_return(signal(RegimeClass::Other, rng.uniform(), rng.uniform()), x) == x);
    CHECK(mpo::estimate_return(bull, -x) == -mpo::estimate_return(bull, x));
  }
}

TEST_CASE("kalman boost with zero observations leaves estimates alone") {
  auto s = mpo::make_kalman({});
  auto qr = mpo::make_kalman({1e-4, 1e-4, 0.0, 1.0});
  gen::Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const double raw = rng.normal(0.0, 0.01);
    const double prev = rng.normal(0.0, 0.01);
    auto step = mpo::kalman_boost(s, raw, prev, prev);
    CHECK(step.boosted == raw);
    s = step.state;
    auto step2 = mpo::kalman_boost(qr, raw, prev, prev);
    CHECK(step2.boosted == raw);
    qr = step2.state;
  }
}

TEST_CASE("kalman recursion matches the textbook filter") {
  gen::Rng rng(21);
  const mpo::KalmanParams params{2e-6, 3e-4, 0.001, 0.5};
  std::vector<double> y;
  auto s = mpo::make_kalman(params);
  std::vector<double> levels, variances, boosts, raws;
  for (int i = 0; i < 50; ++i) {
    const double realized = rng.normal(0.0, 0.02);
    const double raw_prev = rng.normal(0.0, 0.01);
    const double raw = rng.normal(0.0, 0.01);
    y.push_back(realized - raw_prev);
    auto step = mpo::kalman_boost(s, raw, realized, raw_prev);
    boosts.push_back(step.boosted);
    raws.push_back(raw);
    s = step.state;
    levels.push_back(s.level);
    variances.push_back(s.variance);
  }
  const auto ref = gen::local_level_filter(y, params.q, params.r, params.initial_level, params.initial_variance);
  for (std::size_t i = 0; i < y.size(); ++i) {
    CHECK(std::abs(levels[i] - ref.level[i]) <= 1e-12);
    CHECK(std::abs(variances[i] - ref.variance[i]) <= 1e-12);
    // The boost uses the level from before this step's observation.
    const double lagged = i == 0 ? params.initial_level : ref.level[i - 1];
    CHECK(std::abs(boosts[i] - (raws[i] + lagged)) <= 1e-12);
  }
}

TEST_CASE("kalman level converges to a constant bias") {
  const double beta = 0.004;
  auto s = mpo::make_kalman({1e-3, 1e-4, 0.0, 1.0});
  double boosted = 0.0;
  for (int i = 0; i < 500; ++i) {
    auto step = mpo::kalman_boost(s, 0.01, 0.01 + beta, 0.01);
    boosted = step.boosted;
    s = step.state;
  }
  CHECK(std::abs(s.level - beta) < 0.05 * beta);
  CHECK(std::abs((boosted - 0.01) - beta) < 0.05 * beta);
}

TEST_CASE("kalman parameters must be positive") {
  CHECK_THROWS_AS(mpo::make_kalman({0.0, 1e-4, 0.0, 1.0}), mpo::ConfigError);
  CHECK_THROWS_AS(mpo::make_kalman({1e-6, -1.0, 0.0, 1.0}), mpo::ConfigError);
}

TEST_CASE("horizon estimates") {
  gen::Rng rng(12);
  Eigen::MatrixXd r(40, 2);
  for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = rng.normal(0.0, 0.01);
  const auto panel = panel_from_returns(r);
  mpo::SignalPanel sig(panel.assets(), panel.dates());
  for (std::size_t t = 0; t < 40; ++t) {
    sig.at(t, 0) = signal(RegimeClass::Bullish, 0.8, 0.1);
    sig.at(t, 1) = signal(t % 2 ? RegimeClass::Bearish : RegimeClass::Other, 0.1, 0.7);
  }
  const auto ema = mpo::return_ema(panel, 10, mpo::kernels::Execution::Serial);

  SUBCASE("single step reads the EMA through t-1") {
    const auto est = mpo::horizon_estimates(panel, sig, 25, 1, 10);
    REQUIRE(est.rows() == 1);
    CHECK(est(0, 0) == mpo::estimate_return(sig.at(25, 0), ema(24, 0)));
    CHECK(est(0, 1) == mpo::estimate_return(sig.at(25, 1), ema(24, 1)));
  }

  SUBCASE("two steps target the same date consistently across decisions") {
    const auto today = mpo::horizon_estimates(panel, sig, 25, 2, 10);
    const auto tomorrow = mpo::horizon_estimates(panel, sig, 26, 2, 10);
    // Asset 0 keeps one signal; its estimate for date 27 does not depend on the decision date.
    CHECK(today(1, 0) == tomorrow(0, 0));
    CHECK(today(0, 0) == mpo::estimate_return(sig.at(25, 0), ema(23, 0)));
    CHECK(today(1, 0) == mpo::estimate_return(sig.at(25, 0), ema(24, 0)));
  }

  SUBCASE("constant returns under Other give the constant") {
    const Eigen::MatrixXd c = Eigen::MatrixXd::Constant(40, 2, 0.002);
    const auto flat = panel_from_returns(c);
    mpo::SignalPanel other(flat.assets(), flat.dates());
    const auto est = mpo::horizon_estimates(flat, other, 30, 2, 10);
    CHECK(std::abs(est(0, 0) - 0.002) <= 1e-15);
    CHECK(std::abs(est(1, 1) - 0.002) <= 1e-15);
  }

  SUBCASE("too little history is a warm-up error") {
    CHECK_THROWS_AS(mpo::horizon_estimates(panel, sig, 11, 2, 10), mpo::WarmupError);
    CHECK_NOTHROW(mpo::horizon_estimates(panel, sig, 12, 2, 10));
  }
}

TEST_CASE("rolling covariance") {
  gen::Rng rng(13);
  Eigen::MatrixXd r(80, 4);
  for (Eigen::Index t = 0; t < 80; ++t) {
    const double z = rng.normal(0.0, 0.01);
    r(t, 0) = z;
    r(t, 1) = 3.0 * z + 0.001;  // perfectly correlated with asset 0
    r(t, 2) = 0.0005;           // constant
    r(t, 3) = rng.normal(0.0, 0.02);
  }
  const auto panel = panel_from_returns(r);
  const std::size_t t = 70;
  const int window = 50;
  const auto cov = mpo::rolling_covariance(panel, t, window, 1e-8, mpo::kernels::Execution::Serial);
  const auto raw = mpo::rolling_covariance(panel, t, window, 0.0, mpo::kernels::Execution::Serial);
  REQUIRE(cov.rows() == 5);

  CHECK(std::abs(raw(0, 1) - std::sqrt(raw(0, 0) * raw(1, 1))) <= 1e-10);
  CHECK(cov(2, 2) == doctest::Approx(1e-8).epsilon(1e-6));
  CHECK(cov.row(4).cwiseAbs().maxCoeff() == 0.0);
  CHECK(cov.col(4).cwiseAbs().maxCoeff() == 0.0);

  // Independent two-pass computation over rows t-window .. t-1.
  const Eigen::MatrixXd block = panel.returns().middleRows(t - window, window);
  for (Eigen::Index i = 0; i < 4; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) {
      double mi = 0.0, mj = 0.0;
      for (Eigen::Index k = 0; k < window; ++k) {
        mi += block(k, i);
        mj += block(k, j);
      }
      mi /= window;
      mj /= window;
      double s = 0.0;
      for (Eigen::Index k = 0; k < window; ++k) s += (block(k, i) - mi) * (block(k, j) - mj);
      CHECK(std::abs(raw(i, j) - s / (window - 1)) <= 1e-12);
    }
  }
  CHECK_THROWS_AS(mpo::rolling_covariance(panel, window, window), mpo::WarmupError);
}

TEST_CASE("pipeline covariance is symmetric and PSD on every decision date") {
  const auto m = mpo::generate_synthetic(synth(5, 700), 4);
  mpo::EstimatorConfig cfg;
  cfg.cov_window = 120;
  mpo::EstimatorPipeline pipe(m.panel, m.signals, 2, cfg);
  for (std::size_t t = mpo::EstimatorPipeline::required_history(2, cfg); t < 700; ++t) {
    const auto e = pipe.next(t);
    CHECK((e.covariance - e.covariance.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(e.covariance);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
    CHECK(e.raw.col(5).isConstant(m.panel.cash_rate()(static_cast<Eigen::Index>(t) - 1)));
    CHECK(e.boosted(0, 5) == e.raw(0, 5));
  }
}

TEST_CASE("pipeline sees nothing dated at or after the decision") {
  const auto m = mpo::generate_synthetic(synth(3, 400), 6);
  mpo::EstimatorConfig cfg;
  cfg.cov_window = 100;
  const std::size_t first = mpo::EstimatorPipeline::required_history(2, cfg);
  const std::size_t t = first + 30;

  // Poison every price and volume from t on, and every signal after t.
  Eigen::MatrixXd prices = m.panel.prices();
  Eigen::MatrixXd volume = m.panel.dollar_volume();
  Eigen::VectorXd rate = m.panel.cash_rate();
  const auto tail = static_cast<Eigen::Index>(400 - t);
  prices.bottomRows(tail).setConstant(1e9);
  volume.bottomRows(tail).setConstant(1.0);
  rate.tail(tail).setConstant(0.5);
  const mpo::AlignedPanel poisoned(m.panel.assets(), m.panel.dates(), prices, volume, rate);
  auto signals = m.signals;
  for (std::size_t s = t + 1; s < 400; ++s) {
    for (std::size_t i = 0; i < 3; ++i) signals.at(s, i) = signal(RegimeClass::Bullish, 1.0, 0.0);
  }

  mpo::EstimatorPipeline clean(m.panel, m.signals, 2, cfg);
  mpo::EstimatorPipeline dirty(poisoned, signals, 2, cfg);
  for (std::size_t s = first; s <= t; ++s) {
    const auto a = clean.next(s);
    const auto b = dirty.next(s);
    CHECK(a.raw == b.raw);
    CHECK(a.boosted == b.boosted);
    CHECK(a.covariance == b.covariance);
    CHECK(a.ewm_sigma == b.ewm_sigma);
    CHECK(a.ewm_volume == b.ewm_volume);
  }
}

TEST_CASE("pipeline boosts by the lagged filter level") {
  const auto m = mpo::generate_synthetic(synth(2, 300), 10);
  mpo::EstimatorConfig cfg;
  cfg.cov_window = 60;
  mpo::EstimatorPipeline pipe(m.panel, m.signals, 2, cfg);
  const std::size_t first = mpo::EstimatorPipeline::required_history(2, cfg);
  const auto ema = mpo::return_ema(m.panel, 10, mpo::kernels::Execution::Serial);
  std::vector<double> obs;
  for (std::size_t t = first; t < first + 40; ++t) {
    const auto e = pipe.next(t);
    const auto ref = gen::local_level_filter(obs, 1e-6, 1e-4, 0.0, 1.0);
    const double level = obs.empty() ? 0.0 : ref.level.back();
    CHECK(std::abs(e.boosted(0, 0) - (e.raw(0, 0) + level)) <= 1e-12);
    CHECK(std::abs(e.boosted(1, 0) - (e.raw(1, 0) + level)) <= 1e-12);
    // Observation: yesterday's return minus the one-step estimate made for it.
    const double raw_prev = mpo::estimate_return(m.signals.at(t - 2, 0), ema(static_cast<Eigen::Index>(t) - 4, 0));
    obs.push_back(m.panel.returns()(static_cast<Eigen::Index>(t) - 1, 0) - raw_prev);
  }
  CHECK_THROWS_AS(pipe.next(first), mpo::ConfigError);
}

TEST_CASE("pipeline warm-up") {
  const auto m = mpo::generate_synthetic(synth(2, 300), 1);
  mpo::EstimatorConfig cfg;
  cfg.cov_window = 60;
  CHECK(mpo::EstimatorPipeline::required_history(2, cfg) == 72);
  mpo::EstimatorPipeline pipe(m.panel, m.signals, 2, cfg);
  CHECK_THROWS_AS(pipe.next(71), mpo::WarmupError);
  CHECK_NOTHROW(pipe.next(72));
}
