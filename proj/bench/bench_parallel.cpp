// Serial vs OpenMP timings for the kernels and the batched backtests.
// Set OMP_NUM_THREADS to control the parallel side.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "mpo/evaluation.hpp"
#include "mpo/kernels.hpp"
#include "mpo/regime_signals.hpp"

namespace {

using mpo::kernels::Execution;

Eigen::MatrixXd returns_block(Eigen::Index rows, Eigen::Index cols) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z(0.0, 0.01);
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = z(rng);
  return x;
}

void covariance(benchmark::State& state, Execution ex) {
  const auto x = returns_block(504, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mpo::kernels::covariance(x, ex));
  state.SetItemsProcessed(state.iterations() * state.range(0) * (state.range(0) + 1) / 2);
}

void ewm_std(benchmark::State& state, Execution ex) {
  const auto x = returns_block(5000, state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ex == Execution::Parallel ? mpo::kernels::ewm_std_columns_parallel(x, 10)
                                                       : mpo::kernels::ewm_std_columns_serial(x, 10));
  }
}

void sweep(benchmark::State& state, Execution ex) {
  mpo::SynthConfig sc;
  sc.n_assets = static_cast<int>(state.range(0));
  sc.n_days = 800;
  const auto m = mpo::generate_synthetic(sc, 3);
  mpo::BacktestConfig cfg;
  cfg.estimators.execution = Execution::Serial;
  const auto start = mpo::EstimatorPipeline::required_history(cfg.mpc.horizon, cfg.estimators);
  const std::vector<double> grid{0.01, 0.1262, 1.0, 10.0, 100.0, 1000.0, 0.05, 5.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(mpo::gamma_sigma_sweep(m.panel, m.signals, cfg, start, 799, grid, ex));
  }
}

}  // namespace

BENCHMARK_CAPTURE(covariance, serial, Execution::Serial)->Arg(5)->Arg(26)->Arg(100);
BENCHMARK_CAPTURE(covariance, parallel, Execution::Parallel)->Arg(5)->Arg(26)->Arg(100);
BENCHMARK_CAPTURE(ewm_std, serial, Execution::Serial)->Arg(26)->Arg(200);
BENCHMARK_CAPTURE(ewm_std, parallel, Execution::Parallel)->Arg(26)->Arg(200);
BENCHMARK_CAPTURE(sweep, serial, Execution::Serial)->Arg(5)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(sweep, parallel, Execution::Parallel)->Arg(5)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
