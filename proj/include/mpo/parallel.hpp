#pragma once

// Runs independent jobs (backtests of a sweep, tuning trials) and collects the
// results by index, so the output never depends on scheduling.

#include <cstddef>
#include <exception>
#include <optional>
#include <type_traits>
#include <vector>

#include "mpo/kernels.hpp"

namespace mpo {

/// results[i] = job(i). The first exception by index is rethrown after all jobs finish.
template <class Job>
auto parallel_map(std::size_t n, Job&& job, kernels::Execution ex) {
  using Result = std::invoke_result_t<Job&, std::size_t>;
  std::vector<std::optional<Result>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  const auto run = [&](std::size_t i) {
    try {
      slots[i].emplace(job(i));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (ex == kernels::Execution::Parallel) {
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < count; ++i) run(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < n; ++i) run(i);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<Result> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace mpo
