#pragma once

// Data-parallel numeric kernels. Every parallel kernel has a serial twin that
// produces bit-identical output; tests compare the two and bench/ times them.

#include <Eigen/Dense>
#include <cstddef>

namespace mpo::kernels {

enum class Execution { Serial, Parallel };

/// Sample covariance (divisor rows - 1) of the columns of `rows`, two-pass.
/// `rows` is (observations x assets).
Eigen::MatrixXd covariance_serial(const Eigen::Ref<const Eigen::MatrixXd>& rows);
Eigen::MatrixXd covariance_parallel(const Eigen::Ref<const Eigen::MatrixXd>& rows);

inline Eigen::MatrixXd covariance(const Eigen::Ref<const Eigen::MatrixXd>& rows, Execution ex) {
  return ex == Execution::Parallel ? covariance_parallel(rows) : covariance_serial(rows);
}

/// Column-wise exponential moving average with smoothing 2/(window+1), seeded
/// with the first row. Row t of the result uses rows [0, t] only.
Eigen::MatrixXd ema_columns_serial(const Eigen::Ref<const Eigen::MatrixXd>& x, int window);
Eigen::MatrixXd ema_columns_parallel(const Eigen::Ref<const Eigen::MatrixXd>& x, int window);

/// Column-wise exponentially weighted standard deviation: the EMA of squared
/// deviations from the running EMA mean, square-rooted. Same causality as above.
Eigen::MatrixXd ewm_std_columns_serial(const Eigen::Ref<const Eigen::MatrixXd>& x, int window);
Eigen::MatrixXd ewm_std_columns_parallel(const Eigen::Ref<const Eigen::MatrixXd>& x, int window);

/// Number of OpenMP threads available (1 when built without OpenMP).
int max_threads();

}  // namespace mpo::kernels
