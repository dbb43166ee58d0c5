#include "mpo/kernels.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mpo::kernels {

namespace {

// Shared by both variants so the per-entry arithmetic is identical.
double column_mean(const Eigen::Ref<const Eigen::MatrixXd>& rows, Eigen::Index j) {
  double sum = 0.0;
  for (Eigen::Index t = 0; t < rows.rows(); ++t) sum += rows(t, j);
  return sum / static_cast<double>(rows.rows());
}

double centered_dot(const Eigen::Ref<const Eigen::MatrixXd>& rows, Eigen::Index i, Eigen::Index j, double mi,
                    double mj) {
  double acc = 0.0;
  for (Eigen::Index t = 0; t < rows.rows(); ++t) acc += (rows(t, i) - mi) * (rows(t, j) - mj);
  return acc / static_cast<double>(rows.rows() - 1);
}

void ema_column(const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::MatrixXd& out, Eigen::Index j, double alpha) {
  double ema = x(0, j);
  out(0, j) = ema;
  for (Eigen::Index t = 1; t < x.rows(); ++t) {
    ema = x(t, j) * alpha + ema * (1.0 - alpha);
    out(t, j) = ema;
  }
}

void ewm_std_column(const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::MatrixXd& out, Eigen::Index j, double alpha) {
  double mean = x(0, j);
  double var = 0.0;
  out(0, j) = 0.0;
  for (Eigen::Index t = 1; t < x.rows(); ++t) {
    mean = x(t, j) * alpha + mean * (1.0 - alpha);
    const double dev = x(t, j) - mean;
    var = dev * dev * alpha + var * (1.0 - alpha);
    out(t, j) = std::sqrt(var);
  }
}

}  // namespace

Eigen::MatrixXd covariance_serial(const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  const Eigen::Index n = rows.cols();
  Eigen::VectorXd mean(n);
  for (Eigen::Index j = 0; j < n; ++j) mean(j) = column_mean(rows, j);
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      cov(i, j) = centered_dot(rows, i, j, mean(i), mean(j));
      cov(j, i) = cov(i, j);
    }
  }
  return cov;
}

Eigen::MatrixXd covariance_parallel(const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  const Eigen::Index n = rows.cols();
  Eigen::VectorXd mean(n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < n; ++j) mean(j) = column_mean(rows, j);
  Eigen::MatrixXd cov(n, n);
  const Eigen::Index pairs = n * (n + 1) / 2;
#pragma omp parallel for schedule(static)
  for (Eigen::Index k = 0; k < pairs; ++k) {
    // Unrank k into (i, j) with i <= j.
    Eigen::Index i = 0;
    Eigen::Index rem = k;
    while (rem >= n - i) {
      rem -= n - i;
      ++i;
    }
    const Eigen::Index j = i + rem;
    cov(i, j) = centered_dot(rows, i, j, mean(i), mean(j));
    cov(j, i) = cov(i, j);
  }
  return cov;
}

Eigen::MatrixXd ema_columns_serial(const Eigen::Ref<const Eigen::MatrixXd>& x, int window) {
  const double alpha = 2.0 / (window + 1.0);
  Eigen::MatrixXd out(x.rows(), x.cols());
  if (x.rows() == 0) return out;
  for (Eigen::Index j = 0; j < x.cols(); ++j) ema_column(x, out, j, alpha);
  return out;
}

Eigen::MatrixXd ema_columns_parallel(const Eigen::Ref<const Eigen::MatrixXd>& x, int window) {
  const double alpha = 2.0 / (window + 1.0);
  Eigen::MatrixXd out(x.rows(), x.cols());
  if (x.rows() == 0) return out;
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < x.cols(); ++j) ema_column(x, out, j, alpha);
  return out;
}

Eigen::MatrixXd ewm_std_columns_serial(const Eigen::Ref<const Eigen::MatrixXd>& x, int window) {
  const double alpha = 2.0 / (window + 1.0);
  Eigen::MatrixXd out(x.rows(), x.cols());
  if (x.rows() == 0) return out;
  for (Eigen::Index j = 0; j < x.cols(); ++j) ewm_std_column(x, out, j, alpha);
  return out;
}

Eigen::MatrixXd ewm_std_columns_parallel(const Eigen::Ref<const Eigen::MatrixXd>& x, int window) {
  const double alpha = 2.0 / (window + 1.0);
  Eigen::MatrixXd out(x.rows(), x.cols());
  if (x.rows() == 0) return out;
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < x.cols(); ++j) ewm_std_column(x, out, j, alpha);
  return out;
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace mpo::kernels
