#pragma once

#include <span>
#include <vector>

#include "medeeg/core.hpp"
#include "medeeg/exec.hpp"

namespace medeeg::csp {

struct ClassCovariance {
  Matrix matrix;  // channels x channels, unit trace
  std::size_t n_epochs{0};
};

// 2 * n_pairs unit-norm spatial filters (columns). The first n_pairs maximize
// J with class 1 in the numerator, the last n_pairs with the roles swapped.
struct SpatialFilterBank {
  Matrix filters;
  Vector objective_values;
  int n_pairs{0};
  double alpha{0.0};

  Eigen::Index n_channels() const { return filters.rows(); }
  Eigen::Index n_features() const { return filters.cols(); }
};

/// Mean of the trace-normalized scatter matrices X X^T / tr(X X^T).
ClassCovariance class_covariance(std::span<const Epoch> epochs, Exec exec = Exec::Parallel);

/// Tikhonov-regularized CSP objective wT Cn w / (wT Cd w + alpha wT w).
double objective(const Vector& w, const Matrix& numerator, const Matrix& denominator, double alpha);

/// Fits the filter bank; alpha = 0 gives classical CSP.
SpatialFilterBank fit_csp(const ClassCovariance& cov1, const ClassCovariance& cov0, double alpha, int n_pairs);

/// ln of the biased variance of each filtered signal, floored at ln(1e-12).
Vector log_variance_features(const Epoch& epoch, const SpatialFilterBank& bank);
Vector log_variance_features(const Matrix& epoch_data, const SpatialFilterBank& bank);

/// One feature row per epoch.
Matrix log_variance_features(std::span<const Epoch> epochs, const SpatialFilterBank& bank,
                             Exec exec = Exec::Parallel);

inline constexpr double kLogVarianceFloor = 1e-12;

}  // namespace medeeg::csp
