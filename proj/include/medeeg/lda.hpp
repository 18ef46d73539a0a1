#pragma once

#include <span>

#include "medeeg/core.hpp"

namespace medeeg::lda {

struct LdaModel {
  Vector direction;  // unit norm
  double threshold{0.0};
  Vector mean0;
  Vector mean1;
  double pooled_cov_ridge{0.0};

  Eigen::Index dim() const { return direction.size(); }
};

/// Binary Fisher discriminant. features holds one sample per row; labels are
/// 0/1. The pooled scatter gets a ridge of 1e-6 * tr(S) / dim.
LdaModel fit_lda(const Matrix& features, std::span<const int> labels);

double project(const LdaModel& model, const Vector& x);

/// 1 iff project(x) > threshold; exact ties go to 0.
int classify(const LdaModel& model, const Vector& x);

}  // namespace medeeg::lda
