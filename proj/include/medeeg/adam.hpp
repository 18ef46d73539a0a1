#pragma once

#include <cmath>

#include "medeeg/core.hpp"

namespace medeeg {

struct AdamConfig {
  double lr{1e-3};
  double beta1{0.9};
  double beta2{0.999};
  double eps{1e-8};
};

// Adam over a flat parameter vector.
class Adam {
 public:
  Adam(Eigen::Index n, const AdamConfig& cfg) : cfg_(cfg), m_(Vector::Zero(n)), v_(Vector::Zero(n)) {}

  void step(Vector& params, const Vector& grad) {
    ++t_;
    m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
    v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    params.array() -= cfg_.lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.eps);
  }

  long steps() const { return t_; }

 private:
  AdamConfig cfg_;
  Vector m_, v_;
  long t_{0};
};

/// Numerically stable binary cross-entropy on a logit z for label y.
inline double bce_with_logit(double z, int y) {
  // -[y log s(z) + (1 - y) log(1 - s(z))] = softplus(z) - y z
  const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  return softplus - (y == 1 ? z : 0.0);
}

inline double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace medeeg
