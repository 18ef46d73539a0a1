#pragma once

#include <cmath>
#include <random>

#include "medeeg/core.hpp"

namespace testutil {

using medeeg::Matrix;
using medeeg::Vector;

inline Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n(rng);
  return m;
}

inline Matrix random_spd(Eigen::Index n, std::mt19937_64& rng) {
  const Matrix g = gaussian(n, n, rng);
  return g * g.transpose() + 0.5 * Matrix::Identity(n, n);
}

inline double rms(const std::vector<double>& x, std::size_t from = 0, std::size_t to = 0) {
  if (to == 0) to = x.size();
  double s = 0.0;
  for (std::size_t i = from; i < to; ++i) s += x[i] * x[i];
  return std::sqrt(s / static_cast<double>(to - from));
}

inline std::vector<double> tone(double f_hz, double fs, std::size_t n, double amp = 1.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2.0 * M_PI * f_hz * static_cast<double>(i) / fs);
  return x;
}

inline medeeg::Recording recording(const Matrix& data, medeeg::Condition c, const std::string& id = "S01") {
  medeeg::Recording r;
  r.subject_id = id;
  r.condition = c;
  r.data = data;
  return r;
}

// Two-class epoch set whose class 1 has extra variance along `direction`.
inline medeeg::EpochSet planted_epochs(Eigen::Index channels, Eigen::Index len, int per_class, const Vector& direction,
                                       double extra_sd, std::mt19937_64& rng, std::uint32_t ordinal = 0) {
  medeeg::EpochSet set(channels, len);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < per_class; ++i) {
      Matrix x = gaussian(channels, len, rng);
      if (c == 1)
        for (Eigen::Index t = 0; t < len; ++t) x.col(t) += extra_sd * n(rng) * direction;
      const auto cond = c == 1 ? medeeg::Condition::Meditation : medeeg::Condition::Rest;
      set.push_back(medeeg::make_epoch(std::move(x), cond, "S" + std::to_string(ordinal), static_cast<std::size_t>(i),
                                       medeeg::make_uid(ordinal, cond, static_cast<std::uint32_t>(i))));
    }
  }
  return set;
}

}  // namespace testutil
