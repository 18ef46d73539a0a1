#include "medeeg/lda.hpp"

#include <cmath>

#include "medeeg/error.hpp"

namespace medeeg::lda {

LdaModel fit_lda(const Matrix& features, std::span<const int> labels) {
  const auto n = features.rows();
  const auto d = features.cols();
  if (static_cast<std::size_t>(n) != labels.size())
    throw Error(ErrorCode::DimensionMismatch, "feature rows and labels differ in count");
  if (d < 1) throw Error(ErrorCode::DimensionMismatch, "feature dimension must be >= 1");

  Vector sum0 = Vector::Zero(d), sum1 = Vector::Zero(d);
  Eigen::Index n0 = 0, n1 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels[static_cast<std::size_t>(i)] == 1) {
      sum1 += features.row(i).transpose();
      ++n1;
    } else {
      sum0 += features.row(i).transpose();
      ++n0;
    }
  }
  if (n0 == 0 || n1 == 0) throw Error(ErrorCode::SingleClass, "LDA needs samples from both classes");

  LdaModel m;
  m.mean0 = sum0 / static_cast<double>(n0);
  m.mean1 = sum1 / static_cast<double>(n1);

  Matrix scatter = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector& mu = labels[static_cast<std::size_t>(i)] == 1 ? m.mean1 : m.mean0;
    const Vector r = features.row(i).transpose() - mu;
    scatter.noalias() += r * r.transpose();
  }
  const double dof = static_cast<double>(std::max<Eigen::Index>(n - 2, 1));
  scatter /= dof;

  const double tr = scatter.trace();
  m.pooled_cov_ridge = tr > 0.0 ? 1e-6 * tr / static_cast<double>(d) : 1.0;
  scatter.diagonal().array() += m.pooled_cov_ridge;

  Vector w = scatter.ldlt().solve(m.mean1 - m.mean0);
  const double norm = w.norm();
  if (norm > 0.0 && std::isfinite(norm)) {
    w /= norm;
  } else {
    // Identical class means carry no direction; any unit vector is a valid
    // (uninformative) discriminant.
    w = Vector::Unit(d, 0);
  }
  m.direction = std::move(w);
  m.threshold = 0.5 * (m.direction.dot(m.mean0) + m.direction.dot(m.mean1));
  return m;
}

double project(const LdaModel& model, const Vector& x) {
  if (x.size() != model.dim()) throw Error(ErrorCode::DimensionMismatch, "input dimension differs from model");
  return model.direction.dot(x);
}

int classify(const LdaModel& model, const Vector& x) { return project(model, x) > model.threshold ? 1 : 0; }

}  // namespace medeeg::lda
