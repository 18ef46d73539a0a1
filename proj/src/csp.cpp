#include "medeeg/csp.hpp"

#include <cmath>

#include "medeeg/error.hpp"
#include "medeeg/numerics.hpp"

namespace medeeg::csp {
namespace {

// Block size for the parallel covariance sum. Fixed so the reduction order,
// and therefore the result, does not depend on the number of threads.
constexpr std::size_t kBlock = 16;

Matrix normalized_scatter(const Matrix& x) {
  Matrix s = Matrix::Zero(x.rows(), x.rows());
  s.selfadjointView<Eigen::Lower>().rankUpdate(x);
  s = s.selfadjointView<Eigen::Lower>();
  const double tr = s.trace();
  if (!(tr > 0.0) || !std::isfinite(tr)) throw Error(ErrorCode::DegenerateEpoch, "epoch has zero power");
  return s / tr;
}

void check_epochs(std::span<const Epoch> epochs) {
  if (epochs.empty()) throw Error(ErrorCode::EmptyClass, "no epochs for class covariance");
  const auto rows = epochs.front().data().rows();
  const auto cols = epochs.front().data().cols();
  for (const auto& e : epochs) {
    if (e.data().rows() != rows || e.data().cols() != cols)
      throw Error(ErrorCode::DimensionMismatch, "epochs differ in shape");
    if (e.label != epochs.front().label) throw Error(ErrorCode::InvalidArgument, "epochs mix both classes");
  }
}

}  // namespace

ClassCovariance class_covariance(std::span<const Epoch> epochs, Exec exec) {
  check_epochs(epochs);
  const auto c = epochs.front().data().rows();
  const std::size_t n = epochs.size();
  Matrix sum = Matrix::Zero(c, c);

  // Fixed blocks summed in block order: the result does not depend on the
  // thread count or on whether the blocks ran in parallel.
  const std::size_t n_blocks = (n + kBlock - 1) / kBlock;
  std::vector<Matrix> partial(n_blocks, Matrix::Zero(c, c));
  auto block = [&](std::size_t b) {
    for (std::size_t i = b * kBlock; i < std::min(n, (b + 1) * kBlock); ++i)
      partial[b] += normalized_scatter(epochs[i].data());
  };
  if (exec == Exec::Serial) {
    for (std::size_t b = 0; b < n_blocks; ++b) block(b);
  } else {
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (std::size_t b = 0; b < n_blocks; ++b) {
      try {
        block(b);
      } catch (...) {
#pragma omp critical
        failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  }
  for (const auto& p : partial) sum += p;

  Matrix cov = sum / static_cast<double>(n);
  cov = 0.5 * (cov + cov.transpose());
  return {std::move(cov), n};
}

double objective(const Vector& w, const Matrix& numerator, const Matrix& denominator, double alpha) {
  const double num = w.dot(numerator * w);
  const double den = w.dot(denominator * w) + alpha * w.squaredNorm();
  return num / den;
}

SpatialFilterBank fit_csp(const ClassCovariance& cov1, const ClassCovariance& cov0, double alpha, int n_pairs) {
  const auto c = cov1.matrix.rows();
  if (cov0.matrix.rows() != c) throw Error(ErrorCode::DimensionMismatch, "class covariances differ in size");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw Error(ErrorCode::InvalidParams, "alpha must be >= 0");
  if (n_pairs < 1 || n_pairs > c / 2)
    throw Error(ErrorCode::InvalidParams, "n_pairs must be in [1, channels/2]");

  const Matrix eye = Matrix::Identity(c, c);
  SpatialFilterBank bank;
  bank.n_pairs = n_pairs;
  bank.alpha = alpha;
  bank.filters.resize(c, 2 * n_pairs);
  bank.objective_values.resize(2 * n_pairs);

  auto half = [&](const Matrix& num, const Matrix& den, int offset) {
    numerics::EigenResult eig;
    try {
      eig = numerics::gen_sym_eig(num, den + alpha * eye);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NotPositiveDefinite)
        throw Error(ErrorCode::RankDeficient, "denominator covariance is singular; use alpha > 0");
      throw;
    }
    for (int k = 0; k < n_pairs; ++k) {
      Vector w = eig.vectors.col(k).normalized();
      bank.filters.col(offset + k) = w;
      bank.objective_values(offset + k) = objective(w, num, den, alpha);
    }
  };
  half(cov1.matrix, cov0.matrix, 0);
  half(cov0.matrix, cov1.matrix, n_pairs);
  return bank;
}

Vector log_variance_features(const Matrix& x, const SpatialFilterBank& bank) {
  if (x.rows() != bank.n_channels())
    throw Error(ErrorCode::DimensionMismatch, "epoch channels do not match filter dimension");
  const Matrix projected = bank.filters.transpose() * x;  // features x L
  const double inv_len = 1.0 / static_cast<double>(x.cols());
  Vector out(projected.rows());
  for (Eigen::Index k = 0; k < projected.rows(); ++k) {
    const double mean = projected.row(k).sum() * inv_len;
    const double var = (projected.row(k).array() - mean).square().sum() * inv_len;
    out(k) = std::log(std::max(var, kLogVarianceFloor));
  }
  return out;
}

Vector log_variance_features(const Epoch& epoch, const SpatialFilterBank& bank) {
  return log_variance_features(epoch.data(), bank);
}

Matrix log_variance_features(std::span<const Epoch> epochs, const SpatialFilterBank& bank, Exec exec) {
  const auto n = static_cast<Eigen::Index>(epochs.size());
  Matrix out(n, bank.n_features());
  if (exec == Exec::Parallel) {
    std::exception_ptr failure;
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
      try {
        out.row(i) = log_variance_features(epochs[static_cast<std::size_t>(i)], bank).transpose();
      } catch (...) {
#pragma omp critical
        failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  } else {
    for (Eigen::Index i = 0; i < n; ++i)
      out.row(i) = log_variance_features(epochs[static_cast<std::size_t>(i)], bank).transpose();
  }
  return out;
}

}  // namespace medeeg::csp
