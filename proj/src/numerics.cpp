#include "medeeg/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "medeeg/error.hpp"

namespace medeeg::numerics {
namespace {

std::vector<Eigen::Index> descending_order(const Vector& values) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values(a) > values(b); });
  return order;
}

void check_symmetric(const Matrix& a, const char* what) {
  if (a.rows() != a.cols()) throw Error(ErrorCode::DimensionMismatch, std::string(what) + " is not square");
  const double norm = a.norm();
  if (!a.allFinite()) throw Error(ErrorCode::InvalidArgument, std::string(what) + " has non-finite entries");
  if ((a - a.transpose()).norm() > 1e-10 * std::max(norm, 1e-300))
    throw Error(ErrorCode::NotSymmetric, std::string(what) + " is not symmetric");
}

// One-sided Jacobi on the columns of g (m >= n). Accumulates rotations into v.
void hestenes(Matrix& g, Matrix& v, int max_sweeps) {
  const Eigen::Index n = g.cols();
  const double tol = 1e-15;
  Vector sq(n);
  for (int sweep = 0;; ++sweep) {
    if (sweep >= max_sweeps) throw Error(ErrorCode::NoConvergence, "one-sided Jacobi did not converge");
    for (Eigen::Index j = 0; j < n; ++j) sq(j) = g.col(j).squaredNorm();
    const double floor = 1e-300 + 1e-30 * sq.sum();
    bool rotated = false;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double alpha = sq(p);
        const double beta = sq(q);
        if (alpha < floor || beta < floor) continue;
        const double gamma = g.col(p).dot(g.col(q));
        if (std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        double* gp = g.col(p).data();
        double* gq = g.col(q).data();
        for (Eigen::Index k = 0; k < g.rows(); ++k) {
          const double a = gp[k], b = gq[k];
          gp[k] = c * a - s * b;
          gq[k] = s * a + c * b;
        }
        double* vp = v.col(p).data();
        double* vq = v.col(q).data();
        for (Eigen::Index k = 0; k < v.rows(); ++k) {
          const double a = vp[k], b = vq[k];
          vp[k] = c * a - s * b;
          vq[k] = s * a + c * b;
        }
        sq(p) = alpha - t * gamma;
        sq(q) = beta + t * gamma;
      }
    }
    if (!rotated) return;
  }
}

// Replaces zero columns of u with unit vectors orthogonal to the others.
void complete_orthonormal(Matrix& u, const std::vector<bool>& valid) {
  const Eigen::Index m = u.rows();
  Eigen::Index probe = 0;
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    if (valid[static_cast<std::size_t>(j)]) continue;
    while (probe < m) {
      Vector cand = Vector::Unit(m, probe++);
      for (int pass = 0; pass < 2; ++pass)
        for (Eigen::Index i = 0; i < u.cols(); ++i)
          if (i != j && (valid[static_cast<std::size_t>(i)] || i < j)) cand -= u.col(i).dot(cand) * u.col(i);
      const double nrm = cand.norm();
      if (nrm > 1e-8) {
        u.col(j) = cand / nrm;
        break;
      }
    }
  }
}

SvdResult svd_tall(const Matrix& x, int max_sweeps, bool compute_u) {
  const Eigen::Index m = x.rows();
  const Eigen::Index n = x.cols();
  Matrix g;
  Eigen::HouseholderQR<Matrix> qr;
  const bool reduce = m > n + n / 2;
  if (reduce) {
    qr.compute(x);
    g = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  } else {
    g = x;
  }
  Matrix v = Matrix::Identity(n, n);
  hestenes(g, v, max_sweeps);

  Vector sigma(n);
  for (Eigen::Index j = 0; j < n; ++j) sigma(j) = g.col(j).norm();
  const auto order = descending_order(sigma);

  SvdResult r;
  r.sigma.resize(n);
  r.v.resize(n, n);
  Matrix gs(g.rows(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    r.sigma(j) = sigma(order[j]);
    r.v.col(j) = v.col(order[j]);
    gs.col(j) = g.col(order[j]);
  }

  const double cutoff = std::max(r.sigma.size() ? r.sigma(0) : 0.0, 1e-300) * 1e-14 * static_cast<double>(m);
  std::vector<bool> valid(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    valid[static_cast<std::size_t>(j)] = r.sigma(j) > cutoff;
    // Flip so that the largest-magnitude entry of v_j is positive.
    Eigen::Index arg;
    r.v.col(j).cwiseAbs().maxCoeff(&arg);
    if (r.v(arg, j) < 0.0) {
      r.v.col(j) = -r.v.col(j);
      gs.col(j) = -gs.col(j);
    }
  }
  if (!compute_u) return r;

  Matrix ur(g.rows(), n);
  for (Eigen::Index j = 0; j < n; ++j)
    ur.col(j) = valid[static_cast<std::size_t>(j)] ? Vector(gs.col(j) / r.sigma(j)) : Vector::Zero(g.rows());
  complete_orthonormal(ur, valid);
  if (reduce) {
    Matrix padded = Matrix::Zero(m, n);
    padded.topRows(n) = ur;
    r.u = qr.householderQ() * padded;
  } else {
    r.u = std::move(ur);
  }
  return r;
}

}  // namespace

void canonicalize_signs(Matrix& columns) {
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    Eigen::Index arg;
    columns.col(j).cwiseAbs().maxCoeff(&arg);
    if (columns(arg, j) < 0.0) columns.col(j) = -columns.col(j);
  }
}

EigenResult sym_eig(const Matrix& input, const JacobiOptions& opts) {
  check_symmetric(input, "matrix");
  const Eigen::Index n = input.rows();
  Matrix a = 0.5 * (input + input.transpose());
  Matrix v = Matrix::Identity(n, n);
  const double norm = a.norm();

  auto off_norm = [&] {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  int sweep = 0;
  while (off_norm() > opts.tolerance * norm) {
    if (sweep++ >= opts.max_sweeps) throw Error(ErrorCode::NoConvergence, "Jacobi eigensolver exceeded max sweeps");
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        const double app = a(p, p), aqq = a(q, q);
        double* cp = a.col(p).data();
        double* cq = a.col(q).data();
        for (Eigen::Index k = 0; k < n; ++k) {
          const double x = cp[k], y = cq[k];
          cp[k] = c * x - s * y;
          cq[k] = s * x + c * y;
        }
        // Rows p and q mirror the rotated columns; the 2x2 block is set exactly.
        for (Eigen::Index k = 0; k < n; ++k) {
          a(p, k) = cp[k];
          a(q, k) = cq[k];
        }
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;

        double* vp = v.col(p).data();
        double* vq = v.col(q).data();
        for (Eigen::Index k = 0; k < n; ++k) {
          const double x = vp[k], y = vq[k];
          vp[k] = c * x - s * y;
          vq[k] = s * x + c * y;
        }
      }
    }
  }

  Vector diag = a.diagonal();
  const auto order = descending_order(diag);
  EigenResult r;
  r.values.resize(n);
  r.vectors.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    r.values(j) = diag(order[j]);
    r.vectors.col(j) = v.col(order[j]);
  }
  canonicalize_signs(r.vectors);
  return r;
}

SvdResult svd(const Matrix& x, int max_sweeps, bool compute_u) {
  if (!x.allFinite()) throw Error(ErrorCode::InvalidArgument, "svd input has non-finite entries");
  if (x.rows() >= x.cols()) return svd_tall(x, max_sweeps, compute_u);
  SvdResult t = svd_tall(x.transpose(), max_sweeps, true);
  SvdResult r{std::move(t.v), std::move(t.sigma), std::move(t.u)};
  // Sign convention is defined on v; re-apply it after the swap.
  for (Eigen::Index j = 0; j < r.v.cols(); ++j) {
    Eigen::Index arg;
    r.v.col(j).cwiseAbs().maxCoeff(&arg);
    if (r.v(arg, j) < 0.0) {
      r.v.col(j) = -r.v.col(j);
      r.u.col(j) = -r.u.col(j);
    }
  }
  return r;
}

Matrix cholesky(const Matrix& b) {
  check_symmetric(b, "B");
  const Eigen::Index n = b.rows();
  Matrix l = Matrix::Zero(n, n);
  const double scale = std::max(b.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = b(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > 1e-14 * scale)) throw Error(ErrorCode::NotPositiveDefinite, "Cholesky pivot " + std::to_string(j) + " is not positive");
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) l(i, j) = (b(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
  }
  return l;
}

EigenResult gen_sym_eig(const Matrix& a, const Matrix& b) {
  check_symmetric(a, "A");
  if (a.rows() != b.rows() || b.rows() != b.cols()) throw Error(ErrorCode::DimensionMismatch, "A and B differ in shape");
  const Matrix l = cholesky(b);
  const auto lower = l.triangularView<Eigen::Lower>();
  const Matrix y = lower.solve(a);                   // L^-1 A
  Matrix c = lower.solve(Matrix(y.transpose()));     // L^-1 A L^-T
  c = 0.5 * (c + c.transpose());
  EigenResult white = sym_eig(c);
  EigenResult r;
  r.values = white.values;
  r.vectors = l.transpose().triangularView<Eigen::Upper>().solve(white.vectors);
  canonicalize_signs(r.vectors);
  return r;
}

}  // namespace medeeg::numerics
