#pragma once

#include "medeeg/core.hpp"

namespace medeeg::numerics {

struct EigenResult {
  Vector values;   // descending
  Matrix vectors;  // columns pair with values
};

struct SvdResult {
  Matrix u;      // m x r, column-orthonormal
  Vector sigma;  // r = min(m, n), descending, non-negative
  Matrix v;      // n x r, column-orthonormal
};

struct JacobiOptions {
  double tolerance{1e-12};  // off-diagonal Frobenius norm relative to ||A||_F
  int max_sweeps{64};
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations. Throws NotSymmetric
/// when A deviates from symmetry by more than 1e-10 relative, NoConvergence
/// after max_sweeps.
EigenResult sym_eig(const Matrix& a, const JacobiOptions& opts = {});

/// Thin SVD by one-sided (Hestenes) Jacobi. Tall inputs are first reduced to
/// their triangular QR factor. With compute_u = false the u member stays
/// empty for tall or square inputs.
SvdResult svd(const Matrix& x, int max_sweeps = 64, bool compute_u = true);

/// Solves A v = lambda B v for symmetric A and symmetric positive definite B by
/// Cholesky whitening. Eigenvectors are B-orthonormal.
EigenResult gen_sym_eig(const Matrix& a, const Matrix& b);

/// Lower Cholesky factor; throws NotPositiveDefinite.
Matrix cholesky(const Matrix& b);

/// Flips each column so that its entry of largest magnitude is positive.
void canonicalize_signs(Matrix& columns);

}  // namespace medeeg::numerics
