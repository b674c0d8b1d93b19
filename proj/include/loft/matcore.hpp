#pragma once

#include "loft/common.hpp"

#include <cstdint>
#include <utility>

namespace loft {

/// Dense symmetric matrix. Stores (A + A^T)/2 of whatever it is given, so the
/// symmetry invariant holds exactly; symmetric input passes through unchanged.
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(const Matrix& a);

  const Matrix& mat() const { return mat_; }
  Index dim() const { return mat_.rows(); }
  double trace() const { return mat_.trace(); }

 private:
  Matrix mat_;
};

/// Covariance of a sample set together with the pieces needed to pool or
/// re-center it later.
struct CovarianceSummary {
  SymmetricMatrix sigma;
  double trace = 0.0;
  std::uint64_t samples = 0;
  Vector mean;

  Index dim() const { return sigma.dim(); }
};

/// Eigendecomposition of a symmetric matrix, eigenvalues sorted descending,
/// eigenvectors[:, i] paired with eigenvalues[i].
struct EigenDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;
};

/// Covariance over the rows of `features` in a single streaming pass.
/// Divisor is 1/n; `center` subtracts the sample mean (on by default).
CovarianceSummary covariance(const Matrix& features, bool center = true);

/// Full symmetric eigendecomposition with deterministic ordering and signs:
/// eigenvalues descending (ties keep their pre-sort order), each eigenvector
/// scaled so its largest-magnitude entry is positive (first such index on ties).
/// Small problems use cyclic Jacobi sweeps (off-diagonal threshold
/// 1e-12 * ||A||_F, at most 100 sweeps); large ones a dense solver with the
/// same ordering and sign conventions applied.
EigenDecomposition sym_eig(const SymmetricMatrix& a);

/// Thin QR of a d x s matrix (d >= s): Q is d x s with orthonormal columns, R
/// upper triangular with strictly positive diagonal (signs fixed to make the
/// factorization unique). Throws DegenerateDirectionError if any |R_ii| falls
/// at or below 1e-12.
std::pair<Matrix, Matrix> thin_qr(const Matrix& a);

/// Checked product: dimension mismatches throw instead of asserting.
Matrix matmul(const Matrix& a, const Matrix& b);

double trace(const Matrix& a);
double frobenius_norm(const Matrix& a);

}  // namespace loft
