#pragma once

#include "loft/matcore.hpp"

#include <cstdint>

namespace loft {

/// A d x s matrix with orthonormal columns. Construction validates
/// ||U^T U - I||_F <= 1e-6; every retraction re-establishes the invariant.
class StiefelPoint {
 public:
  explicit StiefelPoint(const Matrix& u);

  const Matrix& mat() const { return u_; }
  Index d() const { return u_.rows(); }
  Index s() const { return u_.cols(); }

  /// ||U^T U - I||_F, the orthonormality residual of the stored matrix.
  double ortho_residual() const;

 private:
  Matrix u_;
};

/// Ambient direction attached to a base point; produced by tangent_project,
/// which enforces the tangency condition U^T xi + xi^T U = 0.
struct TangentVector {
  Matrix xi;
};

/// Projects an ambient gradient G onto the tangent space at U:
/// xi = G - U sym(U^T G) with sym(A) = (A + A^T)/2.
TangentVector tangent_project(const StiefelPoint& u, const Matrix& ambient);

/// QR retraction: the sign-fixed thin-QR Q factor of (U + xi). The result
/// depends only on the sum U + xi; a zero step returns U bit-for-bit.
StiefelPoint retract_qr(const StiefelPoint& u, const TangentVector& xi);

/// Orthonormalized standard-Gaussian matrix, deterministic in the seed.
StiefelPoint random_stiefel(Index d, Index s, std::uint64_t seed);

/// Frame of the top-s eigenvectors (principal subspace) of a covariance.
StiefelPoint pca_init(const CovarianceSummary& cov, Index s);
StiefelPoint pca_init(const SymmetricMatrix& sigma, Index s);

}  // namespace loft
