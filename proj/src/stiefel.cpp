#include "loft/stiefel.hpp"

#include <random>
#include <sstream>

namespace loft {

namespace {
constexpr double kOrthoTolerance = 1e-6;
}

StiefelPoint::StiefelPoint(const Matrix& u) : u_(u) {
  require(u_.cols() >= 1 && u_.rows() >= u_.cols(),
          "StiefelPoint: expected a d x s matrix with d >= s >= 1");
  require_finite(u_, "StiefelPoint");
  const double res = ortho_residual();
  if (!(res <= kOrthoTolerance)) {
    std::ostringstream msg;
    msg << "StiefelPoint: columns are not orthonormal (||U^T U - I||_F = " << res
        << " > " << kOrthoTolerance << ")";
    throw InvalidInputError(msg.str());
  }
}

double StiefelPoint::ortho_residual() const {
  const Index s = u_.cols();
  return (u_.transpose() * u_ - Matrix::Identity(s, s)).norm();
}

TangentVector tangent_project(const StiefelPoint& u, const Matrix& ambient) {
  require(ambient.rows() == u.d() && ambient.cols() == u.s(),
          "tangent_project: direction shape must match the base point");
  require_finite(ambient, "tangent_project");
  const Matrix utg = u.mat().transpose() * ambient;
  const Matrix sym = 0.5 * (utg + utg.transpose());
  return TangentVector{ambient - u.mat() * sym};
}

StiefelPoint retract_qr(const StiefelPoint& u, const TangentVector& xi) {
  require(xi.xi.rows() == u.d() && xi.xi.cols() == u.s(),
          "retract_qr: step shape must match the base point");
  require_finite(xi.xi, "retract_qr");
  const Matrix sum = u.mat() + xi.xi;
  if (sum == u.mat()) return u;
  return StiefelPoint(thin_qr(sum).first);
}

StiefelPoint random_stiefel(Index d, Index s, std::uint64_t seed) {
  require(s >= 1 && d >= s, "random_stiefel: expected d >= s >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(d, s);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < s; ++j) g(i, j) = gauss(rng);
  return StiefelPoint(thin_qr(g).first);
}

StiefelPoint pca_init(const SymmetricMatrix& sigma, Index s) {
  require(s >= 1 && s <= sigma.dim(), "pca_init: expected 1 <= s <= dim");
  const EigenDecomposition eig = sym_eig(sigma);
  return StiefelPoint(eig.eigenvectors.leftCols(s));
}

StiefelPoint pca_init(const CovarianceSummary& cov, Index s) {
  return pca_init(cov.sigma, s);
}

}  // namespace loft
