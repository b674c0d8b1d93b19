#include "loft/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace loft {

namespace {

double median_of(Vector sorted_copy) {
  std::sort(sorted_copy.begin(), sorted_copy.end());
  const Index n = sorted_copy.size();
  if (n % 2 == 1) return sorted_copy(n / 2);
  return 0.5 * (sorted_copy(n / 2 - 1) + sorted_copy(n / 2));
}

ReconstructionReport summarize(Vector errors) {
  ReconstructionReport report;
  report.mean = errors.mean();
  report.median = median_of(errors);
  report.max = errors.maxCoeff();
  report.errors = std::move(errors);
  return report;
}

// Rows of (z - mean) for a feature block; the mean must match the width.
Matrix centered(const Matrix& features, const Vector& mean) {
  require(features.rows() >= 1, "analysis: feature matrix must be non-empty");
  require(mean.size() == features.cols(),
          "analysis: mean length must match the feature dimension");
  require_finite(features, "analysis features");
  require_finite(mean, "analysis mean");
  return features.rowwise() - mean.transpose();
}

}  // namespace

SpectrumReport spectrum(const SymmetricMatrix& sigma, Index k) {
  require(k >= 1, "spectrum: k must be at least 1");
  const EigenDecomposition eig = sym_eig(sigma);
  const Index d = sigma.dim();
  const Index kk = std::min(k, d);

  SpectrumReport report;
  report.eigenvalues = eig.eigenvalues;
  report.trace = sigma.trace();
  const double lead = eig.eigenvalues(0);
  if (!(lead > 0.0)) {
    std::ostringstream msg;
    msg << "spectrum: leading eigenvalue " << lead << " is not positive";
    throw DegenerateCovarianceError(msg.str());
  }
  report.normalized = eig.eigenvalues.head(kk) / lead;

  double total = 0.0;
  for (Index i = 0; i < d; ++i) total += std::max(eig.eigenvalues(i), 0.0);
  report.cumulative = Vector::Zero(d);
  double running = 0.0;
  for (Index i = 0; i < d; ++i) {
    running += std::max(eig.eigenvalues(i), 0.0);
    report.cumulative(i) = running / total;
  }
  return report;
}

SpectrumReport spectrum(const CovarianceSummary& cov, Index k) {
  return spectrum(cov.sigma, k);
}

Index select_dim(const SymmetricMatrix& sigma, double fraction) {
  require(fraction > 0.0 && fraction <= 1.0, "select_dim: fraction must lie in (0, 1]");
  const EigenDecomposition eig = sym_eig(sigma);
  double total = 0.0;
  for (Index i = 0; i < eig.eigenvalues.size(); ++i)
    total += std::max(eig.eigenvalues(i), 0.0);
  if (!(total > 0.0))
    throw DegenerateCovarianceError("select_dim: spectrum has no positive mass");

  double running = 0.0;
  for (Index i = 0; i < eig.eigenvalues.size(); ++i) {
    running += std::max(eig.eigenvalues(i), 0.0);
    if (running / total >= fraction) return i + 1;
  }
  return eig.eigenvalues.size();
}

Index select_dim(const CovarianceSummary& cov, double fraction) {
  return select_dim(cov.sigma, fraction);
}

ReconstructionReport reconstruction_errors(const StiefelPoint& u,
                                           const Matrix& features,
                                           const Vector& mean) {
  require(features.cols() == u.d(),
          "reconstruction_errors: feature dimension must match the projector");
  const Matrix zbar = centered(features, mean);
  const Matrix residual = zbar - (zbar * u.mat()) * u.mat().transpose();
  return summarize(residual.rowwise().norm());
}

Vector projected_energies(const StiefelPoint& u, const Matrix& features,
                          const Vector& mean) {
  require(features.cols() == u.d(),
          "projected_energies: feature dimension must match the projector");
  const Matrix zbar = centered(features, mean);
  return ((zbar * u.mat()) * u.mat().transpose()).rowwise().norm();
}

SeparabilityReport separability_report(const Matrix& remain, const Matrix& forget,
                                       Index s) {
  require(remain.cols() == forget.cols(),
          "separability_report: splits must share one feature dimension");
  require(s >= 1 && s <= remain.cols(),
          "separability_report: expected 1 <= s <= feature dimension");
  const CovarianceSummary cov = covariance(remain, /*center=*/true);
  const StiefelPoint u = pca_init(cov, s);

  SeparabilityReport report;
  report.s = s;
  report.remain = reconstruction_errors(u, remain, cov.mean);
  report.forget = reconstruction_errors(u, forget, cov.mean);
  const Vector energies = projected_energies(u, forget, cov.mean);
  report.forget_projected_mean = energies.mean();
  report.forget_projected_max = energies.maxCoeff();
  report.error_ratio = report.remain.mean > 0.0
                           ? report.forget.mean / report.remain.mean
                           : std::numeric_limits<double>::infinity();
  return report;
}

}  // namespace loft
