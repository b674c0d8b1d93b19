#pragma once

#include "loft/stiefel.hpp"

namespace loft {

/// Top of an eigenvalue spectrum, normalized by the leading eigenvalue, plus
/// the cumulative explained-variance fractions over the positive part.
struct SpectrumReport {
  Vector eigenvalues;  // full spectrum, descending
  Vector normalized;   // top-k, divided by eigenvalues(0)
  Vector cumulative;   // cumulative fraction of total positive variance, length d
  double trace = 0.0;
};

/// Summary statistics over per-sample reconstruction errors
/// e_i = ||U U^T zbar_i - zbar_i||_2.
struct ReconstructionReport {
  Vector errors;
  double mean = 0.0;
  double median = 0.0;
  double max = 0.0;
};

/// Contrast between the remaining and forgetting splits under the projector
/// fit to the remaining split: reconstruction-error distributions for both,
/// and the projected-energy statistic ||U U^T zbar|| for forgetting samples.
struct SeparabilityReport {
  Index s = 0;
  ReconstructionReport remain;
  ReconstructionReport forget;
  double forget_projected_mean = 0.0;
  double forget_projected_max = 0.0;
  double error_ratio = 0.0;  // forget.mean / remain.mean
};

/// Top-k spectrum of a covariance; k is clamped to the dimension. Throws
/// DegenerateCovarianceError when the leading eigenvalue is not positive.
SpectrumReport spectrum(const SymmetricMatrix& sigma, Index k = 12);
SpectrumReport spectrum(const CovarianceSummary& cov, Index k = 12);

/// Smallest s whose top-s eigenvalues explain at least `fraction` of the
/// total positive variance; fraction must lie in (0, 1].
Index select_dim(const CovarianceSummary& cov, double fraction);
Index select_dim(const SymmetricMatrix& sigma, double fraction);

/// Per-row reconstruction errors of features centered at `mean`.
ReconstructionReport reconstruction_errors(const StiefelPoint& u,
                                           const Matrix& features,
                                           const Vector& mean);

/// Per-row projected energies ||U U^T (z - mean)||_2.
Vector projected_energies(const StiefelPoint& u, const Matrix& features,
                          const Vector& mean);

/// Fits the projector to the remaining split (top-s principal subspace of its
/// covariance, centered) and measures both splits in that frame, centering
/// with the remaining split's mean.
SeparabilityReport separability_report(const Matrix& remain, const Matrix& forget,
                                       Index s);

}  // namespace loft
