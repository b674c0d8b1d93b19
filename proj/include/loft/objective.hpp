#pragma once

#include "loft/stiefel.hpp"

#include <optional>
#include <utility>

namespace loft {

/// Which objective terms participate in evaluation and gradients. A disabled
/// term is reported as 0 and contributes nothing to the gradient.
enum class TermSelection { kBoth, kForgetOnly, kRemainOnly };

/// The covariances the projector is fit against: forgetting (fg), remaining
/// (rm), and optionally the pooled previously-forgotten rounds (fgp).
/// All must share one dimension and have strictly positive trace.
struct ObjectiveInputs {
  ObjectiveInputs(SymmetricMatrix fg, SymmetricMatrix rm,
                  std::optional<SymmetricMatrix> fgp = std::nullopt);

  const SymmetricMatrix& sigma_fg() const { return sigma_fg_; }
  const SymmetricMatrix& sigma_rm() const { return sigma_rm_; }
  const std::optional<SymmetricMatrix>& sigma_fgp() const { return sigma_fgp_; }
  Index dim() const { return sigma_fg_.dim(); }

 private:
  SymmetricMatrix sigma_fg_;
  SymmetricMatrix sigma_rm_;
  std::optional<SymmetricMatrix> sigma_fgp_;
};

/// Value of the squared-ratio objective and its per-term breakdown;
/// total == j_fg + j_rm (+ j_fgp) by construction.
struct ObjectiveValue {
  double total = 0.0;
  double j_fg = 0.0;
  double j_rm = 0.0;
  std::optional<double> j_fgp;
};

/// J(U) = (Tr(U^T S_fg U)/Tr(S_fg))^2
///      + ((Tr(S_rm) - Tr(U U^T S_rm U U^T))/Tr(S_rm))^2
///      [+ (Tr(U^T S_fgp U)/Tr(S_fgp))^2].
/// The Matrix overload evaluates the same ambient expression without assuming
/// U^T U = I, so finite-difference probes stay meaningful off the manifold.
ObjectiveValue eval_objective(const Matrix& u, const ObjectiveInputs& inputs,
                              TermSelection terms = TermSelection::kBoth);
ObjectiveValue eval_objective(const StiefelPoint& u, const ObjectiveInputs& inputs,
                              TermSelection terms = TermSelection::kBoth);

/// Euclidean (ambient) gradient of the selected terms at U:
///   d j_fg = (4 t_fg / Tr(S_fg)) S_fg U,            t_fg = Tr(U^T S_fg U)/Tr(S_fg)
///   d j_rm = -(4 t_rm / Tr(S_rm)) (S_rm U U^T U + U U^T S_rm U),
///            t_rm = (Tr(S_rm) - Tr(U U^T S_rm U U^T))/Tr(S_rm)
/// plus the fg-shaped term for fgp when present.
Matrix euclid_grad(const Matrix& u, const ObjectiveInputs& inputs,
                   TermSelection terms = TermSelection::kBoth);
Matrix euclid_grad(const StiefelPoint& u, const ObjectiveInputs& inputs,
                   TermSelection terms = TermSelection::kBoth);

struct ObjectiveEval {
  ObjectiveValue value;
  Matrix grad;
};

/// Value and ambient gradient in one pass, sharing the S*U products; agrees
/// with eval_objective/euclid_grad up to summation order.
ObjectiveEval eval_objective_with_grad(const Matrix& u, const ObjectiveInputs& inputs,
                                       TermSelection terms = TermSelection::kBoth);

/// Minimizer of Tr(V^T M V) over orthonormal V with m columns: the bottom-m
/// eigenvector frame, with the attained value (sum of the m smallest
/// eigenvalues) alongside.
std::pair<StiefelPoint, double> proposition1_oracle(const SymmetricMatrix& m,
                                                    Index columns);

}  // namespace loft
