#include "loft/objective.hpp"

#include <sstream>

namespace loft {

namespace {

void require_positive_trace(const SymmetricMatrix& s, const char* name) {
  if (!(s.trace() > 0.0)) {
    std::ostringstream msg;
    msg << "objective: Tr(" << name << ") = " << s.trace()
        << " but a strictly positive trace is required";
    throw DegenerateCovarianceError(msg.str());
  }
}

bool use_fg(TermSelection t) { return t != TermSelection::kRemainOnly; }
bool use_rm(TermSelection t) { return t != TermSelection::kForgetOnly; }

// Captured-ratio pieces shared by value and gradient. For the fg-shaped terms
// t = Tr(U^T S U)/Tr(S); for rm t = (Tr(S) - Tr(U U^T S U U^T))/Tr(S), kept in
// the general non-orthonormal form Tr((U^T S U)(U^T U)).
double fg_ratio(const Matrix& u, const SymmetricMatrix& s) {
  return (u.transpose() * (s.mat() * u)).trace() / s.trace();
}

double rm_ratio(const Matrix& u, const SymmetricMatrix& s) {
  const Matrix su = s.mat() * u;
  const Matrix m = u.transpose() * su;
  const Matrix c = u.transpose() * u;
  return (s.trace() - (m * c).trace()) / s.trace();
}

}  // namespace

ObjectiveInputs::ObjectiveInputs(SymmetricMatrix fg, SymmetricMatrix rm,
                                 std::optional<SymmetricMatrix> fgp)
    : sigma_fg_(std::move(fg)), sigma_rm_(std::move(rm)), sigma_fgp_(std::move(fgp)) {
  require(sigma_fg_.dim() == sigma_rm_.dim(),
          "objective: fg and rm covariances must share one dimension");
  if (sigma_fgp_)
    require(sigma_fgp_->dim() == sigma_fg_.dim(),
            "objective: fgp covariance dimension must match fg and rm");
  require_positive_trace(sigma_fg_, "S_fg");
  require_positive_trace(sigma_rm_, "S_rm");
  if (sigma_fgp_) require_positive_trace(*sigma_fgp_, "S_fgp");
}

ObjectiveValue eval_objective(const Matrix& u, const ObjectiveInputs& inputs,
                              TermSelection terms) {
  require(u.rows() == inputs.dim() && u.cols() >= 1 && u.cols() <= u.rows(),
          "eval_objective: U shape must be d x s with 1 <= s <= d");
  require_finite(u, "eval_objective");

  ObjectiveValue value;
  if (use_fg(terms)) {
    const double t = fg_ratio(u, inputs.sigma_fg());
    value.j_fg = t * t;
  }
  if (use_rm(terms)) {
    const double t = rm_ratio(u, inputs.sigma_rm());
    value.j_rm = t * t;
  }
  value.total = value.j_fg + value.j_rm;
  if (inputs.sigma_fgp()) {
    double j = 0.0;
    if (use_fg(terms)) {
      const double t = fg_ratio(u, *inputs.sigma_fgp());
      j = t * t;
    }
    value.j_fgp = j;
    value.total += j;
  }
  return value;
}

ObjectiveValue eval_objective(const StiefelPoint& u, const ObjectiveInputs& inputs,
                              TermSelection terms) {
  return eval_objective(u.mat(), inputs, terms);
}

Matrix euclid_grad(const Matrix& u, const ObjectiveInputs& inputs,
                   TermSelection terms) {
  require(u.rows() == inputs.dim() && u.cols() >= 1 && u.cols() <= u.rows(),
          "euclid_grad: U shape must be d x s with 1 <= s <= d");
  require_finite(u, "euclid_grad");

  Matrix grad = Matrix::Zero(u.rows(), u.cols());
  if (use_fg(terms)) {
    const SymmetricMatrix& s = inputs.sigma_fg();
    grad.noalias() += (4.0 * fg_ratio(u, s) / s.trace()) * (s.mat() * u);
    if (inputs.sigma_fgp()) {
      const SymmetricMatrix& p = *inputs.sigma_fgp();
      grad.noalias() += (4.0 * fg_ratio(u, p) / p.trace()) * (p.mat() * u);
    }
  }
  if (use_rm(terms)) {
    const SymmetricMatrix& s = inputs.sigma_rm();
    const Matrix su = s.mat() * u;
    const Matrix uut_su = u * (u.transpose() * su);
    const Matrix su_utu = su * (u.transpose() * u);
    grad.noalias() -= (4.0 * rm_ratio(u, s) / s.trace()) * (su_utu + uut_su);
  }
  return grad;
}

Matrix euclid_grad(const StiefelPoint& u, const ObjectiveInputs& inputs,
                   TermSelection terms) {
  return euclid_grad(u.mat(), inputs, terms);
}

ObjectiveEval eval_objective_with_grad(const Matrix& u, const ObjectiveInputs& inputs,
                                       TermSelection terms) {
  require(u.rows() == inputs.dim() && u.cols() >= 1 && u.cols() <= u.rows(),
          "eval_objective_with_grad: U shape must be d x s with 1 <= s <= d");
  require_finite(u, "eval_objective_with_grad");

  ObjectiveEval out{ObjectiveValue{}, Matrix::Zero(u.rows(), u.cols())};
  const auto add_fg_shaped = [&](const SymmetricMatrix& s) {
    const Matrix su = s.mat() * u;
    const double t = u.cwiseProduct(su).sum() / s.trace();
    out.grad.noalias() += (4.0 * t / s.trace()) * su;
    return t * t;
  };

  if (use_fg(terms)) out.value.j_fg = add_fg_shaped(inputs.sigma_fg());
  if (use_rm(terms)) {
    const SymmetricMatrix& s = inputs.sigma_rm();
    const Matrix su = s.mat() * u;
    const Matrix m = u.transpose() * su;
    const Matrix c = u.transpose() * u;
    const double captured = m.cwiseProduct(c.transpose()).sum();
    const double t = (s.trace() - captured) / s.trace();
    out.value.j_rm = t * t;
    out.grad.noalias() -= (4.0 * t / s.trace()) * (su * c + u * m);
  }
  out.value.total = out.value.j_fg + out.value.j_rm;
  if (inputs.sigma_fgp()) {
    double j = 0.0;
    if (use_fg(terms)) j = add_fg_shaped(*inputs.sigma_fgp());
    out.value.j_fgp = j;
    out.value.total += j;
  }
  return out;
}

std::pair<StiefelPoint, double> proposition1_oracle(const SymmetricMatrix& m,
                                                    Index columns) {
  require(columns >= 1 && columns <= m.dim(),
          "proposition1_oracle: expected 1 <= columns <= dim");
  const EigenDecomposition eig = sym_eig(m);
  const Index d = m.dim();
  StiefelPoint frame(eig.eigenvectors.rightCols(columns));
  double value = 0.0;
  for (Index i = d - columns; i < d; ++i) value += eig.eigenvalues(i);
  return {std::move(frame), value};
}

}  // namespace loft
