#include "loft/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

namespace loft {

namespace {

// Above this dimension the cyclic Jacobi sweeps get too slow and we fall back
// to a dense Householder-based solver, normalized to the same conventions.
constexpr Index kJacobiMaxDim = 128;
constexpr int kJacobiMaxSweeps = 100;

double max_offdiag(const Matrix& w) {
  double m = 0.0;
  for (Index p = 0; p + 1 < w.rows(); ++p)
    for (Index q = p + 1; q < w.cols(); ++q) m = std::max(m, std::abs(w(p, q)));
  return m;
}

// One cyclic sweep of symmetric Jacobi rotations, accumulating vectors in v.
void jacobi_sweep(Matrix& w, Matrix& v) {
  const Index n = w.rows();
  for (Index p = 0; p + 1 < n; ++p) {
    for (Index q = p + 1; q < n; ++q) {
      const double wpq = w(p, q);
      if (wpq == 0.0) continue;
      const double theta = (w(q, q) - w(p, p)) / (2.0 * wpq);
      double t;
      if (std::abs(theta) > 1e150) {
        t = 1.0 / (2.0 * theta);
      } else {
        t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        if (theta < 0.0) t = -t;
      }
      const double c = 1.0 / std::sqrt(t * t + 1.0);
      const double s = t * c;
      const double tau = s / (1.0 + c);

      w(p, p) -= t * wpq;
      w(q, q) += t * wpq;
      w(p, q) = w(q, p) = 0.0;
      for (Index r = 0; r < n; ++r) {
        if (r == p || r == q) continue;
        const double wrp = w(r, p);
        const double wrq = w(r, q);
        w(r, p) = w(p, r) = wrp - s * (wrq + tau * wrp);
        w(r, q) = w(q, r) = wrq + s * (wrp - tau * wrq);
      }
      for (Index r = 0; r < n; ++r) {
        const double vrp = v(r, p);
        const double vrq = v(r, q);
        v(r, p) = vrp - s * (vrq + tau * vrp);
        v(r, q) = vrq + s * (vrp - tau * vrq);
      }
    }
  }
}

EigenDecomposition eig_jacobi(const Matrix& a) {
  const Index n = a.rows();
  Matrix w = a;
  Matrix v = Matrix::Identity(n, n);
  const double thresh = 1e-12 * a.norm();
  int sweep = 0;
  while (max_offdiag(w) > thresh) {
    if (sweep++ >= kJacobiMaxSweeps) {
      std::ostringstream msg;
      msg << "sym_eig: Jacobi sweeps did not converge after " << kJacobiMaxSweeps
          << " sweeps (off-diagonal residual " << max_offdiag(w) << ")";
      throw NumericalFailureError(msg.str());
    }
    jacobi_sweep(w, v);
  }
  return {w.diagonal(), v};
}

EigenDecomposition eig_dense(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver{Eigen::MatrixXd(a)};
  if (solver.info() != Eigen::Success)
    throw NumericalFailureError("sym_eig: dense eigensolver failed to converge");
  return {solver.eigenvalues(), Matrix(solver.eigenvectors())};
}

// Descending eigenvalue order (stable on ties) and a fixed sign per vector:
// the largest-magnitude entry is made positive, first index winning ties.
EigenDecomposition normalize_conventions(EigenDecomposition d) {
  const Index n = d.eigenvalues.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) {
    return d.eigenvalues(i) > d.eigenvalues(j);
  });

  Vector values(n);
  Matrix vectors(n, n);
  for (Index j = 0; j < n; ++j) {
    values(j) = d.eigenvalues(order[static_cast<std::size_t>(j)]);
    vectors.col(j) = d.eigenvectors.col(order[static_cast<std::size_t>(j)]);
  }
  for (Index j = 0; j < n; ++j) {
    Index lead = 0;
    for (Index i = 1; i < n; ++i)
      if (std::abs(vectors(i, j)) > std::abs(vectors(lead, j))) lead = i;
    if (vectors(lead, j) < 0.0) vectors.col(j) = -vectors.col(j);
  }
  return {std::move(values), std::move(vectors)};
}

}  // namespace

SymmetricMatrix::SymmetricMatrix(const Matrix& a) {
  require(a.rows() == a.cols() && a.rows() >= 1,
          "SymmetricMatrix: expected a non-empty square matrix");
  require_finite(a, "SymmetricMatrix");
  mat_ = 0.5 * (a + a.transpose());
}

CovarianceSummary covariance(const Matrix& features, bool center) {
  require(features.rows() >= 1 && features.cols() >= 1,
          "covariance: feature matrix must have at least one row and one column");
  require_finite(features, "covariance");

  const Index n = features.rows();
  const Index d = features.cols();
  Matrix second = Matrix::Zero(d, d);
  Vector first = Vector::Zero(d);
  for (Index i = 0; i < n; ++i) {
    const Vector z = features.row(i).transpose();
    second.noalias() += z * z.transpose();
    first += z;
  }
  const Vector mean = first / static_cast<double>(n);
  Matrix sigma = second / static_cast<double>(n);
  if (center) sigma.noalias() -= mean * mean.transpose();

  SymmetricMatrix sym(sigma);
  const double tr = sym.trace();
  return CovarianceSummary{std::move(sym), tr, static_cast<std::uint64_t>(n), mean};
}

EigenDecomposition sym_eig(const SymmetricMatrix& a) {
  EigenDecomposition raw =
      a.dim() <= kJacobiMaxDim ? eig_jacobi(a.mat()) : eig_dense(a.mat());
  return normalize_conventions(std::move(raw));
}

std::pair<Matrix, Matrix> thin_qr(const Matrix& a) {
  const Index d = a.rows();
  const Index s = a.cols();
  require(s >= 1 && d >= s, "thin_qr: expected a d x s matrix with d >= s >= 1");
  require_finite(a, "thin_qr");

  Eigen::HouseholderQR<Eigen::MatrixXd> qr{Eigen::MatrixXd(a)};
  Matrix q = qr.householderQ() * Eigen::MatrixXd::Identity(d, s);
  Matrix r = Eigen::MatrixXd(
      qr.matrixQR().topLeftCorner(s, s).triangularView<Eigen::Upper>());
  for (Index j = 0; j < s; ++j) {
    if (r(j, j) < 0.0) {
      r.row(j) = -r.row(j);
      q.col(j) = -q.col(j);
    }
    if (std::abs(r(j, j)) <= 1e-12) {
      std::ostringstream msg;
      msg << "thin_qr: rank-deficient input (|R(" << j << "," << j << ")| = "
          << std::abs(r(j, j)) << " <= 1e-12)";
      throw DegenerateDirectionError(msg.str());
    }
  }
  return {std::move(q), std::move(r)};
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    std::ostringstream msg;
    msg << "matmul: inner dimensions differ (" << a.rows() << "x" << a.cols()
        << " times " << b.rows() << "x" << b.cols() << ")";
    throw InvalidInputError(msg.str());
  }
  return a * b;
}

double trace(const Matrix& a) {
  require(a.rows() == a.cols(), "trace: matrix must be square");
  return a.trace();
}

double frobenius_norm(const Matrix& a) { return a.norm(); }

}  // namespace loft
