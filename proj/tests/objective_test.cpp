#include "loft/objective.hpp"

#include "doctest.h"
#include "test_support.hpp"

#include <cmath>
#include <random>

using namespace loft;
using loft::testing::diag;
using loft::testing::gaussian;
using loft::testing::random_psd;

namespace {

ObjectiveInputs make_inputs(std::uint64_t seed, Index d, bool with_fgp = false) {
  return ObjectiveInputs(
      random_psd(d, seed), random_psd(d, seed + 1),
      with_fgp ? std::optional<SymmetricMatrix>(random_psd(d, seed + 2))
               : std::nullopt);
}

// Central finite differences of the scalar objective in the ambient space.
Matrix fd_gradient(const Matrix& u, const ObjectiveInputs& inputs,
                   TermSelection terms, double h) {
  Matrix g(u.rows(), u.cols());
  for (Index i = 0; i < u.rows(); ++i) {
    for (Index j = 0; j < u.cols(); ++j) {
      Matrix up = u, down = u;
      up(i, j) += h;
      down(i, j) -= h;
      g(i, j) = (eval_objective(up, inputs, terms).total -
                 eval_objective(down, inputs, terms).total) /
                (2.0 * h);
    }
  }
  return g;
}

StiefelPoint axis_frame(Index d, Index i, Index j) {
  Matrix u = Matrix::Zero(d, 2);
  u(i, 0) = 1.0;
  u(j, 1) = 1.0;
  return StiefelPoint(u);
}

}  // namespace

TEST_CASE("square frames capture everything: j_rm = 0, j_fg = 1") {
  const ObjectiveInputs inputs = make_inputs(3, 5);
  const StiefelPoint u = random_stiefel(5, 5, 7);
  const ObjectiveValue v = eval_objective(u, inputs);
  CHECK(v.j_rm <= 1e-18);
  CHECK(v.j_fg == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("identical covariances on the principal frame give the analytic split") {
  SymmetricMatrix sigma(diag({3, 2, 1}));
  const ObjectiveInputs inputs(sigma, sigma);
  const StiefelPoint u = pca_init(sigma, 2);
  const ObjectiveValue v = eval_objective(u, inputs);
  CHECK(v.j_fg == doctest::Approx((5.0 / 6.0) * (5.0 / 6.0)).epsilon(1e-12));
  CHECK(v.j_rm == doctest::Approx((1.0 / 6.0) * (1.0 / 6.0)).epsilon(1e-12));
  CHECK(v.total == v.j_fg + v.j_rm);
}

TEST_CASE("the three-dimensional contrast instance and its axis-aligned optimum") {
  const ObjectiveInputs inputs(SymmetricMatrix(diag({0.1, 0.1, 5})),
                               SymmetricMatrix(diag({3, 2, 1})));
  const ObjectiveValue at_e12 = eval_objective(axis_frame(3, 0, 1), inputs);
  CHECK(at_e12.j_fg == doctest::Approx(std::pow(0.2 / 5.2, 2)).epsilon(1e-12));
  CHECK(at_e12.j_rm == doctest::Approx(std::pow(1.0 / 6.0, 2)).epsilon(1e-12));

  // exhaustive search over coordinate planes confirms it is the best of them
  double best = 1e300;
  Index best_i = -1, best_j = -1;
  for (Index i = 0; i < 3; ++i)
    for (Index j = i + 1; j < 3; ++j) {
      const double total = eval_objective(axis_frame(3, i, j), inputs).total;
      if (total < best) best = total, best_i = i, best_j = j;
    }
  CHECK(best_i == 0);
  CHECK(best_j == 1);
  CHECK(best == doctest::Approx(at_e12.total));
}

TEST_CASE("objective terms are invariant to basis choice within the subspace") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Index d = 4 + static_cast<Index>(seed % 5);
    const Index s = 1 + static_cast<Index>(seed % 3);
    const ObjectiveInputs inputs = make_inputs(900 + seed, d);
    const StiefelPoint u = random_stiefel(d, s, seed);
    const StiefelPoint rotated(u.mat() * random_stiefel(s, s, seed + 50).mat());

    const ObjectiveValue a = eval_objective(u, inputs);
    const ObjectiveValue b = eval_objective(rotated, inputs);
    CHECK(std::abs(a.j_fg - b.j_fg) <= 1e-10);
    CHECK(std::abs(a.j_rm - b.j_rm) <= 1e-10);
  }
}

TEST_CASE("objective is invariant to covariance scaling") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Index d = 5;
    const SymmetricMatrix fg = random_psd(d, 300 + seed);
    const SymmetricMatrix rm = random_psd(d, 400 + seed);
    const StiefelPoint u = random_stiefel(d, 2, seed);
    const ObjectiveValue a = eval_objective(u, ObjectiveInputs(fg, rm));
    const ObjectiveValue b = eval_objective(
        u, ObjectiveInputs(SymmetricMatrix(3.7 * fg.mat()),
                           SymmetricMatrix(0.2 * rm.mat())));
    CHECK(std::abs(a.j_fg - b.j_fg) <= 1e-10);
    CHECK(std::abs(a.j_rm - b.j_rm) <= 1e-10);
  }
}

TEST_CASE("objective is equivariant to a global rotation") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Index d = 6;
    const SymmetricMatrix fg = random_psd(d, 500 + seed);
    const SymmetricMatrix rm = random_psd(d, 600 + seed);
    const StiefelPoint u = random_stiefel(d, 3, seed);
    const Matrix q = random_stiefel(d, d, seed + 77).mat();

    const ObjectiveValue a = eval_objective(u, ObjectiveInputs(fg, rm));
    const ObjectiveValue b = eval_objective(
        StiefelPoint(q * u.mat()),
        ObjectiveInputs(SymmetricMatrix(q * fg.mat() * q.transpose()),
                        SymmetricMatrix(q * rm.mat() * q.transpose())));
    CHECK(std::abs(a.j_fg - b.j_fg) <= 1e-10);
    CHECK(std::abs(a.j_rm - b.j_rm) <= 1e-10);
  }
}

TEST_CASE("both terms stay inside the unit interval on the manifold") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Index d = 2 + static_cast<Index>(seed % 7);
    const Index s = 1 + static_cast<Index>(seed % static_cast<std::uint64_t>(d));
    const ObjectiveInputs inputs = make_inputs(seed, d);
    const ObjectiveValue v = eval_objective(random_stiefel(d, s, seed), inputs);
    CHECK(v.j_fg >= 0.0);
    CHECK(v.j_fg <= 1.0 + 1e-12);
    CHECK(v.j_rm >= 0.0);
    CHECK(v.j_rm <= 1.0 + 1e-12);
  }
}

TEST_CASE("the total is the exact sum of the reported terms") {
  const ObjectiveInputs inputs = make_inputs(7, 6, /*with_fgp=*/true);
  const ObjectiveValue v = eval_objective(random_stiefel(6, 3, 1), inputs);
  REQUIRE(v.j_fgp.has_value());
  CHECK(v.total == v.j_fg + v.j_rm + *v.j_fgp);
}

TEST_CASE("degenerate covariances are rejected") {
  CHECK_THROWS_AS(
      ObjectiveInputs(SymmetricMatrix(Matrix::Zero(3, 3)), random_psd(3, 1)),
      DegenerateCovarianceError);
  CHECK_THROWS_AS(ObjectiveInputs(random_psd(3, 1), random_psd(4, 2)),
                  InvalidInputError);
}

TEST_CASE("isotropic covariances have zero Riemannian gradient everywhere") {
  const Index d = 6;
  const SymmetricMatrix iso(Matrix::Identity(d, d));
  const ObjectiveInputs inputs(iso, iso);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const StiefelPoint u = random_stiefel(d, 3, seed);
    const Matrix g = euclid_grad(u, inputs);
    CHECK(tangent_project(u, g).xi.norm() <= 1e-12);
  }
}

TEST_CASE("euclidean gradient matches central finite differences") {
  std::mt19937_64 rng(99);
  for (int instance = 0; instance < 12; ++instance) {
    const Index d = 3 + static_cast<Index>(rng() % 6);  // up to 8
    const Index s = 1 + static_cast<Index>(rng() % std::min<Index>(4, d));
    const bool with_fgp = instance % 3 == 0;
    const ObjectiveInputs inputs =
        make_inputs(2000 + static_cast<std::uint64_t>(instance) * 3, d, with_fgp);
    const Matrix u = random_stiefel(d, s, 3000 + instance).mat();

    const Matrix analytic = euclid_grad(u, inputs);
    const Matrix fd = fd_gradient(u, inputs, TermSelection::kBoth, 1e-5);
    const double rel = (fd - analytic).norm() / std::max(1.0, analytic.norm());
    CHECK(rel <= 1e-4);
  }
}

TEST_CASE("masked gradients match finite differences of the masked objective") {
  const ObjectiveInputs inputs = make_inputs(42, 5);
  const Matrix u = random_stiefel(5, 2, 4).mat();
  for (TermSelection terms : {TermSelection::kForgetOnly, TermSelection::kRemainOnly}) {
    const Matrix analytic = euclid_grad(u, inputs, terms);
    const Matrix fd = fd_gradient(u, inputs, terms, 1e-5);
    CHECK((fd - analytic).norm() / std::max(1.0, analytic.norm()) <= 1e-4);
  }
  const ObjectiveValue fg_only = eval_objective(u, inputs, TermSelection::kForgetOnly);
  CHECK(fg_only.j_rm == 0.0);
  const ObjectiveValue rm_only = eval_objective(u, inputs, TermSelection::kRemainOnly);
  CHECK(rm_only.j_fg == 0.0);
}

TEST_CASE("the bottom eigenframe of a shared covariance is a stationary point") {
  const SymmetricMatrix sigma = random_psd(7, 12);
  const ObjectiveInputs inputs(sigma, sigma);
  const auto [frame, value] = proposition1_oracle(sigma, 3);
  (void)value;
  const Matrix g = euclid_grad(frame, inputs);
  CHECK(tangent_project(frame, g).xi.norm() <= 1e-8);
}

TEST_CASE("combined evaluation agrees with the separate paths") {
  const ObjectiveInputs inputs = make_inputs(64, 6, /*with_fgp=*/true);
  const Matrix u = random_stiefel(6, 3, 64).mat();
  const ObjectiveEval combined = eval_objective_with_grad(u, inputs);
  const ObjectiveValue value = eval_objective(u, inputs);
  const Matrix grad = euclid_grad(u, inputs);
  CHECK(std::abs(combined.value.total - value.total) <= 1e-14 * (1.0 + value.total));
  CHECK(std::abs(combined.value.j_fg - value.j_fg) <= 1e-14);
  CHECK(std::abs(combined.value.j_rm - value.j_rm) <= 1e-14);
  CHECK((combined.grad - grad).norm() <= 1e-12 * (1.0 + grad.norm()));
}

TEST_CASE("proposition-1 oracle on a diagonal covariance") {
  SymmetricMatrix sigma(diag({3, 2, 1}));
  const auto [frame1, value1] = proposition1_oracle(sigma, 1);
  CHECK(value1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(frame1.mat()(2, 0)) == doctest::Approx(1.0).epsilon(1e-12));

  const auto [frame3, value3] = proposition1_oracle(sigma, 3);
  CHECK(value3 == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(frame3.ortho_residual() <= 1e-8);
}

TEST_CASE("proposition-1 oracle lower-bounds random frames") {
  const SymmetricMatrix sigma = random_psd(8, 21);
  const auto [frame, value] = proposition1_oracle(sigma, 2);
  CHECK((frame.mat().transpose() * sigma.mat() * frame.mat()).trace() ==
        doctest::Approx(value).epsilon(1e-9));
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const StiefelPoint u = random_stiefel(8, 2, seed);
    const double sampled = (u.mat().transpose() * sigma.mat() * u.mat()).trace();
    CHECK(sampled >= value - 1e-10);
  }
}
