#include "mixpc/basis.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "mixpc/errors.hpp"
#include "mixpc/quadrature.hpp"
#include "mixpc/rng.hpp"

using namespace mixpc;

namespace {

GaussianMixture standard_normal(int d) {
  Eigen::VectorXd w = Eigen::VectorXd::Ones(1);
  std::vector<GaussianComponent> comps;
  comps.emplace_back(Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Identity(d, d));
  return GaussianMixture(w, std::move(comps));
}

GaussianMixture test_mixture_2d() {
  Eigen::VectorXd w(2);
  w << 0.4, 0.6;
  Eigen::MatrixXd cov1(2, 2), cov2(2, 2);
  cov1 << 0.8, 0.3, 0.3, 0.6;
  cov2 << 1.1, -0.2, -0.2, 0.9;
  std::vector<GaussianComponent> comps;
  comps.emplace_back(Eigen::Vector2d(-1.0, 0.6), cov1);
  comps.emplace_back(Eigen::Vector2d(1.2, -0.4), cov2);
  return GaussianMixture(w, std::move(comps));
}

GaussianMixture test_mixture_3d() {
  Eigen::VectorXd w(3);
  w << 0.3, 0.4, 0.3;
  Eigen::MatrixXd base(3, 3);
  base << 1.0, 0.25, 0.1, 0.25, 0.8, 0.2, 0.1, 0.2, 0.9;
  std::vector<GaussianComponent> comps;
  comps.emplace_back(Eigen::Vector3d(-1.2, 0.0, 0.8), base);
  comps.emplace_back(Eigen::Vector3d(0.0, 0.5, -0.5), Eigen::MatrixXd::Identity(3, 3) * 0.7);
  comps.emplace_back(Eigen::Vector3d(1.4, -0.6, 0.2), base * 0.9);
  return GaussianMixture(w, std::move(comps));
}

}  // namespace

TEST(MomentMatrix, StandardNormalExamples) {
  // d=1, p=1: identity.
  MomentMatrix m1 = build_moment_matrix(standard_normal(1), 1, 1);
  Eigen::MatrixXd want1(2, 2);
  want1 << 1, 0, 0, 1;
  EXPECT_LT((m1.M - want1).cwiseAbs().maxCoeff(), 1e-13);

  // d=1, p=2: Gaussian moments 1,0,1,0,3.
  MomentMatrix m2 = build_moment_matrix(standard_normal(1), 1, 2);
  Eigen::MatrixXd want2(3, 3);
  want2 << 1, 0, 1, 0, 1, 0, 1, 0, 3;
  EXPECT_LT((m2.M - want2).cwiseAbs().maxCoeff(), 1e-12);

  // d=2, p=2: the (x1 x2, x1 x2) entry is E[x1^2 x2^2] = 1.
  MomentMatrix m3 = build_moment_matrix(standard_normal(2), 2, 2);
  ASSERT_EQ(m3.M.rows(), 6);
  EXPECT_NEAR(m3.M(4, 4), 1.0, 1e-12);
  EXPECT_NEAR(m3.M(0, 0), 1.0, 1e-13);
  EXPECT_EQ((m3.M - m3.M.transpose()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(MomentMatrix, EntriesMatchQuadratureOnMixture) {
  auto [map, std_gmm] = test_mixture_2d().standardize();
  MomentMatrix mm = build_moment_matrix(std_gmm, 2, 2);
  for (int i = 0; i < mm.order.size(); ++i) {
    for (int j = i; j < mm.order.size(); ++j) {
      MultiIndex gamma = mm.order[i].plus(mm.order[j]);
      double want = 0.0;
      for (int c = 0; c < std_gmm.num_components(); ++c)
        want += std_gmm.weights()[c] * quad_moment(gamma, std_gmm.component(c), 5);
      EXPECT_NEAR(mm.M(i, j), want, 1e-10 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST(Factor, IdentityAndHandCholesky) {
  MomentMatrix id{GradedLexOrder(1, 1), Eigen::MatrixXd::Identity(2, 2), GradedLexOrder(1, 2), {}};
  BasisSet b = factor(id, AffineMap::identity(1));
  EXPECT_LT((b.L() - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(b.diagnostics().jitter, 0.0);

  // Hand Cholesky of [[1,0,1],[0,1,0],[1,0,3]]: L = [[1,0,0],[0,1,0],[1,0,sqrt(2)]].
  MomentMatrix mm = build_moment_matrix(standard_normal(1), 1, 2);
  BasisSet basis = factor(mm, AffineMap::identity(1));
  Eigen::MatrixXd want(3, 3);
  want << 1, 0, 0, 0, 1, 0, 1, 0, std::sqrt(2.0);
  EXPECT_LT((basis.L() - want).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((basis.L() * basis.L().transpose() - mm.M).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Factor, RejectsCorruptedMatrix) {
  MomentMatrix bad{GradedLexOrder(1, 1), Eigen::MatrixXd(2, 2), GradedLexOrder(1, 2), {}};
  bad.M << 1.0, 2.0, 2.0, 1.0;  // indefinite
  EXPECT_THROW(factor(bad, AffineMap::identity(1)), IllConditionedMoments);
}

TEST(Evaluate, FirstEntryAlwaysOne) {
  BasisSet basis = build_basis(test_mixture_2d(), 3);
  Rng rng(5);
  for (int rep = 0; rep < 25; ++rep) {
    Eigen::Vector2d xi(4.0 * rng.normal(), 4.0 * rng.normal());
    Eigen::VectorXd psi = basis.evaluate(xi);
    EXPECT_EQ(psi[0], 1.0);
  }
}

TEST(Evaluate, NormalizedHermiteForStandardNormal) {
  // d=1 standard normal, p=2: Psi_2(xi) = (xi^2 - 1)/sqrt(2).
  BasisSet basis = build_basis(standard_normal(1), 2);
  for (double x : {-2.0, -0.5, 0.0, 1.0, 3.0}) {
    Eigen::VectorXd psi = basis.evaluate(Eigen::VectorXd::Constant(1, x));
    EXPECT_NEAR(psi[2], (x * x - 1.0) / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(psi[1], x, 1e-12);
  }
}

TEST(Evaluate, BatchMatchesPerPoint) {
  BasisSet basis = build_basis(test_mixture_3d(), 2);
  Eigen::MatrixXd pts = test_mixture_3d().sample(40, uint64_t{3});
  Eigen::MatrixXd big = basis.evaluate_batch(pts);
  for (int i = 0; i < pts.rows(); ++i) {
    Eigen::VectorXd one = basis.evaluate(pts.row(i).transpose());
    EXPECT_LT((big.row(i).transpose() - one).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(BasisSet, ExactGramIdentity) {
  // L^-1 M L^-T = I within 1e-8 Frobenius, deterministically.
  auto [map, std_gmm] = test_mixture_3d().standardize();
  MomentMatrix mm = build_moment_matrix(std_gmm, 3, 3);
  BasisSet basis = factor(mm, map);
  Eigen::MatrixXd inner = basis.L().triangularView<Eigen::Lower>().solve(mm.M);
  Eigen::MatrixXd gram =
      basis.L().triangularView<Eigen::Lower>().solve(inner.transpose()).transpose();
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(mm.M.rows(), mm.M.cols())).norm(), 1e-8);
}

TEST(BasisSet, TriangularityBoundsPolynomialDegree) {
  // L lower-triangular in graded-lex order means Psi_alpha only mixes
  // monomials of order <= |alpha|.
  BasisSet basis = build_basis(test_mixture_2d(), 3);
  const Eigen::MatrixXd& L = basis.L();
  for (int i = 0; i < L.rows(); ++i)
    for (int j = i + 1; j < L.cols(); ++j) EXPECT_EQ(L(i, j), 0.0);
  EXPECT_GT(basis.diagnostics().min_diag_L, 0.0);
}

TEST(BasisSet, EmpiricalGramNearIdentity) {
  // Sampled orthonormality on a correlated mixture (the acceptance suite
  // runs the 10^6-sample version at the 0.02 tolerance).
  GaussianMixture gmm = test_mixture_2d();
  BasisSet basis = build_basis(gmm, 3);
  const int n = 200000;
  Eigen::MatrixXd phi = basis.evaluate_batch(gmm.sample(n, uint64_t{17}));
  Eigen::MatrixXd gram = phi.transpose() * phi / double(n);
  Eigen::MatrixXd resid = gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols());
  EXPECT_LT(resid.cwiseAbs().maxCoeff(), 0.05);
}

TEST(BasisSet, MonomialWeightsReproduceCoefficientDot) {
  BasisSet basis = build_basis(test_mixture_2d(), 2);
  Rng rng(23);
  Eigen::VectorXd c(basis.size());
  for (int j = 0; j < c.size(); ++j) c[j] = rng.normal();
  Eigen::VectorXd w = basis.monomial_weights(c);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::Vector2d xi(rng.normal() * 2.0, rng.normal() * 2.0);
    double via_psi = c.dot(basis.evaluate(xi));
    Eigen::VectorXd b = monomial_vector(basis.order(), basis.standardization().forward(xi));
    EXPECT_NEAR(b.dot(w), via_psi, 1e-10 * std::max(1.0, std::abs(via_psi)));
  }
}
