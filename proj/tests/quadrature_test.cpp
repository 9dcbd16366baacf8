#include "mixpc/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "mixpc/errors.hpp"

using namespace mixpc;

namespace {

GaussianComponent std_component(int d) {
  return GaussianComponent(Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Identity(d, d));
}

MultiIndex mi(std::vector<int> e) { return MultiIndex(std::move(e)); }

}  // namespace

TEST(GaussHermite, IntegratesRawMomentsExactly) {
  // E[eta^k] = (k-1)!! for even k under the probabilists' weight.
  GaussHermiteRule rule = gauss_hermite(8);
  EXPECT_NEAR(rule.weights.sum(), 1.0, 1e-14);
  double expected[] = {1, 0, 1, 0, 3, 0, 15, 0, 105, 0, 945, 0, 10395};
  for (int k = 0; k <= 12; ++k) {
    double acc = 0.0;
    for (int i = 0; i < rule.nodes.size(); ++i)
      acc += rule.weights[i] * std::pow(rule.nodes[i], k);
    EXPECT_NEAR(acc, expected[k], 1e-10 * std::max(1.0, expected[k])) << "k=" << k;
  }
}

TEST(GaussHermite, NodesAreSymmetric) {
  for (int n : {3, 5, 10, 21}) {
    GaussHermiteRule rule = gauss_hermite(n);
    for (int i = 0, j = n - 1; i < j; ++i, --j) {
      EXPECT_EQ(rule.nodes[i], -rule.nodes[j]);
      EXPECT_EQ(rule.weights[i], rule.weights[j]);
    }
  }
}

TEST(QuadMoment, KnownGaussianFourthMoment) {
  EXPECT_NEAR(quad_moment(mi({4}), std_component(1), 5), 3.0, 1e-12);
}

TEST(QuadMoment, IndependentCrossMomentVanishes) {
  GaussianComponent comp(Eigen::Vector2d(1.0, 0.0), Eigen::MatrixXd::Identity(2, 2));
  EXPECT_NEAR(quad_moment(mi({1, 1}), comp, 4), 0.0, 1e-12);
}

TEST(QuadMoment, CorrelatedCrossMomentEqualsCovariance) {
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 0.5, 0.5, 1.0;
  GaussianComponent comp(Eigen::VectorXd::Zero(2), cov);
  EXPECT_NEAR(quad_moment(mi({1, 1}), comp, 4), 0.5, 1e-12);
}

TEST(QuadMoment, InvariantToExtraNodes) {
  Eigen::MatrixXd cov(3, 3);
  cov << 1.0, 0.2, 0.1, 0.2, 0.8, -0.1, 0.1, -0.1, 1.2;
  GaussianComponent comp(Eigen::Vector3d(0.5, -1.0, 2.0), cov);
  MultiIndex a = mi({2, 1, 3});
  double v4 = quad_moment(a, comp, 4);
  double v8 = quad_moment(a, comp, 8);
  double v12 = quad_moment(a, comp, 12);
  EXPECT_NEAR(v4, v8, 1e-12 * std::max(1.0, std::abs(v4)));
  EXPECT_NEAR(v8, v12, 1e-12 * std::max(1.0, std::abs(v8)));
}

TEST(QuadMoment, RefusesHighDimensions) {
  EXPECT_THROW(quad_moment(mi({1, 0, 0, 0, 0}), std_component(5), 4), ValidationError);
  EXPECT_THROW(quad_moment(mi({6}), std_component(1), 3), ValidationError);
}

TEST(McMoment, ConstantAndUnitVariance) {
  Eigen::VectorXd w = Eigen::VectorXd::Ones(1);
  std::vector<GaussianComponent> comps;
  comps.emplace_back(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
  GaussianMixture gmm(w, std::move(comps));

  McEstimate zero = mc_moment(mi({0}), gmm, 10000, 1);
  EXPECT_EQ(zero.estimate, 1.0);
  EXPECT_EQ(zero.std_error, 0.0);

  McEstimate second = mc_moment(mi({2}), gmm, 1000000, 2);
  EXPECT_NEAR(second.estimate, 1.0, 5.0 * second.std_error);

  EXPECT_THROW(mc_moment(mi({2}), gmm, 100, 1), ValidationError);
}

TEST(McMoment, AgreesWithQuadratureOnMixture) {
  Eigen::VectorXd w(2);
  w << 0.4, 0.6;
  Eigen::MatrixXd cov(2, 2);
  cov << 0.9, 0.3, 0.3, 1.1;
  std::vector<GaussianComponent> comps;
  comps.emplace_back(Eigen::Vector2d(-1.0, 0.5), cov);
  comps.emplace_back(Eigen::Vector2d(1.5, -0.5), Eigen::MatrixXd::Identity(2, 2));
  GaussianMixture gmm(w, std::move(comps));

  for (auto e : {std::vector<int>{1, 0}, {2, 0}, {1, 1}, {2, 2}, {3, 1}}) {
    MultiIndex a = mi(e);
    double quad = 0.0;
    for (int i = 0; i < gmm.num_components(); ++i)
      quad += gmm.weights()[i] * quad_moment(a, gmm.component(i), 6);
    McEstimate mc = mc_moment(a, gmm, 400000, 7);
    EXPECT_NEAR(mc.estimate, quad, 5.0 * mc.std_error) << a.to_string();
  }
}
