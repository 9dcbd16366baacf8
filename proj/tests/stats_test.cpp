#include "mixpc/stats.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "mixpc/errors.hpp"
#include "mixpc/rng.hpp"

using namespace mixpc;

namespace {

GaussianMixture standard_normal_1d() {
  Eigen::VectorXd w = Eigen::VectorXd::Ones(1);
  std::vector<GaussianComponent> comps;
  comps.emplace_back(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
  return GaussianMixture(w, std::move(comps));
}

GaussianMixture stats_mixture() {
  Eigen::VectorXd w(2);
  w << 0.45, 0.55;
  Eigen::MatrixXd cov(2, 2);
  cov << 0.8, 0.2, 0.2, 0.6;
  std::vector<GaussianComponent> comps;
  comps.emplace_back(Eigen::Vector2d(-1.1, 0.4), cov);
  comps.emplace_back(Eigen::Vector2d(1.0, -0.7), Eigen::MatrixXd::Identity(2, 2) * 0.9);
  return GaussianMixture(w, std::move(comps));
}

SurrogateModel make_model(std::shared_ptr<const BasisSet> basis, std::vector<double> entries) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(basis->size());
  for (size_t j = 0; j < entries.size(); ++j) c[static_cast<Eigen::Index>(j)] = entries[j];
  return SurrogateModel(std::move(basis), std::move(c));
}

}  // namespace

TEST(MeanVariance, ClosedFormsFromCoefficients) {
  auto basis = std::make_shared<const BasisSet>(build_basis(stats_mixture(), 2));
  SurrogateModel constant = make_model(basis, {7.0});
  EXPECT_EQ(mean(constant), 7.0);
  EXPECT_EQ(variance(constant), 0.0);

  SurrogateModel pythagoras = make_model(basis, {0.0, 3.0, 4.0});
  EXPECT_EQ(variance(pythagoras), 25.0);
}

TEST(MeanVariance, MatchSampledSurrogateMoments) {
  GaussianMixture gmm = stats_mixture();
  auto basis = std::make_shared<const BasisSet>(build_basis(gmm, 3));
  Rng rng(5);
  Eigen::VectorXd c(basis->size());
  for (int j = 0; j < c.size(); ++j) c[j] = rng.normal() * std::exp(-0.3 * j);
  SurrogateModel model(basis, c);

  const int n = 1000000;
  Eigen::VectorXd values = model.evaluate_batch(gmm.sample(n, uint64_t{77}));
  double sample_mean = values.mean();
  double sample_var = (values.array() - sample_mean).square().sum() / (n - 1);
  double se_mean = std::sqrt(sample_var / n);

  EXPECT_NEAR(mean(model), sample_mean, 5.0 * se_mean);
  double m4 = (values.array() - sample_mean).square().square().sum() / n;
  double se_var = std::sqrt(std::max(0.0, m4 - sample_var * sample_var) / n);
  EXPECT_NEAR(variance(model), sample_var, 5.0 * se_var);
}

TEST(SurrogateModel, EvaluateMatchesCoefficientDot) {
  GaussianMixture gmm = stats_mixture();
  auto basis = std::make_shared<const BasisSet>(build_basis(gmm, 3));
  Rng rng(9);
  Eigen::VectorXd c(basis->size());
  for (int j = 0; j < c.size(); ++j) c[j] = rng.normal();
  SurrogateModel model(basis, c);

  Eigen::MatrixXd pts = gmm.sample(50, uint64_t{11});
  Eigen::VectorXd batch = model.evaluate_batch(pts);
  for (int i = 0; i < pts.rows(); ++i) {
    Eigen::VectorXd xi = pts.row(i).transpose();
    double direct = c.dot(basis->evaluate(xi));
    EXPECT_NEAR(model.evaluate(xi), direct, 1e-10 * std::max(1.0, std::abs(direct)));
    EXPECT_NEAR(batch[i], direct, 1e-10 * std::max(1.0, std::abs(direct)));
  }
}

TEST(RelativeError, DefinitionAndEdgeCases) {
  Eigen::MatrixXd phi(3, 2);
  phi << 1, 0, 0, 1, 1, 1;
  Eigen::VectorXd c(2);
  c << 2.0, -1.0;
  Eigen::VectorXd y = phi * c;
  EXPECT_EQ(relative_error(phi, c, y), 0.0);

  EXPECT_NEAR(relative_error(phi, Eigen::VectorXd::Zero(2), y), 1.0, 1e-15);

  EXPECT_THROW(relative_error(phi, c, Eigen::VectorXd::Zero(3)), ValidationError);

  // A relative perturbation of size ~0.01 shows up as error ~0.01.
  Eigen::VectorXd delta(3);
  delta << 1.0, -2.0, 2.0;
  delta *= 0.01 * y.norm() / delta.norm();
  EXPECT_NEAR(relative_error(phi, c, y + delta), delta.norm() / (y + delta).norm(), 1e-12);
}

TEST(RelativeError, ScaleInvariance) {
  Eigen::MatrixXd phi(4, 3);
  phi << 1, 0.5, 0.2, 0.1, 1, 0.3, 0.7, 0.2, 1, 0.4, 0.9, 0.6;
  Eigen::VectorXd c(3);
  c << 1.0, -0.5, 2.0;
  Eigen::VectorXd y(4);
  y << 1.2, 0.4, 2.4, 1.9;
  double base = relative_error(phi, c, y);
  double scaled = relative_error(phi, (1e6 * c).eval(), (1e6 * y).eval());
  EXPECT_NEAR(base, scaled, 1e-12 * base);
}

TEST(Density, ConstantModelIsSingleSpike) {
  auto basis = std::make_shared<const BasisSet>(build_basis(stats_mixture(), 1));
  SurrogateModel constant = make_model(basis, {42.0});
  DensityEstimate est = density(constant, stats_mixture(), 10000, 3, 50);
  int nonzero_bins = 0;
  for (int b = 0; b < est.bin_density.size(); ++b)
    if (est.bin_density[b] > 0.0) ++nonzero_bins;
  EXPECT_EQ(nonzero_bins, 1);
}

TEST(Density, IdentityModelMatchesStandardNormal) {
  // y = xi for a 1D standard normal: Kolmogorov-Smirnov distance vs the
  // normal CDF below 0.01 at 10^6 samples.
  GaussianMixture gmm = standard_normal_1d();
  auto basis = std::make_shared<const BasisSet>(build_basis(gmm, 1));
  SurrogateModel model = make_model(basis, {0.0, 1.0});

  const int64_t n = 1000000;
  DensityEstimate est = density(model, gmm, n, 13, 100, /*keep_values=*/true);
  ASSERT_EQ(est.values.size(), n);

  std::vector<double> sorted(est.values.data(), est.values.data() + n);
  std::sort(sorted.begin(), sorted.end());
  double ks = 0.0;
  for (int64_t i = 0; i < n; i += 997) {  // stride keeps the scan cheap
    double x = sorted[static_cast<size_t>(i)];
    double cdf = 0.5 * std::erfc(-x / std::sqrt(2.0));
    double emp = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    ks = std::max(ks, std::abs(emp - cdf));
  }
  EXPECT_LT(ks, 0.01);

  // The kernel density is a proper density over its grid.
  double mass = 0.0;
  for (int g = 0; g + 1 < est.grid.size(); ++g)
    mass += 0.5 * (est.pdf[g] + est.pdf[g + 1]) * (est.grid[g + 1] - est.grid[g]);
  EXPECT_NEAR(mass, 1.0, 0.01);
}

TEST(Density, ValidatesInputs) {
  auto basis = std::make_shared<const BasisSet>(build_basis(stats_mixture(), 1));
  SurrogateModel model = make_model(basis, {1.0});
  EXPECT_THROW(density(model, stats_mixture(), 100, 1, 50), ValidationError);
  EXPECT_THROW(density(model, stats_mixture(), 10000, 1, 0), ValidationError);
}
