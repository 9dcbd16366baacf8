#include "mixpc/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mixpc/errors.hpp"

namespace mixpc {

GaussHermiteRule gauss_hermite(int n) {
  if (n < 1) throw ValidationError("gauss_hermite: need at least one node");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    double b = std::sqrt(static_cast<double>(k));
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  if (es.info() != Eigen::Success)
    throw NumericalError("gauss_hermite: eigenvalue solve failed");

  GaussHermiteRule rule;
  rule.nodes = es.eigenvalues();
  rule.weights = es.eigenvectors().row(0).transpose().array().square();

  // Nodes of a symmetric weight come in +/- pairs; enforce that exactly.
  double span = std::max(1.0, rule.nodes.cwiseAbs().maxCoeff());
  for (int i = 0, j = n - 1; i < j; ++i, --j) {
    if (std::abs(rule.nodes[i] + rule.nodes[j]) > 1e-13 * span)
      throw NumericalError("gauss_hermite: node symmetry defect beyond 1e-13");
    double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.weights[i] = w;
    rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  rule.weights /= rule.weights.sum();
  return rule;
}

double quad_moment(const MultiIndex& alpha, const GaussianComponent& comp, int nodes) {
  const int d = comp.dim();
  if (alpha.dim() != d) throw ValidationError("quad_moment: dimension mismatch");
  if (d > 4)
    throw ValidationError("quad_moment: tensor grids are refused for d > 4 (got d=" +
                          std::to_string(d) + "); use mc_moment");
  if (2 * nodes <= alpha.degree())
    throw ValidationError("quad_moment: " + std::to_string(nodes) +
                          " nodes per dimension cannot integrate degree " +
                          std::to_string(alpha.degree()) + " exactly");

  GaussHermiteRule rule = gauss_hermite(nodes);
  std::vector<int> idx(static_cast<size_t>(d), 0);
  Eigen::VectorXd eta(d);
  double acc = 0.0;
  while (true) {
    double w = 1.0;
    for (int k = 0; k < d; ++k) {
      eta[k] = rule.nodes[idx[static_cast<size_t>(k)]];
      w *= rule.weights[idx[static_cast<size_t>(k)]];
    }
    Eigen::VectorXd xi = comp.chol() * eta + comp.mean();
    double term = 1.0;
    for (int k = 0; k < d; ++k)
      for (int e = 0; e < alpha[k]; ++e) term *= xi[k];
    acc += w * term;

    int k = 0;
    while (k < d && ++idx[static_cast<size_t>(k)] == nodes) {
      idx[static_cast<size_t>(k)] = 0;
      ++k;
    }
    if (k == d) break;
  }
  return acc;
}

McEstimate mc_moment(const MultiIndex& alpha, const GaussianMixture& gmm, int64_t n,
                     uint64_t seed) {
  if (alpha.dim() != gmm.dim()) throw ValidationError("mc_moment: dimension mismatch");
  if (n < 10000) throw ValidationError("mc_moment: need at least 10^4 samples");

  Rng rng(seed);
  const int64_t batch = 100000;
  double sum = 0.0, sumsq = 0.0;
  int64_t done = 0;
  while (done < n) {
    int m = static_cast<int>(std::min(batch, n - done));
    Eigen::MatrixXd pts = gmm.sample(m, rng);
    for (int i = 0; i < m; ++i) {
      double v = 1.0;
      for (int k = 0; k < alpha.dim(); ++k)
        for (int e = 0; e < alpha[k]; ++e) v *= pts(i, k);
      sum += v;
      sumsq += v * v;
    }
    done += m;
  }
  McEstimate est;
  est.samples = n;
  est.estimate = sum / static_cast<double>(n);
  double var = std::max(0.0, sumsq / static_cast<double>(n) - est.estimate * est.estimate);
  est.std_error = std::sqrt(var / static_cast<double>(n));
  return est;
}

}  // namespace mixpc
