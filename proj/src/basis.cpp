#include "mixpc/basis.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <string>
#include <utility>

#include "mixpc/errors.hpp"

namespace mixpc {

BasisSet::BasisSet(GradedLexOrder order, Eigen::MatrixXd L, AffineMap standardization,
                   BasisDiagnostics diag)
    : order_(std::move(order)), L_(std::move(L)), std_map_(std::move(standardization)),
      diag_(diag) {}

Eigen::VectorXd BasisSet::evaluate(const Eigen::VectorXd& xi) const {
  Eigen::VectorXd b = monomial_vector(order_, std_map_.forward(xi));
  return L_.triangularView<Eigen::Lower>().solve(b);
}

Eigen::MatrixXd BasisSet::evaluate_batch(const Eigen::MatrixXd& points) const {
  Eigen::MatrixXd B = monomial_matrix(order_, std_map_.forward_rows(points));
  // Solve L V = B^T for all points at once, then lay rows back out.
  Eigen::MatrixXd V = L_.triangularView<Eigen::Lower>().solve(B.transpose());
  return V.transpose();
}

Eigen::VectorXd BasisSet::monomial_weights(const Eigen::VectorXd& coeffs) const {
  return L_.transpose().triangularView<Eigen::Upper>().solve(coeffs);
}

MomentMatrix build_moment_matrix(const GaussianMixture& std_gmm, int d, int p, int threads) {
  if (std_gmm.dim() != d) throw ValidationError("build_moment_matrix: dimension mismatch");
  if (p < 0) throw ValidationError("build_moment_matrix: order must be >= 0");

  MomentMatrix mm{GradedLexOrder(d, p), Eigen::MatrixXd(), GradedLexOrder(d, 2 * p), {}};
  MixtureMomentEngine engine(std_gmm, p);
  mm.moments = engine.moment_table(mm.sum_order, threads);

  const int n = mm.order.size();
  mm.M.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      int pos = mm.sum_order.position(mm.order[i].plus(mm.order[j]));
      double v = mm.moments[static_cast<size_t>(pos)];
      mm.M(i, j) = v;
      mm.M(j, i) = v;
    }
  }
  return mm;
}

BasisSet factor(const MomentMatrix& mm, AffineMap standardization) {
  const int n = mm.order.size();
  const double base = 1e-12 * mm.M.trace() / n;

  BasisDiagnostics diag;
  Eigen::MatrixXd L;
  bool ok = false;
  for (int attempt = 0; attempt <= 5 && !ok; ++attempt) {
    double jitter = attempt == 0 ? 0.0 : base * std::pow(10.0, attempt - 1);
    Eigen::MatrixXd M = mm.M;
    if (jitter > 0.0) M.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() == Eigen::Success) {
      L = llt.matrixL();
      diag.jitter = jitter;
      diag.jitter_attempts = attempt;
      ok = true;
    }
  }
  if (!ok)
    throw IllConditionedMoments(
        "moment matrix is not numerically positive definite after jitter schedule; "
        "the basis order p is too high for this mixture at working precision");

  diag.min_diag_L = L.diagonal().minCoeff();
  diag.max_diag_L = L.diagonal().maxCoeff();
  return BasisSet(mm.order, std::move(L), std::move(standardization), diag);
}

BasisSet build_basis(const GaussianMixture& gmm, int p, int threads) {
  auto [map, std_gmm] = gmm.standardize();
  MomentMatrix mm = build_moment_matrix(std_gmm, gmm.dim(), p, threads);
  return factor(mm, std::move(map));
}

}  // namespace mixpc
