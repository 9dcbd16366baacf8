#pragma once

#include <Eigen/Core>
#include <memory>
#include <vector>

#include "mixpc/ftt.hpp"
#include "mixpc/gaussian_mixture.hpp"
#include "mixpc/multi_index.hpp"

namespace mixpc {

/// Gram matrix of the graded-lex monomials under the (standardized) mixture:
/// M_ij = m_{alpha_i + alpha_j}. Symmetric positive definite; M_00 = 1.
struct MomentMatrix {
  GradedLexOrder order;
  Eigen::MatrixXd M;
  /// m_gamma for every |gamma| <= 2p, aligned with `sum_order`.
  GradedLexOrder sum_order;
  std::vector<double> moments;
};

struct BasisDiagnostics {
  double jitter = 0.0;      // diagonal shift actually applied (0 = clean factorization)
  int jitter_attempts = 0;  // how many escalations were needed
  double min_diag_L = 0.0;
  double max_diag_L = 0.0;
};

/// Orthonormal polynomial basis Psi(xi) = L^-1 b(s(xi)) where s is the
/// standardization map and M = L L^T. Immutable; evaluation is pure.
class BasisSet {
 public:
  BasisSet(GradedLexOrder order, Eigen::MatrixXd L, AffineMap standardization,
           BasisDiagnostics diag);

  int size() const { return order_.size(); }
  int dim() const { return order_.dim(); }
  int max_degree() const { return order_.max_degree(); }
  const GradedLexOrder& order() const { return order_; }
  const Eigen::MatrixXd& L() const { return L_; }
  const AffineMap& standardization() const { return std_map_; }
  const BasisDiagnostics& diagnostics() const { return diag_; }

  /// Psi(xi) for xi in original coordinates; entry 0 is 1. Triangular solve,
  /// no explicit inverse.
  Eigen::VectorXd evaluate(const Eigen::VectorXd& xi) const;

  /// Row i holds Psi(points.row(i)); solves all points in one call.
  Eigen::MatrixXd evaluate_batch(const Eigen::MatrixXd& points) const;

  /// Weights w = L^-T c so that c . Psi(xi) = b(s(xi)) . w; lets surrogates
  /// be evaluated with one monomial pass per point.
  Eigen::VectorXd monomial_weights(const Eigen::VectorXd& coeffs) const;

 private:
  GradedLexOrder order_;
  Eigen::MatrixXd L_;
  AffineMap std_map_;
  BasisDiagnostics diag_;
};

/// Assembles M for the given mixture, which is expected to be standardized
/// (zero mean, unit per-coordinate variance); every distinct moment is
/// computed once via the tensor-train engine and mirrored.
MomentMatrix build_moment_matrix(const GaussianMixture& std_gmm, int d, int p, int threads = 0);

/// Cholesky of the moment matrix with the escalating-jitter policy:
/// base jitter 1e-12 tr(M)/N, escalated by 10x up to k=4, each attempt
/// recorded; throws IllConditionedMoments when the schedule is exhausted.
BasisSet factor(const MomentMatrix& mm, AffineMap standardization);

/// standardize + build_moment_matrix + factor in one call.
BasisSet build_basis(const GaussianMixture& gmm, int p, int threads = 0);

}  // namespace mixpc
