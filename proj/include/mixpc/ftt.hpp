#pragma once

#include <Eigen/Core>
#include <unordered_map>
#include <vector>

#include "mixpc/gaussian_mixture.hpp"
#include "mixpc/multi_index.hpp"

namespace mixpc {

/// Raw moment E[eta^k] of a standard normal: 1, 0, 1, 0, 3, 0, 15, ...
double normal_raw_moment(int k);

/// Dense polynomial in one standard-normal variable, ascending coefficients,
/// trailing zeros trimmed. The zero polynomial has an empty coefficient list.
class UnivariatePoly {
 public:
  UnivariatePoly() = default;
  explicit UnivariatePoly(std::vector<double> coeffs);
  static UnivariatePoly constant(double v);
  static UnivariatePoly monomial(double coeff, int power);

  bool is_zero() const { return coeffs_.empty(); }
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  const std::vector<double>& coeffs() const { return coeffs_; }

  double eval(double x) const;
  double normal_expectation() const;

  friend UnivariatePoly operator*(const UnivariatePoly& a, const UnivariatePoly& b);

 private:
  std::vector<double> coeffs_;
};

/// E[a(eta) b(eta)] computed termwise against the raw-moment table; avoids
/// forming the product polynomial.
double product_normal_expectation(const UnivariatePoly& a, const UnivariatePoly& b);

/// Dense row-major matrix with polynomial entries (one tensor-train core).
struct PolyMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<UnivariatePoly> data;

  PolyMatrix() = default;
  PolyMatrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r * c)) {}
  UnivariatePoly& at(int i, int j) { return data[static_cast<size_t>(i * cols + j)]; }
  const UnivariatePoly& at(int i, int j) const { return data[static_cast<size_t>(i * cols + j)]; }

  /// Matrix of expectations of the entries.
  Eigen::MatrixXd normal_expectation() const;
  /// Numeric evaluation at eta.
  Eigen::MatrixXd eval(double eta) const;
};

/// Functional tensor train for (A eta + mu)^alpha: a leading row vector and
/// d cores whose entries are polynomials in eta_i. Core i has shape
/// r_{i-1} x r_i with r_d = 1.
struct FttMonomial {
  Eigen::RowVectorXd lead;
  std::vector<PolyMatrix> cores;
  MultiIndex target;

  int dim() const { return static_cast<int>(cores.size()); }
  std::vector<int> ranks() const;

  /// Contract lead and all cores at the given eta; equals (A eta + mu)^alpha.
  double evaluate(const Eigen::VectorXd& eta) const;
};

/// Rank-2 train for the affine coordinate xi_j = sum_i a_{ji} eta_i + mu_j
/// (j zero-based). lead = (mu_j, 1); inner cores [[1,0],[a_{ji} eta_i,1]];
/// last core (1; a_{jd} eta_d).
FttMonomial first_order(int j, const Eigen::MatrixXd& chol, const Eigen::VectorXd& mu);

/// Train for alpha = 0 (constant 1) in d variables.
FttMonomial constant_train(int d);

/// Elementwise product of the represented functions: Kronecker product of
/// leads and of each core pair, multiplying entries as polynomials.
FttMonomial kron_combine(const FttMonomial& t1, const FttMonomial& t2);

/// Replace every core entrywise by its expectation under eta_i ~ N(0,1) and
/// contract; returns E[(A eta + mu)^alpha].
double expectation(const FttMonomial& t);

/// expectation(kron_combine(t1, t2)) computed core-by-core without
/// materializing the product train. Identical value up to roundoff.
double expectation_of_product(const FttMonomial& t1, const FttMonomial& t2);

/// Per-component moment engine: memoizes trains for |alpha| <= p and moments
/// for all |alpha| <= 2p.
class ComponentMomentEngine {
 public:
  ComponentMomentEngine(const GaussianComponent& comp, int p);

  int dim() const { return comp_.dim(); }
  int max_order() const { return p_; }

  /// Cached train for |alpha| <= p, built by peeling one coordinate.
  const FttMonomial& train(const MultiIndex& alpha);

  /// q_alpha = E[(A eta + mu)^alpha] for |alpha| <= 2p; memoized.
  double moment(const MultiIndex& alpha);

  /// Builds every train with |alpha| <= p; required before moment_prebuilt.
  void build_all_trains();

  /// Read-only moment evaluation against the prebuilt train cache; safe to
  /// call concurrently from many threads.
  double moment_prebuilt(const MultiIndex& alpha) const;

 private:
  const FttMonomial& train_nocheck(const MultiIndex& alpha);

  GaussianComponent comp_;
  int p_;
  std::unordered_map<MultiIndex, FttMonomial, MultiIndexHash> trains_;
  std::unordered_map<MultiIndex, double, MultiIndexHash> moments_;
};

/// Mixture moments m_alpha = sum_i w_i q_{alpha,i}.
class MixtureMomentEngine {
 public:
  MixtureMomentEngine(const GaussianMixture& gmm, int p);

  int dim() const { return dim_; }
  int max_order() const { return p_; }

  double mixture_moment(const MultiIndex& alpha);

  /// Values for every |gamma| <= max_degree, aligned with `order`
  /// (GradedLexOrder(d, max_degree)). Parallelized across moments; results
  /// are deterministic (each slot is computed independently).
  std::vector<double> moment_table(const GradedLexOrder& order, int threads = 0);

  ComponentMomentEngine& component_engine(int i) { return engines_[static_cast<size_t>(i)]; }

 private:
  int dim_;
  int p_;
  Eigen::VectorXd weights_;
  std::vector<ComponentMomentEngine> engines_;
};

}  // namespace mixpc
