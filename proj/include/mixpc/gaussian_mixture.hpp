#pragma once

#include <Eigen/Core>
#include <string>
#include <utility>
#include <vector>

#include "mixpc/rng.hpp"

namespace mixpc {

/// Diagonal affine standardization xi -> (xi - shift) / scale.
struct AffineMap {
  Eigen::VectorXd shift;
  Eigen::VectorXd scale;

  Eigen::VectorXd forward(const Eigen::VectorXd& xi) const {
    return (xi - shift).cwiseQuotient(scale);
  }
  Eigen::VectorXd inverse(const Eigen::VectorXd& eta) const {
    return eta.cwiseProduct(scale) + shift;
  }
  /// Row-wise forward map of an n-by-d sample block.
  Eigen::MatrixXd forward_rows(const Eigen::MatrixXd& pts) const;

  static AffineMap identity(int d);
};

/// One mixture component: mean, SPD covariance and its cached lower
/// Cholesky factor A with Sigma = A A^T.
class GaussianComponent {
 public:
  GaussianComponent(Eigen::VectorXd mean, Eigen::MatrixXd cov);

  int dim() const { return static_cast<int>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  const Eigen::MatrixXd& chol() const { return chol_; }

  double log_density(const Eigen::VectorXd& xi) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd chol_;
  double log_norm_ = 0.0;  // -d/2 log(2 pi) - sum log diag(A)
};

/// Convex combination of Gaussian components; the joint density rho(xi).
class GaussianMixture {
 public:
  GaussianMixture(Eigen::VectorXd weights, std::vector<GaussianComponent> components);

  int dim() const { return components_.front().dim(); }
  int num_components() const { return static_cast<int>(components_.size()); }
  const Eigen::VectorXd& weights() const { return weights_; }
  const GaussianComponent& component(int i) const { return components_[static_cast<size_t>(i)]; }

  double log_density(const Eigen::VectorXd& xi) const;
  double density(const Eigen::VectorXd& xi) const;

  /// count-by-d matrix of draws. Component picked by inverse CDF on the
  /// cumulative weights (one uniform), then mu + A z with z standard normal.
  Eigen::MatrixXd sample(int count, Rng& rng) const;
  Eigen::MatrixXd sample(int count, uint64_t seed) const;

  Eigen::VectorXd mean() const;
  Eigen::MatrixXd covariance() const;

  /// Affine map to zero mixture mean and unit per-coordinate variance, plus
  /// the mixture expressed in the standardized coordinates.
  std::pair<AffineMap, GaussianMixture> standardize() const;

  static GaussianMixture from_json_text(const std::string& text);
  static GaussianMixture load(const std::string& path);
  std::string to_json_text() const;
  void save(const std::string& path) const;

 private:
  Eigen::VectorXd weights_;
  std::vector<GaussianComponent> components_;
};

}  // namespace mixpc
