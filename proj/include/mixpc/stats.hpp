#pragma once

#include <Eigen/Core>
#include <memory>

#include "mixpc/basis.hpp"
#include "mixpc/gaussian_mixture.hpp"

namespace mixpc {

/// Truncated expansion y(xi) ~= sum c_alpha Psi_alpha(xi).
class SurrogateModel {
 public:
  SurrogateModel(std::shared_ptr<const BasisSet> basis, Eigen::VectorXd coeffs);

  const BasisSet& basis() const { return *basis_; }
  const Eigen::VectorXd& coeffs() const { return coeffs_; }

  double evaluate(const Eigen::VectorXd& xi) const;
  Eigen::VectorXd evaluate_batch(const Eigen::MatrixXd& points) const;

 private:
  std::shared_ptr<const BasisSet> basis_;
  Eigen::VectorXd coeffs_;
  Eigen::VectorXd monomial_weights_;  // L^-T c, so evaluation is one monomial pass
};

/// E[y] = c_0 (orthonormality; Psi_0 == 1).
double mean(const SurrogateModel& model);

/// var[y] = sum of squared coefficients excluding index 0.
double variance(const SurrogateModel& model);

/// ||Phi c - y||_2 / ||y||_2. Throws on ||y|| = 0.
double relative_error(const Eigen::MatrixXd& phi_rows, const Eigen::VectorXd& coeffs,
                      const Eigen::VectorXd& y);

struct DensityEstimate {
  Eigen::VectorXd bin_edges;    // bins + 1 edges over [min, max]
  Eigen::VectorXd bin_density;  // normalized histogram heights
  Eigen::VectorXd grid;         // 512 kernel-density abscissae
  Eigen::VectorXd pdf;          // Gaussian-kernel density at grid points
  double bandwidth = 0.0;
  int64_t samples = 0;
  uint64_t seed = 0;
  Eigen::VectorXd values;       // raw surrogate evaluations (optional, see keep_values)
};

/// Sample the mixture, push through the surrogate, and return a histogram
/// plus a Silverman-bandwidth Gaussian kernel density on 512 grid points.
DensityEstimate density(const SurrogateModel& model, const GaussianMixture& gmm,
                        int64_t n_samples, uint64_t seed, int bins, bool keep_values = false);

/// Same estimate for raw sample values (used for Monte Carlo baselines).
DensityEstimate density_of_samples(const Eigen::VectorXd& values, uint64_t seed, int bins);

/// Indices of the modes of a density curve: local maxima over a +-window
/// neighborhood, where consecutive kept peaks must be split by a valley
/// at or below (1 - prominence) times the lower of the two peaks.
std::vector<int> density_modes(const Eigen::VectorXd& curve, int window, double prominence);

/// Integral of |p - q| over a shared grid after renormalizing both to unit
/// mass; curves must share the grid. 0 means identical, 2 means disjoint.
double l1_density_distance(const Eigen::VectorXd& grid, const Eigen::VectorXd& p,
                           const Eigen::VectorXd& q);

}  // namespace mixpc
