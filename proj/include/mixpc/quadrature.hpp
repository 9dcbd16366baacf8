#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "mixpc/gaussian_mixture.hpp"
#include "mixpc/multi_index.hpp"

namespace mixpc {

/// Probabilists' Gauss-Hermite rule: integrates f against the standard
/// normal density, total weight 1. Exact for polynomials of degree < 2n.
struct GaussHermiteRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

/// Golub-Welsch on the Jacobi matrix of the probabilists' Hermite
/// recurrence (off-diagonal sqrt(k)). Nodes are symmetrized; symmetry
/// defects beyond 1e-13 raise NumericalError.
GaussHermiteRule gauss_hermite(int n);

/// E[(A eta + mu)^alpha] by a tensorized Gauss-Hermite grid in eta.
/// Exact when nodes > |alpha|/2 per dimension. Refuses d > 4.
double quad_moment(const MultiIndex& alpha, const GaussianComponent& comp, int nodes);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  int64_t samples = 0;
};

/// Sample mean of xi^alpha over mixture draws, with the estimated standard
/// error of the mean. Requires n >= 10^4.
McEstimate mc_moment(const MultiIndex& alpha, const GaussianMixture& gmm, int64_t n,
                     uint64_t seed);

}  // namespace mixpc
