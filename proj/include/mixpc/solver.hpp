#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <vector>

#include "mixpc/basis.hpp"
#include "mixpc/rng.hpp"

namespace mixpc {

/// Pool of candidate parameter samples with their basis rows; outputs are
/// looked up (offline mode) or computed on first touch (model mode).
class CandidatePool {
 public:
  using Model = std::function<double(const Eigen::VectorXd&)>;

  static CandidatePool from_model(Eigen::MatrixXd points, const BasisSet& basis, Model model);
  static CandidatePool from_table(Eigen::MatrixXd points, const BasisSet& basis,
                                  Eigen::VectorXd outputs);
  /// Offline pool with basis rows the caller already computed; the caller
  /// owns the promise that phi matches the points.
  static CandidatePool from_precomputed(Eigen::MatrixXd points, Eigen::MatrixXd phi,
                                        Eigen::VectorXd outputs);

  int size() const { return static_cast<int>(points_.rows()); }
  const Eigen::MatrixXd& points() const { return points_; }
  const Eigen::MatrixXd& phi() const { return phi_; }

  /// Output value for candidate i; counts a model evaluation on first touch.
  double output(int i);
  bool evaluated(int i) const { return evaluated_[static_cast<size_t>(i)] != 0; }
  int evaluations() const { return evaluations_; }

 private:
  CandidatePool() = default;
  Eigen::MatrixXd points_;
  Eigen::MatrixXd phi_;
  Eigen::VectorXd y_;
  std::vector<char> evaluated_;
  Model model_;
  int evaluations_ = 0;
};

struct RrqrDiagnostics {
  int requested = 0;
  int achieved = 0;
  int numerical_rank = 0;
};

/// Most informative r candidate rows by column-pivoted QR of phi^T, in
/// pivot order. Returns fewer than r (with diagnostics) when the numerical
/// rank falls short.
std::vector<int> rrqr_select(const Eigen::MatrixXd& phi, int r,
                             RrqrDiagnostics* diag = nullptr);

struct CosampDiagnostics {
  int iterations = 0;
  double residual_norm = 0.0;
  bool dropped_dependent_columns = false;
};

/// CoSaMP: proxy = Phi^T r, merge top-2s proxy support with the current
/// support, least squares on the merged set, prune to top-s, re-solve.
/// Columns are normalized internally; coefficients are reported in the
/// caller's scaling. Stops when the residual norm change drops below tol
/// (relative to ||y||) or after maxit sweeps. `warm_support` seeds the
/// first merge (the support evolves freely afterwards).
Eigen::VectorXd cosamp(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y, int s,
                       double tol = 1e-10, int maxit = 100,
                       CosampDiagnostics* diag = nullptr,
                       const std::vector<int>& warm_support = {});

struct FitStep {
  int outer = 0;
  int inner = 0;
  int candidate = -1;     // pool index added at this step (-1 for the seeding row)
  double score = 0.0;     // D-optimal objective x G^-1 x^T of the added row
  double train_error = 0.0;
  double coeff_change = 0.0;
  int samples_used = 0;
};

/// State of a sparse fit: selected samples, fixed support, coefficients and
/// the cached Gram inverse that the rank-one updates maintain.
struct SparseFit {
  std::vector<int> selected;      // pool indices, in selection order
  std::vector<int> support;       // basis indices with nonzero coefficients
  Eigen::VectorXd coeffs;         // full length-N vector, zeros off support
  Eigen::MatrixXd phi1;           // |selected| x |support| design matrix
  Eigen::VectorXd ysel;           // outputs for selected samples
  Eigen::MatrixXd gram;           // phi1^T phi1, maintained incrementally
  Eigen::MatrixXd graminv;        // cached (phi1^T phi1)^-1
  std::vector<FitStep> history;
  int refactorizations = 0;
  int model_evaluations = 0;
  double train_error = 0.0;
};

/// Index of the unused candidate maximizing x graminv x^T over the current
/// support (determinant objective via the matrix determinant lemma); ties
/// broken toward the lowest candidate index. nullopt when the pool is
/// exhausted.
std::optional<int> d_optimal_next(const SparseFit& fit, const CandidatePool& pool);

/// Append row x (restricted to the support) with output ynew: Sherman-
/// Morrison update of graminv, refit of the support coefficients, and a
/// drift check that falls back to a fresh factorization beyond 1e-6.
void rank_one_update(SparseFit& fit, const Eigen::RowVectorXd& x, double ynew);

struct SolverConfig {
  int initial_samples = -1;    // r; -1 selects 2 * s_max
  int s_max = 50;              // sparsity cap
  int t_max = 30;              // inner iterations per outer round
  double tol_stop = 1e-3;      // relative coefficient-change stopping rule
  int outer_iters = 3;
  int max_total_samples = -1;  // simulator-call budget; -1 = pool-limited
  double cosamp_tol = 1e-10;
  int cosamp_maxit = 100;
  /// Called after every accepted sample with the running fit.
  std::function<void(const SparseFit&)> on_update;
};

/// The adaptive sparse solver: RRQR seeding, CoSaMP support refresh per
/// outer round, D-optimal sample additions with rank-one updates inside.
SparseFit adaptive_fit(CandidatePool& pool, const BasisSet& basis, const SolverConfig& cfg);

/// Baseline: fit once by CoSaMP on `budget` uniformly drawn pool rows.
SparseFit random_fit(CandidatePool& pool, const BasisSet& basis, int budget, Rng& rng,
                     const SolverConfig& cfg);

}  // namespace mixpc
