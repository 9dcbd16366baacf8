#include "mixpc/solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mixpc/errors.hpp"

namespace mixpc {

CandidatePool CandidatePool::from_model(Eigen::MatrixXd points, const BasisSet& basis,
                                        Model model) {
  if (!model) throw ValidationError("CandidatePool: null model");
  CandidatePool pool;
  pool.phi_ = basis.evaluate_batch(points);
  pool.points_ = std::move(points);
  pool.y_ = Eigen::VectorXd::Zero(pool.points_.rows());
  pool.evaluated_.assign(static_cast<size_t>(pool.points_.rows()), 0);
  pool.model_ = std::move(model);
  return pool;
}

CandidatePool CandidatePool::from_table(Eigen::MatrixXd points, const BasisSet& basis,
                                        Eigen::VectorXd outputs) {
  if (points.rows() != outputs.size())
    throw ValidationError("CandidatePool: points/outputs row mismatch");
  CandidatePool pool;
  pool.phi_ = basis.evaluate_batch(points);
  pool.points_ = std::move(points);
  pool.y_ = std::move(outputs);
  pool.evaluated_.assign(static_cast<size_t>(pool.points_.rows()), 1);
  return pool;
}

CandidatePool CandidatePool::from_precomputed(Eigen::MatrixXd points, Eigen::MatrixXd phi,
                                              Eigen::VectorXd outputs) {
  if (points.rows() != phi.rows() || points.rows() != outputs.size())
    throw ValidationError("CandidatePool: points/phi/outputs row mismatch");
  CandidatePool pool;
  pool.points_ = std::move(points);
  pool.phi_ = std::move(phi);
  pool.y_ = std::move(outputs);
  pool.evaluated_.assign(static_cast<size_t>(pool.points_.rows()), 1);
  return pool;
}

double CandidatePool::output(int i) {
  if (i < 0 || i >= size()) throw ValidationError("CandidatePool::output: index out of range");
  if (!evaluated_[static_cast<size_t>(i)]) {
    y_[i] = model_(points_.row(i).transpose());
    evaluated_[static_cast<size_t>(i)] = 1;
    ++evaluations_;
  }
  return y_[i];
}

std::vector<int> rrqr_select(const Eigen::MatrixXd& phi, int r, RrqrDiagnostics* diag) {
  const int m0 = static_cast<int>(phi.rows());
  const int n = static_cast<int>(phi.cols());
  if (r < 1 || r > std::min(m0, n))
    throw ValidationError("rrqr_select: r must satisfy 1 <= r <= min(M0, N)");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(phi.transpose());
  int rank = static_cast<int>(qr.rank());
  int take = std::min(r, rank);

  const auto& perm = qr.colsPermutation().indices();
  std::vector<int> rows(static_cast<size_t>(take));
  for (int k = 0; k < take; ++k) rows[static_cast<size_t>(k)] = perm[k];
  if (diag) {
    diag->requested = r;
    diag->achieved = take;
    diag->numerical_rank = rank;
  }
  return rows;
}

namespace {

// Indices of the k largest |v|, magnitude descending, lowest index on ties;
// zero entries never selected.
std::vector<int> top_k_magnitude(const Eigen::VectorXd& v, int k) {
  std::vector<int> idx;
  idx.reserve(static_cast<size_t>(v.size()));
  for (int i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) idx.push_back(i);
  int take = std::min<int>(k, static_cast<int>(idx.size()));
  std::partial_sort(idx.begin(), idx.begin() + take, idx.end(), [&](int a, int b) {
    double va = std::abs(v[a]), vb = std::abs(v[b]);
    if (va != vb) return va > vb;
    return a < b;
  });
  idx.resize(static_cast<size_t>(take));
  return idx;
}

// Least squares on the given columns; rank-deficient systems keep the
// pivoted leading columns and zero the rest (flagged).
Eigen::VectorXd ls_on_support(const Eigen::MatrixXd& phi, const std::vector<int>& cols,
                              const Eigen::VectorXd& y, bool* dropped) {
  Eigen::MatrixXd sub(phi.rows(), static_cast<Eigen::Index>(cols.size()));
  for (size_t j = 0; j < cols.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = phi.col(cols[j]);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub);
  if (dropped && qr.rank() < sub.cols()) *dropped = true;
  return qr.solve(y);
}

}  // namespace

Eigen::VectorXd cosamp(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y, int s, double tol,
                       int maxit, CosampDiagnostics* diag, const std::vector<int>& warm_support) {
  const int m = static_cast<int>(phi.rows());
  const int n = static_cast<int>(phi.cols());
  if (y.size() != m) throw ValidationError("cosamp: row mismatch between phi and y");
  if (s < 1) throw ValidationError("cosamp: sparsity must be >= 1");
  if (s >= m) throw ValidationError("cosamp: sparsity must be < number of rows");

  // Internal column normalization; undone on return.
  Eigen::VectorXd colnorm(n);
  for (int j = 0; j < n; ++j) {
    double nrm = phi.col(j).norm();
    colnorm[j] = nrm > 0.0 ? nrm : 1.0;
  }
  Eigen::MatrixXd phin = phi * colnorm.cwiseInverse().asDiagonal();

  const double ynorm = y.norm();
  Eigen::VectorXd coeff = Eigen::VectorXd::Zero(n);  // normalized-basis coefficients
  std::vector<int> support;
  for (int j : warm_support)
    if (j >= 0 && j < n) support.push_back(j);
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());
  Eigen::VectorXd residual = y;
  double prev_rnorm = residual.norm();

  Eigen::VectorXd best_coeff = coeff;
  std::vector<int> best_support;
  double best_rnorm = prev_rnorm;
  bool dropped = false;
  int it = 0;

  for (it = 0; it < maxit; ++it) {
    if (residual.norm() <= tol * std::max(1.0, ynorm)) break;

    Eigen::VectorXd proxy = phin.transpose() * residual;
    std::vector<int> merged = top_k_magnitude(proxy, 2 * s);
    merged.insert(merged.end(), support.begin(), support.end());
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    if (merged.empty()) break;  // y orthogonal to every column (e.g. y = 0)

    Eigen::VectorXd b = ls_on_support(phin, merged, y, &dropped);
    Eigen::VectorXd bfull = Eigen::VectorXd::Zero(n);
    for (size_t j = 0; j < merged.size(); ++j) bfull[merged[j]] = b[static_cast<Eigen::Index>(j)];

    support = top_k_magnitude(bfull, s);
    std::sort(support.begin(), support.end());
    Eigen::VectorXd cs = ls_on_support(phin, support, y, &dropped);

    coeff.setZero();
    Eigen::VectorXd fit = Eigen::VectorXd::Zero(m);
    for (size_t j = 0; j < support.size(); ++j) {
      coeff[support[j]] = cs[static_cast<Eigen::Index>(j)];
      fit += cs[static_cast<Eigen::Index>(j)] * phin.col(support[j]);
    }
    residual = y - fit;

    double rnorm = residual.norm();
    if (rnorm < best_rnorm) {
      best_rnorm = rnorm;
      best_coeff = coeff;
      best_support = support;
    }
    if (std::abs(prev_rnorm - rnorm) <= tol * std::max(1.0, ynorm)) {
      ++it;
      break;
    }
    prev_rnorm = rnorm;
  }

  if (diag) {
    diag->iterations = it;
    diag->residual_norm = best_rnorm;
    diag->dropped_dependent_columns = dropped;
  }
  return best_coeff.cwiseQuotient(colnorm);
}

std::optional<int> d_optimal_next(const SparseFit& fit, const CandidatePool& pool) {
  const int m0 = pool.size();
  std::vector<char> used(static_cast<size_t>(m0), 0);
  for (int i : fit.selected) used[static_cast<size_t>(i)] = 1;

  const auto& phi = pool.phi();
  const Eigen::Index s = static_cast<Eigen::Index>(fit.support.size());
  Eigen::RowVectorXd x(s);
  int best = -1;
  double best_score = -1.0;
  for (int i = 0; i < m0; ++i) {
    if (used[static_cast<size_t>(i)]) continue;
    for (Eigen::Index j = 0; j < s; ++j) x[j] = phi(i, fit.support[static_cast<size_t>(j)]);
    double score = x * fit.graminv * x.transpose();
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  if (best < 0) return std::nullopt;
  return best;
}

namespace {

void refactor_gram(SparseFit& fit) {
  fit.gram = fit.phi1.transpose() * fit.phi1;
  Eigen::LLT<Eigen::MatrixXd> llt(fit.gram);
  if (llt.info() == Eigen::Success) {
    fit.graminv = llt.solve(Eigen::MatrixXd::Identity(fit.gram.rows(), fit.gram.cols()));
  } else {
    // Singular Gram (duplicate rows / dependent support): pseudo-solve.
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(fit.gram);
    fit.graminv = cod.pseudoInverse();
  }
  ++fit.refactorizations;
}

void refit_support_coeffs(SparseFit& fit) {
  Eigen::VectorXd c1 = fit.graminv * (fit.phi1.transpose() * fit.ysel);
  fit.coeffs.setZero();
  for (size_t j = 0; j < fit.support.size(); ++j)
    fit.coeffs[fit.support[j]] = c1[static_cast<Eigen::Index>(j)];
  double yn = fit.ysel.norm();
  fit.train_error = yn > 0.0 ? (fit.phi1 * c1 - fit.ysel).norm() / yn : 0.0;
}

}  // namespace

void rank_one_update(SparseFit& fit, const Eigen::RowVectorXd& x, double ynew) {
  if (x.size() != static_cast<Eigen::Index>(fit.support.size()))
    throw ValidationError("rank_one_update: row not conformal with support");

  double denom = 1.0 + x * fit.graminv * x.transpose();
  bool force_refactor = denom <= 1e-12;
  if (!force_refactor) {
    Eigen::VectorXd gx = fit.graminv * x.transpose();
    fit.graminv -= (gx * gx.transpose()) / denom;
  }

  fit.phi1.conservativeResize(fit.phi1.rows() + 1, Eigen::NoChange);
  fit.phi1.row(fit.phi1.rows() - 1) = x;
  fit.ysel.conservativeResize(fit.ysel.size() + 1);
  fit.ysel[fit.ysel.size() - 1] = ynew;
  fit.gram += x.transpose() * x;

  if (force_refactor) {
    refactor_gram(fit);
  } else {
    double drift = (fit.graminv * fit.gram -
                    Eigen::MatrixXd::Identity(fit.gram.rows(), fit.gram.cols()))
                       .cwiseAbs()
                       .maxCoeff();
    if (drift > 1e-6) refactor_gram(fit);
  }
  refit_support_coeffs(fit);
}

namespace {

SparseFit make_fit(const std::vector<int>& selected, const std::vector<int>& support,
                   const CandidatePool& pool, const Eigen::VectorXd& ysel, int n_basis) {
  SparseFit fit;
  fit.selected = selected;
  fit.support = support;
  fit.ysel = ysel;
  fit.coeffs = Eigen::VectorXd::Zero(n_basis);
  fit.phi1.resize(static_cast<Eigen::Index>(selected.size()),
                  static_cast<Eigen::Index>(support.size()));
  for (size_t i = 0; i < selected.size(); ++i)
    for (size_t j = 0; j < support.size(); ++j)
      fit.phi1(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          pool.phi()(selected[i], support[j]);
  fit.gram = fit.phi1.transpose() * fit.phi1;
  Eigen::LLT<Eigen::MatrixXd> llt(fit.gram);
  if (llt.info() == Eigen::Success) {
    fit.graminv = llt.solve(Eigen::MatrixXd::Identity(fit.gram.rows(), fit.gram.cols()));
  } else {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(fit.gram);
    fit.graminv = cod.pseudoInverse();
    ++fit.refactorizations;
  }
  refit_support_coeffs(fit);
  return fit;
}

}  // namespace

SparseFit adaptive_fit(CandidatePool& pool, const BasisSet& basis, const SolverConfig& cfg) {
  const int n_basis = basis.size();
  const int m0 = pool.size();
  if (pool.phi().cols() != n_basis)
    throw ValidationError("adaptive_fit: pool was built against a different basis");

  const int s_cap = std::max(1, cfg.s_max);
  int budget = cfg.max_total_samples > 0 ? cfg.max_total_samples : m0;
  int r = cfg.initial_samples > 0 ? cfg.initial_samples : 2 * s_cap;
  r = std::min({r, m0, n_basis, budget});

  std::vector<int> selected = rrqr_select(pool.phi(), r);
  if (selected.size() < 2) throw ValidationError("adaptive_fit: need at least 2 initial samples");
  Eigen::VectorXd ysel(static_cast<Eigen::Index>(selected.size()));
  for (size_t i = 0; i < selected.size(); ++i)
    ysel[static_cast<Eigen::Index>(i)] = pool.output(selected[i]);

  SparseFit fit;
  Eigen::VectorXd prev_outer_coeffs;
  bool have_prev_outer = false;
  int samples_at_refresh = 0;

  // The l0 solve on everything selected so far; refreshes the support.
  // Warm-started from the previous round's support so identification
  // compounds instead of restarting.
  auto refresh = [&](int outer) {
    Eigen::MatrixXd phi_sel(static_cast<Eigen::Index>(selected.size()), n_basis);
    for (size_t i = 0; i < selected.size(); ++i)
      phi_sel.row(static_cast<Eigen::Index>(i)) = pool.phi().row(selected[i]);

    int s = std::min(s_cap, std::max(5, static_cast<int>(selected.size()) / 4));
    s = std::min(s, static_cast<int>(selected.size()) - 1);
    s = std::max(s, 1);
    Eigen::VectorXd c = cosamp(phi_sel, ysel, s, cfg.cosamp_tol, cfg.cosamp_maxit, nullptr,
                               fit.support);

    std::vector<int> support;
    for (int j = 0; j < n_basis; ++j)
      if (c[j] != 0.0) support.push_back(j);
    if (support.empty()) support.push_back(0);  // y == 0: keep the constant

    fit = make_fit(selected, support, pool, ysel, n_basis);
    samples_at_refresh = static_cast<int>(selected.size());
    fit.history.push_back(
        FitStep{outer, 0, -1, 0.0, fit.train_error, 0.0, static_cast<int>(selected.size())});
    if (cfg.on_update) cfg.on_update(fit);
  };

  for (int outer = 1; outer <= cfg.outer_iters; ++outer) {
    refresh(outer);

    // Inner loop: support fixed, D-optimal additions with rank-one updates.
    for (int inner = 1; inner <= cfg.t_max; ++inner) {
      if (static_cast<int>(fit.selected.size()) >= budget) break;
      auto next = d_optimal_next(fit, pool);
      if (!next) break;

      const Eigen::Index s_sz = static_cast<Eigen::Index>(fit.support.size());
      Eigen::RowVectorXd x(s_sz);
      for (Eigen::Index j = 0; j < s_sz; ++j)
        x[j] = pool.phi()(*next, fit.support[static_cast<size_t>(j)]);
      double score = x * fit.graminv * x.transpose();

      Eigen::VectorXd prev = fit.coeffs;
      fit.selected.push_back(*next);
      rank_one_update(fit, x, pool.output(*next));

      double prev_norm = prev.norm();
      double change =
          prev_norm > 0.0 ? (fit.coeffs - prev).norm() / prev_norm : (fit.coeffs.norm() > 0.0 ? 1.0 : 0.0);
      fit.history.push_back(FitStep{outer, inner, *next, score, fit.train_error, change,
                                    static_cast<int>(fit.selected.size())});
      if (cfg.on_update) cfg.on_update(fit);
      if (change < cfg.tol_stop) break;
    }

    selected = fit.selected;
    ysel = fit.ysel;

    // The budget binding does not end the outer loop: support refreshes
    // cost no new simulator calls and the convergence test below stops the
    // loop once they fix nothing.
    if (have_prev_outer) {
      double pn = prev_outer_coeffs.norm();
      double change = pn > 0.0 ? (fit.coeffs - prev_outer_coeffs).norm() / pn
                               : (fit.coeffs.norm() > 0.0 ? 1.0 : 0.0);
      if (change < cfg.tol_stop) break;
    }
    prev_outer_coeffs = fit.coeffs;
    have_prev_outer = true;
  }

  // Samples added after the last refresh still deserve an l0 pass; it costs
  // no simulator calls.
  if (static_cast<int>(selected.size()) > samples_at_refresh) refresh(cfg.outer_iters + 1);

  fit.model_evaluations = pool.evaluations();
  return fit;
}

SparseFit random_fit(CandidatePool& pool, const BasisSet& basis, int budget, Rng& rng,
                     const SolverConfig& cfg) {
  const int n_basis = basis.size();
  const int m0 = pool.size();
  if (budget < 2 || budget > m0)
    throw ValidationError("random_fit: budget must be in [2, pool size]");

  // Sample `budget` distinct rows (partial Fisher-Yates).
  std::vector<int> order(static_cast<size_t>(m0));
  std::iota(order.begin(), order.end(), 0);
  for (int i = 0; i < budget; ++i) {
    int j = i + rng.uniform_int(m0 - i);
    std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
  }
  std::vector<int> selected(order.begin(), order.begin() + budget);

  Eigen::MatrixXd phi_sel(budget, n_basis);
  Eigen::VectorXd ysel(budget);
  for (int i = 0; i < budget; ++i) {
    phi_sel.row(i) = pool.phi().row(selected[static_cast<size_t>(i)]);
    ysel[i] = pool.output(selected[static_cast<size_t>(i)]);
  }

  int s = std::min(std::max(1, cfg.s_max), std::max(5, budget / 4));
  s = std::min(s, budget - 1);
  Eigen::VectorXd c = cosamp(phi_sel, ysel, s, cfg.cosamp_tol, cfg.cosamp_maxit);

  std::vector<int> support;
  for (int j = 0; j < n_basis; ++j)
    if (c[j] != 0.0) support.push_back(j);
  if (support.empty()) support.push_back(0);

  SparseFit fit = make_fit(selected, support, pool, ysel, n_basis);
  fit.model_evaluations = pool.evaluations();
  return fit;
}

}  // namespace mixpc
