#include "mixpc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mixpc/errors.hpp"

namespace mixpc {

SurrogateModel::SurrogateModel(std::shared_ptr<const BasisSet> basis, Eigen::VectorXd coeffs)
    : basis_(std::move(basis)), coeffs_(std::move(coeffs)) {
  if (!basis_) throw ValidationError("SurrogateModel: null basis");
  if (coeffs_.size() != basis_->size())
    throw ValidationError("SurrogateModel: coefficient length does not match basis size");
  monomial_weights_ = basis_->monomial_weights(coeffs_);
}

double SurrogateModel::evaluate(const Eigen::VectorXd& xi) const {
  Eigen::VectorXd b = monomial_vector(basis_->order(), basis_->standardization().forward(xi));
  return b.dot(monomial_weights_);
}

Eigen::VectorXd SurrogateModel::evaluate_batch(const Eigen::MatrixXd& points) const {
  const Eigen::Index n = points.rows();
  Eigen::VectorXd out(n);
  const Eigen::Index chunk = 8192;
  for (Eigen::Index start = 0; start < n; start += chunk) {
    Eigen::Index len = std::min(chunk, n - start);
    Eigen::MatrixXd B = monomial_matrix(
        basis_->order(), basis_->standardization().forward_rows(points.middleRows(start, len)));
    out.segment(start, len) = B * monomial_weights_;
  }
  return out;
}

double mean(const SurrogateModel& model) { return model.coeffs()[0]; }

double variance(const SurrogateModel& model) {
  const Eigen::VectorXd& c = model.coeffs();
  return c.tail(c.size() - 1).squaredNorm();
}

double relative_error(const Eigen::MatrixXd& phi_rows, const Eigen::VectorXd& coeffs,
                      const Eigen::VectorXd& y) {
  double yn = y.norm();
  if (yn == 0.0) throw ValidationError("relative_error: ||y|| is zero");
  return (phi_rows * coeffs - y).norm() / yn;
}

namespace {

DensityEstimate estimate_from_values(Eigen::VectorXd values, uint64_t seed, int bins,
                                     bool keep_values) {
  if (bins < 1) throw ValidationError("density: bins must be >= 1");
  const Eigen::Index n = values.size();
  if (n < 2) throw ValidationError("density: need at least 2 values");

  DensityEstimate est;
  est.samples = n;
  est.seed = seed;

  double lo = values.minCoeff();
  double hi = values.maxCoeff();
  if (hi <= lo) hi = lo + 1.0;  // constant model: single-bin spike

  est.bin_edges.resize(bins + 1);
  double width = (hi - lo) / bins;
  for (int b = 0; b <= bins; ++b) est.bin_edges[b] = lo + width * b;
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(bins);
  for (Eigen::Index i = 0; i < n; ++i) {
    int b = static_cast<int>((values[i] - lo) / width);
    b = std::clamp(b, 0, bins - 1);
    counts[b] += 1.0;
  }
  est.bin_density = counts / (static_cast<double>(n) * width);

  // Silverman bandwidth from std and IQR.
  double m = values.mean();
  double sd = std::sqrt((values.array() - m).square().sum() / static_cast<double>(n - 1));
  std::vector<double> sorted(values.data(), values.data() + n);
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    double pos = q * static_cast<double>(n - 1);
    size_t i = static_cast<size_t>(pos);
    double frac = pos - static_cast<double>(i);
    return i + 1 < sorted.size() ? sorted[i] * (1 - frac) + sorted[i + 1] * frac : sorted[i];
  };
  double iqr = quantile(0.75) - quantile(0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (spread <= 0.0) spread = std::max(sd, 1e-12);
  est.bandwidth = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);

  // Binned kernel evaluation: accumulate on a fine grid, then convolve.
  const int grid_n = 512;
  double glo = lo - 3.0 * est.bandwidth;
  double ghi = hi + 3.0 * est.bandwidth;
  est.grid.resize(grid_n);
  double gstep = (ghi - glo) / (grid_n - 1);
  for (int g = 0; g < grid_n; ++g) est.grid[g] = glo + gstep * g;

  const int fine_n = 4096;
  double fstep = (ghi - glo) / fine_n;
  Eigen::VectorXd fine = Eigen::VectorXd::Zero(fine_n);
  for (Eigen::Index i = 0; i < n; ++i) {
    int b = static_cast<int>((values[i] - glo) / fstep);
    b = std::clamp(b, 0, fine_n - 1);
    fine[b] += 1.0;
  }
  est.pdf = Eigen::VectorXd::Zero(grid_n);
  double inv_h = 1.0 / est.bandwidth;
  double norm = inv_h / (std::sqrt(2.0 * M_PI) * static_cast<double>(n));
  int reach = static_cast<int>(std::ceil(5.0 * est.bandwidth / fstep)) + 1;
  for (int g = 0; g < grid_n; ++g) {
    double xg = est.grid[g];
    int center = static_cast<int>((xg - glo) / fstep);
    int b0 = std::max(0, center - reach);
    int b1 = std::min(fine_n - 1, center + reach);
    double acc = 0.0;
    for (int b = b0; b <= b1; ++b) {
      if (fine[b] == 0.0) continue;
      double z = (xg - (glo + fstep * (b + 0.5))) * inv_h;
      acc += fine[b] * std::exp(-0.5 * z * z);
    }
    est.pdf[g] = acc * norm;
  }

  if (keep_values) est.values = std::move(values);
  return est;
}

}  // namespace

DensityEstimate density(const SurrogateModel& model, const GaussianMixture& gmm,
                        int64_t n_samples, uint64_t seed, int bins, bool keep_values) {
  if (n_samples < 10000) throw ValidationError("density: need at least 10^4 samples");
  Rng rng(seed);
  Eigen::VectorXd values(n_samples);
  const int64_t batch = 100000;
  int64_t done = 0;
  while (done < n_samples) {
    int m = static_cast<int>(std::min(batch, n_samples - done));
    values.segment(done, m) = model.evaluate_batch(gmm.sample(m, rng));
    done += m;
  }
  return estimate_from_values(std::move(values), seed, bins, keep_values);
}

DensityEstimate density_of_samples(const Eigen::VectorXd& values, uint64_t seed, int bins) {
  return estimate_from_values(values, seed, bins, false);
}

std::vector<int> density_modes(const Eigen::VectorXd& curve, int window, double prominence) {
  const int n = static_cast<int>(curve.size());
  std::vector<int> kept;
  for (int b = 0; b < n; ++b) {
    if (curve[b] <= 0.0) continue;
    bool is_peak = true;
    for (int k = std::max(0, b - window); k <= std::min(n - 1, b + window); ++k) {
      if (k == b) continue;
      if (curve[k] > curve[b] || (curve[k] == curve[b] && k < b)) {
        is_peak = false;
        break;
      }
    }
    if (!is_peak) continue;
    if (kept.empty()) {
      kept.push_back(b);
      continue;
    }
    int prev = kept.back();
    double valley = curve.segment(prev, b - prev + 1).minCoeff();
    double lower = std::min(curve[prev], curve[b]);
    if (valley <= (1.0 - prominence) * lower) {
      kept.push_back(b);
    } else if (curve[b] > curve[prev]) {
      kept.back() = b;  // same hump, keep its higher point
    }
  }
  return kept;
}

double l1_density_distance(const Eigen::VectorXd& grid, const Eigen::VectorXd& p,
                           const Eigen::VectorXd& q) {
  if (grid.size() != p.size() || grid.size() != q.size() || grid.size() < 2)
    throw ValidationError("l1_density_distance: mismatched grids");
  auto mass = [&](const Eigen::VectorXd& f) {
    double acc = 0.0;
    for (int g = 0; g + 1 < grid.size(); ++g)
      acc += 0.5 * (f[g] + f[g + 1]) * (grid[g + 1] - grid[g]);
    return acc;
  };
  double mp = mass(p), mq = mass(q);
  if (mp <= 0.0 || mq <= 0.0) throw ValidationError("l1_density_distance: empty density");
  double acc = 0.0;
  for (int g = 0; g + 1 < grid.size(); ++g) {
    double a = std::abs(p[g] / mp - q[g] / mq);
    double b = std::abs(p[g + 1] / mp - q[g + 1] / mq);
    acc += 0.5 * (a + b) * (grid[g + 1] - grid[g]);
  }
  return acc;
}

}  // namespace mixpc
