#include "mixpc/gaussian_mixture.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "mixpc/errors.hpp"

namespace mixpc {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

Eigen::MatrixXd AffineMap::forward_rows(const Eigen::MatrixXd& pts) const {
  return (pts.rowwise() - shift.transpose()).array().rowwise() / scale.transpose().array();
}

AffineMap AffineMap::identity(int d) {
  return AffineMap{Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d)};
}

GaussianComponent::GaussianComponent(Eigen::VectorXd mean, Eigen::MatrixXd cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  const int d = static_cast<int>(mean_.size());
  if (cov_.rows() != d || cov_.cols() != d)
    throw ValidationError("GaussianComponent: covariance shape does not match mean dimension");

  double scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
  double asym = (cov_ - cov_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale)
    throw ValidationError("GaussianComponent: covariance is not symmetric (relative asymmetry " +
                          std::to_string(asym / scale) + ")");
  cov_ = 0.5 * (cov_ + cov_.transpose().eval());

  Eigen::LLT<Eigen::MatrixXd> llt(cov_);
  if (llt.info() != Eigen::Success)
    throw ValidationError("GaussianComponent: covariance is not positive definite");
  chol_ = llt.matrixL();

  double resid = (chol_ * chol_.transpose() - cov_).cwiseAbs().maxCoeff();
  if (resid > 1e-10 * scale)
    throw NumericalError("GaussianComponent: Cholesky residual too large");

  log_norm_ = -0.5 * d * kLog2Pi;
  for (int k = 0; k < d; ++k) log_norm_ -= std::log(chol_(k, k));
}

double GaussianComponent::log_density(const Eigen::VectorXd& xi) const {
  if (xi.size() != mean_.size())
    throw ValidationError("GaussianComponent::log_density: dimension mismatch");
  Eigen::VectorXd z = chol_.triangularView<Eigen::Lower>().solve(xi - mean_);
  return log_norm_ - 0.5 * z.squaredNorm();
}

GaussianMixture::GaussianMixture(Eigen::VectorXd weights,
                                 std::vector<GaussianComponent> components)
    : weights_(std::move(weights)), components_(std::move(components)) {
  if (components_.empty()) throw ValidationError("GaussianMixture: no components");
  if (weights_.size() != static_cast<Eigen::Index>(components_.size()))
    throw ValidationError("GaussianMixture: weight count does not match component count");
  for (int i = 0; i < weights_.size(); ++i) {
    if (!(weights_[i] > 0.0))
      throw ValidationError("GaussianMixture: weight " + std::to_string(i) + " is not positive");
  }
  if (std::abs(weights_.sum() - 1.0) > 1e-12)
    throw ValidationError("GaussianMixture: weights sum to " + std::to_string(weights_.sum()) +
                          ", expected 1");
  const int d = components_.front().dim();
  for (const auto& c : components_) {
    if (c.dim() != d) throw ValidationError("GaussianMixture: components disagree on dimension");
  }
}

double GaussianMixture::log_density(const Eigen::VectorXd& xi) const {
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(components_.size());
  for (size_t i = 0; i < components_.size(); ++i) {
    terms[i] = std::log(weights_[static_cast<Eigen::Index>(i)]) + components_[i].log_density(xi);
    best = std::max(best, terms[i]);
  }
  if (!std::isfinite(best)) return best;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - best);
  return best + std::log(acc);
}

double GaussianMixture::density(const Eigen::VectorXd& xi) const {
  return std::exp(log_density(xi));
}

Eigen::MatrixXd GaussianMixture::sample(int count, Rng& rng) const {
  if (count < 1) throw ValidationError("GaussianMixture::sample: count must be >= 1");
  const int d = dim();
  Eigen::VectorXd cum(weights_.size());
  double acc = 0.0;
  for (int i = 0; i < weights_.size(); ++i) {
    acc += weights_[i];
    cum[i] = acc;
  }
  Eigen::MatrixXd out(count, d);
  Eigen::VectorXd z(d);
  for (int n = 0; n < count; ++n) {
    double u = rng.uniform();
    int i = 0;
    while (i + 1 < cum.size() && u >= cum[i]) ++i;
    for (int k = 0; k < d; ++k) z[k] = rng.normal();
    const auto& comp = components_[static_cast<size_t>(i)];
    out.row(n) =
        (comp.mean() + comp.chol().triangularView<Eigen::Lower>() * z).transpose();
  }
  return out;
}

Eigen::MatrixXd GaussianMixture::sample(int count, uint64_t seed) const {
  Rng rng(seed);
  return sample(count, rng);
}

Eigen::VectorXd GaussianMixture::mean() const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(dim());
  for (size_t i = 0; i < components_.size(); ++i)
    m += weights_[static_cast<Eigen::Index>(i)] * components_[i].mean();
  return m;
}

Eigen::MatrixXd GaussianMixture::covariance() const {
  const int d = dim();
  Eigen::VectorXd m = mean();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d, d);
  for (size_t i = 0; i < components_.size(); ++i) {
    const auto& comp = components_[i];
    c += weights_[static_cast<Eigen::Index>(i)] *
         (comp.covariance() + comp.mean() * comp.mean().transpose());
  }
  c -= m * m.transpose();
  return c;
}

std::pair<AffineMap, GaussianMixture> GaussianMixture::standardize() const {
  const int d = dim();
  Eigen::VectorXd m = mean();
  Eigen::VectorXd var = covariance().diagonal();
  for (int k = 0; k < d; ++k) {
    if (!(var[k] > 0.0))
      throw ValidationError("standardize: coordinate " + std::to_string(k) +
                            " has zero variance");
  }
  AffineMap map{m, var.cwiseSqrt()};
  Eigen::VectorXd inv_scale = map.scale.cwiseInverse();
  std::vector<GaussianComponent> comps;
  comps.reserve(components_.size());
  for (const auto& c : components_) {
    Eigen::VectorXd mu = (c.mean() - m).cwiseProduct(inv_scale);
    Eigen::MatrixXd cov = inv_scale.asDiagonal() * c.covariance() * inv_scale.asDiagonal();
    comps.emplace_back(std::move(mu), std::move(cov));
  }
  return {map, GaussianMixture(weights_, std::move(comps))};
}

namespace {

GaussianMixture parse_mixture(const nlohmann::json& j) {
  for (const char* key : {"d", "n", "weights", "means", "covariances"}) {
    if (!j.contains(key)) throw IoError(std::string("mixture spec: missing field '") + key + "'");
  }
  const int d = j.at("d").get<int>();
  const int n = j.at("n").get<int>();
  if (d < 1) throw ValidationError("mixture spec: d must be >= 1");
  if (n < 1) throw ValidationError("mixture spec: n must be >= 1");

  auto weights_list = j.at("weights").get<std::vector<double>>();
  if (static_cast<int>(weights_list.size()) != n)
    throw IoError("mixture spec: 'weights' length " + std::to_string(weights_list.size()) +
                  " does not match n=" + std::to_string(n));
  Eigen::VectorXd w = Eigen::Map<Eigen::VectorXd>(weights_list.data(), n);

  auto means = j.at("means").get<std::vector<std::vector<double>>>();
  auto covs = j.at("covariances").get<std::vector<std::vector<double>>>();
  if (static_cast<int>(means.size()) != n)
    throw IoError("mixture spec: 'means' has " + std::to_string(means.size()) + " rows, expected n=" +
                  std::to_string(n));
  if (static_cast<int>(covs.size()) != n)
    throw IoError("mixture spec: 'covariances' has " + std::to_string(covs.size()) +
                  " entries, expected n=" + std::to_string(n));

  std::vector<GaussianComponent> comps;
  comps.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(means[static_cast<size_t>(i)].size()) != d)
      throw IoError("mixture spec: means[" + std::to_string(i) + "] has length " +
                    std::to_string(means[static_cast<size_t>(i)].size()) + ", expected d=" +
                    std::to_string(d));
    if (static_cast<int>(covs[static_cast<size_t>(i)].size()) != d * d)
      throw IoError("mixture spec: covariances[" + std::to_string(i) + "] has length " +
                    std::to_string(covs[static_cast<size_t>(i)].size()) + ", expected d*d=" +
                    std::to_string(d * d));
    Eigen::VectorXd mu = Eigen::Map<Eigen::VectorXd>(means[static_cast<size_t>(i)].data(), d);
    Eigen::MatrixXd cov =
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            covs[static_cast<size_t>(i)].data(), d, d);
    comps.emplace_back(std::move(mu), std::move(cov));
  }
  return GaussianMixture(w, std::move(comps));
}

}  // namespace

GaussianMixture GaussianMixture::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(std::string("mixture spec: ") + e.what());
  }
  return parse_mixture(j);
}

GaussianMixture GaussianMixture::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mixture spec '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::string GaussianMixture::to_json_text() const {
  nlohmann::json j;
  const int d = dim();
  j["d"] = d;
  j["n"] = num_components();
  std::vector<double> w(weights_.data(), weights_.data() + weights_.size());
  j["weights"] = w;
  std::vector<std::vector<double>> means, covs;
  for (const auto& c : components_) {
    means.emplace_back(c.mean().data(), c.mean().data() + d);
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> cr = c.covariance();
    covs.emplace_back(cr.data(), cr.data() + d * d);
  }
  j["means"] = means;
  j["covariances"] = covs;
  return j.dump(2);
}

void GaussianMixture::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write mixture spec '" + path + "'");
  out << to_json_text() << '\n';
}

}  // namespace mixpc
