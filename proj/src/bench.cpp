#include "mixpc/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <utility>

#include "mixpc/errors.hpp"
#include "mixpc/rng.hpp"

namespace mixpc::bench {

struct BlackBoxModel::State {
  std::string name;
  int d = 0;
  int p_rec = 2;
  std::unique_ptr<GaussianMixture> mixture;

  // Planted part: coefficients in this model's own basis at p_rec.
  std::vector<std::pair<int, double>> planted;  // (basis position, coefficient)
  // Smooth non-polynomial part evaluated directly on xi (may be null).
  std::function<double(const Eigen::VectorXd&)> extra;

  mutable std::mutex mu;
  mutable std::map<int, std::shared_ptr<const BasisSet>> bases;
  mutable std::shared_ptr<const SurrogateModel> planted_model;

  std::shared_ptr<const BasisSet> basis_for(int p) const {
    std::lock_guard<std::mutex> lock(mu);
    auto it = bases.find(p);
    if (it != bases.end()) return it->second;
    auto b = std::make_shared<const BasisSet>(build_basis(*mixture, p));
    bases.emplace(p, b);
    return b;
  }

  const SurrogateModel& planted_surrogate() const {
    {
      std::lock_guard<std::mutex> lock(mu);
      if (planted_model) return *planted_model;
    }
    auto b = basis_for(p_rec);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(b->size());
    for (const auto& [idx, val] : planted) c[idx] = val;
    auto m = std::make_shared<const SurrogateModel>(b, std::move(c));
    std::lock_guard<std::mutex> lock(mu);
    if (!planted_model) planted_model = m;
    return *planted_model;
  }
};

const std::string& BlackBoxModel::name() const { return state_->name; }
int BlackBoxModel::dim() const { return state_->d; }
int BlackBoxModel::recommended_order() const { return state_->p_rec; }
const GaussianMixture& BlackBoxModel::mixture() const { return *state_->mixture; }

double BlackBoxModel::evaluate(const Eigen::VectorXd& xi) const {
  if (xi.size() != state_->d) throw ValidationError("BlackBoxModel: dimension mismatch");
  double v = 0.0;
  if (!state_->planted.empty()) v += state_->planted_surrogate().evaluate(xi);
  if (state_->extra) v += state_->extra(xi);
  return v;
}

Eigen::VectorXd BlackBoxModel::evaluate_batch(const Eigen::MatrixXd& points) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(points.rows());
  if (!state_->planted.empty()) out += state_->planted_surrogate().evaluate_batch(points);
  if (state_->extra) {
    for (Eigen::Index i = 0; i < points.rows(); ++i)
      out[i] += state_->extra(points.row(i).transpose());
  }
  return out;
}

std::shared_ptr<const BasisSet> BlackBoxModel::basis(int p) const {
  return state_->basis_for(p);
}

Eigen::VectorXd BlackBoxModel::planted_coeffs() const {
  if (state_->planted.empty()) return Eigen::VectorXd();
  auto b = state_->basis_for(state_->p_rec);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(b->size());
  for (const auto& [idx, val] : state_->planted) c[idx] = val;
  return c;
}

namespace {

// Equicorrelated SPD covariance s^2 ((1-rho) I + rho 11^T).
Eigen::MatrixXd equicorr_cov(int d, double s, double rho) {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(d, d, s * s * rho);
  cov.diagonal().setConstant(s * s);
  return cov;
}

GaussianMixture tiny2_mixture() {
  Eigen::VectorXd w(2);
  w << 0.6, 0.4;
  Eigen::VectorXd mu1(2), mu2(2);
  mu1 << -1.0, 0.5;
  mu2 << 1.5, -0.8;
  Eigen::MatrixXd s1(2, 2), s2(2, 2);
  s1 << 0.5, 0.2, 0.2, 0.4;
  s2 << 0.6, -0.25, -0.25, 0.5;
  std::vector<GaussianComponent> comps;
  comps.emplace_back(mu1, s1);
  comps.emplace_back(mu2, s2);
  return GaussianMixture(w, std::move(comps));
}

GaussianMixture tiny3_mixture() {
  Eigen::VectorXd w(2);
  w << 0.5, 0.5;
  Eigen::VectorXd mu1(3), mu2(3);
  mu1 << 0.0, 0.0, 0.0;
  mu2 << 2.0, 1.0, -1.0;
  Eigen::MatrixXd s1(3, 3), s2(3, 3);
  s1 << 1.0, 0.3, 0.1, 0.3, 0.8, 0.2, 0.1, 0.2, 0.9;
  s2 << 0.7, -0.2, 0.0, -0.2, 0.6, 0.15, 0.0, 0.15, 0.8;
  std::vector<GaussianComponent> comps;
  comps.emplace_back(mu1, s1);
  comps.emplace_back(mu2, s2);
  return GaussianMixture(w, std::move(comps));
}

GaussianMixture planted10_mixture() {
  const int d = 10;
  Eigen::VectorXd w(2);
  w << 0.5, 0.5;
  Eigen::VectorXd profile(d);
  for (int k = 0; k < d; ++k) profile[k] = 0.8 + 0.4 * k / (d - 1);
  std::vector<GaussianComponent> comps;
  comps.emplace_back(-0.8 * profile, equicorr_cov(d, 0.7, 0.3));
  comps.emplace_back(0.8 * profile, equicorr_cov(d, 0.6, 0.25));
  return GaussianMixture(w, std::move(comps));
}

GaussianMixture filter19_mixture() {
  const int d = 19;
  Eigen::VectorXd w(3);
  w << 0.35, 0.30, 0.35;
  Eigen::VectorXd profile(d);
  for (int k = 0; k < d; ++k) profile[k] = 0.85 + 0.3 * k / (d - 1);
  std::vector<GaussianComponent> comps;
  comps.emplace_back(-1.8 * profile, equicorr_cov(d, 0.45, 0.35));
  comps.emplace_back(Eigen::VectorXd::Zero(d), equicorr_cov(d, 0.55, 0.25));
  comps.emplace_back(1.8 * profile, equicorr_cov(d, 0.50, 0.30));
  return GaussianMixture(w, std::move(comps));
}

GaussianMixture osc57_mixture() {
  const int d = 57;
  Eigen::VectorXd w(2);
  w << 0.55, 0.45;
  Eigen::VectorXd profile(d);
  for (int k = 0; k < d; ++k) profile[k] = 0.9 + 0.2 * k / (d - 1);
  std::vector<GaussianComponent> comps;
  comps.emplace_back(-1.2 * profile, equicorr_cov(d, 0.5, 0.2));
  comps.emplace_back(1.2 * profile, equicorr_cov(d, 0.45, 0.25));
  return GaussianMixture(w, std::move(comps));
}

std::shared_ptr<BlackBoxModel::State> make_tiny2() {
  auto st = std::make_shared<BlackBoxModel::State>();
  st->name = "tiny2";
  st->d = 2;
  st->p_rec = 3;
  st->mixture = std::make_unique<GaussianMixture>(tiny2_mixture());
  st->extra = [](const Eigen::VectorXd& xi) {
    return std::sin(xi[0]) + 0.4 * xi[0] * xi[1] + 0.3 * xi[1] * xi[1];
  };
  return st;
}

std::shared_ptr<BlackBoxModel::State> make_tiny3() {
  auto st = std::make_shared<BlackBoxModel::State>();
  st->name = "tiny3";
  st->d = 3;
  st->p_rec = 3;
  st->mixture = std::make_unique<GaussianMixture>(tiny3_mixture());
  st->extra = [](const Eigen::VectorXd& xi) {
    return xi[0] * xi[1] - 0.5 * xi[2] * xi[2] + 0.3 * std::cos(xi[0]) + xi[2];
  };
  return st;
}

struct CoeffTier {
  int count;
  double lo;
  double hi;
};

// Planted supports/coefficients are drawn once from fixed seeds so the
// models are bit-stable across runs and platforms.
std::vector<std::pair<int, double>> seeded_planted(
    int n_basis, double c0, uint64_t seed, const std::vector<std::pair<int, double>>& pinned,
    const std::vector<CoeffTier>& tiers) {
  Rng rng(seed);
  std::vector<std::pair<int, double>> planted;
  std::set<int> taken{0};
  planted.emplace_back(0, c0);
  for (const auto& [idx, val] : pinned) {
    if (taken.insert(idx).second) planted.emplace_back(idx, val);
  }
  for (const auto& tier : tiers) {
    int added = 0;
    while (added < tier.count) {
      int idx = 1 + rng.uniform_int(n_basis - 1);
      if (!taken.insert(idx).second) continue;
      double mag = tier.lo + (tier.hi - tier.lo) * rng.uniform();
      planted.emplace_back(idx, rng.uniform() < 0.5 ? -mag : mag);
      ++added;
    }
  }
  std::sort(planted.begin(), planted.end());
  return planted;
}

std::shared_ptr<BlackBoxModel::State> make_planted10() {
  auto st = std::make_shared<BlackBoxModel::State>();
  st->name = "poly-planted-10d";
  st->d = 10;
  st->p_rec = 3;  // N = 286
  st->mixture = std::make_unique<GaussianMixture>(planted10_mixture());
  st->planted = seeded_planted(286, 3.0, 0x9d1fb7c402a3ull, {}, {{9, 0.5, 1.5}});
  return st;
}

// Smooth non-polynomial bump along an alternating within-cluster contrast;
// keeps the planted part dominant while denying an exact polynomial fit.
std::function<double(const Eigen::VectorXd&)> contrast_bump(const GaussianMixture& mix,
                                                            double amplitude, double tau) {
  Eigen::VectorXd center = mix.mean();
  const int d = mix.dim();
  Eigen::VectorXd u(d);
  for (int k = 0; k < d; ++k) u[k] = (k % 2 == 0 ? 1.0 : -1.0) / std::sqrt(static_cast<double>(d));
  return [center, u, amplitude, tau](const Eigen::VectorXd& xi) {
    double t = u.dot(xi - center) / tau;
    return amplitude * std::exp(-0.5 * t * t);
  };
}

std::shared_ptr<BlackBoxModel::State> make_filter19() {
  auto st = std::make_shared<BlackBoxModel::State>();
  st->name = "filter19";
  st->d = 19;
  st->p_rec = 3;  // N = 1540
  st->mixture = std::make_unique<GaussianMixture>(filter19_mixture());
  // Psi at position 1 is the standardized first coordinate, the one basis
  // direction that separates the three mixture clusters; concentrating
  // weight there (plus its square/cube at positions 20 and 210) keeps the
  // output density multimodal while the remaining terms stay small.
  std::vector<std::pair<int, double>> pinned = {
      {1, 3.5},  {210, 0.5}, {20, 0.45}, {2, 0.35}, {21, 0.3},
      {3, 0.3},  {5, 0.25},  {60, 0.2},  {230, 0.2},
  };
  // A few dozen clearly-important terms over a sub-threshold tail; the
  // tail sets a small model-error floor that sample selection fights.
  st->planted = seeded_planted(1540, 20.0, 0x51c3a9e4d17ull, pinned,
                               {{25, 0.08, 0.3}, {120, 0.0005, 0.002}});
  st->extra = contrast_bump(*st->mixture, 0.02, 0.55);
  return st;
}

std::shared_ptr<BlackBoxModel::State> make_osc57() {
  auto st = std::make_shared<BlackBoxModel::State>();
  st->name = "osc57";
  st->d = 57;
  st->p_rec = 2;  // N = 1711
  st->mixture = std::make_unique<GaussianMixture>(osc57_mixture());
  std::vector<std::pair<int, double>> pinned = {
      {1, 4.0}, {58, 0.5}, {2, 0.5}, {3, 0.4}, {59, 0.35}, {5, 0.3}, {80, 0.25},
  };
  st->planted = seeded_planted(1711, 90.0, 0x7be2904cc5ull, pinned,
                               {{30, 0.03, 0.3}, {120, 0.002, 0.015}});
  st->extra = contrast_bump(*st->mixture, 0.05, 0.6);
  return st;
}

}  // namespace

std::vector<BlackBoxModel> builtin_models() {
  std::vector<BlackBoxModel> models;
  models.emplace_back(make_tiny2());
  models.emplace_back(make_tiny3());
  models.emplace_back(make_planted10());
  models.emplace_back(make_filter19());
  models.emplace_back(make_osc57());
  return models;
}

BlackBoxModel make_custom_model(std::string name, int p, GaussianMixture mixture,
                                std::function<double(const Eigen::VectorXd&)> evaluator) {
  auto st = std::make_shared<BlackBoxModel::State>();
  st->name = std::move(name);
  st->d = mixture.dim();
  st->p_rec = p;
  st->mixture = std::make_unique<GaussianMixture>(std::move(mixture));
  st->extra = std::move(evaluator);
  return BlackBoxModel(std::move(st));
}

BlackBoxModel get_model(const std::string& name) {
  for (auto& m : builtin_models()) {
    if (m.name() == name) return m;
  }
  std::string names;
  for (const auto& m : builtin_models()) names += (names.empty() ? "" : ", ") + m.name();
  throw ValidationError("unknown model '" + name + "' (have: " + names + ")");
}

McBaseline mc_baseline(const BlackBoxModel& model, const GaussianMixture& gmm, int64_t n,
                       uint64_t seed, int bins) {
  if (n < 1) throw ValidationError("mc_baseline: need at least one sample");
  Rng rng(seed);
  const int64_t batch = 100000;
  const bool keep = n <= 20000000;
  Eigen::VectorXd values;
  if (keep) values.resize(n);

  double sum = 0.0, sum2 = 0.0, sum3 = 0.0, sum4 = 0.0;
  int64_t done = 0;
  while (done < n) {
    int m = static_cast<int>(std::min(batch, n - done));
    Eigen::VectorXd v = model.evaluate_batch(gmm.sample(m, rng));
    if (keep) values.segment(done, m) = v;
    sum += v.sum();
    sum2 += v.squaredNorm();
    sum3 += v.array().cube().sum();
    sum4 += v.array().square().square().sum();
    done += m;
  }

  McBaseline base;
  base.samples = n;
  double nn = static_cast<double>(n);
  double mu = sum / nn;
  base.mean = mu;
  base.variance = std::max(0.0, sum2 / nn - mu * mu);
  base.se_mean = n > 1 ? std::sqrt(base.variance / nn) : 0.0;
  if (n > 1) {
    double m2 = base.variance;
    double m4 =
        sum4 / nn - 4.0 * mu * sum3 / nn + 6.0 * mu * mu * sum2 / nn - 3.0 * mu * mu * mu * mu;
    base.se_variance = std::sqrt(std::max(0.0, m4 - m2 * m2) / nn);
  }
  if (keep && n >= 2) base.density = density_of_samples(values, seed, bins);
  return base;
}

namespace {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void save_table(const SampleTable& table, const std::string& path) {
  if (table.points.rows() != table.outputs.size())
    throw ValidationError("save_table: points/outputs row mismatch");
  if (table.points.cols() != table.d)
    throw ValidationError("save_table: points have " + std::to_string(table.points.cols()) +
                          " columns, header says d=" + std::to_string(table.d));
  std::ofstream out(path);
  if (!out) throw IoError("cannot write sample table '" + path + "'");

  out << "# mixpc-table model=" << table.model << " d=" << table.d << " seed=" << table.seed;
  if (table.allow_duplicates) out << " duplicates=1";
  out << "\n";
  for (int k = 0; k < table.d; ++k) out << "x" << (k + 1) << ",";
  out << "y\n";
  for (Eigen::Index i = 0; i < table.points.rows(); ++i) {
    for (int k = 0; k < table.d; ++k) out << format_g17(table.points(i, k)) << ",";
    out << format_g17(table.outputs[i]) << "\n";
  }
}

SampleTable load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open sample table '" + path + "'");

  SampleTable table;
  std::string line;
  int lineno = 0;

  if (!std::getline(in, line)) throw IoError(path + ":1: empty file");
  ++lineno;
  {
    std::istringstream hs(line);
    std::string tag, word;
    hs >> tag >> word;
    if (tag != "#" || word != "mixpc-table")
      throw IoError(path + ":1: expected '# mixpc-table' header");
    std::string field;
    bool have_model = false, have_d = false, have_seed = false;
    while (hs >> field) {
      auto eq = field.find('=');
      if (eq == std::string::npos) throw IoError(path + ":1: malformed header field '" + field + "'");
      std::string key = field.substr(0, eq), val = field.substr(eq + 1);
      if (key == "model") {
        table.model = val;
        have_model = true;
      } else if (key == "d") {
        table.d = std::stoi(val);
        have_d = true;
      } else if (key == "seed") {
        table.seed = std::stoull(val);
        have_seed = true;
      } else if (key == "duplicates") {
        table.allow_duplicates = val == "1";
      } else {
        throw IoError(path + ":1: unknown header field '" + key + "'");
      }
    }
    if (!have_model) throw IoError(path + ":1: header missing field 'model'");
    if (!have_d) throw IoError(path + ":1: header missing field 'd'");
    if (!have_seed) throw IoError(path + ":1: header missing field 'seed'");
    if (table.d < 1) throw IoError(path + ":1: d must be >= 1");
  }

  if (!std::getline(in, line)) throw IoError(path + ":2: missing column header");
  ++lineno;
  {
    int cols = 1 + static_cast<int>(std::count(line.begin(), line.end(), ','));
    if (cols != table.d + 1)
      throw IoError(path + ":2: column header has " + std::to_string(cols) +
                    " fields, expected d+1=" + std::to_string(table.d + 1));
  }

  std::vector<Eigen::VectorXd> rows;
  std::vector<double> outputs;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    Eigen::VectorXd row(table.d);
    std::string cell;
    for (int k = 0; k <= table.d; ++k) {
      if (!std::getline(ls, cell, ','))
        throw IoError(path + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(table.d + 1) + " fields");
      try {
        double v = std::stod(cell);
        if (k < table.d)
          row[k] = v;
        else
          outputs.push_back(v);
      } catch (const std::exception&) {
        throw IoError(path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    if (std::getline(ls, cell, ','))
      throw IoError(path + ":" + std::to_string(lineno) + ": too many fields");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(path + ": no data rows");

  table.points.resize(static_cast<Eigen::Index>(rows.size()), table.d);
  table.outputs.resize(static_cast<Eigen::Index>(outputs.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    table.points.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    table.outputs[static_cast<Eigen::Index>(i)] = outputs[i];
  }

  if (!table.allow_duplicates) {
    std::set<std::string> seen;
    for (Eigen::Index i = 0; i < table.points.rows(); ++i) {
      std::string key;
      for (int k = 0; k < table.d; ++k) key += format_g17(table.points(i, k)) + ",";
      if (!seen.insert(key).second)
        throw IoError(path + ": duplicated sample row " + std::to_string(i) +
                      " (set duplicates=1 in the header to allow)");
    }
  }
  return table;
}

SampleTable make_table(const BlackBoxModel& model, int count, uint64_t seed) {
  SampleTable table;
  table.model = model.name();
  table.d = model.dim();
  table.seed = seed;
  table.points = model.mixture().sample(count, seed);
  table.outputs = model.evaluate_batch(table.points);
  return table;
}

}  // namespace mixpc::bench
