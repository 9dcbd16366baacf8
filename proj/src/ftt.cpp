#include "mixpc/ftt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <thread>

#include "mixpc/errors.hpp"

namespace mixpc {

namespace {

// E[eta^k] for k = 0..kMaxRawMoment via m_k = (k-1) m_{k-2}.
constexpr int kMaxRawMoment = 64;

const std::vector<double>& raw_moment_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kMaxRawMoment + 1, 0.0);
    t[0] = 1.0;
    if (t.size() > 2) {
      for (int k = 2; k <= kMaxRawMoment; k += 2) t[static_cast<size_t>(k)] = (k - 1) * t[static_cast<size_t>(k - 2)];
    }
    return t;
  }();
  return table;
}

}  // namespace

double normal_raw_moment(int k) {
  if (k < 0 || k > kMaxRawMoment)
    throw ValidationError("normal_raw_moment: order " + std::to_string(k) + " out of range");
  return raw_moment_table()[static_cast<size_t>(k)];
}

UnivariatePoly::UnivariatePoly(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  while (!coeffs_.empty() && coeffs_.back() == 0.0) coeffs_.pop_back();
}

UnivariatePoly UnivariatePoly::constant(double v) {
  return v == 0.0 ? UnivariatePoly() : UnivariatePoly(std::vector<double>{v});
}

UnivariatePoly UnivariatePoly::monomial(double coeff, int power) {
  if (coeff == 0.0) return UnivariatePoly();
  std::vector<double> c(static_cast<size_t>(power + 1), 0.0);
  c.back() = coeff;
  return UnivariatePoly(std::move(c));
}

double UnivariatePoly::eval(double x) const {
  double acc = 0.0;
  for (size_t i = coeffs_.size(); i-- > 0;) acc = acc * x + coeffs_[i];
  return acc;
}

double UnivariatePoly::normal_expectation() const {
  const auto& h = raw_moment_table();
  double acc = 0.0;
  for (size_t k = 0; k < coeffs_.size(); k += 2) acc += coeffs_[k] * h[k];
  return acc;
}

UnivariatePoly operator*(const UnivariatePoly& a, const UnivariatePoly& b) {
  if (a.is_zero() || b.is_zero()) return UnivariatePoly();
  std::vector<double> c(a.coeffs_.size() + b.coeffs_.size() - 1, 0.0);
  for (size_t i = 0; i < a.coeffs_.size(); ++i) {
    if (a.coeffs_[i] == 0.0) continue;
    for (size_t j = 0; j < b.coeffs_.size(); ++j) c[i + j] += a.coeffs_[i] * b.coeffs_[j];
  }
  return UnivariatePoly(std::move(c));
}

double product_normal_expectation(const UnivariatePoly& a, const UnivariatePoly& b) {
  const auto& h = raw_moment_table();
  const auto& ca = a.coeffs();
  const auto& cb = b.coeffs();
  double acc = 0.0;
  for (size_t i = 0; i < ca.size(); ++i) {
    if (ca[i] == 0.0) continue;
    // Only i+j even contributes.
    for (size_t j = (i % 2 == 0) ? 0 : 1; j < cb.size(); j += 2) {
      acc += ca[i] * cb[j] * h[i + j];
    }
  }
  return acc;
}

Eigen::MatrixXd PolyMatrix::normal_expectation() const {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = at(i, j).normal_expectation();
  return m;
}

Eigen::MatrixXd PolyMatrix::eval(double eta) const {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = at(i, j).eval(eta);
  return m;
}

std::vector<int> FttMonomial::ranks() const {
  std::vector<int> r;
  r.push_back(static_cast<int>(lead.size()));
  for (const auto& c : cores) r.push_back(c.cols);
  return r;
}

double FttMonomial::evaluate(const Eigen::VectorXd& eta) const {
  if (eta.size() != dim()) throw ValidationError("FttMonomial::evaluate: dimension mismatch");
  Eigen::RowVectorXd v = lead;
  for (int i = 0; i < dim(); ++i) v = v * cores[static_cast<size_t>(i)].eval(eta[i]);
  return v(0);
}

FttMonomial first_order(int j, const Eigen::MatrixXd& chol, const Eigen::VectorXd& mu) {
  const int d = static_cast<int>(mu.size());
  if (j < 0 || j >= d) throw ValidationError("first_order: coordinate out of range");

  FttMonomial t;
  std::vector<int> exps(static_cast<size_t>(d), 0);
  exps[static_cast<size_t>(j)] = 1;
  t.target = MultiIndex(std::move(exps));

  t.lead.resize(2);
  t.lead << mu[j], 1.0;

  t.cores.reserve(static_cast<size_t>(d));
  for (int i = 0; i + 1 < d; ++i) {
    PolyMatrix core(2, 2);
    core.at(0, 0) = UnivariatePoly::constant(1.0);
    core.at(1, 0) = UnivariatePoly::monomial(chol(j, i), 1);
    core.at(1, 1) = UnivariatePoly::constant(1.0);
    t.cores.push_back(std::move(core));
  }
  PolyMatrix last(2, 1);
  last.at(0, 0) = UnivariatePoly::constant(1.0);
  last.at(1, 0) = UnivariatePoly::monomial(chol(j, d - 1), 1);
  t.cores.push_back(std::move(last));
  return t;
}

FttMonomial constant_train(int d) {
  FttMonomial t;
  t.target = MultiIndex(std::vector<int>(static_cast<size_t>(d), 0));
  t.lead.resize(1);
  t.lead << 1.0;
  for (int i = 0; i < d; ++i) {
    PolyMatrix core(1, 1);
    core.at(0, 0) = UnivariatePoly::constant(1.0);
    t.cores.push_back(std::move(core));
  }
  return t;
}

FttMonomial kron_combine(const FttMonomial& t1, const FttMonomial& t2) {
  if (t1.dim() != t2.dim()) throw ValidationError("kron_combine: dimension mismatch");
  const int d = t1.dim();

  FttMonomial t;
  t.target = t1.target.plus(t2.target);

  const int l1 = static_cast<int>(t1.lead.size());
  const int l2 = static_cast<int>(t2.lead.size());
  t.lead.resize(l1 * l2);
  for (int a = 0; a < l1; ++a)
    for (int b = 0; b < l2; ++b) t.lead(a * l2 + b) = t1.lead(a) * t2.lead(b);

  t.cores.reserve(static_cast<size_t>(d));
  for (int i = 0; i < d; ++i) {
    const PolyMatrix& e = t1.cores[static_cast<size_t>(i)];
    const PolyMatrix& f = t2.cores[static_cast<size_t>(i)];
    PolyMatrix g(e.rows * f.rows, e.cols * f.cols);
    for (int a = 0; a < e.rows; ++a)
      for (int c = 0; c < e.cols; ++c) {
        const UnivariatePoly& pe = e.at(a, c);
        if (pe.is_zero()) continue;
        for (int b = 0; b < f.rows; ++b)
          for (int dd = 0; dd < f.cols; ++dd) {
            const UnivariatePoly& pf = f.at(b, dd);
            if (pf.is_zero()) continue;
            g.at(a * f.rows + b, c * f.cols + dd) = pe * pf;
          }
      }
    t.cores.push_back(std::move(g));
  }
  return t;
}

double expectation(const FttMonomial& t) {
  Eigen::RowVectorXd v = t.lead;
  for (const auto& core : t.cores) v = v * core.normal_expectation();
  return v(0);
}

double expectation_of_product(const FttMonomial& t1, const FttMonomial& t2) {
  if (t1.dim() != t2.dim())
    throw ValidationError("expectation_of_product: dimension mismatch");
  const int d = t1.dim();

  const int l1 = static_cast<int>(t1.lead.size());
  const int l2 = static_cast<int>(t2.lead.size());
  std::vector<double> v(static_cast<size_t>(l1 * l2));
  for (int a = 0; a < l1; ++a)
    for (int b = 0; b < l2; ++b) v[static_cast<size_t>(a * l2 + b)] = t1.lead(a) * t2.lead(b);

  std::vector<double> out;
  for (int i = 0; i < d; ++i) {
    const PolyMatrix& e = t1.cores[static_cast<size_t>(i)];
    const PolyMatrix& f = t2.cores[static_cast<size_t>(i)];
    out.assign(static_cast<size_t>(e.cols * f.cols), 0.0);
    for (int a = 0; a < e.rows; ++a) {
      for (int c = 0; c < e.cols; ++c) {
        const UnivariatePoly& pe = e.at(a, c);
        if (pe.is_zero()) continue;
        for (int b = 0; b < f.rows; ++b) {
          double vin = v[static_cast<size_t>(a * f.rows + b)];
          if (vin == 0.0) continue;
          for (int dd = 0; dd < f.cols; ++dd) {
            const UnivariatePoly& pf = f.at(b, dd);
            if (pf.is_zero()) continue;
            out[static_cast<size_t>(c * f.cols + dd)] += vin * product_normal_expectation(pe, pf);
          }
        }
      }
    }
    v.swap(out);
  }
  return v[0];
}

ComponentMomentEngine::ComponentMomentEngine(const GaussianComponent& comp, int p)
    : comp_(comp), p_(p) {
  if (p < 0) throw ValidationError("ComponentMomentEngine: order must be >= 0");
}

const FttMonomial& ComponentMomentEngine::train(const MultiIndex& alpha) {
  if (alpha.dim() != comp_.dim())
    throw ValidationError("ComponentMomentEngine::train: dimension mismatch");
  if (alpha.degree() > p_)
    throw ValidationError("ComponentMomentEngine::train: |alpha| exceeds cache order p");
  return train_nocheck(alpha);
}

const FttMonomial& ComponentMomentEngine::train_nocheck(const MultiIndex& alpha) {
  auto it = trains_.find(alpha);
  if (it != trains_.end()) return it->second;

  FttMonomial t;
  if (alpha.degree() == 0) {
    t = constant_train(comp_.dim());
  } else if (alpha.degree() == 1) {
    t = first_order(alpha.first_nonzero(), comp_.chol(), comp_.mean());
  } else {
    int j = alpha.first_nonzero();
    std::vector<int> e(static_cast<size_t>(comp_.dim()), 0);
    e[static_cast<size_t>(j)] = 1;
    // unordered_map keeps element references valid across inserts.
    const FttMonomial& unit = train_nocheck(MultiIndex(std::move(e)));
    const FttMonomial& rest = train_nocheck(alpha.minus_unit(j));
    t = kron_combine(unit, rest);
  }
  auto [pos, inserted] = trains_.emplace(alpha, std::move(t));
  (void)inserted;
  return pos->second;
}

void ComponentMomentEngine::build_all_trains() {
  GradedLexOrder order(comp_.dim(), p_);
  for (int j = 0; j < order.size(); ++j) train_nocheck(order[j]);
}

double ComponentMomentEngine::moment(const MultiIndex& alpha) {
  if (alpha.degree() > 2 * p_)
    throw ValidationError("ComponentMomentEngine::moment: |alpha| exceeds 2p");
  auto it = moments_.find(alpha);
  if (it != moments_.end()) return it->second;

  double q;
  if (alpha.degree() <= p_) {
    q = expectation(train_nocheck(alpha));
  } else {
    auto [a1, a2] = split(alpha, p_);
    q = expectation_of_product(train_nocheck(a1), train_nocheck(a2));
  }
  moments_.emplace(alpha, q);
  return q;
}

double ComponentMomentEngine::moment_prebuilt(const MultiIndex& alpha) const {
  if (alpha.degree() > 2 * p_)
    throw ValidationError("ComponentMomentEngine::moment_prebuilt: |alpha| exceeds 2p");
  if (alpha.degree() <= p_) {
    auto it = trains_.find(alpha);
    if (it == trains_.end())
      throw ValidationError("ComponentMomentEngine::moment_prebuilt: trains not prebuilt");
    return expectation(it->second);
  }
  auto [a1, a2] = split(alpha, p_);
  auto i1 = trains_.find(a1);
  auto i2 = trains_.find(a2);
  if (i1 == trains_.end() || i2 == trains_.end())
    throw ValidationError("ComponentMomentEngine::moment_prebuilt: trains not prebuilt");
  return expectation_of_product(i1->second, i2->second);
}

MixtureMomentEngine::MixtureMomentEngine(const GaussianMixture& gmm, int p)
    : dim_(gmm.dim()), p_(p), weights_(gmm.weights()) {
  engines_.reserve(static_cast<size_t>(gmm.num_components()));
  for (int i = 0; i < gmm.num_components(); ++i) engines_.emplace_back(gmm.component(i), p);
}

double MixtureMomentEngine::mixture_moment(const MultiIndex& alpha) {
  double m = 0.0;
  for (size_t i = 0; i < engines_.size(); ++i)
    m += weights_[static_cast<Eigen::Index>(i)] * engines_[i].moment(alpha);
  return m;
}

std::vector<double> MixtureMomentEngine::moment_table(const GradedLexOrder& order, int threads) {
  if (order.dim() != dim_) throw ValidationError("moment_table: dimension mismatch");
  if (order.max_degree() > 2 * p_)
    throw ValidationError("moment_table: order degree exceeds 2p");
  for (auto& e : engines_) e.build_all_trains();

  const int n = order.size();
  std::vector<double> table(static_cast<size_t>(n), 0.0);
  if (threads <= 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
  }
  threads = std::min(threads, n);

  std::atomic<int> next{0};
  auto worker = [&] {
    while (true) {
      int j = next.fetch_add(1);
      if (j >= n) break;
      double m = 0.0;
      for (size_t i = 0; i < engines_.size(); ++i)
        m += weights_[static_cast<Eigen::Index>(i)] * engines_[i].moment_prebuilt(order[j]);
      table[static_cast<size_t>(j)] = m;
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return table;
}

}  // namespace mixpc
