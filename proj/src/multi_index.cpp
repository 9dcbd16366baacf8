#include "mixpc/multi_index.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "mixpc/errors.hpp"

namespace mixpc {

MultiIndex::MultiIndex(std::vector<int> exponents) : exponents_(std::move(exponents)) {
  for (int e : exponents_) {
    if (e < 0) throw ValidationError("MultiIndex: negative exponent");
    degree_ += e;
  }
}

int MultiIndex::first_nonzero() const {
  for (int k = 0; k < dim(); ++k) {
    if (exponents_[static_cast<size_t>(k)] > 0) return k;
  }
  return -1;
}

MultiIndex MultiIndex::plus(const MultiIndex& other) const {
  if (dim() != other.dim()) throw ValidationError("MultiIndex::plus: dimension mismatch");
  std::vector<int> e(exponents_);
  for (int k = 0; k < dim(); ++k) e[static_cast<size_t>(k)] += other[k];
  return MultiIndex(std::move(e));
}

MultiIndex MultiIndex::minus_unit(int k) const {
  if (k < 0 || k >= dim() || exponents_[static_cast<size_t>(k)] == 0)
    throw ValidationError("MultiIndex::minus_unit: exponent underflow");
  std::vector<int> e(exponents_);
  e[static_cast<size_t>(k)] -= 1;
  return MultiIndex(std::move(e));
}

std::string MultiIndex::to_string() const {
  std::ostringstream os;
  os << '(';
  for (int k = 0; k < dim(); ++k) {
    if (k) os << ',';
    os << exponents_[static_cast<size_t>(k)];
  }
  os << ')';
  return os.str();
}

bool graded_lex_less(const MultiIndex& a, const MultiIndex& b) {
  if (a.degree() != b.degree()) return a.degree() < b.degree();
  for (int k = 0; k < a.dim(); ++k) {
    if (a[k] != b[k]) return a[k] > b[k];
  }
  return false;
}

namespace {

void emit_degree(int coords_left, int degree_left, std::vector<int>& prefix,
                 std::vector<MultiIndex>& out) {
  if (coords_left == 1) {
    prefix.push_back(degree_left);
    out.emplace_back(prefix);
    prefix.pop_back();
    return;
  }
  for (int e = degree_left; e >= 0; --e) {
    prefix.push_back(e);
    emit_degree(coords_left - 1, degree_left - e, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

GradedLexOrder::GradedLexOrder(int d, int p) : d_(d), p_(p) {
  if (d < 1) throw ValidationError("GradedLexOrder: dimension must be >= 1");
  if (p < 0) throw ValidationError("GradedLexOrder: max degree must be >= 0");
  std::vector<int> prefix;
  prefix.reserve(static_cast<size_t>(d));
  for (int q = 0; q <= p; ++q) emit_degree(d, q, prefix, indices_);

  positions_.reserve(indices_.size() * 2);
  for (int j = 0; j < size(); ++j) positions_.emplace(indices_[static_cast<size_t>(j)], j);

  parents_.assign(indices_.size(), -1);
  parent_coords_.assign(indices_.size(), -1);
  for (int j = 1; j < size(); ++j) {
    const MultiIndex& a = indices_[static_cast<size_t>(j)];
    int k = a.first_nonzero();
    parents_[static_cast<size_t>(j)] = position(a.minus_unit(k));
    parent_coords_[static_cast<size_t>(j)] = k;
  }
}

int GradedLexOrder::position(const MultiIndex& alpha) const {
  auto it = positions_.find(alpha);
  return it == positions_.end() ? -1 : it->second;
}

int64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  int64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

std::pair<MultiIndex, MultiIndex> split(const MultiIndex& alpha, int p) {
  if (alpha.degree() > 2 * p)
    throw ValidationError("split: |alpha| exceeds 2p, no feasible split");
  std::vector<int> a1(static_cast<size_t>(alpha.dim()), 0);
  int budget = p;
  for (int k = 0; k < alpha.dim() && budget > 0; ++k) {
    int take = std::min(alpha[k], budget);
    a1[static_cast<size_t>(k)] = take;
    budget -= take;
  }
  std::vector<int> a2(static_cast<size_t>(alpha.dim()), 0);
  for (int k = 0; k < alpha.dim(); ++k) a2[static_cast<size_t>(k)] = alpha[k] - a1[static_cast<size_t>(k)];
  return {MultiIndex(std::move(a1)), MultiIndex(std::move(a2))};
}

Eigen::VectorXd monomial_vector(const GradedLexOrder& order, const Eigen::VectorXd& xi) {
  if (xi.size() != order.dim()) throw ValidationError("monomial_vector: dimension mismatch");
  Eigen::VectorXd b(order.size());
  b[0] = 1.0;
  for (int j = 1; j < order.size(); ++j) {
    b[j] = b[order.parent(j)] * xi[order.parent_coord(j)];
  }
  return b;
}

Eigen::MatrixXd monomial_matrix(const GradedLexOrder& order, const Eigen::MatrixXd& points) {
  if (points.cols() != order.dim()) throw ValidationError("monomial_matrix: dimension mismatch");
  Eigen::MatrixXd B(points.rows(), order.size());
  B.col(0).setOnes();
  for (int j = 1; j < order.size(); ++j) {
    B.col(j) = B.col(order.parent(j)).cwiseProduct(points.col(order.parent_coord(j)));
  }
  return B;
}

}  // namespace mixpc
