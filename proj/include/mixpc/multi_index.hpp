#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mixpc {

/// Exponent vector of a monomial xi^alpha. Immutable after construction.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> exponents);

  int dim() const { return static_cast<int>(exponents_.size()); }
  int degree() const { return degree_; }
  int operator[](int k) const { return exponents_[static_cast<size_t>(k)]; }
  const std::vector<int>& exponents() const { return exponents_; }

  bool is_zero() const { return degree_ == 0; }
  /// First coordinate with a positive exponent; -1 for the zero index.
  int first_nonzero() const;

  MultiIndex plus(const MultiIndex& other) const;
  MultiIndex minus_unit(int k) const;  // subtract e_k; requires exponent > 0

  bool operator==(const MultiIndex& other) const { return exponents_ == other.exponents_; }
  bool operator!=(const MultiIndex& other) const { return !(*this == other); }

  std::string to_string() const;

 private:
  std::vector<int> exponents_;
  int degree_ = 0;
};

struct MultiIndexHash {
  size_t operator()(const MultiIndex& a) const {
    uint64_t h = 1469598103934665603ull;
    for (int e : a.exponents()) {
      h ^= static_cast<uint64_t>(e) + 0x9e3779b97f4a7c15ull;
      h *= 1099511628211ull;
    }
    return static_cast<size_t>(h);
  }
};

/// Graded lexicographic comparison: total degree first, ties broken so that
/// the index whose first differing exponent is larger comes first. This
/// reproduces the canonical listing [1, x1, x2, x1^2, x1*x2, x2^2] for d=2.
bool graded_lex_less(const MultiIndex& a, const MultiIndex& b);

/// All multi-indices with |alpha| <= p in d variables, graded-lex ordered.
class GradedLexOrder {
 public:
  GradedLexOrder(int d, int p);

  int dim() const { return d_; }
  int max_degree() const { return p_; }
  int size() const { return static_cast<int>(indices_.size()); }
  const MultiIndex& operator[](int j) const { return indices_[static_cast<size_t>(j)]; }
  const std::vector<MultiIndex>& indices() const { return indices_; }

  /// Position of alpha in the ordering, or -1 if |alpha| > p.
  int position(const MultiIndex& alpha) const;

  /// For j >= 1: indices_[j] = indices_[parent(j)] * xi_{parent_coord(j)}.
  /// Lets monomial vectors be built with one multiply per entry.
  int parent(int j) const { return parents_[static_cast<size_t>(j)]; }
  int parent_coord(int j) const { return parent_coords_[static_cast<size_t>(j)]; }

 private:
  int d_;
  int p_;
  std::vector<MultiIndex> indices_;
  std::unordered_map<MultiIndex, int, MultiIndexHash> positions_;
  std::vector<int> parents_;
  std::vector<int> parent_coords_;
};

/// Binomial coefficient (n choose k) as a 64-bit integer.
int64_t binomial(int n, int k);

/// Deterministic split alpha = a1 + a2 with |a1|,|a2| <= p.
/// Greedy: a1 takes min(alpha_k, remaining budget) scanning coordinates in
/// ascending order. Requires |alpha| <= 2p.
std::pair<MultiIndex, MultiIndex> split(const MultiIndex& alpha, int p);

/// Vector of all monomials xi^alpha_j in graded-lex order; entry 0 is 1.
Eigen::VectorXd monomial_vector(const GradedLexOrder& order, const Eigen::VectorXd& xi);

/// Row i holds monomial_vector(order, points.row(i)).
Eigen::MatrixXd monomial_matrix(const GradedLexOrder& order, const Eigen::MatrixXd& points);

}  // namespace mixpc
