#pragma once

#include <Eigen/Core>
#include <memory>
#include <string>
#include <vector>

#include "mixpc/basis.hpp"
#include "mixpc/gaussian_mixture.hpp"
#include "mixpc/stats.hpp"

namespace mixpc::bench {

/// Synthetic black-box model standing in for a device/circuit simulator:
/// a deterministic scalar response bundled with its recommended mixture and
/// expansion order. Copies share state; lazily built bases are cached.
class BlackBoxModel {
 public:
  const std::string& name() const;
  int dim() const;
  int recommended_order() const;
  const GaussianMixture& mixture() const;

  double evaluate(const Eigen::VectorXd& xi) const;
  Eigen::VectorXd evaluate_batch(const Eigen::MatrixXd& points) const;

  /// Basis for (mixture, p), built once per model instance and cached.
  std::shared_ptr<const BasisSet> basis(int p) const;

  /// Exact expansion coefficients when the model is planted in its own
  /// basis (zero-length vector otherwise). The non-polynomial remainder of
  /// a planted model is not included.
  Eigen::VectorXd planted_coeffs() const;

  struct State;
  explicit BlackBoxModel(std::shared_ptr<State> state) : state_(std::move(state)) {}

 private:
  std::shared_ptr<State> state_;
};

/// The bundled models: tiny2, tiny3, poly-planted-10d, filter19, osc57.
std::vector<BlackBoxModel> builtin_models();
BlackBoxModel get_model(const std::string& name);

/// Wrap a caller-supplied response function as a model.
BlackBoxModel make_custom_model(std::string name, int p, GaussianMixture mixture,
                                std::function<double(const Eigen::VectorXd&)> evaluator);

struct McBaseline {
  int64_t samples = 0;
  double mean = 0.0;
  double variance = 0.0;
  double se_mean = 0.0;
  double se_variance = 0.0;
  DensityEstimate density;  // filled when n is small enough to hold values
};

/// Direct Monte Carlo statistics of the model under the mixture.
McBaseline mc_baseline(const BlackBoxModel& model, const GaussianMixture& gmm, int64_t n,
                       uint64_t seed, int bins = 100);

/// Offline parameter/output table (plain text, documented in
/// docs/sample_table_format.md).
struct SampleTable {
  std::string model;
  int d = 0;
  uint64_t seed = 0;
  bool allow_duplicates = false;
  Eigen::MatrixXd points;
  Eigen::VectorXd outputs;
};

SampleTable load_table(const std::string& path);
void save_table(const SampleTable& table, const std::string& path);

/// Table generated by evaluating the model on mixture draws.
SampleTable make_table(const BlackBoxModel& model, int count, uint64_t seed);

}  // namespace mixpc::bench
