#pragma once

#include <cstdint>
#include <string>

namespace mixpc::cli {

inline constexpr const char* kToolVersion = "mixpc 0.1.0";

struct SolverKnobs {
  int initial_samples = -1;    // -1: 2 * s_max
  int s_max = 50;
  int t_max = 30;
  int outer_iters = 3;
  double tol_stop = 1e-3;
  int pool_size = 1000;
  int max_total_samples = -1;  // -1: pool-limited
};

/// Fully resolved run configuration; serialized into every output
/// directory so runs can be reproduced byte-for-byte.
struct RunConfig {
  std::string model;         // builtin model name ("" when fitting a table)
  std::string table;         // offline sample-table path
  std::string mixture_path;  // mixture spec file; "" uses the model's bundled mixture
  std::string coeffs_path;   // input coefficients (stats/density subcommands)
  int p = 2;
  SolverKnobs solver;
  uint64_t master_seed = 1;
  int heldout_samples = 9000;
  int64_t mc_samples = 1000000;
  int bins = 100;
  int threads = 0;           // 0: hardware concurrency
  bool verify = false;       // moments: cross-check against oracles
  bool compare_random = false;
  bool gram_check = false;   // basis: sampled Gram residual dump
  std::string out_dir = "out";

  static RunConfig from_json_text(const std::string& text);
  static RunConfig load(const std::string& path);
  std::string to_json_text() const;

  /// Throws ValidationError on inconsistent settings (e.g. p > 4).
  void validate() const;
};

// Seed-stream tags (derive_seed(master_seed, tag)).
inline constexpr uint64_t kSeedPool = 1;
inline constexpr uint64_t kSeedHeldout = 2;
inline constexpr uint64_t kSeedMc = 3;
inline constexpr uint64_t kSeedDensity = 4;
inline constexpr uint64_t kSeedRandomBaseline = 5;
inline constexpr uint64_t kSeedGram = 6;

int run_moments(const RunConfig& cfg);
int run_basis(const RunConfig& cfg);
int run_fit(const RunConfig& cfg);
int run_mc(const RunConfig& cfg);
int run_stats(const RunConfig& cfg);
int run_density(const RunConfig& cfg);

}  // namespace mixpc::cli
