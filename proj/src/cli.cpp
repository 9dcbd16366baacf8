#include "mixpc/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "mixpc/basis.hpp"
#include "mixpc/bench.hpp"
#include "mixpc/errors.hpp"
#include "mixpc/ftt.hpp"
#include "mixpc/quadrature.hpp"
#include "mixpc/solver.hpp"
#include "mixpc/stats.hpp"

namespace mixpc::cli {

namespace fs = std::filesystem;

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

struct Inputs {
  std::unique_ptr<bench::BlackBoxModel> model;
  std::unique_ptr<GaussianMixture> mixture;
};

Inputs resolve_inputs(const RunConfig& cfg, bool need_model) {
  Inputs in;
  if (!cfg.model.empty()) in.model = std::make_unique<bench::BlackBoxModel>(bench::get_model(cfg.model));
  if (!cfg.mixture_path.empty()) {
    in.mixture = std::make_unique<GaussianMixture>(GaussianMixture::load(cfg.mixture_path));
  } else if (in.model) {
    in.mixture = std::make_unique<GaussianMixture>(in.model->mixture());
  }
  if (!in.mixture) throw ValidationError("no mixture: set a model name or a mixture file");
  if (need_model && !in.model && cfg.table.empty())
    throw ValidationError("this subcommand needs a model name or a sample table");
  return in;
}

void write_config(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  auto out = open_out(fs::path(cfg.out_dir) / "config.json");
  out << cfg.to_json_text() << '\n';
}

std::shared_ptr<const BasisSet> basis_for(const Inputs& in, const RunConfig& cfg) {
  if (in.model && cfg.mixture_path.empty()) return in.model->basis(cfg.p);
  return std::make_shared<const BasisSet>(build_basis(*in.mixture, cfg.p, cfg.threads));
}

void write_exponent_header(std::ofstream& out, int d, const std::string& value_col) {
  for (int k = 0; k < d; ++k) out << "e" << (k + 1) << ",";
  out << value_col << "\n";
}

void write_exponents(std::ofstream& out, const MultiIndex& a) {
  for (int k = 0; k < a.dim(); ++k) out << a[k] << ",";
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(std::string("config: ") + e.what());
  }
  RunConfig cfg;
  cfg.model = j.value("model", cfg.model);
  cfg.table = j.value("table", cfg.table);
  cfg.mixture_path = j.value("mixture", cfg.mixture_path);
  cfg.coeffs_path = j.value("coeffs", cfg.coeffs_path);
  cfg.p = j.value("p", cfg.p);
  cfg.master_seed = j.value("master_seed", cfg.master_seed);
  cfg.heldout_samples = j.value("heldout_samples", cfg.heldout_samples);
  cfg.mc_samples = j.value("mc_samples", cfg.mc_samples);
  cfg.bins = j.value("bins", cfg.bins);
  cfg.threads = j.value("threads", cfg.threads);
  cfg.verify = j.value("verify", cfg.verify);
  cfg.compare_random = j.value("compare_random", cfg.compare_random);
  cfg.gram_check = j.value("gram_check", cfg.gram_check);
  cfg.out_dir = j.value("out", cfg.out_dir);
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    cfg.solver.initial_samples = s.value("initial_samples", cfg.solver.initial_samples);
    cfg.solver.s_max = s.value("s_max", cfg.solver.s_max);
    cfg.solver.t_max = s.value("t_max", cfg.solver.t_max);
    cfg.solver.outer_iters = s.value("outer_iters", cfg.solver.outer_iters);
    cfg.solver.tol_stop = s.value("tol_stop", cfg.solver.tol_stop);
    cfg.solver.pool_size = s.value("pool_size", cfg.solver.pool_size);
    cfg.solver.max_total_samples = s.value("max_total_samples", cfg.solver.max_total_samples);
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::string RunConfig::to_json_text() const {
  nlohmann::json j;
  j["tool"] = kToolVersion;
  j["model"] = model;
  j["table"] = table;
  j["mixture"] = mixture_path;
  j["coeffs"] = coeffs_path;
  j["p"] = p;
  j["master_seed"] = master_seed;
  j["heldout_samples"] = heldout_samples;
  j["mc_samples"] = mc_samples;
  j["bins"] = bins;
  j["threads"] = threads;
  j["verify"] = verify;
  j["compare_random"] = compare_random;
  j["gram_check"] = gram_check;
  j["out"] = out_dir;
  j["solver"] = {
      {"initial_samples", solver.initial_samples}, {"s_max", solver.s_max},
      {"t_max", solver.t_max},                     {"outer_iters", solver.outer_iters},
      {"tol_stop", solver.tol_stop},               {"pool_size", solver.pool_size},
      {"max_total_samples", solver.max_total_samples},
  };
  return j.dump(2);
}

void RunConfig::validate() const {
  if (p < 0) throw ValidationError("config: p must be >= 0");
  if (p > 4)
    throw ValidationError("config: p is capped at 4; moment-matrix conditioning above that is untested");
  if (solver.s_max < 1) throw ValidationError("config: s_max must be >= 1");
  if (solver.pool_size < 2) throw ValidationError("config: pool_size must be >= 2");
  if (bins < 1) throw ValidationError("config: bins must be >= 1");
  if (out_dir.empty()) throw ValidationError("config: output directory must be set");
}

int run_moments(const RunConfig& cfg) {
  cfg.validate();
  Inputs in = resolve_inputs(cfg, false);
  const GaussianMixture& gmm = *in.mixture;
  const int d = gmm.dim();

  write_config(cfg);
  GradedLexOrder order(d, 2 * cfg.p);
  MixtureMomentEngine engine(gmm, cfg.p);
  std::vector<double> table = engine.moment_table(order, cfg.threads);

  {
    auto out = open_out(fs::path(cfg.out_dir) / "moments.csv");
    write_exponent_header(out, d, "moment");
    for (int j = 0; j < order.size(); ++j) {
      write_exponents(out, order[j]);
      out << g17(table[static_cast<size_t>(j)]) << "\n";
    }
  }

  double max_rel = 0.0;
  if (cfg.verify) {
    auto out = open_out(fs::path(cfg.out_dir) / "verify.csv");
    write_exponent_header(out, d, "moment,oracle,abs_diff,threshold,method");
    const bool use_quad = d <= 4;
    uint64_t mc_seed = derive_seed(cfg.master_seed, kSeedMc);
    // Quadrature checks every moment; MC spot-checks 50 of them.
    std::vector<int> rows;
    if (use_quad) {
      rows.resize(static_cast<size_t>(order.size()));
      for (int j = 0; j < order.size(); ++j) rows[static_cast<size_t>(j)] = j;
    } else {
      Rng rng(derive_seed(cfg.master_seed, kSeedMc + 100));
      for (int k = 0; k < 50; ++k) rows.push_back(rng.uniform_int(order.size()));
      std::sort(rows.begin(), rows.end());
      rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    }
    bool failed = false;
    for (int j : rows) {
      const MultiIndex& a = order[j];
      double ours = table[static_cast<size_t>(j)];
      double oracle, threshold;
      const char* method;
      if (use_quad) {
        int nodes = cfg.p * 2 + 1;
        oracle = 0.0;
        for (int i = 0; i < gmm.num_components(); ++i)
          oracle += gmm.weights()[i] * quad_moment(a, gmm.component(i), nodes);
        threshold = 1e-8 * std::max(1.0, std::abs(oracle));
        method = "quad";
      } else {
        McEstimate est = mc_moment(a, gmm, 10000000, derive_seed(mc_seed, static_cast<uint64_t>(j)));
        oracle = est.estimate;
        threshold = 5.0 * est.std_error;
        method = "mc";
      }
      double diff = std::abs(ours - oracle);
      write_exponents(out, a);
      out << g17(ours) << "," << g17(oracle) << "," << g17(diff) << "," << g17(threshold) << ","
          << method << "\n";
      if (diff > threshold) failed = true;
      if (std::abs(oracle) > 1e-12) max_rel = std::max(max_rel, diff / std::abs(oracle));
    }
    if (failed)
      throw NumericalError("moment verification failed; see " +
                           (fs::path(cfg.out_dir) / "verify.csv").string());
  }

  auto summary = open_out(fs::path(cfg.out_dir) / "run_summary.txt");
  summary << kToolVersion << "\nsubcommand: moments\nmoment count: " << order.size()
          << "\nmax degree: " << 2 * cfg.p << "\n";
  if (cfg.verify) summary << "verified: yes (max relative discrepancy " << g17(max_rel) << ")\n";
  return 0;
}

int run_basis(const RunConfig& cfg) {
  cfg.validate();
  Inputs in = resolve_inputs(cfg, false);
  write_config(cfg);

  auto basis = basis_for(in, cfg);
  const auto& order = basis->order();

  {
    auto out = open_out(fs::path(cfg.out_dir) / "indices.csv");
    out << "position,";
    write_exponent_header(out, order.dim(), "degree");
    for (int j = 0; j < order.size(); ++j) {
      out << j << ",";
      write_exponents(out, order[j]);
      out << order[j].degree() << "\n";
    }
  }
  {
    auto out = open_out(fs::path(cfg.out_dir) / "L.csv");
    const auto& L = basis->L();
    for (Eigen::Index i = 0; i < L.rows(); ++i) {
      for (Eigen::Index j = 0; j < L.cols(); ++j) {
        if (j) out << ",";
        out << g17(L(i, j));
      }
      out << "\n";
    }
  }
  {
    auto out = open_out(fs::path(cfg.out_dir) / "diagnostics.csv");
    const auto& dg = basis->diagnostics();
    out << "key,value\nN," << order.size() << "\nmin_diag_L," << g17(dg.min_diag_L)
        << "\nmax_diag_L," << g17(dg.max_diag_L) << "\njitter," << g17(dg.jitter)
        << "\njitter_attempts," << dg.jitter_attempts << "\n";
  }
  if (cfg.gram_check) {
    const int n_samples = 100000;
    Eigen::MatrixXd pts = in.mixture->sample(n_samples, derive_seed(cfg.master_seed, kSeedGram));
    Eigen::MatrixXd phi = basis->evaluate_batch(pts);
    Eigen::MatrixXd gram = phi.transpose() * phi / static_cast<double>(n_samples);
    Eigen::MatrixXd resid = gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols());
    auto out = open_out(fs::path(cfg.out_dir) / "gram_residual.csv");
    out << "samples,max_abs_offdiag,max_abs_diag_dev\n";
    double off = 0.0, diag = 0.0;
    for (Eigen::Index i = 0; i < resid.rows(); ++i)
      for (Eigen::Index j = 0; j < resid.cols(); ++j) {
        if (i == j)
          diag = std::max(diag, std::abs(resid(i, j)));
        else
          off = std::max(off, std::abs(resid(i, j)));
      }
    out << n_samples << "," << g17(off) << "," << g17(diag) << "\n";
  }

  auto summary = open_out(fs::path(cfg.out_dir) / "run_summary.txt");
  summary << kToolVersion << "\nsubcommand: basis\nN: " << order.size() << "\njitter: "
          << g17(basis->diagnostics().jitter) << "\n";
  if (basis->diagnostics().jitter > 0.0)
    summary << "warning: Cholesky needed diagonal jitter; treat high-order terms with care\n";
  return 0;
}

namespace {

void write_convergence_row(std::ofstream& out, int samples, double train_err, double test_err) {
  out << samples << "," << g17(train_err) << "," << g17(test_err) << "\n";
}

}  // namespace

int run_fit(const RunConfig& cfg) {
  cfg.validate();
  Inputs in = resolve_inputs(cfg, true);
  write_config(cfg);

  const GaussianMixture& gmm = *in.mixture;
  auto basis = basis_for(in, cfg);
  const int n_basis = basis->size();

  // Candidate pool: offline table rows, or fresh mixture draws + model.
  std::unique_ptr<CandidatePool> pool;
  if (!cfg.table.empty()) {
    bench::SampleTable table = bench::load_table(cfg.table);
    if (table.d != gmm.dim())
      throw ValidationError("table dimension " + std::to_string(table.d) +
                            " does not match mixture dimension " + std::to_string(gmm.dim()));
    pool = std::make_unique<CandidatePool>(
        CandidatePool::from_table(table.points, *basis, table.outputs));
  } else {
    Eigen::MatrixXd pts =
        gmm.sample(cfg.solver.pool_size, derive_seed(cfg.master_seed, kSeedPool));
    const bench::BlackBoxModel& model = *in.model;
    pool = std::make_unique<CandidatePool>(CandidatePool::from_model(
        pts, *basis, [model](const Eigen::VectorXd& xi) { return model.evaluate(xi); }));
  }

  // Held-out set for testing error: fresh mixture draws for model runs,
  // never used for fitting (the pool indices are disjoint by construction).
  Eigen::MatrixXd phi_test;
  Eigen::VectorXd y_test;
  if (in.model) {
    Eigen::MatrixXd pts =
        gmm.sample(cfg.heldout_samples, derive_seed(cfg.master_seed, kSeedHeldout));
    phi_test = basis->evaluate_batch(pts);
    y_test = in.model->evaluate_batch(pts);
  }

  auto conv = open_out(fs::path(cfg.out_dir) / "convergence.csv");
  conv << "samples,train_error,test_error\n";
  auto selected_log = open_out(fs::path(cfg.out_dir) / "selected_samples.csv");
  selected_log << "outer,inner,candidate,score,train_error,coeff_change,samples\n";

  SolverConfig scfg;
  scfg.initial_samples = cfg.solver.initial_samples;
  scfg.s_max = cfg.solver.s_max;
  scfg.t_max = cfg.solver.t_max;
  scfg.outer_iters = cfg.solver.outer_iters;
  scfg.tol_stop = cfg.solver.tol_stop;
  scfg.max_total_samples = cfg.solver.max_total_samples;
  size_t logged = 0;
  scfg.on_update = [&](const SparseFit& fit) {
    double test_err =
        y_test.size() > 0 ? relative_error(phi_test, fit.coeffs, y_test) : std::nan("");
    write_convergence_row(conv, static_cast<int>(fit.selected.size()), fit.train_error, test_err);
    for (; logged < fit.history.size(); ++logged) {
      const FitStep& st = fit.history[logged];
      selected_log << st.outer << "," << st.inner << "," << st.candidate << "," << g17(st.score)
                   << "," << g17(st.train_error) << "," << g17(st.coeff_change) << ","
                   << st.samples_used << "\n";
    }
  };

  SparseFit fit = adaptive_fit(*pool, *basis, scfg);

  {
    auto out = open_out(fs::path(cfg.out_dir) / "coefficients.csv");
    write_exponent_header(out, basis->dim(), "coefficient");
    for (int j = 0; j < n_basis; ++j) {
      write_exponents(out, basis->order()[j]);
      out << g17(fit.coeffs[j]) << "\n";
    }
  }

  SurrogateModel surrogate(basis, fit.coeffs);
  double test_err =
      y_test.size() > 0 ? relative_error(phi_test, fit.coeffs, y_test) : std::nan("");

  if (cfg.compare_random) {
    auto out = open_out(fs::path(cfg.out_dir) / "random_convergence.csv");
    out << "samples,test_error\n";
    int budget = static_cast<int>(fit.selected.size());
    for (int b = std::max(10, budget / 4); b <= budget; b += std::max(1, budget / 4)) {
      Rng rng(derive_seed(cfg.master_seed, kSeedRandomBaseline + static_cast<uint64_t>(b)));
      SparseFit rf = random_fit(*pool, *basis, b, rng, scfg);
      double err = y_test.size() > 0 ? relative_error(phi_test, rf.coeffs, y_test) : std::nan("");
      out << b << "," << g17(err) << "\n";
    }
  }

  int above = 0;
  double cmax = fit.coeffs.cwiseAbs().maxCoeff();
  for (int j = 0; j < n_basis; ++j)
    if (std::abs(fit.coeffs[j]) > 1e-3 * cmax) ++above;

  auto summary = open_out(fs::path(cfg.out_dir) / "summary.txt");
  summary << kToolVersion << "\nsubcommand: fit\nN: " << n_basis << "\nsamples used: "
          << fit.selected.size() << "\nmodel evaluations: " << fit.model_evaluations
          << "\nsupport size: " << fit.support.size() << "\ncoefficients above 1e-3*max: " << above
          << "\ntrain error: " << g17(fit.train_error) << "\ntest error: " << g17(test_err)
          << "\nmean: " << g17(mean(surrogate)) << "\nvariance: " << g17(variance(surrogate))
          << "\nmaster seed: " << cfg.master_seed << "\n";
  return 0;
}

int run_mc(const RunConfig& cfg) {
  cfg.validate();
  Inputs in = resolve_inputs(cfg, true);
  if (!in.model) throw ValidationError("mc: a builtin model name is required");
  write_config(cfg);

  bench::McBaseline base = bench::mc_baseline(*in.model, *in.mixture, cfg.mc_samples,
                                              derive_seed(cfg.master_seed, kSeedMc), cfg.bins);
  {
    auto out = open_out(fs::path(cfg.out_dir) / "mc_summary.csv");
    out << "samples,mean,se_mean,variance,se_variance\n"
        << base.samples << "," << g17(base.mean) << "," << g17(base.se_mean) << ","
        << g17(base.variance) << "," << g17(base.se_variance) << "\n";
  }
  if (base.density.bin_density.size() > 0) {
    auto out = open_out(fs::path(cfg.out_dir) / "mc_histogram.csv");
    out << "bin_left,bin_right,density\n";
    for (int b = 0; b < base.density.bin_density.size(); ++b)
      out << g17(base.density.bin_edges[b]) << "," << g17(base.density.bin_edges[b + 1]) << ","
          << g17(base.density.bin_density[b]) << "\n";
  }
  auto summary = open_out(fs::path(cfg.out_dir) / "run_summary.txt");
  summary << kToolVersion << "\nsubcommand: mc\nsamples: " << base.samples << "\nmean: "
          << g17(base.mean) << " (se " << g17(base.se_mean) << ")\nvariance: " << g17(base.variance)
          << " (se " << g17(base.se_variance) << ")\n";
  return 0;
}

namespace {

// Coefficients CSV written by run_fit: e1..ed columns then the value.
std::pair<std::vector<std::vector<int>>, std::vector<double>> load_coeffs(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open coefficients file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ":1: empty file");
  int cols = 1 + static_cast<int>(std::count(line.begin(), line.end(), ','));
  int d = cols - 1;
  if (d < 1) throw IoError(path + ":1: expected e1..ed,coefficient header");

  std::vector<std::vector<int>> exps;
  std::vector<double> vals;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<int> e(static_cast<size_t>(d));
    for (int k = 0; k <= d; ++k) {
      if (!std::getline(ls, cell, ','))
        throw IoError(path + ":" + std::to_string(lineno) + ": missing fields");
      try {
        if (k < d)
          e[static_cast<size_t>(k)] = std::stoi(cell);
        else
          vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw IoError(path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    exps.push_back(std::move(e));
  }
  if (vals.empty()) throw IoError(path + ": no coefficient rows");
  return {std::move(exps), std::move(vals)};
}

}  // namespace

int run_stats(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.coeffs_path.empty()) throw ValidationError("stats: --coeffs <file> is required");
  write_config(cfg);

  auto [exps, vals] = load_coeffs(cfg.coeffs_path);
  double c0 = 0.0, sumsq = 0.0;
  for (size_t i = 0; i < vals.size(); ++i) {
    int deg = 0;
    for (int e : exps[i]) deg += e;
    if (deg == 0)
      c0 = vals[i];
    else
      sumsq += vals[i] * vals[i];
  }

  auto out = open_out(fs::path(cfg.out_dir) / "stats_summary.csv");
  out << "mean,variance,coefficients\n"
      << g17(c0) << "," << g17(sumsq) << "," << vals.size() << "\n";
  auto summary = open_out(fs::path(cfg.out_dir) / "run_summary.txt");
  summary << kToolVersion << "\nsubcommand: stats\nmean: " << g17(c0) << "\nvariance: "
          << g17(sumsq) << "\n";
  return 0;
}

int run_density(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.coeffs_path.empty()) throw ValidationError("density: --coeffs <file> is required");
  Inputs in = resolve_inputs(cfg, false);
  write_config(cfg);

  auto basis = basis_for(in, cfg);
  auto [exps, vals] = load_coeffs(cfg.coeffs_path);
  if (static_cast<int>(vals.size()) != basis->size())
    throw ValidationError("density: coefficients file has " + std::to_string(vals.size()) +
                          " rows but the basis has " + std::to_string(basis->size()));
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(basis->size());
  for (size_t i = 0; i < vals.size(); ++i) {
    int pos = basis->order().position(MultiIndex(exps[i]));
    if (pos < 0) throw ValidationError("density: coefficients file has an exponent outside the basis");
    coeffs[pos] = vals[i];
  }

  SurrogateModel surrogate(basis, coeffs);
  DensityEstimate est = density(surrogate, *in.mixture, cfg.mc_samples,
                                derive_seed(cfg.master_seed, kSeedDensity), cfg.bins);
  {
    auto out = open_out(fs::path(cfg.out_dir) / "density.csv");
    out << "grid,pdf\n";
    for (int g = 0; g < est.grid.size(); ++g)
      out << g17(est.grid[g]) << "," << g17(est.pdf[g]) << "\n";
  }
  {
    auto out = open_out(fs::path(cfg.out_dir) / "histogram.csv");
    out << "bin_left,bin_right,density\n";
    for (int b = 0; b < est.bin_density.size(); ++b)
      out << g17(est.bin_edges[b]) << "," << g17(est.bin_edges[b + 1]) << ","
          << g17(est.bin_density[b]) << "\n";
  }
  auto summary = open_out(fs::path(cfg.out_dir) / "run_summary.txt");
  summary << kToolVersion << "\nsubcommand: density\nsamples: " << est.samples << "\nbandwidth: "
          << g17(est.bandwidth) << "\n";
  return 0;
}

}  // namespace mixpc::cli
