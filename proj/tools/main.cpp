#include <CLI11.hpp>
#include <exception>
#include <iostream>

#include "mixpc/cli.hpp"
#include "mixpc/errors.hpp"

namespace {

// Shared flag wiring for every subcommand; --config loads the serialized
// form first and explicit flags override it.
void add_common(CLI::App* cmd, mixpc::cli::RunConfig& cfg, std::string& config_path) {
  auto* opt = cmd->add_option("--config", config_path, "JSON config file (flags override)");
  opt->check(CLI::ExistingFile);
  cmd->callback([&cfg, &config_path, cmd] {
    if (!config_path.empty()) {
      mixpc::cli::RunConfig loaded = mixpc::cli::RunConfig::load(config_path);
      // Start from the file; any flag given on the command line wins.
      cfg.model = cmd->count("--model") ? cfg.model : loaded.model;
      cfg.table = cmd->count("--table") ? cfg.table : loaded.table;
      cfg.mixture_path = cmd->count("--mixture") ? cfg.mixture_path : loaded.mixture_path;
      cfg.coeffs_path = cmd->count("--coeffs") ? cfg.coeffs_path : loaded.coeffs_path;
      cfg.p = cmd->count("--order") ? cfg.p : loaded.p;
      cfg.master_seed = cmd->count("--seed") ? cfg.master_seed : loaded.master_seed;
      cfg.heldout_samples = cmd->count("--heldout") ? cfg.heldout_samples : loaded.heldout_samples;
      cfg.mc_samples = cmd->count("--samples") ? cfg.mc_samples : loaded.mc_samples;
      cfg.bins = cmd->count("--bins") ? cfg.bins : loaded.bins;
      cfg.threads = cmd->count("--threads") ? cfg.threads : loaded.threads;
      cfg.verify = cmd->count("--verify") ? cfg.verify : loaded.verify;
      cfg.compare_random = cmd->count("--compare-random") ? cfg.compare_random : loaded.compare_random;
      cfg.gram_check = cmd->count("--gram-check") ? cfg.gram_check : loaded.gram_check;
      cfg.out_dir = cmd->count("--out") ? cfg.out_dir : loaded.out_dir;
      cfg.solver.initial_samples =
          cmd->count("--initial-samples") ? cfg.solver.initial_samples : loaded.solver.initial_samples;
      cfg.solver.s_max = cmd->count("--s-max") ? cfg.solver.s_max : loaded.solver.s_max;
      cfg.solver.t_max = cmd->count("--t-max") ? cfg.solver.t_max : loaded.solver.t_max;
      cfg.solver.outer_iters =
          cmd->count("--outer") ? cfg.solver.outer_iters : loaded.solver.outer_iters;
      cfg.solver.tol_stop = cmd->count("--tol-stop") ? cfg.solver.tol_stop : loaded.solver.tol_stop;
      cfg.solver.pool_size = cmd->count("--pool") ? cfg.solver.pool_size : loaded.solver.pool_size;
      cfg.solver.max_total_samples =
          cmd->count("--budget") ? cfg.solver.max_total_samples : loaded.solver.max_total_samples;
    }
  });

  cmd->add_option("--model", cfg.model, "builtin model name (tiny2, tiny3, poly-planted-10d, filter19, osc57)");
  cmd->add_option("--table", cfg.table, "offline sample table path");
  cmd->add_option("--mixture", cfg.mixture_path, "mixture spec JSON path");
  cmd->add_option("--coeffs", cfg.coeffs_path, "coefficients CSV (stats/density)");
  cmd->add_option("--order,-p", cfg.p, "total polynomial order p (<= 4)");
  cmd->add_option("--seed", cfg.master_seed, "master seed; all streams derive from it");
  cmd->add_option("--heldout", cfg.heldout_samples, "held-out sample count for testing error");
  cmd->add_option("--samples,-n", cfg.mc_samples, "Monte Carlo / density sample count");
  cmd->add_option("--bins", cfg.bins, "histogram bin count");
  cmd->add_option("--threads", cfg.threads, "moment-engine threads (0 = auto)");
  cmd->add_flag("--verify", cfg.verify, "cross-check moments against oracles");
  cmd->add_flag("--compare-random", cfg.compare_random, "also fit random-sample baselines");
  cmd->add_flag("--gram-check", cfg.gram_check, "dump sampled Gram residual");
  cmd->add_option("--out,-o", cfg.out_dir, "output directory");
  cmd->add_option("--initial-samples,-r", cfg.solver.initial_samples, "RRQR seed count (-1: 2*s_max)");
  cmd->add_option("--s-max", cfg.solver.s_max, "sparsity cap");
  cmd->add_option("--t-max", cfg.solver.t_max, "inner iterations per outer round");
  cmd->add_option("--outer", cfg.solver.outer_iters, "outer iterations");
  cmd->add_option("--tol-stop", cfg.solver.tol_stop, "relative coefficient-change stop");
  cmd->add_option("--pool", cfg.solver.pool_size, "candidate pool size");
  cmd->add_option("--budget", cfg.solver.max_total_samples, "total simulator-call budget");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Polynomial-chaos surrogates for Gaussian-mixture distributed parameters"};
  app.require_subcommand(1);

  mixpc::cli::RunConfig cfg;
  std::string config_path;

  auto* moments = app.add_subcommand("moments", "compute the moment table m_gamma, |gamma| <= 2p");
  auto* basis = app.add_subcommand("basis", "build and dump the orthonormal basis");
  auto* fit = app.add_subcommand("fit", "adaptive sparse fit of a model or table");
  auto* mc = app.add_subcommand("mc", "direct Monte Carlo baseline");
  auto* stats = app.add_subcommand("stats", "closed-form statistics from a coefficients file");
  auto* density = app.add_subcommand("density", "surrogate output density estimate");
  for (auto* cmd : {moments, basis, fit, mc, stats, density}) add_common(cmd, cfg, config_path);

  CLI11_PARSE(app, argc, argv);

  try {
    if (moments->parsed()) return mixpc::cli::run_moments(cfg);
    if (basis->parsed()) return mixpc::cli::run_basis(cfg);
    if (fit->parsed()) return mixpc::cli::run_fit(cfg);
    if (mc->parsed()) return mixpc::cli::run_mc(cfg);
    if (stats->parsed()) return mixpc::cli::run_stats(cfg);
    if (density->parsed()) return mixpc::cli::run_density(cfg);
  } catch (const mixpc::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const mixpc::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const mixpc::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
