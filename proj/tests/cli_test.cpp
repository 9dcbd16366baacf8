#include "mixpc/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "mixpc/errors.hpp"

using namespace mixpc;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / "mixpc_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::map<std::string, std::string> dir_contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) out[entry.path().filename().string()] = slurp(entry.path());
  }
  return out;
}

cli::RunConfig tiny_fit_config(const fs::path& out) {
  cli::RunConfig cfg;
  cfg.model = "tiny2";
  cfg.p = 3;
  cfg.master_seed = 11;
  cfg.heldout_samples = 500;
  cfg.solver.pool_size = 300;
  cfg.solver.s_max = 8;
  cfg.solver.initial_samples = 16;
  cfg.solver.t_max = 10;
  cfg.out_dir = out.string();
  return cfg;
}

}  // namespace

TEST(RunConfig, JsonRoundTrip) {
  cli::RunConfig cfg = tiny_fit_config(fresh_dir("roundtrip"));
  cfg.compare_random = true;
  cfg.solver.tol_stop = 5e-4;
  cli::RunConfig back = cli::RunConfig::from_json_text(cfg.to_json_text());
  EXPECT_EQ(back.model, cfg.model);
  EXPECT_EQ(back.p, cfg.p);
  EXPECT_EQ(back.master_seed, cfg.master_seed);
  EXPECT_EQ(back.compare_random, cfg.compare_random);
  EXPECT_EQ(back.solver.tol_stop, cfg.solver.tol_stop);
  EXPECT_EQ(back.solver.pool_size, cfg.solver.pool_size);
}

TEST(RunConfig, ValidationRejectsBadSettings) {
  cli::RunConfig cfg = tiny_fit_config(fresh_dir("validate"));
  cfg.p = 5;  // public cap is 4
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg.p = 3;
  cfg.out_dir = "";
  EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(RunMoments, WritesTableWithUnitZerothMoment) {
  cli::RunConfig cfg;
  cfg.model = "tiny2";
  cfg.p = 2;
  cfg.out_dir = fresh_dir("moments").string();
  EXPECT_EQ(cli::run_moments(cfg), 0);

  std::string moments = slurp(fs::path(cfg.out_dir) / "moments.csv");
  EXPECT_NE(moments.find("e1,e2,moment"), std::string::npos);
  // First row is the zero index with moment exactly 1.
  EXPECT_NE(moments.find("0,0,1\n"), std::string::npos);
}

TEST(RunMoments, VerifyAgainstQuadraturePasses) {
  cli::RunConfig cfg;
  cfg.model = "tiny2";
  cfg.p = 2;
  cfg.verify = true;
  cfg.out_dir = fresh_dir("moments_verify").string();
  EXPECT_EQ(cli::run_moments(cfg), 0);
  EXPECT_TRUE(fs::exists(fs::path(cfg.out_dir) / "verify.csv"));
}

TEST(RunBasis, EmitsTriangularFactor) {
  cli::RunConfig cfg;
  cfg.model = "tiny2";
  cfg.p = 2;
  cfg.out_dir = fresh_dir("basis").string();
  EXPECT_EQ(cli::run_basis(cfg), 0);

  std::ifstream in(fs::path(cfg.out_dir) / "L.csv");
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string cell;
    int col = 0;
    while (std::getline(ls, cell, ',')) {
      if (col > row) EXPECT_EQ(std::stod(cell), 0.0) << "row " << row << " col " << col;
      ++col;
    }
    ++row;
  }
  EXPECT_EQ(row, 6);  // N = C(4,2)
}

TEST(RunFit, ProducesCoefficientsAndConvergence) {
  cli::RunConfig cfg = tiny_fit_config(fresh_dir("fit"));
  EXPECT_EQ(cli::run_fit(cfg), 0);
  for (const char* f :
       {"config.json", "coefficients.csv", "convergence.csv", "selected_samples.csv", "summary.txt"})
    EXPECT_TRUE(fs::exists(fs::path(cfg.out_dir) / f)) << f;

  std::string summary = slurp(fs::path(cfg.out_dir) / "summary.txt");
  EXPECT_NE(summary.find("test error:"), std::string::npos);
}

TEST(RunFit, RerunIsByteIdentical) {
  auto dir1 = fresh_dir("det1");
  auto dir2 = fresh_dir("det2");
  cli::RunConfig cfg1 = tiny_fit_config(dir1);
  cli::RunConfig cfg2 = tiny_fit_config(dir2);
  EXPECT_EQ(cli::run_fit(cfg1), 0);
  EXPECT_EQ(cli::run_fit(cfg2), 0);

  auto files1 = dir_contents(dir1);
  auto files2 = dir_contents(dir2);
  ASSERT_EQ(files1.size(), files2.size());
  for (const auto& [name, content] : files1) {
    if (name == "config.json") continue;  // differs in the out path only
    EXPECT_EQ(content, files2.at(name)) << name;
  }
}

TEST(RunMc, DeterministicSummary) {
  cli::RunConfig cfg;
  cfg.model = "tiny2";
  cfg.mc_samples = 10000;
  cfg.master_seed = 3;
  cfg.out_dir = fresh_dir("mc1").string();
  EXPECT_EQ(cli::run_mc(cfg), 0);
  std::string first = slurp(fs::path(cfg.out_dir) / "mc_summary.csv");

  cfg.out_dir = fresh_dir("mc2").string();
  EXPECT_EQ(cli::run_mc(cfg), 0);
  EXPECT_EQ(first, slurp(fs::path(cfg.out_dir) / "mc_summary.csv"));
}

TEST(RunStats, MeanIsZeroDegreeCoefficient) {
  auto dir = fresh_dir("stats");
  auto coeffs = dir / "coefficients.csv";
  std::ofstream(coeffs) << "e1,e2,coefficient\n0,0,5.25\n1,0,2\n0,1,-1\n2,0,0.5\n";

  cli::RunConfig cfg;
  cfg.coeffs_path = coeffs.string();
  cfg.out_dir = (dir / "out").string();
  EXPECT_EQ(cli::run_stats(cfg), 0);

  std::string summary = slurp(fs::path(cfg.out_dir) / "stats_summary.csv");
  EXPECT_NE(summary.find("5.25,5.25"), std::string::npos);  // mean, variance = 4+1+0.25
}

TEST(RunDensity, UsesFittedCoefficients) {
  cli::RunConfig cfg = tiny_fit_config(fresh_dir("density_fit"));
  ASSERT_EQ(cli::run_fit(cfg), 0);

  cli::RunConfig dcfg;
  dcfg.model = "tiny2";
  dcfg.p = 3;
  dcfg.coeffs_path = (fs::path(cfg.out_dir) / "coefficients.csv").string();
  dcfg.mc_samples = 20000;
  dcfg.out_dir = fresh_dir("density_out").string();
  EXPECT_EQ(cli::run_density(dcfg), 0);
  EXPECT_TRUE(fs::exists(fs::path(dcfg.out_dir) / "density.csv"));
  EXPECT_TRUE(fs::exists(fs::path(dcfg.out_dir) / "histogram.csv"));
}

TEST(RunErrors, MissingInputsRaiseValidationErrors) {
  cli::RunConfig cfg;
  cfg.out_dir = fresh_dir("err").string();
  EXPECT_THROW(cli::run_moments(cfg), ValidationError);  // no mixture at all
  EXPECT_THROW(cli::run_stats(cfg), ValidationError);    // no coefficients file

  cfg.model = "tiny2";
  cfg.coeffs_path = (fs::path(cfg.out_dir) / "missing.csv").string();
  EXPECT_THROW(cli::run_density(cfg), IoError);
}
