#include "mixpc/bench.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "mixpc/errors.hpp"
#include "mixpc/solver.hpp"

using namespace mixpc;
using bench::BlackBoxModel;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "mixpc_bench_test";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST(BuiltinModels, RosterAndDimensions) {
  auto models = bench::builtin_models();
  ASSERT_EQ(models.size(), 5u);
  EXPECT_EQ(bench::get_model("tiny2").dim(), 2);
  EXPECT_EQ(bench::get_model("tiny3").dim(), 3);
  EXPECT_EQ(bench::get_model("poly-planted-10d").dim(), 10);
  EXPECT_EQ(bench::get_model("filter19").dim(), 19);
  EXPECT_EQ(bench::get_model("osc57").dim(), 57);
  EXPECT_THROW(bench::get_model("nope"), ValidationError);
}

TEST(BuiltinModels, EvaluatorsFiniteOnMixtureDraws) {
  // The full finiteness sweep at 10^6 draws runs in the acceptance suite.
  for (const char* name : {"tiny2", "tiny3"}) {
    BlackBoxModel m = bench::get_model(name);
    Eigen::MatrixXd pts = m.mixture().sample(20000, uint64_t{5});
    Eigen::VectorXd v = m.evaluate_batch(pts);
    EXPECT_TRUE(v.allFinite()) << name;
  }
}

TEST(BuiltinModels, PlantedModelMatchesClosedFormAtMean) {
  BlackBoxModel m = bench::get_model("poly-planted-10d");
  Eigen::VectorXd c = m.planted_coeffs();
  ASSERT_GT(c.size(), 0);
  auto basis = m.basis(m.recommended_order());
  Eigen::VectorXd center = m.mixture().mean();
  double closed_form = c.dot(basis->evaluate(center));
  EXPECT_NEAR(m.evaluate(center), closed_form, 1e-12 * std::max(1.0, std::abs(closed_form)));

  // Exactly s-sparse with the constant term included.
  EXPECT_EQ((c.array() != 0.0).count(), 10);
  EXPECT_NE(c[0], 0.0);
}

TEST(BuiltinModels, PlantedBatchMatchesPointwise) {
  BlackBoxModel m = bench::get_model("poly-planted-10d");
  Eigen::MatrixXd pts = m.mixture().sample(20, uint64_t{31});
  Eigen::VectorXd batch = m.evaluate_batch(pts);
  for (int i = 0; i < pts.rows(); ++i)
    EXPECT_NEAR(batch[i], m.evaluate(pts.row(i).transpose()), 1e-11);
}

TEST(McBaseline, ConstantModelHasZeroVariance) {
  GaussianMixture gmm = bench::get_model("tiny2").mixture();
  BlackBoxModel constant =
      bench::make_custom_model("const", 1, gmm, [](const Eigen::VectorXd&) { return 4.25; });
  for (int64_t n : {100, 10000}) {
    bench::McBaseline base = bench::mc_baseline(constant, gmm, n, 7);
    EXPECT_EQ(base.mean, 4.25);
    EXPECT_EQ(base.variance, 0.0);
  }
}

TEST(McBaseline, ErrorDecaysLikeRootN) {
  // Mean-estimate error decay across n = 10^2, 10^4, 10^6 against the
  // n = 10^8 reference on tiny2.
  BlackBoxModel m = bench::get_model("tiny2");
  const GaussianMixture& gmm = m.mixture();
  double reference = bench::mc_baseline(m, gmm, 100000000, 900).mean;

  double err2 = std::abs(bench::mc_baseline(m, gmm, 100, 901).mean - reference);
  double err4 = std::abs(bench::mc_baseline(m, gmm, 10000, 902).mean - reference);
  double err6 = std::abs(bench::mc_baseline(m, gmm, 1000000, 903).mean - reference);

  EXPECT_GT(err2, err4);
  EXPECT_GT(err4, err6);
  // ~1/sqrt(n): two decades in n buy about one decade in error.
  EXPECT_LT(err6, err2 * 0.1);
}

TEST(McBaseline, ReportsStandardErrors) {
  BlackBoxModel m = bench::get_model("tiny2");
  bench::McBaseline base = bench::mc_baseline(m, m.mixture(), 200000, 42);
  EXPECT_GT(base.se_mean, 0.0);
  EXPECT_GT(base.se_variance, 0.0);
  bench::McBaseline again = bench::mc_baseline(m, m.mixture(), 200000, 42);
  EXPECT_EQ(base.mean, again.mean);  // determinism
}

TEST(SampleTable, RoundTripIdentity) {
  BlackBoxModel m = bench::get_model("tiny3");
  bench::SampleTable table = bench::make_table(m, 64, 17);
  auto path = (temp_dir() / "tiny3.csv").string();
  bench::save_table(table, path);
  bench::SampleTable loaded = bench::load_table(path);

  EXPECT_EQ(loaded.model, table.model);
  EXPECT_EQ(loaded.d, table.d);
  EXPECT_EQ(loaded.seed, table.seed);
  EXPECT_EQ((loaded.points - table.points).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((loaded.outputs - table.outputs).cwiseAbs().maxCoeff(), 0.0);
}

TEST(SampleTable, GenerationIsByteIdentical) {
  // (filter19/osc57 are exercised in the acceptance suite; their bases are
  // too heavy for the unit run.)
  BlackBoxModel m = bench::get_model("poly-planted-10d");
  auto p1 = (temp_dir() / "p10_a.csv").string();
  auto p2 = (temp_dir() / "p10_b.csv").string();
  bench::save_table(bench::make_table(m, 50, 1), p1);
  bench::save_table(bench::make_table(m, 50, 1), p2);
  EXPECT_EQ(slurp(p1), slurp(p2));
}

TEST(SampleTable, MalformedFilesReportLineNumbers) {
  auto dir = temp_dir();

  auto bad_header = (dir / "bad_header.csv").string();
  std::ofstream(bad_header) << "# wrong-tag model=x d=1 seed=0\nx1,y\n0,1\n";
  EXPECT_THROW(bench::load_table(bad_header), IoError);

  auto missing_d = (dir / "missing_d.csv").string();
  std::ofstream(missing_d) << "# mixpc-table model=x seed=0\nx1,y\n0,1\n";
  EXPECT_THROW(bench::load_table(missing_d), IoError);

  auto col_mismatch = (dir / "cols.csv").string();
  std::ofstream(col_mismatch) << "# mixpc-table model=x d=2 seed=0\nx1,y\n0,1\n";
  try {
    bench::load_table(col_mismatch);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos);
  }

  auto bad_cell = (dir / "cell.csv").string();
  std::ofstream(bad_cell) << "# mixpc-table model=x d=1 seed=0\nx1,y\n0,1\nbeef,2\n";
  try {
    bench::load_table(bad_cell);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find(":4"), std::string::npos);
  }

  auto dup = (dir / "dup.csv").string();
  std::ofstream(dup) << "# mixpc-table model=x d=1 seed=0\nx1,y\n0,1\n0,1\n";
  EXPECT_THROW(bench::load_table(dup), IoError);

  auto dup_ok = (dir / "dup_ok.csv").string();
  std::ofstream(dup_ok) << "# mixpc-table model=x d=1 seed=0 duplicates=1\nx1,y\n0,1\n0,1\n";
  EXPECT_EQ(bench::load_table(dup_ok).points.rows(), 2);
}

TEST(SampleTable, FeedsOfflineCandidatePool) {
  BlackBoxModel m = bench::get_model("tiny2");
  bench::SampleTable table = bench::make_table(m, 200, 23);
  auto basis = m.basis(2);
  CandidatePool pool = CandidatePool::from_table(table.points, *basis, table.outputs);
  EXPECT_EQ(pool.size(), 200);
  EXPECT_EQ(pool.evaluations(), 0);  // offline outputs are free
  EXPECT_EQ(pool.output(7), table.outputs[7]);
}

TEST(SmokeFit, PlantedModelFitsToSmallTestingError) {
  BlackBoxModel m = bench::get_model("poly-planted-10d");
  auto basis = m.basis(m.recommended_order());
  Eigen::MatrixXd pts = m.mixture().sample(600, uint64_t{71});
  CandidatePool pool = CandidatePool::from_model(
      pts, *basis, [&m](const Eigen::VectorXd& xi) { return m.evaluate(xi); });

  SolverConfig cfg;
  cfg.s_max = 15;
  cfg.initial_samples = 40;
  SparseFit fit = adaptive_fit(pool, *basis, cfg);

  Eigen::MatrixXd test_pts = m.mixture().sample(2000, uint64_t{72});
  Eigen::VectorXd y = m.evaluate_batch(test_pts);
  double err = relative_error(basis->evaluate_batch(test_pts), fit.coeffs, y);
  EXPECT_LT(err, 0.1);
  EXPECT_LT(err, 1e-6);  // planted models are exactly representable
}
