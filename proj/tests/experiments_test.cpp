/**
 * Copyright 2026 the ldc authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/**
 * @file experiments_test.cpp
 * @brief Smoke and determinism tests for the packaged simulation
 *        experiments and their file outputs.
 */

#include "ldc/experiments.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.hpp"

namespace {

using ldc::ConfigError;
using ldc::DimensionError;
using ldc::Matrix;
using ldc::RunConfig;
using ldc::Vector;
using ldc_test::TempDir;

/** Reads a file as raw bytes; registers a failure when it is missing. */
std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) {
    ADD_FAILURE() << "cannot open " << path;
    return "";
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

RunConfig config_from(const std::string& text) {
  return RunConfig::parse_string(text, "test");
}

TEST(CanonicalRdm, PiecewiseValuesAndValidation) {
  const double sigma = 0.2;
  Matrix dm = ldc::canonical_rdm(5, sigma);
  ASSERT_EQ(dm.rows(), 5);
  ASSERT_EQ(dm.cols(), 5);
  EXPECT_TRUE(dm.isApprox(dm.transpose(), 0.0));
  EXPECT_TRUE(dm.diagonal().isZero(0.0));

  // Pair order (0,1), (0,2), (0,3), (0,4), (1,2), (1,3), (1,4), rest.
  Vector v = ldc::squareform_to_vector(dm);
  ASSERT_EQ(v.size(), 10);
  EXPECT_DOUBLE_EQ(v(0), 1.5 * sigma);
  for (int j = 1; j <= 3; ++j) EXPECT_DOUBLE_EQ(v(j), 1.0 * sigma);
  for (int j = 4; j <= 6; ++j) EXPECT_DOUBLE_EQ(v(j), 0.5 * sigma);
  for (int j = 7; j <= 9; ++j) EXPECT_DOUBLE_EQ(v(j), 0.0);

  // The smallest supported layout keeps the same three tiers.
  Vector v3 = ldc::squareform_to_vector(ldc::canonical_rdm(3, 1.0));
  EXPECT_DOUBLE_EQ(v3(0), 1.5);
  EXPECT_DOUBLE_EQ(v3(1), 1.0);
  EXPECT_DOUBLE_EQ(v3(2), 0.5);

  EXPECT_THROW(ldc::canonical_rdm(2, 1.0), DimensionError);
  EXPECT_THROW(ldc::canonical_rdm(5, -0.1), ConfigError);
}

TEST(Fig1, MeansTrackTargetDistances) {
  RunConfig cfg = config_from("replications = 400\np = 25\n");
  ldc::Fig1Result result = ldc::run_fig1(cfg, 101, "");

  ASSERT_EQ(result.true_d.size(), 3);
  EXPECT_DOUBLE_EQ(result.true_d(0), 2.6);
  EXPECT_DOUBLE_EQ(result.true_d(1), 1.4);
  EXPECT_DOUBLE_EQ(result.true_d(2), 1.0);
  ASSERT_EQ(result.samples.rows(), 400);
  ASSERT_EQ(result.samples.cols(), 3);
  ASSERT_EQ(result.mc_mean.size(), 3);
  ASSERT_EQ(result.mc_se.size(), 3);

  for (int j = 0; j < 3; ++j) {
    EXPECT_GT(result.mc_se(j), 0.0);
    EXPECT_LE(std::abs(result.mc_mean(j) - result.true_d(j)),
              5.0 * result.mc_se(j))
        << "pair " << j;
  }
}

TEST(Fig1, CustomDistancesAndValidation) {
  RunConfig cfg = config_from(
      "k = 4\nm = 2\np = 12\nreplications = 50\n"
      "distances = 2.0, 1.5, 1.0, 0.8, 0.5, 0.4\n");
  ldc::Fig1Result result = ldc::run_fig1(cfg, 7, "");
  ASSERT_EQ(result.true_d.size(), 6);
  EXPECT_DOUBLE_EQ(result.true_d(0), 2.0);
  EXPECT_DOUBLE_EQ(result.true_d(5), 0.4);
  EXPECT_EQ(result.samples.rows(), 50);

  // Built-in distances exist only for the three-condition layout.
  EXPECT_THROW(ldc::run_fig1(config_from("k = 4\n"), 7, ""), ConfigError);
  // A custom list must cover every pair.
  EXPECT_THROW(
      ldc::run_fig1(config_from("k = 4\ndistances = 1.0, 0.5\n"), 7, ""),
      ConfigError);
  EXPECT_THROW(ldc::run_fig1(config_from("replications = 1\n"), 7, ""),
               ConfigError);
}

TEST(Fig1, OutputsAreDeterministicAcrossReruns) {
  RunConfig cfg = config_from("replications = 60\np = 10\n");
  TempDir dir_a("fig1_a");
  TempDir dir_b("fig1_b");
  ldc::Fig1Result result = ldc::run_fig1(cfg, 21, dir_a.path().string());
  ldc::run_fig1(cfg, 21, dir_b.path().string());

  for (const char* name :
       {"fig1_samples.ldcm", "fig1_table.ldcm", "fig1_summary.txt"}) {
    const std::string bytes_a = read_bytes(dir_a.file(name));
    const std::string bytes_b = read_bytes(dir_b.file(name));
    EXPECT_FALSE(bytes_a.empty()) << name;
    EXPECT_EQ(bytes_a, bytes_b) << name;
  }

  Matrix table = ldc::read_matrix(dir_a.file("fig1_table.ldcm"));
  ASSERT_EQ(table.rows(), 3);
  ASSERT_EQ(table.cols(), 3);
  EXPECT_TRUE(table.row(0).transpose().isApprox(result.true_d, 0.0));
  EXPECT_TRUE(table.row(1).transpose().isApprox(result.mc_mean, 0.0));
  EXPECT_TRUE(table.row(2).transpose().isApprox(result.mc_se, 0.0));

  Matrix samples = ldc::read_matrix(dir_a.file("fig1_samples.ldcm"));
  EXPECT_TRUE(samples.isApprox(result.samples, 0.0));
}

TEST(Fig2, CellsTrackPredictionsAndQuantiles) {
  RunConfig cfg = config_from(
      "replications = 300\nk = 4\nm = 3\np = 16\nsigma_a = 0.0, 0.2\n");
  TempDir dir("fig2");
  ldc::Fig2Result result = ldc::run_fig2(cfg, 33, dir.path().string());

  EXPECT_EQ(result.replications, 300);
  EXPECT_EQ(result.p, 16);
  ASSERT_EQ(result.cells.size(), 2u);
  EXPECT_DOUBLE_EQ(result.cells[0].sigma_a, 0.0);
  EXPECT_DOUBLE_EQ(result.cells[1].sigma_a, 0.2);

  for (const ldc::Fig2Cell& cell : result.cells) {
    ASSERT_EQ(cell.emp_cov.rows(), 6);
    ASSERT_EQ(cell.emp_cov.cols(), 6);
    ASSERT_EQ(cell.pred_v.rows(), 6);
    ASSERT_EQ(cell.pred_v.cols(), 6);
    EXPECT_TRUE(cell.emp_cov.isApprox(cell.emp_cov.transpose(), 1e-12));
    EXPECT_TRUE(cell.pred_v.isApprox(cell.pred_v.transpose(), 1e-12));
    for (int j = 0; j < 6; ++j) {
      EXPECT_GT(cell.pred_v(j, j), 0.0);
      const double ratio = cell.emp_cov(j, j) / cell.pred_v(j, j);
      EXPECT_GT(ratio, 0.5) << "sigma_a " << cell.sigma_a << " pair " << j;
      EXPECT_LT(ratio, 2.0) << "sigma_a " << cell.sigma_a << " pair " << j;
    }
    // Pooled standardized estimates should sit close to a unit normal.
    EXPECT_GT(cell.ks, 0.0);
    EXPECT_LT(cell.ks, 0.15);
    EXPECT_GT(cell.q99, 1.0);
    EXPECT_LT(cell.q99, 5.0);
    EXPECT_GE(cell.q995, cell.q99);
  }

  Matrix qq = ldc::read_matrix(dir.file("fig2_qq_0.ldcm"));
  ASSERT_EQ(qq.rows(), 512);
  ASSERT_EQ(qq.cols(), 2);
  EXPECT_TRUE(qq.allFinite());
  for (int i = 1; i < qq.rows(); ++i) {
    EXPECT_LT(qq(i - 1, 0), qq(i, 0));
    EXPECT_LE(qq(i - 1, 1), qq(i, 1));
  }

  Matrix emp1 = ldc::read_matrix(dir.file("fig2_emp_cov_1.ldcm"));
  EXPECT_TRUE(emp1.isApprox(result.cells[1].emp_cov, 0.0));
  Matrix pred0 = ldc::read_matrix(dir.file("fig2_pred_v_0.ldcm"));
  EXPECT_TRUE(pred0.isApprox(result.cells[0].pred_v, 0.0));
  EXPECT_FALSE(read_bytes(dir.file("fig2_summary.txt")).empty());
}

TEST(Fig2, ResultsAreDeterministicGivenSeed) {
  RunConfig cfg = config_from(
      "replications = 80\nk = 3\nm = 3\np = 12\nsigma_a = 0.1\n");
  ldc::Fig2Result a = ldc::run_fig2(cfg, 5, "");
  ldc::Fig2Result b = ldc::run_fig2(cfg, 5, "");
  ASSERT_EQ(a.cells.size(), 1u);
  ASSERT_EQ(b.cells.size(), 1u);
  EXPECT_TRUE(a.cells[0].emp_cov.isApprox(b.cells[0].emp_cov, 0.0));
  EXPECT_TRUE(a.cells[0].pred_v.isApprox(b.cells[0].pred_v, 0.0));
  EXPECT_EQ(a.cells[0].ks, b.cells[0].ks);
  EXPECT_EQ(a.cells[0].q99, b.cells[0].q99);
  EXPECT_EQ(a.cells[0].q995, b.cells[0].q995);

  ldc::Fig2Result c = ldc::run_fig2(cfg, 6, "");
  EXPECT_FALSE(a.cells[0].emp_cov.isApprox(c.cells[0].emp_cov, 0.0));
}

TEST(Fig3, ResidualTraceRaisesPredictionsAboveNaive) {
  RunConfig cfg = config_from(
      "replications = 25\nk = 3\nm = 2\nt = 56\ndt = 2.0\n"
      "radius_mm = 3.0\nvoxel_mm = 2.0\nh = 0.5\ns_eps = 3.0\n");
  TempDir dir("fig3");
  ldc::Fig3Result result = ldc::run_fig3(cfg, 44, dir.path().string());

  EXPECT_EQ(result.replications, 25);
  EXPECT_EQ(result.p, 19);  // radius 3 mm on a 2 mm lattice: 1 + 6 + 12
  ASSERT_EQ(result.cells.size(), 1u);
  const ldc::Fig3Cell& cell = result.cells[0];
  EXPECT_DOUBLE_EQ(cell.h, 0.5);
  EXPECT_DOUBLE_EQ(cell.s_eps, 3.0);
  ASSERT_EQ(cell.emp_var.size(), 3);
  ASSERT_EQ(cell.pred_var.size(), 3);
  ASSERT_EQ(cell.naive_var.size(), 3);
  for (int j = 0; j < 3; ++j) {
    EXPECT_GT(cell.emp_var(j), 0.0);
    EXPECT_GT(cell.pred_var(j), 0.0);
    EXPECT_GT(cell.naive_var(j), 0.0);
    // Correlated channels push the residual trace above the channel count,
    // so the independence assumption must shrink every prediction.
    EXPECT_LT(cell.naive_var(j), cell.pred_var(j));
  }
  EXPECT_LT(cell.naive_ratio_mean, cell.ratio_mean);
  EXPECT_GT(cell.ratio_mean, 0.25);
  EXPECT_LT(cell.ratio_mean, 4.0);

  Matrix table = ldc::read_matrix(dir.file("fig3_table.ldcm"));
  ASSERT_EQ(table.rows(), 1);
  ASSERT_EQ(table.cols(), 4);
  EXPECT_EQ(table(0, 0), cell.h);
  EXPECT_EQ(table(0, 1), cell.s_eps);
  EXPECT_EQ(table(0, 2), cell.ratio_mean);
  EXPECT_EQ(table(0, 3), cell.naive_ratio_mean);

  Matrix vars = ldc::read_matrix(dir.file("fig3_vars_0.ldcm"));
  ASSERT_EQ(vars.rows(), 3);
  ASSERT_EQ(vars.cols(), 3);
  EXPECT_TRUE(vars.row(0).transpose().isApprox(cell.emp_var, 0.0));
  EXPECT_TRUE(vars.row(1).transpose().isApprox(cell.pred_var, 0.0));
  EXPECT_TRUE(vars.row(2).transpose().isApprox(cell.naive_var, 0.0));
  EXPECT_FALSE(read_bytes(dir.file("fig3_summary.txt")).empty());
}

TEST(Fpr, EachPairPoolsEveryDistance) {
  RunConfig cfg = config_from("replications = 400\nk = 4\nm = 3\np = 40\n");
  TempDir dir("fpr_pairs");
  ldc::FprResult result = ldc::run_fpr(cfg, 55, dir.path().string());

  EXPECT_EQ(result.mode, "each_pair");
  EXPECT_EQ(result.tests, 400 * 6);
  EXPECT_GT(result.rate_05, 0.01);
  EXPECT_LT(result.rate_05, 0.10);
  EXPECT_LE(result.rate_01, result.rate_05);
  EXPECT_LT(result.rate_01, 0.04);
  EXPECT_EQ(result.rate_zero, 0.0);
  EXPECT_EQ(result.rate_equalized, 0.0);

  Matrix rates = ldc::read_matrix(dir.file("fpr_rates.ldcm"));
  ASSERT_EQ(rates.rows(), 1);
  ASSERT_EQ(rates.cols(), 2);
  EXPECT_EQ(rates(0, 0), result.rate_05);
  EXPECT_EQ(rates(0, 1), result.rate_01);
}

TEST(Fpr, DifferenceModeComparesNulls) {
  RunConfig cfg = config_from(
      "mode = difference\nreplications = 300\nk = 5\nm = 3\np = 30\n"
      "d_all = 0.2\nsigma_k = 0.5\n"
      "pair_a_first = 0\npair_a_second = 4\n"
      "pair_b_first = 0\npair_b_second = 1\n");
  ldc::FprResult a = ldc::run_fpr(cfg, 66, "");

  EXPECT_EQ(a.mode, "difference");
  EXPECT_EQ(a.tests, 300);
  EXPECT_EQ(a.rate_05, 0.0);
  EXPECT_EQ(a.rate_01, 0.0);
  EXPECT_GE(a.rate_zero, 0.0);
  EXPECT_LE(a.rate_zero, 1.0);
  EXPECT_GE(a.rate_equalized, 0.0);
  EXPECT_LE(a.rate_equalized, 1.0);

  ldc::FprResult b = ldc::run_fpr(cfg, 66, "");
  EXPECT_EQ(a.rate_zero, b.rate_zero);
  EXPECT_EQ(a.rate_equalized, b.rate_equalized);
}

TEST(Fpr, RejectsBadModeAndPairs) {
  EXPECT_THROW(ldc::run_fpr(config_from("mode = sometimes\n"), 1, ""),
               ConfigError);
  EXPECT_THROW(ldc::run_fpr(config_from("sigma_k = 0.0\n"), 1, ""),
               ConfigError);
  // The two tested pairs must name different distances.
  EXPECT_THROW(
      ldc::run_fpr(config_from("mode = difference\nk = 5\n"
                               "pair_a_first = 0\npair_a_second = 1\n"
                               "pair_b_first = 0\npair_b_second = 1\n"),
                   1, ""),
      ConfigError);
  // Pair members must index existing conditions.
  EXPECT_THROW(
      ldc::run_fpr(config_from("mode = difference\nk = 5\n"
                               "pair_b_first = 0\npair_b_second = 7\n"),
                   1, ""),
      DimensionError);
}

TEST(ModelSel, StrongSignalFavorsMagnitudeSensitiveScores) {
  RunConfig cfg = config_from(
      "replications = 30\nk = 4\nm = 4\np = 24\nsignals = 0.0, 8.0\n");
  TempDir dir("modelsel");
  ldc::ModelSelResult result = ldc::run_modelsel(cfg, 77, dir.path().string());

  EXPECT_EQ(result.replications, 30);
  ASSERT_EQ(result.signals.size(), 2u);
  EXPECT_DOUBLE_EQ(result.signals[0], 0.0);
  EXPECT_DOUBLE_EQ(result.signals[1], 8.0);
  ASSERT_EQ(result.accuracy.rows(), 2);
  ASSERT_EQ(result.accuracy.cols(), 3);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 3; ++j) {
      EXPECT_GE(result.accuracy(i, j), 0.0);
      EXPECT_LE(result.accuracy(i, j), 1.0);
    }
  }

  // Without signal the winner is independent of the alternating generator.
  for (int j = 0; j < 3; ++j) {
    EXPECT_GE(result.accuracy(0, j), 0.15) << "method " << j;
    EXPECT_LE(result.accuracy(0, j), 0.85) << "method " << j;
  }
  // The candidates share a rank order, so only the magnitude-sensitive
  // scores can exploit a strong signal.
  EXPECT_GE(result.accuracy(1, 1), 0.8);  // cosine
  EXPECT_GE(result.accuracy(1, 2), 0.8);  // likelihood

  Matrix accuracy = ldc::read_matrix(dir.file("modelsel_accuracy.ldcm"));
  EXPECT_TRUE(accuracy.isApprox(result.accuracy, 0.0));
  EXPECT_FALSE(read_bytes(dir.file("modelsel_summary.txt")).empty());
}

TEST(RunExperiment, DispatchesCreatesDirectoriesAndValidates) {
  RunConfig cfg = config_from("replications = 5\np = 6\n");
  TempDir base("dispatch");
  const std::string nested = (base.path() / "nested" / "out").string();
  ldc::run_experiment("fig1", cfg, 3, nested);
  EXPECT_TRUE(std::filesystem::exists(
      std::filesystem::path(nested) / "fig1_table.ldcm"));
  EXPECT_TRUE(std::filesystem::exists(
      std::filesystem::path(nested) / "fig1_summary.txt"));

  EXPECT_THROW(ldc::run_experiment("fig9", cfg, 3, ""), ConfigError);
  // Unknown keys are rejected by every experiment's vocabulary check.
  EXPECT_THROW(
      ldc::run_experiment("fig1", config_from("bogus = 1\n"), 3, ""),
      ConfigError);
  EXPECT_THROW(
      ldc::run_experiment("fpr", config_from("radius_mm = 3.0\n"), 3, ""),
      ConfigError);

  // An empty output directory runs the experiment without touching disk.
  ldc::run_experiment("fig1", cfg, 3, "");
}

}  // namespace
