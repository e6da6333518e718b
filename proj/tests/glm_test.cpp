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
 * @file glm_test.cpp
 * @brief Tests for the response function, design construction, temporal
 *        covariance kernels, and generalized least squares.
 */

#include "ldc/glm.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ldc/rng.hpp"

namespace {

using ldc::Event;
using ldc::Matrix;
using ldc::Vector;

TEST(Hrf, PeakNormalizedNearSixSeconds) {
  const double dt_fine = 0.125;
  const auto h = ldc::sample_hrf(dt_fine);
  EXPECT_EQ(h.size(), 257u);  // floor(32 / 0.125) + 1 samples
  EXPECT_DOUBLE_EQ(h[0], 0.0);

  double peak = 0.0;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i] > peak) {
      peak = h[i];
      arg = i;
    }
  }
  EXPECT_DOUBLE_EQ(peak, 1.0);
  const double peak_time = static_cast<double>(arg) * dt_fine;
  EXPECT_GT(peak_time, 5.0);
  EXPECT_LT(peak_time, 7.0);

  // Undershoot: negative lobe around 16 s.
  EXPECT_LT(h[static_cast<std::size_t>(16.0 / dt_fine)], 0.0);
  EXPECT_THROW(ldc::sample_hrf(0.0), ldc::ConfigError);
}

TEST(Hrf, GammaLobesPlaceModes) {
  // With unit scale the positive lobe alone peaks exactly at shape - 1 = 6 s.
  ldc::HrfParams params;
  params.undershoot_ratio = 0.0;
  const double dt_fine = 0.5;
  const auto h = ldc::sample_hrf(dt_fine, params);
  std::size_t arg = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i] > h[arg]) arg = i;
  }
  EXPECT_DOUBLE_EQ(static_cast<double>(arg) * dt_fine, 6.0);
}

std::vector<std::vector<Event>> one_condition(double onset, double duration) {
  return {{Event{onset, duration}}};
}

TEST(BuildDesign, InterceptAndShapes) {
  const auto h = ldc::sample_hrf(2.0 / 16.0);
  const Matrix x = ldc::build_design(one_condition(4.0, 8.0), 30, 2.0, h);
  EXPECT_EQ(x.rows(), 30);
  EXPECT_EQ(x.cols(), 2);
  EXPECT_TRUE(x.col(1).isConstant(1.0));
  // Response is causal: nothing before the onset sample.
  EXPECT_DOUBLE_EQ(x(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(x(1, 0), 0.0);
  // Response rises after onset and peaks in a plausible window.
  Eigen::Index arg = 0;
  x.col(0).maxCoeff(&arg);
  const double peak_time = static_cast<double>(arg) * 2.0;
  EXPECT_GE(peak_time, 8.0);
  EXPECT_LE(peak_time, 18.0);
}

TEST(BuildDesign, EventsSuperpose) {
  const auto h = ldc::sample_hrf(2.0 / 16.0);
  const Matrix a = ldc::build_design(one_condition(4.0, 8.0), 40, 2.0, h);
  const Matrix b = ldc::build_design(one_condition(20.0, 8.0), 40, 2.0, h);
  const Matrix both = ldc::build_design(
      {{Event{4.0, 8.0}, Event{20.0, 8.0}}}, 40, 2.0, h);
  EXPECT_TRUE(
      both.col(0).isApprox(a.col(0) + b.col(0), 1e-12));
}

TEST(BuildDesign, WholeSampleShiftTranslatesResponse) {
  const auto h = ldc::sample_hrf(2.0 / 16.0);
  const Matrix a = ldc::build_design(one_condition(4.0, 8.0), 40, 2.0, h);
  const Matrix b = ldc::build_design(one_condition(6.0, 8.0), 40, 2.0, h);
  EXPECT_TRUE(b.col(0).segment(1, 38).isApprox(a.col(0).segment(0, 38), 1e-12));
}

TEST(BuildDesign, RejectsBadEventsAndRankDeficiency) {
  const auto h = ldc::sample_hrf(2.0 / 16.0);
  EXPECT_THROW(ldc::build_design(one_condition(-1.0, 8.0), 30, 2.0, h),
               ldc::ConfigError);
  EXPECT_THROW(ldc::build_design(one_condition(60.0, 8.0), 30, 2.0, h),
               ldc::ConfigError);
  EXPECT_THROW(ldc::build_design({{Event{4.0, -2.0}}}, 30, 2.0, h),
               ldc::ConfigError);
  // Two conditions with identical events produce collinear columns.
  EXPECT_THROW(ldc::build_design({{Event{4.0, 8.0}}, {Event{4.0, 8.0}}}, 30,
                                 2.0, h),
               ldc::NumericalError);
  // A condition with no events gives an all-zero column.
  EXPECT_THROW(ldc::build_design({{Event{4.0, 8.0}}, {}}, 30, 2.0, h),
               ldc::NumericalError);
}

TEST(TemporalCov, DoubleExponentialMatchesFormula) {
  const Matrix s = ldc::TemporalCov::double_exponential().build(5);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      const double tau = std::abs(i - j);
      const double expected =
          0.5 * std::exp(-tau) + 0.5 * std::exp(-tau / 40.0);
      EXPECT_NEAR(s(i, j), expected, 1e-15);
    }
  }
  EXPECT_DOUBLE_EQ(s(0, 0), 1.0);
}

TEST(TemporalCov, IdentityAndExplicit) {
  EXPECT_TRUE(ldc::TemporalCov::identity().build(4).isIdentity(1e-15));
  Matrix m = Matrix::Identity(3, 3) * 2.0;
  EXPECT_TRUE(ldc::TemporalCov::explicit_matrix(m).build(3).isApprox(m));
  Matrix bad(2, 2);
  bad << 1, 0.5,  //
      0.2, 1;
  EXPECT_THROW(ldc::TemporalCov::explicit_matrix(bad), ldc::NumericalError);
  EXPECT_THROW(ldc::TemporalCov::explicit_matrix(m).build(4),
               ldc::DimensionError);
  EXPECT_THROW(ldc::TemporalCov::double_exponential(-1.0, 40.0),
               ldc::ConfigError);
}

TEST(GlsFit, IdentityCovarianceReducesToLeastSquares) {
  ldc::Rng rng(5);
  const int t = 24;
  Matrix x(t, 3);
  for (int i = 0; i < t; ++i) {
    x(i, 0) = rng.gaussian();
    x(i, 1) = rng.gaussian();
    x(i, 2) = 1.0;
  }
  Matrix y(t, 2);
  for (int i = 0; i < t; ++i) {
    y(i, 0) = rng.gaussian();
    y(i, 1) = rng.gaussian();
  }
  const auto fit = ldc::gls_fit(y, x, Matrix::Identity(t, t));
  const Matrix ols =
      (x.transpose() * x).ldlt().solve(x.transpose() * y);
  EXPECT_TRUE(fit.betas.isApprox(ols, 1e-10));
  EXPECT_EQ(fit.dof, t - 3);
  EXPECT_TRUE(fit.residuals.isApprox(y - x * fit.betas, 1e-12));
  // Residuals are orthogonal to the design columns under identity noise.
  EXPECT_LT((x.transpose() * fit.residuals).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(GlsFit, MatchesManuallyWhitenedSolution) {
  ldc::Rng rng(6);
  const int t = 30;
  Matrix x(t, 2);
  Matrix y(t, 3);
  for (int i = 0; i < t; ++i) {
    x(i, 0) = rng.gaussian();
    x(i, 1) = 1.0;
    for (int j = 0; j < 3; ++j) y(i, j) = rng.gaussian();
  }
  const Matrix sigma = ldc::TemporalCov::double_exponential().build(t);
  const auto fit = ldc::gls_fit(y, x, sigma);

  const Matrix sigma_inv = sigma.inverse();
  const Matrix expected = (x.transpose() * sigma_inv * x)
                              .ldlt()
                              .solve(x.transpose() * sigma_inv * y);
  EXPECT_TRUE(fit.betas.isApprox(expected, 1e-9));
  EXPECT_TRUE(fit.condition_estimates(1).isApprox(fit.betas.topRows(1)));
}

TEST(GlsFit, ExactRecoveryWithoutNoise) {
  const auto h = ldc::sample_hrf(2.0 / 16.0);
  const Matrix x = ldc::build_design(
      {{Event{4.0, 8.0}}, {Event{24.0, 8.0}}}, 30, 2.0, h);
  Matrix betas_true(3, 4);
  betas_true << 1, 2, 3, 4,  //
      -1, 0.5, 2, -2,        //
      0.1, 0.1, 0.1, 0.1;
  const Matrix y = x * betas_true;
  const auto fit =
      ldc::gls_fit(y, x, ldc::TemporalCov::double_exponential().build(30));
  EXPECT_TRUE(fit.betas.isApprox(betas_true, 1e-9));
  EXPECT_LT(fit.residuals.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(GlsFit, RejectsRankDeficientDesign) {
  Matrix x(4, 2);
  x << 1, 2,  //
      2, 4,   //
      3, 6,   //
      4, 8;
  EXPECT_THROW(ldc::gls_fit(Matrix::Zero(4, 1), x, Matrix::Identity(4, 4)),
               ldc::NumericalError);
}

}  // namespace
