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
 * @file test_support.hpp
 * @brief Independent reference implementations ("oracles") used to verify
 *        the library: a long-double erfc, a manual Cholesky likelihood, a
 *        grid+golden-section scale fitter, tie-aware rank correlation, and
 *        small test utilities.  Everything here is written with plain loops
 *        on purpose, duplicating no library code paths.
 */

#ifndef LDC_TESTS_TEST_SUPPORT_HPP
#define LDC_TESTS_TEST_SUPPORT_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "ldc/common.hpp"

namespace ldc_test {

/** Temporary directory under the working directory, removed on scope exit. */
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    const auto stamp =
        std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::path("tmp_" + tag + "_" + std::to_string(stamp));
    std::filesystem::create_directories(path_);
  }

  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }

  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  std::filesystem::path path_;
};

/**
 * Long-double complementary error function: Taylor series of erf for small
 * arguments, Lentz continued fraction for the tail.
 */
inline long double oracle_erfc(long double z) {
  const long double sqrt_pi = 1.77245385090551602729816748334114518L;
  if (z < 0.0L) return 2.0L - oracle_erfc(-z);
  if (z < 3.0L) {
    // erf(z) = 2/sqrt(pi) * sum (-1)^n z^(2n+1) / (n! (2n+1))
    long double sum = 0.0L;
    long double term = z;  // z^(2n+1) / n!
    for (int n = 0; n < 400; ++n) {
      const long double contrib = term / (2 * n + 1);
      sum += (n % 2 == 0) ? contrib : -contrib;
      term *= z * z / (n + 1);
      if (term / (2 * n + 3) < 1e-30L * std::fabs(sum)) break;
    }
    return 1.0L - 2.0L / sqrt_pi * sum;
  }
  if (z > 40.0L) return 0.0L;
  // erfc(z) = exp(-z^2)/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
  // evaluated by the modified Lentz algorithm.
  const long double tiny = 1e-4000L;
  long double f = z;
  long double c = z;
  long double d = 0.0L;
  for (int n = 1; n < 400; ++n) {
    const long double a = n / 2.0L;
    d = z + a * d;
    if (d == 0.0L) d = tiny;
    c = z + a / c;
    if (c == 0.0L) c = tiny;
    d = 1.0L / d;
    const long double ratio = c * d;
    f *= ratio;
    if (std::fabs(ratio - 1.0L) < 1e-25L) break;
  }
  return std::exp(-z * z) / sqrt_pi / f;
}

/** Standard normal CDF from the long-double erfc oracle. */
inline double oracle_normal_cdf(double x) {
  const long double root_half = 0.70710678118654752440084436210484904L;
  return static_cast<double>(0.5L *
                             oracle_erfc(-static_cast<long double>(x) *
                                         root_half));
}

/**
 * Manual in-place lower Cholesky with plain loops.  Returns false when the
 * matrix is not positive definite.  @p a must be square; only the lower
 * triangle of the result is meaningful.
 */
inline bool oracle_cholesky(std::vector<std::vector<double>>* a) {
  const std::size_t n = a->size();
  for (std::size_t j = 0; j < n; ++j) {
    double diag = (*a)[j][j];
    for (std::size_t k = 0; k < j; ++k) diag -= (*a)[j][k] * (*a)[j][k];
    if (diag <= 0.0) return false;
    (*a)[j][j] = std::sqrt(diag);
    for (std::size_t i = j + 1; i < n; ++i) {
      double value = (*a)[i][j];
      for (std::size_t k = 0; k < j; ++k) value -= (*a)[i][k] * (*a)[j][k];
      (*a)[i][j] = value / (*a)[j][j];
    }
  }
  return true;
}

/** Solves L y = b then L' x = y for a manual lower Cholesky factor. */
inline std::vector<double> oracle_cholesky_solve(
    const std::vector<std::vector<double>>& l, std::vector<double> b) {
  const std::size_t n = l.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) b[i] -= l[i][k] * b[k];
    b[i] /= l[i][i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < n; ++k) b[ii] -= l[k][ii] * b[k];
    b[ii] /= l[ii][ii];
  }
  return b;
}

/** Lexicographic condition-pair list, written independently of core.hpp. */
inline std::vector<std::pair<int, int>> oracle_pairs(int k) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) pairs.emplace_back(i, j);
  }
  return pairs;
}

/**
 * Negative log likelihood (up to the constant term) of a distance vector
 * under a scaled model, built entirely with plain loops: the signal matrix
 * from the scaled model distances, the balanced covariance entrywise, a
 * manual Cholesky for the determinant and the quadratic form.  Returns
 * +infinity when the covariance is not positive definite.
 */
inline double oracle_nll(const ldc::Vector& d_hat, const ldc::Vector& model,
                         double s, const ldc::Matrix& xi, double trace_rr,
                         int m, int p) {
  const int d = static_cast<int>(d_hat.size());
  int k = 2;
  while (k * (k - 1) / 2 < d) ++k;
  const auto pairs = oracle_pairs(k);

  // Signal second-moment matrix: delta_ab = contrast_a * G * contrast_b'
  // with G = -1/2 D (up to row/column terms that cancel in differences).
  std::vector<std::vector<double>> dist(static_cast<std::size_t>(k),
                                        std::vector<double>(k, 0.0));
  for (int j = 0; j < d; ++j) {
    const double value = std::max(0.0, s * model(j));
    dist[static_cast<std::size_t>(pairs[static_cast<std::size_t>(j)].first)]
        [static_cast<std::size_t>(pairs[static_cast<std::size_t>(j)].second)] =
            value;
    dist[static_cast<std::size_t>(pairs[static_cast<std::size_t>(j)].second)]
        [static_cast<std::size_t>(pairs[static_cast<std::size_t>(j)].first)] =
            value;
  }
  auto delta_entry = [&](int a, int b) {
    const auto& pa = pairs[static_cast<std::size_t>(a)];
    const auto& pb = pairs[static_cast<std::size_t>(b)];
    // (e_i - e_k)' (-1/2 D) (e_l - e_n) expanded entrywise.
    const double dd =
        dist[static_cast<std::size_t>(pa.first)]
            [static_cast<std::size_t>(pb.first)] -
        dist[static_cast<std::size_t>(pa.first)]
            [static_cast<std::size_t>(pb.second)] -
        dist[static_cast<std::size_t>(pa.second)]
            [static_cast<std::size_t>(pb.first)] +
        dist[static_cast<std::size_t>(pa.second)]
            [static_cast<std::size_t>(pb.second)];
    return -0.5 * dd;
  };

  std::vector<std::vector<double>> v(static_cast<std::size_t>(d),
                                     std::vector<double>(d, 0.0));
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      const double cov =
          (4.0 * delta_entry(a, b) * xi(a, b) / m +
           2.0 * xi(a, b) * xi(a, b) / (static_cast<double>(m) * (m - 1))) *
          trace_rr / (static_cast<double>(p) * p);
      v[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = cov;
    }
  }
  if (!oracle_cholesky(&v)) return std::numeric_limits<double>::infinity();

  double logdet = 0.0;
  for (int a = 0; a < d; ++a) {
    logdet +=
        2.0 * std::log(v[static_cast<std::size_t>(a)][static_cast<std::size_t>(a)]);
  }
  std::vector<double> r(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) r[static_cast<std::size_t>(a)] = d_hat(a) - s * model(a);
  const std::vector<double> solved = oracle_cholesky_solve(v, r);
  double quad = 0.0;
  for (int a = 0; a < d; ++a) quad += r[static_cast<std::size_t>(a)] * solved[static_cast<std::size_t>(a)];
  return 0.5 * logdet + 0.5 * quad;
}

/**
 * Reference maximum-likelihood scale: 200-point grid over
 * [0, max(1e-3, 4|m'd|/(m'm))], then 80 golden-section iterations on the
 * bracket around the grid argmin.
 */
inline double oracle_fit_scale(const ldc::Vector& d_hat,
                               const ldc::Vector& model, const ldc::Matrix& xi,
                               double trace_rr, int m, int p) {
  auto nll = [&](double s) {
    return oracle_nll(d_hat, model, s, xi, trace_rr, m, p);
  };
  const double s_hi =
      std::max(1e-3, 4.0 * std::abs(model.dot(d_hat)) / model.dot(model));
  const int n_grid = 200;
  int best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  std::vector<double> grid(n_grid);
  for (int i = 0; i < n_grid; ++i) {
    grid[static_cast<std::size_t>(i)] = s_hi * i / (n_grid - 1);
    const double value = nll(grid[static_cast<std::size_t>(i)]);
    if (value < best_value) {
      best_value = value;
      best = i;
    }
  }
  double a = grid[static_cast<std::size_t>(std::max(0, best - 1))];
  double b = grid[static_cast<std::size_t>(std::min(n_grid - 1, best + 1))];
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c1 = b - phi * (b - a);
  double c2 = a + phi * (b - a);
  double f1 = nll(c1);
  double f2 = nll(c2);
  for (int it = 0; it < 80; ++it) {
    if (f1 < f2) {
      b = c2;
      c2 = c1;
      f2 = f1;
      c1 = b - phi * (b - a);
      f1 = nll(c1);
    } else {
      a = c1;
      c1 = c2;
      f1 = f2;
      c2 = a + phi * (b - a);
      f2 = nll(c2);
    }
  }
  return 0.5 * (a + b);
}

/** Tie-aware average ranks (1-based), via stable sort of indices. */
inline std::vector<double> oracle_average_ranks(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

/** Rank correlation from the oracle ranks. */
inline double oracle_spearman(const std::vector<double>& a,
                              const std::vector<double>& b) {
  const std::vector<double> ra = oracle_average_ranks(a);
  const std::vector<double> rb = oracle_average_ranks(b);
  const std::size_t n = a.size();
  double mean_a = 0.0;
  double mean_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_a += ra[i];
    mean_b += rb[i];
  }
  mean_a /= static_cast<double>(n);
  mean_b /= static_cast<double>(n);
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dot += (ra[i] - mean_a) * (rb[i] - mean_b);
    na += (ra[i] - mean_a) * (ra[i] - mean_a);
    nb += (rb[i] - mean_b) * (rb[i] - mean_b);
  }
  return dot / std::sqrt(na * nb);
}

/** Kolmogorov-Smirnov distance of a sample to the standard normal. */
inline double oracle_ks_to_normal(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  double ks = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double cdf = oracle_normal_cdf(samples[i]);
    ks = std::max(ks, std::abs((i + 1.0) / static_cast<double>(n) - cdf));
    ks = std::max(ks, std::abs(cdf - static_cast<double>(i) / static_cast<double>(n)));
  }
  return ks;
}

/** Brute-force count of lattice points within a sphere. */
inline int oracle_lattice_count(double radius, double voxel) {
  const int n = static_cast<int>(std::ceil(radius / voxel)) + 1;
  int count = 0;
  for (int x = -n; x <= n; ++x) {
    for (int y = -n; y <= n; ++y) {
      for (int z = -n; z <= n; ++z) {
        const double d2 =
            (static_cast<double>(x) * x + static_cast<double>(y) * y +
             static_cast<double>(z) * z) *
            voxel * voxel;
        if (d2 <= radius * radius) ++count;
      }
    }
  }
  return count;
}

}  // namespace ldc_test

#endif  // LDC_TESTS_TEST_SUPPORT_HPP
