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
 * @file experiments.hpp
 * @brief Canned Monte-Carlo experiments validating the analytical sampling
 *        distribution: estimator bias, covariance prediction, normality,
 *        spatial-correlation correction, false-positive rates, and model
 *        selection accuracy.  Every experiment is deterministic given a
 *        seed and writes its tables through the matrix/text file formats.
 */

#ifndef LDC_EXPERIMENTS_HPP
#define LDC_EXPERIMENTS_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ldc/common.hpp"
#include "ldc/core.hpp"
#include "ldc/distances.hpp"
#include "ldc/glm.hpp"
#include "ldc/inference.hpp"
#include "ldc/io.hpp"
#include "ldc/model_eval.hpp"
#include "ldc/prewhiten.hpp"
#include "ldc/rng.hpp"
#include "ldc/simulate.hpp"
#include "ldc/variance.hpp"

namespace ldc {

/**
 * Structured distance matrix family used by the covariance and normality
 * experiments: conditions 1 and 2 are separated by 1.5 * sigma_a, condition
 * 1 sits at 1.0 * sigma_a from the remaining conditions, condition 2 at
 * 0.5 * sigma_a, and the remaining conditions coincide.
 */
inline Matrix canonical_rdm(int k, double sigma_a) {
  require_dims(k >= 3, "canonical_rdm: need at least 3 conditions");
  require_config(sigma_a >= 0.0, "canonical_rdm: negative scale");
  Matrix dm = Matrix::Zero(k, k);
  auto set = [&](int i, int j, double v) {
    dm(i, j) = v;
    dm(j, i) = v;
  };
  set(0, 1, 1.5 * sigma_a);
  for (int j = 2; j < k; ++j) {
    set(0, j, 1.0 * sigma_a);
    set(1, j, 0.5 * sigma_a);
  }
  return dm;
}

namespace detail {

/** Standard normal quantile by bisection on the CDF. */
inline double normal_quantile(double prob) {
  require_config(prob > 0.0 && prob < 1.0,
                 "normal_quantile: probability must lie in (0, 1)");
  double lo = -40.0;
  double hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (normal_cdf(mid) < prob) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/** Kolmogorov-Smirnov distance of sorted samples to the standard normal. */
inline double ks_to_normal(const std::vector<double>& sorted) {
  const std::size_t n = sorted.size();
  require_dims(n > 0, "ks_to_normal: no samples");
  double ks = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double cdf = normal_cdf(sorted[i]);
    const double hi = static_cast<double>(i + 1) / static_cast<double>(n);
    const double lo = static_cast<double>(i) / static_cast<double>(n);
    ks = std::max({ks, std::abs(hi - cdf), std::abs(cdf - lo)});
  }
  return ks;
}

/** Empirical quantile of sorted samples (lower order statistic). */
inline double sorted_quantile(const std::vector<double>& sorted,
                              double level) {
  const std::size_t n = sorted.size();
  std::size_t idx = static_cast<std::size_t>(
      std::ceil(level * static_cast<double>(n)));
  if (idx == 0) idx = 1;
  if (idx > n) idx = n;
  return sorted[idx - 1];
}

/** Running mean/covariance accumulator over distance vectors. */
class MomentAccumulator {
 public:
  explicit MomentAccumulator(int d)
      : n_(0), sum_(Vector::Zero(d)), cross_(Matrix::Zero(d, d)) {}

  void add(const Vector& x) {
    ++n_;
    sum_ += x;
    cross_.noalias() += x * x.transpose();
  }

  long long count() const { return n_; }

  Vector mean() const { return sum_ / static_cast<double>(n_); }

  Matrix covariance() const {
    require_dims(n_ >= 2, "MomentAccumulator: need at least 2 samples");
    Vector mu = mean();
    return (cross_ - static_cast<double>(n_) * mu * mu.transpose()) /
           static_cast<double>(n_ - 1);
  }

 private:
  long long n_;
  Vector sum_;
  Matrix cross_;
};

inline std::filesystem::path out_path(const std::string& out_dir,
                                      const std::string& name) {
  return std::filesystem::path(out_dir) / name;
}

/** Deterministic shuffled condition orders (each condition twice). */
inline std::vector<std::vector<int>> event_orders(int k, int m,
                                                  std::uint64_t seed) {
  std::vector<std::vector<int>> orders;
  Rng rng = Rng::for_replication(seed, 0x6f72646572ULL);  // dedicated stream
  for (int run = 0; run < m; ++run) {
    std::vector<int> order;
    for (int c = 0; c < k; ++c) {
      order.push_back(c);
      order.push_back(c);
    }
    // Fisher-Yates with the shared deterministic stream.
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(
          rng.next_u64() % static_cast<std::uint64_t>(i + 1));
      std::swap(order[i], order[j]);
    }
    orders.push_back(std::move(order));
  }
  return orders;
}

}  // namespace detail

/** Estimator-bias experiment: mean of d_hat against the true distances. */
struct Fig1Result {
  Vector true_d;    ///< target distances
  Vector mc_mean;   ///< Monte-Carlo mean of the estimates
  Vector mc_se;     ///< standard error of that mean
  Matrix samples;   ///< replications x D estimate samples
};

/**
 * Unbiasedness check: K conditions with a fixed target distance vector,
 * iid unit partition noise, independent channels.  Emits the raw samples,
 * a (true / mean / se) table, and a text summary.
 */
inline Fig1Result run_fig1(const RunConfig& cfg, std::uint64_t seed,
                           const std::string& out_dir) {
  cfg.validate_keys({"replications", "k", "m", "p", "distances"});
  const int k = static_cast<int>(cfg.get_int_or("k", 3));
  const int m = static_cast<int>(cfg.get_int_or("m", 3));
  const int p = static_cast<int>(cfg.get_int_or("p", 50));
  const long long reps = cfg.get_int_or("replications", 10000);
  require_config(reps >= 2, "fig1: need at least 2 replications");
  Dimensions{k, p, m}.validate();

  Vector true_d(pair_count(k));
  if (cfg.has("distances")) {
    std::vector<double> values = cfg.get_double_list("distances");
    require_config(static_cast<int>(values.size()) == true_d.size(),
                   "fig1: distances list length must be K*(K-1)/2");
    for (int i = 0; i < true_d.size(); ++i)
      true_d(i) = values[static_cast<std::size_t>(i)];
  } else {
    require_config(k == 3, "fig1: default distances need k = 3");
    true_d << 2.6, 1.4, 1.0;
  }

  Rng setup_rng(seed);
  Matrix u_true = patterns_from_rdm(squareform(true_d), p, setup_rng);

  Fig1Result result;
  result.true_d = true_d;
  result.samples = Matrix(reps, true_d.size());
  for (long long r = 0; r < reps; ++r) {
    Rng rng = Rng::for_replication(seed, static_cast<std::uint64_t>(r));
    std::vector<Matrix> u(static_cast<std::size_t>(m));
    for (int run = 0; run < m; ++run) {
      u[static_cast<std::size_t>(run)] =
          u_true + gaussian_matrix(k, p, rng);
    }
    result.samples.row(r) = crossnobis_distances(u).transpose();
  }
  result.mc_mean = result.samples.colwise().mean();
  Vector var(true_d.size());
  for (int j = 0; j < true_d.size(); ++j) {
    Vector centered = result.samples.col(j).array() - result.mc_mean(j);
    var(j) = centered.squaredNorm() / static_cast<double>(reps - 1);
  }
  result.mc_se = (var / static_cast<double>(reps)).cwiseSqrt();

  if (!out_dir.empty()) {
    write_matrix(detail::out_path(out_dir, "fig1_samples.ldcm").string(),
                 result.samples);
    Matrix table(3, true_d.size());
    table.row(0) = result.true_d.transpose();
    table.row(1) = result.mc_mean.transpose();
    table.row(2) = result.mc_se.transpose();
    write_matrix(detail::out_path(out_dir, "fig1_table.ldcm").string(), table);
    std::string summary;
    summary += "experiment = fig1\n";
    summary += "replications = " + std::to_string(reps) + "\n";
    for (int j = 0; j < true_d.size(); ++j) {
      summary += "pair_" + std::to_string(j) +
                 " true = " + format_full(result.true_d(j)) +
                 " mean = " + format_full(result.mc_mean(j)) +
                 " se = " + format_full(result.mc_se(j)) + "\n";
    }
    write_text(detail::out_path(out_dir, "fig1_summary.txt").string(),
               summary);
  }
  return result;
}

/** One signal level of the covariance/normality experiment. */
struct Fig2Cell {
  double sigma_a = 0.0;  ///< signal scale of the distance structure
  Matrix emp_cov;        ///< empirical covariance of the estimates
  Matrix pred_v;         ///< analytical covariance (exact inputs)
  double ks = 0.0;       ///< KS distance of pooled standardized estimates
  double q99 = 0.0;      ///< pooled 99% quantile (standardized)
  double q995 = 0.0;     ///< pooled 99.5% quantile (standardized)
};

/** Covariance-prediction experiment result across signal levels. */
struct Fig2Result {
  std::vector<Fig2Cell> cells;
  long long replications = 0;
  int p = 0;
};

/**
 * Covariance and normality experiment: structured distance matrices at
 * several signal scales, iid unit partition noise, exact analytical
 * covariance (the condition covariance is the identity by construction).
 * Emits per-level empirical and predicted covariance matrices and Q-Q
 * pairs of the pooled standardized estimates.
 */
inline Fig2Result run_fig2(const RunConfig& cfg, std::uint64_t seed,
                           const std::string& out_dir) {
  cfg.validate_keys({"replications", "k", "m", "p", "sigma_a"});
  const int k = static_cast<int>(cfg.get_int_or("k", 5));
  const int m = static_cast<int>(cfg.get_int_or("m", 5));
  const int p = static_cast<int>(cfg.get_int_or("p", 30));
  const long long reps = cfg.get_int_or("replications", 10000);
  require_config(reps >= 2, "fig2: need at least 2 replications");
  Dimensions{k, p, m}.validate();
  std::vector<double> sigma_levels{0.0, 0.05, 0.1, 0.2};
  if (cfg.has("sigma_a")) sigma_levels = cfg.get_double_list("sigma_a");

  const int d = pair_count(k);
  Matrix xi = build_contrast_matrix(k) *
              build_contrast_matrix(k).transpose();  // unit condition cov

  Fig2Result result;
  result.replications = reps;
  result.p = p;
  for (std::size_t level = 0; level < sigma_levels.size(); ++level) {
    const double sigma_a = sigma_levels[level];
    Matrix dm = canonical_rdm(k, sigma_a);
    Vector true_d = squareform_to_vector(dm);
    Matrix delta = delta_from_rdm(dm);
    CovPrediction pred = predict_cov_balanced(
        delta, xi, static_cast<double>(p), m, p);

    Rng setup_rng(seed + static_cast<std::uint64_t>(level));
    Matrix u_true = patterns_from_rdm(dm, p, setup_rng);

    detail::MomentAccumulator acc(d);
    std::vector<double> pooled;
    pooled.reserve(static_cast<std::size_t>(reps) *
                   static_cast<std::size_t>(d));
    Vector pred_sd = pred.v.diagonal().cwiseSqrt();
    for (long long r = 0; r < reps; ++r) {
      Rng rng = Rng::for_replication(
          seed, (static_cast<std::uint64_t>(level) << 40) ^
                    static_cast<std::uint64_t>(r));
      std::vector<Matrix> u(static_cast<std::size_t>(m));
      for (int run = 0; run < m; ++run) {
        u[static_cast<std::size_t>(run)] =
            u_true + gaussian_matrix(k, p, rng);
      }
      Vector d_hat = crossnobis_distances(u);
      acc.add(d_hat);
      for (int j = 0; j < d; ++j) {
        pooled.push_back((d_hat(j) - true_d(j)) / pred_sd(j));
      }
    }
    std::sort(pooled.begin(), pooled.end());

    Fig2Cell cell;
    cell.sigma_a = sigma_a;
    cell.emp_cov = acc.covariance();
    cell.pred_v = pred.v;
    cell.ks = detail::ks_to_normal(pooled);
    cell.q99 = detail::sorted_quantile(pooled, 0.99);
    cell.q995 = detail::sorted_quantile(pooled, 0.995);
    result.cells.push_back(cell);

    if (!out_dir.empty()) {
      const std::string tag = std::to_string(level);
      write_matrix(
          detail::out_path(out_dir, "fig2_emp_cov_" + tag + ".ldcm").string(),
          cell.emp_cov);
      write_matrix(
          detail::out_path(out_dir, "fig2_pred_v_" + tag + ".ldcm").string(),
          cell.pred_v);
      const int n_qq = 512;
      Matrix qq(n_qq, 2);
      for (int i = 0; i < n_qq; ++i) {
        const double level_i = (i + 0.5) / n_qq;
        qq(i, 0) = detail::normal_quantile(level_i);
        qq(i, 1) = detail::sorted_quantile(pooled, level_i);
      }
      write_matrix(detail::out_path(out_dir, "fig2_qq_" + tag + ".ldcm").string(),
                   qq);
    }
  }

  if (!out_dir.empty()) {
    std::string summary;
    summary += "experiment = fig2\n";
    summary += "replications = " + std::to_string(reps) + "\n";
    summary += "p = " + std::to_string(p) + "\n";
    for (std::size_t i = 0; i < result.cells.size(); ++i) {
      const Fig2Cell& cell = result.cells[i];
      summary += "level_" + std::to_string(i) +
                 " sigma_a = " + format_full(cell.sigma_a) +
                 " ks = " + format_full(cell.ks) +
                 " q99 = " + format_full(cell.q99) +
                 " q995 = " + format_full(cell.q995) + "\n";
    }
    write_text(detail::out_path(out_dir, "fig2_summary.txt").string(),
               summary);
  }
  return result;
}

/** One (h, s_eps) cell of the spatial-correlation experiment. */
struct Fig3Cell {
  double h = 0.0;
  double s_eps = 0.0;
  Vector emp_var;          ///< per-pair empirical variance
  Vector pred_var;         ///< per-pair mean predicted variance
  Vector naive_var;        ///< prediction assuming independent channels
  double ratio_mean = 0.0;       ///< mean over pairs of pred/emp
  double naive_ratio_mean = 0.0; ///< mean over pairs of naive/emp
};

/** Spatial-correlation experiment result. */
struct Fig3Result {
  std::vector<Fig3Cell> cells;
  long long replications = 0;
  int p = 0;
};

/**
 * Spatially correlated noise experiment: timeseries runs with the
 * two-component temporal kernel and a squared-exponential spatial kernel
 * on a spherical voxel lattice; estimates prewhitened with the
 * shrinkage-regularized exact channel covariance.  Compares empirical
 * variances against the analytical prediction carrying the residual trace
 * factor, and against the naive prediction that assumes independent
 * channels.
 */
inline Fig3Result run_fig3(const RunConfig& cfg, std::uint64_t seed,
                           const std::string& out_dir) {
  cfg.validate_keys({"replications", "k", "m", "t", "dt", "radius_mm",
                     "voxel_mm", "h", "s_eps"});
  const int k = static_cast<int>(cfg.get_int_or("k", 5));
  const int m = static_cast<int>(cfg.get_int_or("m", 4));
  const int t = static_cast<int>(cfg.get_int_or("t", 84));
  const double dt = cfg.get_double_or("dt", 2.0);
  const double radius = cfg.get_double_or("radius_mm", 5.0);
  const double voxel = cfg.get_double_or("voxel_mm", 2.0);
  const long long reps = cfg.get_int_or("replications", 200);
  require_config(reps >= 2, "fig3: need at least 2 replications");
  std::vector<double> h_levels{0.2, 0.4, 0.6, 1.0};
  if (cfg.has("h")) h_levels = cfg.get_double_list("h");
  std::vector<double> s_levels{3.0};
  if (cfg.has("s_eps")) s_levels = cfg.get_double_list("s_eps");

  RoiGrid grid = build_roi(radius, voxel);
  const int p = grid.p;
  Dimensions{k, p, m}.validate();
  const int d = pair_count(k);

  // Shared design: two events per condition per run, every 16 s, 8.1 s
  // long, in deterministic per-run orders.
  std::vector<double> hrf = sample_hrf(dt / 16.0);
  auto orders = detail::event_orders(k, m, seed);
  std::vector<Matrix> designs;
  for (int run = 0; run < m; ++run) {
    std::vector<std::vector<Event>> events(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < orders[static_cast<std::size_t>(run)].size();
         ++i) {
      const int cond = orders[static_cast<std::size_t>(run)][i];
      events[static_cast<std::size_t>(cond)].push_back(
          Event{4.0 + 16.0 * static_cast<double>(i), 8.1});
    }
    designs.push_back(build_design(events, t, dt, hrf));
  }
  Matrix sigma_t = TemporalCov::double_exponential().build(t);
  Matrix l_t = cholesky_psd(sigma_t);

  // Per-run estimation operator betas = H * Y (precomputed GLS solve).
  std::vector<Matrix> solve_ops;
  {
    Eigen::LLT<Matrix> llt(sigma_t);
    require_numeric(llt.info() == Eigen::Success,
                    "fig3: temporal covariance not positive definite");
    for (const Matrix& x : designs) {
      Matrix xw = llt.matrixL().solve(x);
      Matrix g = xw.transpose() * xw;
      // H = G^-1 X' Sigma_T^-1 : first L^-T xw, then solve G.
      Matrix xs = llt.matrixU().solve(xw);  // Sigma_T^-1 X
      solve_ops.push_back(Eigen::LLT<Matrix>(g).solve(xs.transpose()));
    }
  }

  Fig3Result result;
  result.replications = reps;
  result.p = p;
  std::uint64_t cell_index = 0;
  for (double s_eps : s_levels) {
    Matrix sigma_p = spatial_cov(grid, s_eps);
    Matrix l_s = cholesky_psd(sigma_p);
    for (double h : h_levels) {
      Matrix sigma_reg = shrink_covariance(sigma_p, h);
      Matrix w = inverse_sqrt(sigma_reg);
      ResidualSpatialCov residual = estimate_residual_cov(sigma_p, sigma_reg);

      detail::MomentAccumulator acc(d);
      Vector pred_sum = Vector::Zero(d);
      Matrix delta_zero = Matrix::Zero(d, d);
      for (long long r = 0; r < reps; ++r) {
        Rng rng = Rng::for_replication(
            seed, (cell_index << 44) ^ static_cast<std::uint64_t>(r));
        std::vector<Matrix> u(static_cast<std::size_t>(m));
        for (int run = 0; run < m; ++run) {
          Matrix noise = l_t * gaussian_matrix(t, p, rng) * l_s.transpose();
          Matrix betas = solve_ops[static_cast<std::size_t>(run)] * noise;
          u[static_cast<std::size_t>(run)] = betas.topRows(k) * w;
        }
        Vector d_hat = crossnobis_distances(u);
        acc.add(d_hat);
        Matrix xi_hat = pair_cov_from_condition_cov(estimate_condition_cov(u));
        pred_sum += predict_cov_balanced(delta_zero, xi_hat,
                                         residual.trace_rr, m, p)
                        .v.diagonal();
      }

      Fig3Cell cell;
      cell.h = h;
      cell.s_eps = s_eps;
      cell.emp_var = acc.covariance().diagonal();
      cell.pred_var = pred_sum / static_cast<double>(reps);
      // The naive prediction replaces the residual trace factor by P
      // (independent channels make trace(sigma_r^2) collapse to P).
      cell.naive_var =
          cell.pred_var * (static_cast<double>(p) / residual.trace_rr);
      cell.ratio_mean =
          (cell.pred_var.array() / cell.emp_var.array()).mean();
      cell.naive_ratio_mean =
          (cell.naive_var.array() / cell.emp_var.array()).mean();
      result.cells.push_back(cell);
      ++cell_index;
    }
  }

  if (!out_dir.empty()) {
    Matrix table(static_cast<Eigen::Index>(result.cells.size()), 4);
    std::string summary;
    summary += "experiment = fig3\n";
    summary += "replications = " + std::to_string(reps) + "\n";
    summary += "p = " + std::to_string(p) + "\n";
    for (std::size_t i = 0; i < result.cells.size(); ++i) {
      const Fig3Cell& cell = result.cells[i];
      table(static_cast<Eigen::Index>(i), 0) = cell.h;
      table(static_cast<Eigen::Index>(i), 1) = cell.s_eps;
      table(static_cast<Eigen::Index>(i), 2) = cell.ratio_mean;
      table(static_cast<Eigen::Index>(i), 3) = cell.naive_ratio_mean;
      Matrix vars(3, cell.emp_var.size());
      vars.row(0) = cell.emp_var.transpose();
      vars.row(1) = cell.pred_var.transpose();
      vars.row(2) = cell.naive_var.transpose();
      write_matrix(detail::out_path(out_dir, "fig3_vars_" + std::to_string(i) +
                                                 ".ldcm")
                       .string(),
                   vars);
      summary += "cell_" + std::to_string(i) +
                 " h = " + format_full(cell.h) +
                 " s_eps = " + format_full(cell.s_eps) +
                 " ratio = " + format_full(cell.ratio_mean) +
                 " naive_ratio = " + format_full(cell.naive_ratio_mean) + "\n";
    }
    write_matrix(detail::out_path(out_dir, "fig3_table.ldcm").string(), table);
    write_text(detail::out_path(out_dir, "fig3_summary.txt").string(),
               summary);
  }
  return result;
}

/** False-positive-rate experiment result. */
struct FprResult {
  std::string mode;          ///< "each_pair" or "difference"
  double rate_05 = 0.0;      ///< each_pair: pooled rate at alpha = 0.05
  double rate_01 = 0.0;      ///< each_pair: pooled rate at alpha = 0.01
  double rate_zero = 0.0;       ///< difference: rate under the zero null
  double rate_equalized = 0.0;  ///< difference: rate under the equalized null
  long long tests = 0;       ///< number of tests pooled per rate
};

/**
 * False-positive-rate experiment.  In "each_pair" mode every distance is
 * tested against zero with the zero-distance null covariance; in
 * "difference" mode the difference between two distances is tested under
 * both the zero null and the equalized null.  Signal (if any) is an
 * equal-distance configuration of scale d_all with condition covariance
 * sigma_k * identity.
 */
inline FprResult run_fpr(const RunConfig& cfg, std::uint64_t seed,
                         const std::string& out_dir) {
  cfg.validate_keys({"replications", "k", "m", "p", "d_all", "sigma_k",
                     "mode", "pair_a_first", "pair_a_second", "pair_b_first",
                     "pair_b_second"});
  const int k = static_cast<int>(cfg.get_int_or("k", 10));
  const int m = static_cast<int>(cfg.get_int_or("m", 8));
  const int p = static_cast<int>(cfg.get_int_or("p", 375));
  const long long reps = cfg.get_int_or("replications", 10000);
  require_config(reps >= 1, "fpr: need at least 1 replication");
  const double d_all = cfg.get_double_or("d_all", 0.0);
  const double sigma_k = cfg.get_double_or("sigma_k", 1.0);
  require_config(sigma_k > 0.0, "fpr: sigma_k must be positive");
  const std::string mode = cfg.get_string_or("mode", "each_pair");
  require_config(mode == "each_pair" || mode == "difference",
                 "fpr: mode must be each_pair or difference");
  Dimensions{k, p, m}.validate();
  const int d = pair_count(k);

  Matrix dm = Matrix::Constant(k, k, d_all);
  dm.diagonal().setZero();
  Rng setup_rng(seed);
  Matrix u_true = patterns_from_rdm(dm, p, setup_rng);
  const double noise_sd = std::sqrt(sigma_k);

  const double z05 = detail::normal_quantile(0.95);
  const double z01 = detail::normal_quantile(0.99);

  int pair_a = -1;
  int pair_b = -1;
  if (mode == "difference") {
    const int a1 = static_cast<int>(cfg.get_int_or("pair_a_first", 0));
    const int a2 = static_cast<int>(cfg.get_int_or("pair_a_second", 4));
    const int b1 = static_cast<int>(cfg.get_int_or("pair_b_first", 0));
    const int b2 = static_cast<int>(cfg.get_int_or("pair_b_second", 1));
    pair_a = pair_position(a1, a2, k);
    pair_b = pair_position(b1, b2, k);
    require_config(pair_a != pair_b, "fpr: the two pairs must differ");
  }

  long long hits_05 = 0;
  long long hits_01 = 0;
  long long hits_zero = 0;
  long long hits_eq = 0;
  for (long long r = 0; r < reps; ++r) {
    Rng rng = Rng::for_replication(seed, static_cast<std::uint64_t>(r));
    std::vector<Matrix> u(static_cast<std::size_t>(m));
    for (int run = 0; run < m; ++run) {
      u[static_cast<std::size_t>(run)] =
          u_true + noise_sd * gaussian_matrix(k, p, rng);
    }
    Vector d_hat = crossnobis_distances(u);
    Matrix sigma_k_hat = estimate_condition_cov(u);

    if (mode == "each_pair") {
      CovPrediction null_pred =
          null_cov(d_hat, NullSpec::zero_distances(), sigma_k_hat,
                   static_cast<double>(p), m, p);
      for (int j = 0; j < d; ++j) {
        const double z = d_hat(j) / std::sqrt(null_pred.v(j, j));
        if (z > z05) ++hits_05;
        if (z > z01) ++hits_01;
      }
    } else {
      Vector c = Vector::Zero(d);
      c(pair_a) = 1.0;
      c(pair_b) = -1.0;
      CovPrediction v_zero =
          null_cov(d_hat, NullSpec::zero_distances(), sigma_k_hat,
                   static_cast<double>(p), m, p);
      CovPrediction v_eq =
          null_cov(d_hat, NullSpec::equalized_distances(pair_a, pair_b),
                   sigma_k_hat, static_cast<double>(p), m, p);
      if (z_test(d_hat, c, v_zero).z > z05) ++hits_zero;
      if (z_test(d_hat, c, v_eq).z > z05) ++hits_eq;
    }
  }

  FprResult result;
  result.mode = mode;
  if (mode == "each_pair") {
    result.tests = reps * d;
    result.rate_05 =
        static_cast<double>(hits_05) / static_cast<double>(result.tests);
    result.rate_01 =
        static_cast<double>(hits_01) / static_cast<double>(result.tests);
  } else {
    result.tests = reps;
    result.rate_zero =
        static_cast<double>(hits_zero) / static_cast<double>(reps);
    result.rate_equalized =
        static_cast<double>(hits_eq) / static_cast<double>(reps);
  }

  if (!out_dir.empty()) {
    Matrix rates(1, 2);
    std::string summary;
    summary += "experiment = fpr\n";
    summary += "mode = " + mode + "\n";
    summary += "replications = " + std::to_string(reps) + "\n";
    if (mode == "each_pair") {
      rates(0, 0) = result.rate_05;
      rates(0, 1) = result.rate_01;
      summary += "rate_05 = " + format_full(result.rate_05) + "\n";
      summary += "rate_01 = " + format_full(result.rate_01) + "\n";
    } else {
      rates(0, 0) = result.rate_zero;
      rates(0, 1) = result.rate_equalized;
      summary += "rate_zero = " + format_full(result.rate_zero) + "\n";
      summary +=
          "rate_equalized = " + format_full(result.rate_equalized) + "\n";
    }
    write_matrix(detail::out_path(out_dir, "fpr_rates.ldcm").string(), rates);
    write_text(detail::out_path(out_dir, "fpr_summary.txt").string(),
               summary);
  }
  return result;
}

/** Model-selection experiment result. */
struct ModelSelResult {
  std::vector<double> signals;  ///< signal scales swept
  Matrix accuracy;  ///< levels x 3 accuracies (spearman, cosine, likelihood)
  long long replications = 0;   ///< replications per level
};

/**
 * Model-selection accuracy experiment: two candidate distance models with
 * identical rank order but different ratios (quadratic vs linear falloff),
 * the generating model alternating between replications.  Accuracy per
 * scoring method is the fraction of replications selecting the generator.
 */
inline ModelSelResult run_modelsel(const RunConfig& cfg, std::uint64_t seed,
                                   const std::string& out_dir) {
  cfg.validate_keys({"replications", "k", "m", "p", "signals"});
  const int k = static_cast<int>(cfg.get_int_or("k", 5));
  const int m = static_cast<int>(cfg.get_int_or("m", 5));
  const int p = static_cast<int>(cfg.get_int_or("p", 60));
  const long long reps = cfg.get_int_or("replications", 2000);
  require_config(reps >= 2, "modelsel: need at least 2 replications");
  Dimensions{k, p, m}.validate();
  std::vector<double> signals{0.1, 0.2, 0.4, 0.8};
  if (cfg.has("signals")) signals = cfg.get_double_list("signals");

  const int d = pair_count(k);
  auto pairs = pair_list(k);
  Vector model_a(d);
  Vector model_b(d);
  for (int j = 0; j < d; ++j) {
    const double gap = std::abs(pairs[static_cast<std::size_t>(j)].first -
                                pairs[static_cast<std::size_t>(j)].second);
    model_a(j) = gap * gap;
    model_b(j) = gap;
  }
  model_a /= model_a.maxCoeff();
  model_b /= model_b.maxCoeff();
  std::vector<Vector> models{model_a, model_b};

  ModelSelResult result;
  result.signals = signals;
  result.replications = reps;
  result.accuracy = Matrix::Zero(static_cast<Eigen::Index>(signals.size()), 3);

  for (std::size_t level = 0; level < signals.size(); ++level) {
    const double s = signals[level];
    Rng setup_rng(seed + static_cast<std::uint64_t>(level) + 1);
    std::vector<Matrix> u_true;
    u_true.push_back(
        patterns_from_rdm(squareform(Vector(s * model_a)), p, setup_rng));
    u_true.push_back(
        patterns_from_rdm(squareform(Vector(s * model_b)), p, setup_rng));

    Eigen::Vector3d correct = Eigen::Vector3d::Zero();
    for (long long r = 0; r < reps; ++r) {
      const int truth = static_cast<int>(r % 2);
      Rng rng = Rng::for_replication(
          seed, (static_cast<std::uint64_t>(level) << 40) ^
                    static_cast<std::uint64_t>(r));
      std::vector<Matrix> u(static_cast<std::size_t>(m));
      for (int run = 0; run < m; ++run) {
        u[static_cast<std::size_t>(run)] =
            u_true[static_cast<std::size_t>(truth)] +
            gaussian_matrix(k, p, rng);
      }
      Vector d_hat = crossnobis_distances(u);
      Matrix xi_hat = pair_cov_from_condition_cov(estimate_condition_cov(u));

      const ScoreMethod methods[3] = {ScoreMethod::kSpearman,
                                      ScoreMethod::kCosine,
                                      ScoreMethod::kLogLikelihood};
      for (int t = 0; t < 3; ++t) {
        ModelSelection sel = select_model(d_hat, models, methods[t], xi_hat,
                                          static_cast<double>(p), m, p);
        if (sel.best == truth) correct(t) += 1.0;
      }
    }
    result.accuracy.row(static_cast<Eigen::Index>(level)) =
        (correct / static_cast<double>(reps)).transpose();
  }

  if (!out_dir.empty()) {
    write_matrix(detail::out_path(out_dir, "modelsel_accuracy.ldcm").string(),
                 result.accuracy);
    std::string summary;
    summary += "experiment = modelsel\n";
    summary += "replications = " + std::to_string(reps) + "\n";
    for (std::size_t i = 0; i < signals.size(); ++i) {
      summary += "signal_" + std::to_string(i) + " = " +
                 format_full(signals[i]) +
                 " spearman = " + format_full(result.accuracy(
                                      static_cast<Eigen::Index>(i), 0)) +
                 " cosine = " + format_full(result.accuracy(
                                    static_cast<Eigen::Index>(i), 1)) +
                 " loglik = " + format_full(result.accuracy(
                                    static_cast<Eigen::Index>(i), 2)) + "\n";
    }
    write_text(detail::out_path(out_dir, "modelsel_summary.txt").string(),
               summary);
  }
  return result;
}

/**
 * Dispatches an experiment by kind.  @p out_dir is created when missing;
 * pass an empty string to skip file output.
 */
inline void run_experiment(const std::string& kind, const RunConfig& cfg,
                           std::uint64_t seed, const std::string& out_dir) {
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("run_experiment: cannot create " + out_dir);
  }
  if (kind == "fig1") {
    run_fig1(cfg, seed, out_dir);
  } else if (kind == "fig2") {
    run_fig2(cfg, seed, out_dir);
  } else if (kind == "fig3") {
    run_fig3(cfg, seed, out_dir);
  } else if (kind == "fpr") {
    run_fpr(cfg, seed, out_dir);
  } else if (kind == "modelsel") {
    run_modelsel(cfg, seed, out_dir);
  } else {
    throw ConfigError("run_experiment: unknown kind '" + kind + "'");
  }
}

}  // namespace ldc

#endif  // LDC_EXPERIMENTS_HPP
