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
 * @file model_eval.hpp
 * @brief Scoring candidate distance models against estimated distances:
 *        rank correlation, cosine similarity, and the likelihood of the
 *        estimates under the predicted sampling distribution.
 */

#ifndef LDC_MODEL_EVAL_HPP
#define LDC_MODEL_EVAL_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "ldc/common.hpp"
#include "ldc/core.hpp"
#include "ldc/variance.hpp"

namespace ldc {

/** Ranks with ties averaged (1-based). */
inline Vector average_ranks(const Vector& values) {
  const int n = static_cast<int>(values.size());
  require_dims(n >= 1, "average_ranks: empty input");
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return values(a) < values(b); });
  Vector ranks(n);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && values(order[static_cast<std::size_t>(j + 1)]) ==
                            values(order[static_cast<std::size_t>(i)])) {
      ++j;
    }
    // positions i..j (0-based) share the average 1-based rank
    const double rank = 0.5 * (i + j) + 1.0;
    for (int t = i; t <= j; ++t) {
      ranks(order[static_cast<std::size_t>(t)]) = rank;
    }
    i = j + 1;
  }
  return ranks;
}

/**
 * Spearman rank correlation between a model distance vector and estimated
 * distances, with average ranks for ties.  Throws when either input is
 * constant (the correlation is undefined).
 */
inline double spearman_score(const Vector& model, const Vector& d_hat) {
  require_dims(model.size() == d_hat.size() && model.size() >= 2,
               "spearman_score: need two vectors of equal length >= 2");
  Vector rm = average_ranks(model);
  Vector rd = average_ranks(d_hat);
  Vector cm = rm.array() - rm.mean();
  Vector cd = rd.array() - rd.mean();
  const double denom = cm.norm() * cd.norm();
  require_numeric(denom > 0.0,
                  "spearman_score: correlation undefined for constant input");
  return cm.dot(cd) / denom;
}

/**
 * Cosine similarity m' d_hat / (|m| |d_hat|).  Unlike a Pearson
 * correlation the vectors are not centered, so the zero point of the
 * distance scale carries information.
 */
inline double cosine_score(const Vector& model, const Vector& d_hat) {
  require_dims(model.size() == d_hat.size() && model.size() >= 1,
               "cosine_score: need two vectors of equal length >= 1");
  const double denom = model.norm() * d_hat.norm();
  require_numeric(denom > 0.0, "cosine_score: zero-norm input");
  return model.dot(d_hat) / denom;
}

/**
 * Log density of the estimated distances under the normal approximation
 * with mean s * model and the covariance rebuilt for that signal level.
 * When the covariance is numerically not positive definite a single jitter
 * of 1e-10 * trace(V)/D is added to the diagonal before giving up.
 */
inline double log_likelihood(const Vector& d_hat, const Vector& model,
                             double s, const Matrix& xi, double trace_rr,
                             int m, int p) {
  const int d = static_cast<int>(d_hat.size());
  require_dims(model.size() == d,
               "log_likelihood: model length does not match distances");
  require_config(s >= 0.0, "log_likelihood: scale must be non-negative");
  Vector mean = s * model;
  Matrix delta = delta_from_rdm(squareform(mean));
  CovPrediction pred = predict_cov_balanced(delta, xi, trace_rr, m, p);

  Eigen::LLT<Matrix> llt(pred.v);
  if (llt.info() != Eigen::Success) {
    Matrix jittered = pred.v;
    jittered.diagonal().array() += 1e-10 * pred.v.trace() / d;
    llt.compute(jittered);
    require_numeric(llt.info() == Eigen::Success,
                    "log_likelihood: covariance not positive definite");
  }
  double log_det = 0.0;
  for (int i = 0; i < d; ++i) {
    log_det += 2.0 * std::log(llt.matrixL()(i, i));
  }
  Vector resid = d_hat - mean;
  const double quad = resid.dot(llt.solve(resid));
  return -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det + quad);
}

/** Result of fitting the signal scale of a model. */
struct ScaleFit {
  double s = 0.0;                ///< fitted non-negative scale
  double log_likelihood = 0.0;   ///< log density at the fitted scale
  int iterations = 0;            ///< reweighting iterations performed
  bool converged = false;        ///< reweighting reached tolerance
};

namespace detail {

/** Golden-section maximization of f on [lo, hi] (f assumed unimodal). */
template <typename F>
double golden_max(F&& f, double lo, double hi, int iters = 200) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int i = 0; i < iters && b - a > 1e-12 * std::max(1.0, std::abs(b));
       ++i) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

/**
 * Maximum-likelihood signal scale for a model.  The covariance depends on
 * the scale, so the estimate is iterated: starting from the least-squares
 * projection, the generalized-least-squares scale
 *
 *   s <- (m' V(s)^-1 m)^-1 m' V(s)^-1 d_hat
 *
 * is reweighted (clamped at zero) until relative change falls below
 * @p tol.  Because that fixed point weights the residual only, the profile
 * log-likelihood (whose curvature also moves with s through V) is then
 * polished with a scan plus golden-section step so the returned scale is
 * the actual maximizer.
 */
inline ScaleFit fit_scale(const Vector& d_hat, const Vector& model,
                          const Matrix& xi, double trace_rr, int m, int p,
                          double tol = 1e-8, int max_iter = 100) {
  const int d = static_cast<int>(d_hat.size());
  require_dims(model.size() == d,
               "fit_scale: model length does not match distances");
  const double model_ss = model.squaredNorm();
  require_numeric(model_ss > 0.0, "fit_scale: zero-norm model");

  auto cov_at = [&](double s) {
    Matrix delta = delta_from_rdm(squareform(Vector(s * model)));
    return predict_cov_balanced(delta, xi, trace_rr, m, p).v;
  };

  ScaleFit fit;
  double s = std::max(1e-6, model.dot(d_hat) / model_ss);
  for (int it = 0; it < max_iter; ++it) {
    Eigen::LLT<Matrix> llt(cov_at(s));
    require_numeric(llt.info() == Eigen::Success,
                    "fit_scale: covariance not positive definite");
    Vector vm = llt.solve(model);
    const double denom = model.dot(vm);
    require_numeric(denom > 0.0, "fit_scale: degenerate weighting");
    double s_next = std::max(0.0, vm.dot(d_hat) / denom);
    fit.iterations = it + 1;
    if (std::abs(s_next - s) <= tol * std::max(1.0, std::abs(s))) {
      s = s_next;
      fit.converged = true;
      break;
    }
    s = s_next;
  }

  auto objective = [&](double cand) {
    return log_likelihood(d_hat, model, cand, xi, trace_rr, m, p);
  };

  // Profile-likelihood polish: coarse scan over a bracket covering both
  // the reweighted solution and the data scale, then golden section
  // around the best cell.
  const double hi = std::max({2.0 * s, 10.0 * d_hat.norm() /
                                            std::sqrt(model_ss),
                              1e-6});
  const int n_grid = 33;
  std::vector<double> candidates;
  candidates.reserve(n_grid + 1);
  for (int i = 0; i < n_grid; ++i) {
    candidates.push_back(hi * static_cast<double>(i) / (n_grid - 1));
  }
  candidates.push_back(s);
  std::sort(candidates.begin(), candidates.end());
  int best = 0;
  double best_val = objective(candidates.front());
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double val = objective(candidates[i]);
    if (val > best_val) {
      best_val = val;
      best = static_cast<int>(i);
    }
  }
  const double lo_b = best > 0 ? candidates[static_cast<std::size_t>(best - 1)]
                               : candidates.front();
  const double hi_b = best + 1 < static_cast<int>(candidates.size())
                          ? candidates[static_cast<std::size_t>(best + 1)]
                          : candidates.back();
  fit.s = lo_b < hi_b ? detail::golden_max(objective, lo_b, hi_b)
                      : candidates[static_cast<std::size_t>(best)];
  fit.log_likelihood = objective(fit.s);
  return fit;
}

/** Scoring method for model comparison. */
enum class ScoreMethod { kSpearman, kCosine, kLogLikelihood };

/** Outcome of comparing several models against one distance estimate. */
struct ModelSelection {
  std::vector<double> scores;   ///< per-model score (higher is better)
  std::vector<ScaleFit> fits;   ///< per-model scale fits (likelihood only)
  int best = 0;                 ///< index of the winning model
  bool tie = false;             ///< another model scored exactly the same
};

/**
 * Scores every model and selects the best one.  Ties are broken toward
 * the lowest index and flagged.  The likelihood method fits a
 * non-negative scale per model; the other methods need no covariance
 * information.
 */
inline ModelSelection select_model(const Vector& d_hat,
                                   const std::vector<Vector>& models,
                                   ScoreMethod method, const Matrix& xi,
                                   double trace_rr, int m, int p) {
  require_dims(!models.empty(), "select_model: no models given");
  ModelSelection out;
  out.scores.reserve(models.size());
  for (const Vector& model : models) {
    switch (method) {
      case ScoreMethod::kSpearman:
        out.scores.push_back(spearman_score(model, d_hat));
        break;
      case ScoreMethod::kCosine:
        out.scores.push_back(cosine_score(model, d_hat));
        break;
      case ScoreMethod::kLogLikelihood: {
        ScaleFit fit = fit_scale(d_hat, model, xi, trace_rr, m, p);
        out.fits.push_back(fit);
        out.scores.push_back(fit.log_likelihood);
        break;
      }
    }
  }
  out.best = 0;
  for (std::size_t i = 1; i < out.scores.size(); ++i) {
    if (out.scores[i] > out.scores[static_cast<std::size_t>(out.best)]) {
      out.best = static_cast<int>(i);
    }
  }
  for (std::size_t i = 0; i < out.scores.size(); ++i) {
    if (static_cast<int>(i) != out.best &&
        out.scores[i] == out.scores[static_cast<std::size_t>(out.best)]) {
      out.tie = true;
    }
  }
  return out;
}

}  // namespace ldc

#endif  // LDC_MODEL_EVAL_HPP
