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
 * @file glm.hpp
 * @brief First-level timeseries model: response function, design matrix
 *        construction, temporal covariance kernels, and generalized least
 *        squares estimation.
 */

#ifndef LDC_GLM_HPP
#define LDC_GLM_HPP

#include <cmath>
#include <string>
#include <vector>

#include "ldc/common.hpp"

namespace ldc {

/** Parameters of the canonical double-gamma response function. */
struct HrfParams {
  double shape_peak = 7.0;        ///< gamma shape of the positive lobe
  double shape_undershoot = 17.0; ///< gamma shape of the undershoot lobe
  double scale_s = 1.0;           ///< common gamma scale in seconds
  double undershoot_ratio = 1.0 / 6.0;  ///< undershoot amplitude ratio
  double length_s = 32.0;         ///< support of the sampled kernel
};

namespace detail {

/** Gamma density with unit scale, evaluated stably through lgamma. */
inline double gamma_pdf(double x, double shape) {
  if (x <= 0.0) return 0.0;
  return std::exp((shape - 1.0) * std::log(x) - x - std::lgamma(shape));
}

}  // namespace detail

/**
 * Canonical hemodynamic response sampled every @p dt_fine seconds: the
 * difference of two gamma densities (peak minus scaled undershoot),
 * normalized so the maximum equals one.  With the default parameters the
 * lobes peak at 6 s and 16 s.
 */
inline std::vector<double> sample_hrf(double dt_fine,
                                      const HrfParams& params = HrfParams{}) {
  require_config(dt_fine > 0.0, "sample_hrf: dt_fine must be positive");
  require_config(params.length_s > 0.0, "sample_hrf: length must be positive");
  const int n = static_cast<int>(std::floor(params.length_s / dt_fine)) + 1;
  std::vector<double> h(static_cast<std::size_t>(n));
  double peak = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = i * dt_fine / params.scale_s;
    const double value = detail::gamma_pdf(t, params.shape_peak) -
                         params.undershoot_ratio *
                             detail::gamma_pdf(t, params.shape_undershoot);
    h[static_cast<std::size_t>(i)] = value;
    if (value > peak) peak = value;
  }
  require_numeric(peak > 0.0, "sample_hrf: response has no positive peak");
  for (double& value : h) value /= peak;
  return h;
}

/** One stimulation event: onset and duration in seconds. */
struct Event {
  double onset_s = 0.0;
  double duration_s = 0.0;
};

/**
 * Builds the T x (K+1) design matrix for one run.  Each condition column is
 * a fine-grid boxcar (step dt/upsample) over that condition's events,
 * convolved with @p hrf_fine and sampled at the acquisition grid t = i*dt.
 * A constant intercept column is appended last.
 *
 * @p hrf_fine must be sampled at the same fine step; pass {1.0} to skip
 * response convolution.  Throws if an event starts outside the run or the
 * resulting matrix is rank deficient (e.g. a condition with no effective
 * events).
 */
inline Matrix build_design(const std::vector<std::vector<Event>>& events,
                           int t_samples, double dt,
                           const std::vector<double>& hrf_fine,
                           int upsample = 16) {
  const int k = static_cast<int>(events.size());
  require_dims(k >= 1, "build_design: need at least one condition");
  require_dims(t_samples >= 1, "build_design: need at least one sample");
  require_config(dt > 0.0, "build_design: dt must be positive");
  require_config(upsample >= 1, "build_design: upsample must be >= 1");
  require_dims(!hrf_fine.empty(), "build_design: empty response kernel");

  const double dt_fine = dt / upsample;
  const double run_end = t_samples * dt;
  const int n_fine = t_samples * upsample;

  Matrix x = Matrix::Zero(t_samples, k + 1);
  std::vector<double> boxcar(static_cast<std::size_t>(n_fine));
  std::vector<double> convolved(static_cast<std::size_t>(n_fine));
  for (int c = 0; c < k; ++c) {
    std::fill(boxcar.begin(), boxcar.end(), 0.0);
    for (const Event& ev : events[static_cast<std::size_t>(c)]) {
      require_config(ev.onset_s >= 0.0 && ev.onset_s < run_end,
                     "build_design: event onset " + std::to_string(ev.onset_s) +
                         " outside run [0, " + std::to_string(run_end) + ")");
      require_config(ev.duration_s >= 0.0,
                     "build_design: negative event duration");
      for (int i = 0; i < n_fine; ++i) {
        const double t = i * dt_fine;
        if (t >= ev.onset_s && t < ev.onset_s + ev.duration_s) {
          boxcar[static_cast<std::size_t>(i)] = 1.0;
        }
      }
    }
    // Causal discrete convolution truncated to the run.
    std::fill(convolved.begin(), convolved.end(), 0.0);
    for (int i = 0; i < n_fine; ++i) {
      if (boxcar[static_cast<std::size_t>(i)] == 0.0) continue;
      const int limit =
          std::min<int>(static_cast<int>(hrf_fine.size()), n_fine - i);
      for (int j = 0; j < limit; ++j) {
        convolved[static_cast<std::size_t>(i + j)] +=
            hrf_fine[static_cast<std::size_t>(j)];
      }
    }
    for (int i = 0; i < t_samples; ++i) {
      x(i, c) = convolved[static_cast<std::size_t>(i) *
                          static_cast<std::size_t>(upsample)];
    }
  }
  x.col(k).setOnes();

  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  require_numeric(qr.rank() == x.cols(),
                  "build_design: design matrix is rank deficient");
  return x;
}

/** Kind of temporal covariance used for a run. */
enum class TemporalKind { kIdentity, kDoubleExponential, kExplicit };

/**
 * Temporal covariance specification.  The double-exponential kernel is
 * r(tau) = a*exp(-tau/w1) + (1-a)*exp(-tau/w2) with tau the lag in samples.
 */
struct TemporalCov {
  TemporalKind kind = TemporalKind::kIdentity;
  double w1 = 1.0;
  double w2 = 40.0;
  double a = 0.5;
  Matrix explicit_m;

  static TemporalCov identity() { return TemporalCov{}; }

  static TemporalCov double_exponential(double w1 = 1.0, double w2 = 40.0,
                                        double a = 0.5) {
    TemporalCov cov;
    cov.kind = TemporalKind::kDoubleExponential;
    require_config(w1 > 0.0 && w2 > 0.0, "TemporalCov: widths must be positive");
    require_config(a >= 0.0 && a <= 1.0, "TemporalCov: weight must be in [0,1]");
    cov.w1 = w1;
    cov.w2 = w2;
    cov.a = a;
    return cov;
  }

  static TemporalCov explicit_matrix(const Matrix& m) {
    TemporalCov cov;
    cov.kind = TemporalKind::kExplicit;
    require_dims(m.rows() == m.cols(), "TemporalCov: matrix must be square");
    require_numeric(m.isApprox(m.transpose(), 1e-12),
                    "TemporalCov: matrix must be symmetric");
    cov.explicit_m = m;
    return cov;
  }

  /** Materializes the T x T covariance matrix. */
  Matrix build(int t_samples) const {
    require_dims(t_samples >= 1, "TemporalCov: need at least one sample");
    switch (kind) {
      case TemporalKind::kIdentity:
        return Matrix::Identity(t_samples, t_samples);
      case TemporalKind::kDoubleExponential: {
        Matrix s(t_samples, t_samples);
        for (int i = 0; i < t_samples; ++i) {
          for (int j = 0; j < t_samples; ++j) {
            const double tau = std::abs(i - j);
            s(i, j) = a * std::exp(-tau / w1) + (1.0 - a) * std::exp(-tau / w2);
          }
        }
        return s;
      }
      case TemporalKind::kExplicit:
        require_dims(explicit_m.rows() == t_samples,
                     "TemporalCov: explicit matrix has wrong size");
        return explicit_m;
    }
    throw NumericalError("TemporalCov: unreachable kind");
  }
};

/** Result of a generalized least squares fit for one run. */
struct GlmFit {
  Matrix betas;      ///< (K+Q) x P coefficient estimates
  Matrix residuals;  ///< T x P residuals Y - X * betas
  int dof = 0;       ///< residual degrees of freedom T - (K+Q)

  /** Top @p k rows of the coefficients (the condition estimates). */
  Matrix condition_estimates(int k) const {
    require_dims(k >= 1 && k <= betas.rows(),
                 "GlmFit: invalid condition count");
    return betas.topRows(k);
  }
};

/**
 * Generalized least squares: betas = (X' S^-1 X)^-1 X' S^-1 Y with
 * S = @p sigma_t, solved through the Cholesky factor of S.
 */
inline GlmFit gls_fit(const Matrix& y, const Matrix& x,
                      const Matrix& sigma_t) {
  require_dims(y.rows() == x.rows(),
               "gls_fit: data and design row counts differ");
  require_dims(sigma_t.rows() == sigma_t.cols() && sigma_t.rows() == y.rows(),
               "gls_fit: temporal covariance has wrong size");
  require_dims(x.rows() >= x.cols(),
               "gls_fit: more coefficients than samples");

  Eigen::LLT<Matrix> llt(sigma_t);
  require_numeric(llt.info() == Eigen::Success,
                  "gls_fit: temporal covariance is not positive definite");
  // Whiten both sides with L^-1 and solve the ordinary problem.
  Matrix xw = llt.matrixL().solve(x);
  Matrix yw = llt.matrixL().solve(y);

  Eigen::ColPivHouseholderQR<Matrix> qr(xw);
  require_numeric(qr.rank() == x.cols(),
                  "gls_fit: design matrix is rank deficient");

  GlmFit fit;
  fit.betas = qr.solve(yw);
  fit.residuals = y - x * fit.betas;
  fit.dof = static_cast<int>(y.rows() - x.cols());
  return fit;
}

}  // namespace ldc

#endif  // LDC_GLM_HPP
