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
 * @file prewhiten.hpp
 * @brief Channel covariance estimation, shrinkage regularization, and
 *        multivariate prewhitening of condition estimates.
 */

#ifndef LDC_PREWHITEN_HPP
#define LDC_PREWHITEN_HPP

#include <string>
#include <vector>

#include "ldc/common.hpp"

namespace ldc {

/**
 * Pooled channel covariance of GLM residuals: sum_m R_m' R_m divided by the
 * summed residual degrees of freedom, where each run contributes
 * dof_m = T_m - k - q.
 */
inline Matrix estimate_channel_cov(const std::vector<Matrix>& residuals,
                                   int k, int q) {
  require_dims(!residuals.empty(), "estimate_channel_cov: no residuals");
  require_dims(k >= 1, "estimate_channel_cov: need k >= 1");
  require_dims(q >= 0, "estimate_channel_cov: need q >= 0");
  const Eigen::Index p = residuals.front().cols();
  Matrix sum = Matrix::Zero(p, p);
  long long total_dof = 0;
  for (const Matrix& r : residuals) {
    require_dims(r.cols() == p,
                 "estimate_channel_cov: channel counts differ across runs");
    const long long dof = r.rows() - k - q;
    require_dims(dof > 0,
                 "estimate_channel_cov: nonpositive degrees of freedom in a run");
    sum.noalias() += r.transpose() * r;
    total_dof += dof;
  }
  return sum / static_cast<double>(total_dof);
}

/**
 * Shrinkage toward the diagonal: h * diag(S) + (1-h) * S.  h = 1 keeps only
 * channel variances, h = 0 keeps the sample covariance unchanged.
 */
inline Matrix shrink_covariance(const Matrix& s, double h) {
  require_dims(s.rows() == s.cols(), "shrink_covariance: matrix must be square");
  require_config(h >= 0.0 && h <= 1.0,
                 "shrink_covariance: h must lie in [0, 1]");
  Matrix out = (1.0 - h) * s;
  out.diagonal() = s.diagonal();
  return out;
}

/**
 * Symmetric inverse square root through an eigendecomposition.  Throws when
 * the matrix is non-symmetric or numerically singular (an eigenvalue at or
 * below 1e-10 times the largest).
 */
inline Matrix inverse_sqrt(const Matrix& s) {
  require_dims(s.rows() == s.cols(), "inverse_sqrt: matrix must be square");
  require_numeric(s.isApprox(s.transpose(), 1e-10),
                  "inverse_sqrt: matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  require_numeric(eig.info() == Eigen::Success,
                  "inverse_sqrt: eigendecomposition failed");
  const Vector& lambda = eig.eigenvalues();
  const double lambda_max = lambda(lambda.size() - 1);
  require_numeric(lambda_max > 0.0 &&
                      lambda(0) > 1e-10 * lambda_max,
                  "inverse_sqrt: matrix is singular or indefinite");
  Vector inv_sqrt = lambda.array().rsqrt();
  return eig.eigenvectors() * inv_sqrt.asDiagonal() *
         eig.eigenvectors().transpose();
}

/** Applies a spatial whitener to condition estimates: U_white = U * W. */
inline Matrix prewhiten_patterns(const Matrix& u, const Matrix& w) {
  require_dims(w.rows() == w.cols(), "prewhiten_patterns: whitener not square");
  require_dims(u.cols() == w.rows(),
               "prewhiten_patterns: channel counts differ");
  return u * w;
}

/**
 * Channel covariance of the data after prewhitening, and the trace of its
 * square.  sigma_r is scaled so that trace(sigma_r) = P, which fixes the
 * scale convention shared with the condition covariance estimate; trace_rr
 * is trace(sigma_r * sigma_r) under that convention.
 */
struct ResidualSpatialCov {
  Matrix sigma_r;
  double trace_rr = 0.0;
};

/**
 * Residual channel covariance remaining after whitening with the inverse
 * square root of @p sigma_reg: sigma_r = W * sigma_p * W, trace-normalized
 * to P.  When the regularized estimate equals sigma_p exactly, sigma_r is
 * the identity and trace_rr = P.
 */
inline ResidualSpatialCov estimate_residual_cov(const Matrix& sigma_p,
                                                const Matrix& sigma_reg) {
  require_dims(sigma_p.rows() == sigma_p.cols(),
               "estimate_residual_cov: sigma_p must be square");
  require_dims(sigma_reg.rows() == sigma_p.rows() &&
                   sigma_reg.cols() == sigma_p.cols(),
               "estimate_residual_cov: shapes differ");
  const double p = static_cast<double>(sigma_p.rows());
  Matrix w = inverse_sqrt(sigma_reg);
  Matrix s = w * sigma_p * w;
  s = 0.5 * (s + s.transpose());  // enforce exact symmetry
  const double trace = s.trace();
  require_numeric(trace > 0.0, "estimate_residual_cov: nonpositive trace");
  s *= p / trace;
  ResidualSpatialCov out;
  out.trace_rr = s.squaredNorm();  // trace(S*S) = ||S||_F^2 for symmetric S
  out.sigma_r = std::move(s);
  return out;
}

/** Everything derived from one pass over the residuals of a dataset. */
struct SpatialWhitening {
  Matrix sigma_p;    ///< pooled channel covariance of the residuals
  Matrix sigma_reg;  ///< shrinkage-regularized covariance
  Matrix whitener;   ///< inverse square root of sigma_reg
  ResidualSpatialCov residual;  ///< post-whitening covariance + trace
};

/**
 * Builds the full whitening bundle from per-run residuals with shrinkage
 * level @p h.  The residual covariance is estimated on a cross-run split:
 * the pooled covariance of the odd-numbered runs (first, third, ...) is
 * whitened with the regularized estimate from all runs, so that sampling
 * error in the whitener does not cancel against itself.
 */
inline SpatialWhitening make_spatial_whitening(
    const std::vector<Matrix>& residuals, int k, int q, double h) {
  require_dims(residuals.size() >= 2,
               "make_spatial_whitening: need at least 2 runs");
  SpatialWhitening out;
  out.sigma_p = estimate_channel_cov(residuals, k, q);
  out.sigma_reg = shrink_covariance(out.sigma_p, h);
  out.whitener = inverse_sqrt(out.sigma_reg);

  std::vector<Matrix> odd_runs;
  for (std::size_t i = 0; i < residuals.size(); i += 2) {
    odd_runs.push_back(residuals[i]);
  }
  Matrix sigma_p_odd = estimate_channel_cov(odd_runs, k, q);
  out.residual = estimate_residual_cov(sigma_p_odd, out.sigma_reg);
  return out;
}

}  // namespace ldc

#endif  // LDC_PREWHITEN_HPP
