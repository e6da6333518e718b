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
 * @file distances.hpp
 * @brief Cross-validated distance estimation from per-partition condition
 *        estimates, and the condition-by-condition covariance of those
 *        estimates.
 */

#ifndef LDC_DISTANCES_HPP
#define LDC_DISTANCES_HPP

#include <vector>

#include "ldc/common.hpp"
#include "ldc/core.hpp"

namespace ldc {

namespace detail {

/** Validates a per-partition set of K x P condition estimates. */
inline void check_partition_estimates(const std::vector<Matrix>& u) {
  require_dims(u.size() >= 2,
               "cross-validated estimate: need at least 2 partitions");
  const Eigen::Index k = u.front().rows();
  const Eigen::Index p = u.front().cols();
  require_dims(k >= 2, "cross-validated estimate: need at least 2 conditions");
  require_dims(p >= 1, "cross-validated estimate: need at least 1 channel");
  for (const Matrix& um : u) {
    require_dims(um.rows() == k && um.cols() == p,
                 "cross-validated estimate: partition shapes differ");
  }
}

}  // namespace detail

/** Per-pair difference patterns: delta = C * U, shape D x P. */
inline Matrix pattern_differences(const Matrix& u) {
  require_dims(u.rows() >= 2, "pattern_differences: need at least 2 rows");
  return build_contrast_matrix(static_cast<int>(u.rows())) * u;
}

/**
 * Cross-validated squared distances ("crossnobis").  For each partition m
 * the difference patterns are paired with the average difference over the
 * remaining partitions:
 *
 *   d_j = (1/(M*P)) * sum_m delta_{j,m} . mean_{n != m} delta_{j,n}
 *
 * Because the two factors come from independent partitions, noise does not
 * inflate the estimate and the result is unbiased (it can be negative).
 */
inline Vector crossnobis_distances(const std::vector<Matrix>& u) {
  detail::check_partition_estimates(u);
  const int m = static_cast<int>(u.size());
  const int k = static_cast<int>(u.front().rows());
  const double p = static_cast<double>(u.front().cols());

  Matrix c = build_contrast_matrix(k);
  std::vector<Matrix> deltas;
  deltas.reserve(u.size());
  Matrix sum = Matrix::Zero(c.rows(), u.front().cols());
  for (const Matrix& um : u) {
    deltas.push_back(c * um);
    sum += deltas.back();
  }

  Vector acc = Vector::Zero(c.rows());
  for (const Matrix& dm : deltas) {
    Matrix rest = (sum - dm) / static_cast<double>(m - 1);
    acc += (dm.array() * rest.array()).rowwise().sum().matrix();
  }
  return acc / (m * p);
}

/**
 * Covariance of the per-partition condition estimates around their mean,
 * normalized per channel:
 *
 *   sigma_k = sum_m (U_m - Ubar)(U_m - Ubar)' / ((M-1) * P)
 *
 * The Gram form keeps the estimate positive semidefinite; diagonal entries
 * are clamped at zero as a numerical safeguard.
 */
inline Matrix estimate_condition_cov(const std::vector<Matrix>& u) {
  detail::check_partition_estimates(u);
  const int m = static_cast<int>(u.size());
  const double p = static_cast<double>(u.front().cols());

  Matrix mean = Matrix::Zero(u.front().rows(), u.front().cols());
  for (const Matrix& um : u) mean += um;
  mean /= static_cast<double>(m);

  Matrix sigma_k = Matrix::Zero(u.front().rows(), u.front().rows());
  for (const Matrix& um : u) {
    Matrix centered = um - mean;
    sigma_k.noalias() += centered * centered.transpose();
  }
  sigma_k /= static_cast<double>(m - 1) * p;
  for (Eigen::Index i = 0; i < sigma_k.rows(); ++i) {
    if (sigma_k(i, i) < 0.0) sigma_k(i, i) = 0.0;
  }
  return sigma_k;
}

/**
 * Pair-by-pair covariance of difference estimates implied by a condition
 * covariance: xi = C * sigma_k * C'.
 */
inline Matrix pair_cov_from_condition_cov(const Matrix& sigma_k) {
  require_dims(sigma_k.rows() == sigma_k.cols(),
               "pair_cov_from_condition_cov: matrix must be square");
  require_dims(sigma_k.rows() >= 2,
               "pair_cov_from_condition_cov: need at least 2 conditions");
  Matrix c = build_contrast_matrix(static_cast<int>(sigma_k.rows()));
  return c * sigma_k * c.transpose();
}

}  // namespace ldc

#endif  // LDC_DISTANCES_HPP
