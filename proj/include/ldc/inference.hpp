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
 * @file inference.hpp
 * @brief Significance testing of distance contrasts under the normal
 *        approximation, including covariance prediction under null
 *        hypotheses.
 */

#ifndef LDC_INFERENCE_HPP
#define LDC_INFERENCE_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ldc/common.hpp"
#include "ldc/core.hpp"
#include "ldc/distances.hpp"
#include "ldc/variance.hpp"

namespace ldc {

/** Standard normal CDF through the complementary error function. */
inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/** Result of a z-test on a distance contrast. */
struct ContrastTest {
  double z = 0.0;        ///< standardized contrast value
  double p = 0.0;        ///< p-value (one-sided by default)
  double contrast = 0.0; ///< raw contrast value c' * d_hat
  double variance = 0.0; ///< predicted contrast variance c' * V * c
};

/**
 * z-test of the contrast c' * d_hat against zero:
 *
 *   z = c' d_hat / sqrt(c' V c),  p = 1 - Phi(z)
 *
 * (or 2 * (1 - Phi(|z|)) when @p two_sided).  Distances are signed
 * estimates of non-negative quantities, so one-sided is the default.
 */
inline ContrastTest z_test(const Vector& d_hat, const Vector& c,
                           const CovPrediction& pred,
                           bool two_sided = false) {
  require_dims(d_hat.size() == c.size(),
               "z_test: contrast length does not match distances");
  require_dims(pred.v.rows() == d_hat.size() && pred.v.cols() == d_hat.size(),
               "z_test: covariance size does not match distances");
  ContrastTest out;
  out.contrast = c.dot(d_hat);
  out.variance = c.dot(pred.v * c);
  require_numeric(std::isfinite(out.variance) && out.variance > 0.0,
                  "z_test: degenerate contrast (c' V c <= 0)");
  out.z = out.contrast / std::sqrt(out.variance);
  out.p = two_sided ? 2.0 * (1.0 - normal_cdf(std::abs(out.z)))
                    : 1.0 - normal_cdf(out.z);
  return out;
}

/** Null hypothesis under which the covariance should be predicted. */
struct NullSpec {
  enum class Kind {
    kZeroDistances,      ///< all true distances zero
    kEqualizedDistances  ///< two tested distances equal, others as observed
  };
  Kind kind = Kind::kZeroDistances;
  int pair_a = -1;  ///< first pair index (equalized null only)
  int pair_b = -1;  ///< second pair index (equalized null only)

  static NullSpec zero_distances() { return NullSpec{}; }

  static NullSpec equalized_distances(int pair_a, int pair_b) {
    NullSpec spec;
    spec.kind = Kind::kEqualizedDistances;
    spec.pair_a = pair_a;
    spec.pair_b = pair_b;
    return spec;
  }
};

/**
 * Covariance prediction under a null hypothesis.  The zero null drops the
 * signal term entirely.  The equalized null replaces the two tested
 * distances by their common mean (clamped at zero) and keeps the remaining
 * observed distances (also clamped at zero, since the signal matrix must
 * come from a valid distance matrix) before rebuilding the signal term.
 */
inline CovPrediction null_cov_from_xi(const Vector& d_hat,
                                      const NullSpec& spec, const Matrix& xi,
                                      double trace_rr, int m, int p) {
  const int d = static_cast<int>(d_hat.size());
  require_dims(xi.rows() == d && xi.cols() == d,
               "null_cov: pair covariance does not match distance length");
  require_dims(conditions_for_pair_count(d) > 0,
               "null_cov: distance length is not a valid pair count");

  Vector d_null;
  if (spec.kind == NullSpec::Kind::kZeroDistances) {
    d_null = Vector::Zero(d);
  } else {
    require_dims(spec.pair_a >= 0 && spec.pair_a < d && spec.pair_b >= 0 &&
                     spec.pair_b < d && spec.pair_a != spec.pair_b,
                 "null_cov: unknown pair indices for the equalized null");
    d_null = d_hat.cwiseMax(0.0);
    const double common =
        std::max(0.0, 0.5 * (d_hat(spec.pair_a) + d_hat(spec.pair_b)));
    d_null(spec.pair_a) = common;
    d_null(spec.pair_b) = common;
  }
  Matrix delta = delta_from_rdm(squareform(d_null));
  return predict_cov_balanced(delta, xi, trace_rr, m, p);
}

/** Same as null_cov_from_xi, deriving xi from the condition covariance. */
inline CovPrediction null_cov(const Vector& d_hat, const NullSpec& spec,
                              const Matrix& sigma_k, double trace_rr, int m,
                              int p) {
  require_dims(conditions_for_pair_count(static_cast<int>(d_hat.size())) ==
                   static_cast<int>(sigma_k.rows()),
               "null_cov: distance length does not match condition count");
  return null_cov_from_xi(d_hat, spec, pair_cov_from_condition_cov(sigma_k),
                          trace_rr, m, p);
}

}  // namespace ldc

#endif  // LDC_INFERENCE_HPP
