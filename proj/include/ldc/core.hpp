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
 * @file core.hpp
 * @brief Condition-pair bookkeeping: contrast matrices, distance vectors,
 *        and conversions between vector and matrix forms of an RDM.
 *
 * Throughout the library a "distance vector" lists the K*(K-1)/2 condition
 * pairs (i, j), i < j, in row-major upper-triangle order: (0,1), (0,2), ...,
 * (0,K-1), (1,2), ...
 */

#ifndef LDC_CORE_HPP
#define LDC_CORE_HPP

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ldc/common.hpp"

namespace ldc {

/** Core problem sizes shared by most operations. */
struct Dimensions {
  int k = 0;  ///< number of conditions
  int p = 0;  ///< number of measurement channels
  int m = 0;  ///< number of partitions (independent data splits)

  /** Number of condition pairs K*(K-1)/2. */
  int pairs() const { return k * (k - 1) / 2; }

  /** Validates k >= 2, p >= 1, m >= 2. */
  void validate() const {
    require_dims(k >= 2, "Dimensions: need at least 2 conditions, got " +
                             std::to_string(k));
    require_dims(p >= 1, "Dimensions: need at least 1 channel, got " +
                             std::to_string(p));
    require_dims(m >= 2, "Dimensions: need at least 2 partitions, got " +
                             std::to_string(m));
  }
};

/** Number of condition pairs for @p k conditions. */
inline int pair_count(int k) {
  require_dims(k >= 2, "pair_count: need at least 2 conditions");
  return k * (k - 1) / 2;
}

/** Ordered list of condition pairs (i, j), i < j, for @p k conditions. */
inline std::vector<std::pair<int, int>> pair_list(int k) {
  require_dims(k >= 2, "pair_list: need at least 2 conditions");
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(pair_count(k)));
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

/** Position of pair (i, j), i < j, in the ordered pair list of @p k. */
inline int pair_position(int i, int j, int k) {
  require_dims(0 <= i && i < j && j < k,
               "pair_position: need 0 <= i < j < k");
  // Pairs with first index < i occupy sum_{a<i} (k-1-a) slots.
  return i * k - i * (i + 1) / 2 + (j - i - 1);
}

/**
 * Pairwise contrast matrix with one row per condition pair: row (i, j) has
 * +1 in column i, -1 in column j, zeros elsewhere.  Shape D x K with
 * D = K*(K-1)/2.
 */
inline Matrix build_contrast_matrix(int k) {
  const int d = pair_count(k);
  Matrix c = Matrix::Zero(d, k);
  int row = 0;
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      c(row, i) = 1.0;
      c(row, j) = -1.0;
      ++row;
    }
  }
  return c;
}

/** Number of conditions whose pair count equals @p d, or -1 if none. */
inline int conditions_for_pair_count(int d) {
  // Solve k(k-1)/2 = d exactly.
  int k = static_cast<int>(std::floor((1.0 + std::sqrt(1.0 + 8.0 * d)) / 2.0));
  for (int cand = k - 1; cand <= k + 1; ++cand) {
    if (cand >= 2 && cand * (cand - 1) / 2 == d) return cand;
  }
  return -1;
}

/**
 * Expands a distance vector into the symmetric K x K matrix with zero
 * diagonal.  The length must be a valid pair count.
 */
inline Matrix squareform(const Vector& dist) {
  const int d = static_cast<int>(dist.size());
  const int k = conditions_for_pair_count(d);
  require_dims(k > 0, "squareform: length " + std::to_string(d) +
                          " is not a valid pair count");
  Matrix out = Matrix::Zero(k, k);
  int row = 0;
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      out(i, j) = dist(row);
      out(j, i) = dist(row);
      ++row;
    }
  }
  return out;
}

/** Extracts the upper triangle of a symmetric matrix as a distance vector. */
inline Vector squareform_to_vector(const Matrix& dm) {
  require_dims(dm.rows() == dm.cols(),
               "squareform_to_vector: matrix must be square");
  const int k = static_cast<int>(dm.rows());
  require_dims(k >= 2, "squareform_to_vector: need at least 2 conditions");
  Vector out(pair_count(k));
  int row = 0;
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      out(row++) = dm(i, j);
    }
  }
  return out;
}

/**
 * Second-moment matrix of true pattern differences implied by a distance
 * matrix: Delta = -0.5 * C * Dm * C' where C is the pairwise contrast
 * matrix.  Its diagonal reproduces the distances themselves.
 */
inline Matrix delta_from_rdm(const Matrix& dm) {
  require_dims(dm.rows() == dm.cols(), "delta_from_rdm: matrix must be square");
  const int k = static_cast<int>(dm.rows());
  require_dims(k >= 2, "delta_from_rdm: need at least 2 conditions");
  Matrix c = build_contrast_matrix(k);
  return -0.5 * c * dm * c.transpose();
}

/**
 * Squared Euclidean distance matrix between the rows of @p u, normalized by
 * the number of columns (channels).
 */
inline Matrix rdm_from_patterns(const Matrix& u) {
  const int k = static_cast<int>(u.rows());
  const int p = static_cast<int>(u.cols());
  require_dims(k >= 2, "rdm_from_patterns: need at least 2 rows");
  require_dims(p >= 1, "rdm_from_patterns: need at least 1 column");
  Matrix dm = Matrix::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      double dist = (u.row(i) - u.row(j)).squaredNorm() / p;
      dm(i, j) = dist;
      dm(j, i) = dist;
    }
  }
  return dm;
}

}  // namespace ldc

#endif  // LDC_CORE_HPP
