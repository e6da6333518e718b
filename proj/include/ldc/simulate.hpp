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
 * @file simulate.hpp
 * @brief Ground-truth simulation: matrix-variate normal sampling, pattern
 *        construction from a target distance matrix, and spatial lattice
 *        geometry with its covariance kernel.
 */

#ifndef LDC_SIMULATE_HPP
#define LDC_SIMULATE_HPP

#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ldc/common.hpp"
#include "ldc/core.hpp"
#include "ldc/rng.hpp"

namespace ldc {

/** Matrix of iid standard Gaussians, filled row by row. */
inline Matrix gaussian_matrix(int rows, int cols, Rng& rng) {
  Matrix z(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) z(r, c) = rng.gaussian();
  }
  return z;
}

/**
 * Lower Cholesky factor of a positive semidefinite matrix.  A zero matrix
 * factors to zero (the degenerate no-noise limit); otherwise a failed
 * factorization is retried once with 1e-10 added to the diagonal.
 */
inline Matrix cholesky_psd(const Matrix& s) {
  require_dims(s.rows() == s.cols(), "cholesky_psd: matrix must be square");
  if (s.isZero(0.0)) return Matrix::Zero(s.rows(), s.cols());
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Matrix jittered = s;
  jittered.diagonal().array() += 1e-10;
  llt.compute(jittered);
  require_numeric(llt.info() == Eigen::Success,
                  "cholesky_psd: matrix is not positive semidefinite");
  return llt.matrixL();
}

/**
 * Matrix-variate normal sampler with separable covariance: draws
 * mean + L_row * Z * L_col' where Z is iid standard normal and L_row,
 * L_col are the Cholesky factors of the row and column covariances.
 */
class MatrixNormalSampler {
 public:
  MatrixNormalSampler(Matrix mean, const Matrix& row_cov,
                      const Matrix& col_cov)
      : mean_(std::move(mean)) {
    require_dims(row_cov.rows() == mean_.rows(),
                 "MatrixNormalSampler: row covariance has wrong size");
    require_dims(col_cov.rows() == mean_.cols(),
                 "MatrixNormalSampler: column covariance has wrong size");
    l_row_ = cholesky_psd(row_cov);
    l_col_ = cholesky_psd(col_cov);
  }

  const Matrix& mean() const { return mean_; }

  Matrix draw(Rng& rng) const {
    Matrix z = gaussian_matrix(static_cast<int>(mean_.rows()),
                               static_cast<int>(mean_.cols()), rng);
    return mean_ + l_row_ * z * l_col_.transpose();
  }

 private:
  Matrix mean_;
  Matrix l_row_;
  Matrix l_col_;
};

/** One draw of a matrix-variate normal with separable covariance. */
inline Matrix sample_matrix_normal(const Matrix& mean, const Matrix& row_cov,
                                   const Matrix& col_cov, Rng& rng) {
  return MatrixNormalSampler(mean, row_cov, col_cov).draw(rng);
}

/**
 * Condition patterns (K x P) whose pairwise squared distances, normalized
 * by P, reproduce @p dm exactly.  The centered Gram matrix of the target
 * is eigendecomposed, patterns are built from the non-negative spectrum,
 * scaled by sqrt(P), and embedded into P channels under a random rotation
 * drawn from @p rng.  Throws when the target is not realizable (negative
 * Gram eigenvalues beyond roundoff).
 */
inline Matrix patterns_from_rdm(const Matrix& dm, int p, Rng& rng) {
  require_dims(dm.rows() == dm.cols(), "patterns_from_rdm: matrix not square");
  const int k = static_cast<int>(dm.rows());
  require_dims(k >= 2, "patterns_from_rdm: need at least 2 conditions");
  require_dims(p >= k, "patterns_from_rdm: need at least K channels");
  require_numeric(dm.isApprox(dm.transpose(), 1e-12),
                  "patterns_from_rdm: matrix must be symmetric");

  Matrix j = Matrix::Identity(k, k) - Matrix::Constant(k, k, 1.0 / k);
  Matrix gram = -0.5 * j * dm * j;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  require_numeric(eig.info() == Eigen::Success,
                  "patterns_from_rdm: eigendecomposition failed");
  const Vector& lambda = eig.eigenvalues();
  const double scale = std::max(1.0, std::abs(lambda(k - 1)));
  require_numeric(lambda(0) > -1e-10 * scale,
                  "patterns_from_rdm: target distances are not realizable");

  Matrix u0(k, k);
  for (int i = 0; i < k; ++i) {
    const double l = std::max(0.0, lambda(i));
    u0.col(i) = eig.eigenvectors().col(i) * std::sqrt(l);
  }

  // Random orthonormal frame: thin QR of a Gaussian P x K matrix.
  Matrix g = gaussian_matrix(p, k, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(p, k);
  return std::sqrt(static_cast<double>(p)) * u0 * q.transpose();
}

/** Cubic lattice of voxel centers within a sphere. */
struct RoiGrid {
  Matrix coords;  ///< P x 3 coordinates in mm
  int p = 0;      ///< number of voxels
};

/**
 * Voxel centers at integer multiples of @p voxel_mm whose distance from
 * the origin is at most @p radius_mm, in lexicographic (x, y, z) order.
 */
inline RoiGrid build_roi(double radius_mm, double voxel_mm) {
  require_config(radius_mm > 0.0, "build_roi: radius must be positive");
  require_config(voxel_mm > 0.0, "build_roi: voxel size must be positive");
  const int n = static_cast<int>(std::floor(radius_mm / voxel_mm));
  const double r2 = radius_mm * radius_mm;
  std::vector<std::array<double, 3>> pts;
  for (int x = -n; x <= n; ++x) {
    for (int y = -n; y <= n; ++y) {
      for (int z = -n; z <= n; ++z) {
        const double dx = x * voxel_mm;
        const double dy = y * voxel_mm;
        const double dz = z * voxel_mm;
        if (dx * dx + dy * dy + dz * dz <= r2) {
          pts.push_back({dx, dy, dz});
        }
      }
    }
  }
  RoiGrid grid;
  grid.p = static_cast<int>(pts.size());
  grid.coords = Matrix(grid.p, 3);
  for (int i = 0; i < grid.p; ++i) {
    for (int c = 0; c < 3; ++c) grid.coords(i, c) = pts[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
  }
  return grid;
}

/**
 * Squared-exponential spatial correlation between voxel centers:
 * exp(-|x_i - x_j|^2 / s_eps^2), unit diagonal.  A non-positive length
 * scale degenerates to the identity (independent voxels).
 */
inline Matrix spatial_cov(const RoiGrid& grid, double s_eps) {
  const int p = grid.p;
  require_dims(p >= 1, "spatial_cov: empty grid");
  if (s_eps <= 0.0) return Matrix::Identity(p, p);
  Matrix s(p, p);
  const double inv = 1.0 / (s_eps * s_eps);
  for (int i = 0; i < p; ++i) {
    s(i, i) = 1.0;
    for (int j = i + 1; j < p; ++j) {
      const double d2 = (grid.coords.row(i) - grid.coords.row(j)).squaredNorm();
      const double value = std::exp(-d2 * inv);
      s(i, j) = value;
      s(j, i) = value;
    }
  }
  return s;
}

/**
 * Timeseries generator for one dataset: per-run signal X_r * U plus
 * separable noise L_T Z L_S' with amplitude @p noise_sd per sample.
 */
class TimeseriesSimulator {
 public:
  /**
   * @param condition_designs per run: T_r x K condition regressors
   * @param u_true K x P condition patterns (scaled to signal amplitude)
   * @param sigma_ts per run: T_r x T_r temporal noise covariance
   * @param sigma_s P x P spatial noise covariance
   * @param noise_sd noise standard deviation multiplier
   */
  TimeseriesSimulator(std::vector<Matrix> condition_designs, Matrix u_true,
                      const std::vector<Matrix>& sigma_ts,
                      const Matrix& sigma_s, double noise_sd = 1.0)
      : designs_(std::move(condition_designs)),
        u_true_(std::move(u_true)),
        noise_sd_(noise_sd) {
    require_dims(!designs_.empty(), "TimeseriesSimulator: no runs");
    require_dims(sigma_ts.size() == designs_.size(),
                 "TimeseriesSimulator: one temporal covariance per run");
    require_config(noise_sd >= 0.0,
                   "TimeseriesSimulator: negative noise amplitude");
    for (std::size_t r = 0; r < designs_.size(); ++r) {
      require_dims(designs_[r].cols() == u_true_.rows(),
                   "TimeseriesSimulator: design and patterns disagree on K");
      require_dims(sigma_ts[r].rows() == designs_[r].rows(),
                   "TimeseriesSimulator: temporal covariance has wrong size");
      l_ts_.push_back(cholesky_psd(sigma_ts[r]));
    }
    require_dims(sigma_s.rows() == u_true_.cols(),
                 "TimeseriesSimulator: spatial covariance has wrong size");
    l_s_ = cholesky_psd(sigma_s);
  }

  /** Draws all runs of one replication. */
  std::vector<Matrix> draw_runs(Rng& rng) const {
    std::vector<Matrix> out;
    out.reserve(designs_.size());
    for (std::size_t r = 0; r < designs_.size(); ++r) {
      Matrix z = gaussian_matrix(static_cast<int>(designs_[r].rows()),
                                 static_cast<int>(u_true_.cols()), rng);
      out.push_back(designs_[r] * u_true_ +
                    noise_sd_ * (l_ts_[r] * z * l_s_.transpose()));
    }
    return out;
  }

 private:
  std::vector<Matrix> designs_;
  Matrix u_true_;
  std::vector<Matrix> l_ts_;
  Matrix l_s_;
  double noise_sd_;
};

}  // namespace ldc

#endif  // LDC_SIMULATE_HPP
