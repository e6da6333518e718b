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
 * @file variance.hpp
 * @brief Analytical covariance of cross-validated distance estimates.
 *
 * The sampling covariance of the distance vector decomposes into a
 * signal-noise term and a noise-noise term.  For balanced designs both have
 * closed forms in the pair covariance Xi = C * Sigma_K * C'; for arbitrary
 * designs they are double sums over cross-validation folds of covariances
 * between fold-wise difference estimates, which this file derives directly
 * from the design matrices.
 */

#ifndef LDC_VARIANCE_HPP
#define LDC_VARIANCE_HPP

#include <algorithm>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ldc/common.hpp"
#include "ldc/core.hpp"
#include "ldc/glm.hpp"
#include "ldc/io.hpp"

namespace ldc {

/**
 * Predicted sampling distribution of a distance vector: the covariance
 * matrix plus everything needed to rebuild it under a different assumed
 * signal (the pair covariance, partition count, channel count, and the
 * residual trace factor).
 */
struct CovPrediction {
  Matrix v;             ///< D x D predicted covariance of the estimates
  Matrix delta;         ///< D x D signal second-moment matrix used
  Matrix xi;            ///< D x D pair covariance of difference estimates
  double trace_rr = 0.0;  ///< trace(sigma_r * sigma_r), trace(sigma_r) = P
  int m = 0;            ///< number of partitions
  int p = 0;            ///< number of channels
};

/**
 * Closed-form covariance for balanced designs:
 *
 *   V = [ 4 * (delta o xi) / M  +  2 * (xi o xi) / (M * (M-1)) ]
 *       * trace_rr / P^2
 *
 * where o is the elementwise product.  The first term vanishes when the
 * true distances are zero; the second is the noise floor.
 */
inline CovPrediction predict_cov_balanced(const Matrix& delta,
                                          const Matrix& xi, double trace_rr,
                                          int m, int p) {
  require_dims(delta.rows() == delta.cols(),
               "predict_cov_balanced: delta must be square");
  require_dims(xi.rows() == delta.rows() && xi.cols() == delta.cols(),
               "predict_cov_balanced: delta and xi shapes differ");
  require_dims(m >= 2, "predict_cov_balanced: need at least 2 partitions");
  require_dims(p >= 1, "predict_cov_balanced: need at least 1 channel");
  require_numeric(trace_rr > 0.0,
                  "predict_cov_balanced: trace_rr must be positive");
  CovPrediction out;
  out.delta = delta;
  out.xi = xi;
  out.trace_rr = trace_rr;
  out.m = m;
  out.p = p;
  const double pp = static_cast<double>(p) * static_cast<double>(p);
  out.v = (4.0 / m * delta.cwiseProduct(xi) +
           2.0 / (static_cast<double>(m) * (m - 1)) * xi.cwiseProduct(xi)) *
          (trace_rr / pp);
  return out;
}

/**
 * Covariance between two fold-wise difference estimates in a balanced
 * design, expressed as a multiple of the single-partition pair covariance
 * @p xi.  Each side is either a single-partition estimate or the average
 * over the complement; @p same_fold says whether the two sides belong to
 * the same cross-validation fold.
 *
 * Single vs single of the same fold share everything (xi); a single
 * estimate is independent of its own complement (0) but appears in the
 * complement of any other fold with weight 1/(M-1); two complements share
 * M-1 or M-2 partitions depending on whether the folds coincide.
 */
inline double fold_cov_balanced(double xi, int m, bool same_fold,
                                bool a_complement, bool b_complement) {
  require_dims(m >= 2, "fold_cov_balanced: need at least 2 partitions");
  const double mm = static_cast<double>(m);
  if (same_fold) {
    if (!a_complement && !b_complement) return xi;
    if (a_complement != b_complement) return 0.0;
    return xi / (mm - 1.0);
  }
  if (!a_complement && !b_complement) return 0.0;
  if (a_complement != b_complement) return xi / (mm - 1.0);
  return (mm - 2.0) * xi / ((mm - 1.0) * (mm - 1.0));
}

/**
 * Table of fold-wise covariances: for condition pairs (a, b) and folds
 * (m, n) it provides the covariance between any combination of
 * single-partition and complement difference estimates.  Balanced designs
 * generate entries from a single pair covariance matrix; unbalanced
 * designs derive them from the actual design matrices (see
 * UnbalancedStudy::fold_cov_table).
 */
class FoldCovTable {
 public:
  /// entry(pair_a, pair_b, fold_a, fold_b, a_complement, b_complement)
  using Lookup = std::function<double(int, int, int, int, bool, bool)>;

  FoldCovTable(int pair_count, std::vector<std::vector<int>> fold_sets,
               Lookup lookup)
      : pair_count_(pair_count),
        fold_sets_(std::move(fold_sets)),
        lookup_(std::move(lookup)) {
    require_dims(pair_count_ >= 1, "FoldCovTable: need at least one pair");
    require_dims(static_cast<int>(fold_sets_.size()) == pair_count_,
                 "FoldCovTable: one fold set per pair required");
    for (const auto& folds : fold_sets_) {
      require_dims(!folds.empty(), "FoldCovTable: empty fold set for a pair");
    }
  }

  /** Balanced table: every fold usable for every pair, entries from xi. */
  static FoldCovTable balanced(const Matrix& xi, int m) {
    require_dims(xi.rows() == xi.cols(), "FoldCovTable: xi must be square");
    require_dims(m >= 2, "FoldCovTable: need at least 2 partitions");
    const int pairs = static_cast<int>(xi.rows());
    std::vector<int> all_folds(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) all_folds[static_cast<std::size_t>(i)] = i;
    std::vector<std::vector<int>> fold_sets(static_cast<std::size_t>(pairs),
                                            all_folds);
    Matrix xi_copy = xi;
    Lookup lookup = [xi_copy, m](int pa, int pb, int fa, int fb,
                                 bool a_comp, bool b_comp) {
      return fold_cov_balanced(xi_copy(pa, pb), m, fa == fb, a_comp, b_comp);
    };
    return FoldCovTable(pairs, std::move(fold_sets), std::move(lookup));
  }

  int pair_count() const { return pair_count_; }

  const std::vector<std::vector<int>>& fold_sets() const { return fold_sets_; }

  double entry(int pair_a, int pair_b, int fold_a, int fold_b,
               bool a_complement, bool b_complement) const {
    return lookup_(pair_a, pair_b, fold_a, fold_b, a_complement, b_complement);
  }

 private:
  int pair_count_;
  std::vector<std::vector<int>> fold_sets_;
  Lookup lookup_;
};

/** Signal and noise fold sums entering the general covariance formula. */
struct FoldSums {
  Matrix s;  ///< D x D signal-term sum (multiplies delta elementwise)
  Matrix n;  ///< D x D noise-term sum
};

/**
 * Double sums over usable folds of the fold-covariance table:
 *
 *   S_ab = mean over (m, n) of the four single/complement covariances
 *   N_ab = mean over (m, n) of the two independent cross products
 *
 * For balanced tables these reduce to S = 4*xi/M and N = 2*xi^2/(M*(M-1)).
 */
inline FoldSums fold_sums(const FoldCovTable& table) {
  const int d = table.pair_count();
  FoldSums out;
  out.s = Matrix::Zero(d, d);
  out.n = Matrix::Zero(d, d);
  for (int a = 0; a < d; ++a) {
    const auto& folds_a = table.fold_sets()[static_cast<std::size_t>(a)];
    for (int b = 0; b < d; ++b) {
      const auto& folds_b = table.fold_sets()[static_cast<std::size_t>(b)];
      double s_acc = 0.0;
      double n_acc = 0.0;
      for (int fm : folds_a) {
        for (int fn : folds_b) {
          const double ss = table.entry(a, b, fm, fn, false, false);
          const double sc = table.entry(a, b, fm, fn, false, true);
          const double cs = table.entry(a, b, fm, fn, true, false);
          const double cc = table.entry(a, b, fm, fn, true, true);
          s_acc += ss + sc + cs + cc;
          n_acc += ss * cc + sc * cs;
        }
      }
      const double norm = static_cast<double>(folds_a.size()) *
                          static_cast<double>(folds_b.size());
      out.s(a, b) = s_acc / norm;
      out.n(a, b) = n_acc / norm;
    }
  }
  return out;
}

/**
 * General covariance prediction from a fold-covariance table:
 *
 *   V = (delta o S + N) * trace_rr / P^2
 *
 * Agrees with predict_cov_balanced exactly on balanced tables.
 */
inline CovPrediction predict_cov_general(const Matrix& delta,
                                         const FoldCovTable& table,
                                         double trace_rr, int p) {
  require_dims(delta.rows() == delta.cols(),
               "predict_cov_general: delta must be square");
  require_dims(static_cast<int>(delta.rows()) == table.pair_count(),
               "predict_cov_general: delta size does not match table");
  require_dims(p >= 1, "predict_cov_general: need at least 1 channel");
  require_numeric(trace_rr > 0.0,
                  "predict_cov_general: trace_rr must be positive");
  FoldSums sums = fold_sums(table);
  CovPrediction out;
  out.delta = delta;
  out.xi = Matrix();  // no single pair covariance in the general case
  out.trace_rr = trace_rr;
  out.m = 0;  // unknown here; callers with design knowledge fill it in
  out.p = p;
  const double pp = static_cast<double>(p) * static_cast<double>(p);
  out.v = (delta.cwiseProduct(sums.s) + sums.n) * (trace_rr / pp);
  return out;
}

/**
 * Covariance between two generalized-least-squares contrast estimates that
 * share data rows.  @p x_a and @p x_b are designs over a common timeline
 * (rows outside an estimation set must be zero), @p sigma_t the temporal
 * covariance of that timeline, and c_a, c_b contrast vectors in the
 * respective coefficient spaces:
 *
 *   cov = c_a' G_a^-1 (X_a' S^-1 X_b) G_b^-1 c_b,   G = X' S^-1 X
 *
 * per channel of unit-variance noise.  Disjoint timelines give zero.
 */
inline double xi_from_designs(const Matrix& x_a, const Matrix& x_b,
                              const Matrix& sigma_t, const Vector& c_a,
                              const Vector& c_b) {
  require_dims(x_a.rows() == x_b.rows(),
               "xi_from_designs: designs must share the timeline");
  require_dims(sigma_t.rows() == sigma_t.cols() &&
                   sigma_t.rows() == x_a.rows(),
               "xi_from_designs: temporal covariance has wrong size");
  require_dims(c_a.size() == x_a.cols() && c_b.size() == x_b.cols(),
               "xi_from_designs: contrast lengths do not match designs");
  Eigen::LLT<Matrix> llt(sigma_t);
  require_numeric(llt.info() == Eigen::Success,
                  "xi_from_designs: temporal covariance not positive definite");
  Matrix xw_a = llt.matrixL().solve(x_a);
  Matrix xw_b = llt.matrixL().solve(x_b);
  Matrix g_a = xw_a.transpose() * xw_a;
  Matrix g_b = xw_b.transpose() * xw_b;
  Eigen::LDLT<Matrix> ga(g_a);
  Eigen::LDLT<Matrix> gb(g_b);
  require_numeric(ga.info() == Eigen::Success && gb.info() == Eigen::Success,
                  "xi_from_designs: singular information matrix");
  Vector wa = ga.solve(c_a);
  Vector wb = gb.solve(c_b);
  return wa.dot(xw_a.transpose() * (xw_b * wb));
}

/**
 * Cross-validated distance estimation and covariance prediction for
 * designs where conditions may be missing from some runs.  Each run has
 * its own design and temporal covariance; estimates for a fold (one run)
 * or its complement (all other runs, concatenated generalized least
 * squares with shared condition coefficients and per-run intercepts) are
 * formed in a reduced coefficient space holding only the conditions
 * present in that set.  A fold is usable for a condition pair when both
 * conditions are estimable on the fold and on its complement.
 */
class UnbalancedStudy {
 public:
  /**
   * @param condition_designs per run: T_r x K matrix whose column c is the
   *        regressor of condition c (all-zero when the condition does not
   *        occur in the run; intercepts are added internally)
   * @param present per run: sorted list of condition indices with events
   * @param sigma_ts per run: T_r x T_r temporal covariance
   */
  UnbalancedStudy(std::vector<Matrix> condition_designs,
                  std::vector<std::vector<int>> present,
                  std::vector<Matrix> sigma_ts) {
    const int m = static_cast<int>(condition_designs.size());
    require_dims(m >= 2, "UnbalancedStudy: need at least 2 runs");
    require_dims(present.size() == condition_designs.size() &&
                     sigma_ts.size() == condition_designs.size(),
                 "UnbalancedStudy: per-run input counts differ");
    k_ = static_cast<int>(condition_designs.front().cols());
    require_dims(k_ >= 2, "UnbalancedStudy: need at least 2 conditions");
    m_ = m;

    // Whiten each run's full design (conditions + intercept) and cache the
    // information blocks and data projections.
    for (int r = 0; r < m; ++r) {
      const Matrix& xc = condition_designs[static_cast<std::size_t>(r)];
      require_dims(static_cast<int>(xc.cols()) == k_,
                   "UnbalancedStudy: condition counts differ across runs");
      const auto& pres = present[static_cast<std::size_t>(r)];
      require_dims(!pres.empty(), "UnbalancedStudy: run with no conditions");
      for (int c : pres) {
        require_dims(c >= 0 && c < k_,
                     "UnbalancedStudy: condition index out of range");
        require_numeric(xc.col(c).norm() > 0.0,
                        "UnbalancedStudy: present condition has zero column");
      }
      const Matrix& st = sigma_ts[static_cast<std::size_t>(r)];
      require_dims(st.rows() == xc.rows() && st.cols() == xc.rows(),
                   "UnbalancedStudy: temporal covariance has wrong size");
      Eigen::LLT<Matrix> llt(st);
      require_numeric(llt.info() == Eigen::Success,
                      "UnbalancedStudy: temporal covariance not positive "
                      "definite");
      Matrix full(xc.rows(), k_ + 1);
      full.leftCols(k_) = xc;
      full.col(k_).setOnes();
      Run run;
      run.present = pres;
      run.xw = llt.matrixL().solve(full);
      run.info = run.xw.transpose() * run.xw;
      run.llt_l = Matrix(llt.matrixL());
      runs_.push_back(std::move(run));
    }

    // Estimation sets: singles 0..M-1, complements M..2M-1.
    for (int s = 0; s < 2 * m_; ++s) sets_.push_back(make_set(s));
    build_fold_sets();
    build_xi_tensor();
  }

  int conditions() const { return k_; }
  int runs() const { return m_; }
  int pair_count() const { return ldc::pair_count(k_); }

  /** Usable folds per condition pair. */
  const std::vector<std::vector<int>>& fold_sets() const { return folds_; }

  /**
   * Cross-validated distances from per-run data (T_r x P).  Each pair is
   * averaged over its usable folds; P is the channel count.
   */
  Vector distances(const std::vector<Matrix>& y) const {
    require_dims(static_cast<int>(y.size()) == m_,
                 "UnbalancedStudy: need one data matrix per run");
    const Eigen::Index p = y.front().cols();
    for (int r = 0; r < m_; ++r) {
      require_dims(y[static_cast<std::size_t>(r)].rows() ==
                           runs_[static_cast<std::size_t>(r)].xw.rows() &&
                       y[static_cast<std::size_t>(r)].cols() == p,
                   "UnbalancedStudy: data shape does not match design");
    }
    // Per-set coefficient estimates in the reduced layouts.
    std::vector<Matrix> betas;
    betas.reserve(sets_.size());
    for (const Set& set : sets_) {
      Matrix rhs = Matrix::Zero(set.width, p);
      for (std::size_t slot = 0; slot < set.members.size(); ++slot) {
        const int r = set.members[slot];
        const Run& run = runs_[static_cast<std::size_t>(r)];
        Matrix yw = run.llt_l.triangularView<Eigen::Lower>().solve(
            y[static_cast<std::size_t>(r)]);
        Matrix proj = run.xw.transpose() * yw;  // (K+1) x P
        scatter_rows(set, static_cast<int>(slot), proj, &rhs);
      }
      betas.push_back(set.g_solver.solve(rhs));
    }

    const auto pairs = pair_list(k_);
    Vector d = Vector::Zero(pair_count());
    for (int j = 0; j < pair_count(); ++j) {
      const auto& usable = folds_[static_cast<std::size_t>(j)];
      double acc = 0.0;
      for (int fm : usable) {
        const Set& single = sets_[static_cast<std::size_t>(fm)];
        const Set& rest = sets_[static_cast<std::size_t>(m_ + fm)];
        Vector ca = contrast_in_layout(single, pairs[static_cast<std::size_t>(j)]);
        Vector cb = contrast_in_layout(rest, pairs[static_cast<std::size_t>(j)]);
        acc += (ca.transpose() * betas[static_cast<std::size_t>(fm)])
                   .dot(cb.transpose() * betas[static_cast<std::size_t>(m_ + fm)]);
      }
      d(j) = acc / (static_cast<double>(usable.size()) *
                    static_cast<double>(p));
    }
    return d;
  }

  /**
   * Covariance between the fold-wise difference estimates of @p pair_a on
   * fold @p fold_a and @p pair_b on fold @p fold_b, per channel of
   * unit-variance noise.
   */
  double fold_cov(int pair_a, int pair_b, int fold_a, int fold_b,
                  bool a_complement, bool b_complement) const {
    const int sa = a_complement ? m_ + fold_a : fold_a;
    const int sb = b_complement ? m_ + fold_b : fold_b;
    return xi_tensor_[tensor_index(pair_a, pair_b, sa, sb)];
  }

  /** Fold-covariance table bound to this study's designs. */
  FoldCovTable fold_cov_table() const {
    auto tensor = std::make_shared<std::vector<double>>(xi_tensor_);
    const int d = pair_count();
    const int m = m_;
    FoldCovTable::Lookup lookup = [tensor, d, m](int pa, int pb, int fa,
                                                 int fb, bool ac, bool bc) {
      const int sa = ac ? m + fa : fa;
      const int sb = bc ? m + fb : fb;
      const std::size_t sets = static_cast<std::size_t>(2 * m);
      std::size_t idx =
          ((static_cast<std::size_t>(pa) * static_cast<std::size_t>(d) +
            static_cast<std::size_t>(pb)) *
               sets +
           static_cast<std::size_t>(sa)) *
              sets +
          static_cast<std::size_t>(sb);
      return (*tensor)[idx];
    };
    return FoldCovTable(d, folds_, std::move(lookup));
  }

  /** Predicted covariance of distances() for signal @p delta. */
  CovPrediction predict_cov(const Matrix& delta, double trace_rr,
                            int p) const {
    CovPrediction out = predict_cov_general(delta, fold_cov_table(), trace_rr, p);
    out.m = m_;
    return out;
  }

 private:
  struct Run {
    std::vector<int> present;
    Matrix xw;     ///< whitened [conditions | intercept] design
    Matrix info;   ///< xw' * xw, (K+1) x (K+1)
    Matrix llt_l;  ///< lower Cholesky factor of the temporal covariance
  };

  struct Set {
    std::vector<int> members;     ///< run indices in the set
    std::vector<int> cond_col;    ///< K entries: layout column or -1
    std::vector<int> conds;       ///< conditions present in the set
    int width = 0;                ///< conditions + one intercept per run
    Eigen::LLT<Matrix> g_solver;  ///< factorized information matrix
    Matrix g;                     ///< assembled information matrix
  };

  Set make_set(int set_id) const {
    Set set;
    if (set_id < m_) {
      set.members = {set_id};
    } else {
      for (int r = 0; r < m_; ++r) {
        if (r != set_id - m_) set.members.push_back(r);
      }
    }
    std::vector<bool> has(static_cast<std::size_t>(k_), false);
    for (int r : set.members) {
      for (int c : runs_[static_cast<std::size_t>(r)].present) {
        has[static_cast<std::size_t>(c)] = true;
      }
    }
    set.cond_col.assign(static_cast<std::size_t>(k_), -1);
    for (int c = 0; c < k_; ++c) {
      if (has[static_cast<std::size_t>(c)]) {
        set.cond_col[static_cast<std::size_t>(c)] =
            static_cast<int>(set.conds.size());
        set.conds.push_back(c);
      }
    }
    set.width = static_cast<int>(set.conds.size()) +
                static_cast<int>(set.members.size());

    Matrix g = Matrix::Zero(set.width, set.width);
    for (std::size_t slot = 0; slot < set.members.size(); ++slot) {
      const Run& run = runs_[static_cast<std::size_t>(set.members[slot])];
      accumulate_info(set, static_cast<int>(slot), run.info, set,
                      static_cast<int>(slot), &g);
    }
    set.g = g;
    set.g_solver.compute(g);
    require_numeric(set.g_solver.info() == Eigen::Success,
                    "UnbalancedStudy: singular information matrix for an "
                    "estimation set");
    return set;
  }

  /** Layout column of the intercept for member slot @p slot. */
  static int intercept_col(const Set& set, int slot) {
    return static_cast<int>(set.conds.size()) + slot;
  }

  /**
   * Adds a run's (K+1)-space information block into layout coordinates:
   * rows in @p row_set (member slot @p row_slot), columns in @p col_set
   * (member slot @p col_slot).
   */
  void accumulate_info(const Set& row_set, int row_slot, const Matrix& info,
                       const Set& col_set, int col_slot, Matrix* out) const {
    auto row_of = [&](int coeff) {
      if (coeff < k_) return row_set.cond_col[static_cast<std::size_t>(coeff)];
      return intercept_col(row_set, row_slot);
    };
    auto col_of = [&](int coeff) {
      if (coeff < k_) return col_set.cond_col[static_cast<std::size_t>(coeff)];
      return intercept_col(col_set, col_slot);
    };
    for (int a = 0; a <= k_; ++a) {
      const int ra = row_of(a);
      if (ra < 0) continue;
      for (int b = 0; b <= k_; ++b) {
        const int cb = col_of(b);
        if (cb < 0) continue;
        (*out)(ra, cb) += info(a, b);
      }
    }
  }

  /** Adds a (K+1) x P projection block into a set-layout right-hand side. */
  void scatter_rows(const Set& set, int slot, const Matrix& proj,
                    Matrix* rhs) const {
    for (int a = 0; a <= k_; ++a) {
      const int row = (a < k_)
                          ? set.cond_col[static_cast<std::size_t>(a)]
                          : intercept_col(set, slot);
      if (row < 0) continue;
      rhs->row(row) += proj.row(a);
    }
  }

  /** Contrast vector of a condition pair in a set's layout. */
  static Vector contrast_in_layout(const Set& set, std::pair<int, int> pair) {
    const int ca = set.cond_col[static_cast<std::size_t>(pair.first)];
    const int cb = set.cond_col[static_cast<std::size_t>(pair.second)];
    require_dims(ca >= 0 && cb >= 0,
                 "UnbalancedStudy: pair not estimable in set");
    Vector c = Vector::Zero(set.width);
    c(ca) = 1.0;
    c(cb) = -1.0;
    return c;
  }

  bool pair_in_set(const Set& set, std::pair<int, int> pair) const {
    return set.cond_col[static_cast<std::size_t>(pair.first)] >= 0 &&
           set.cond_col[static_cast<std::size_t>(pair.second)] >= 0;
  }

  void build_fold_sets() {
    const auto pairs = pair_list(k_);
    folds_.resize(pairs.size());
    for (std::size_t j = 0; j < pairs.size(); ++j) {
      for (int r = 0; r < m_; ++r) {
        if (pair_in_set(sets_[static_cast<std::size_t>(r)], pairs[j]) &&
            pair_in_set(sets_[static_cast<std::size_t>(m_ + r)], pairs[j])) {
          folds_[j].push_back(r);
        }
      }
      require_dims(!folds_[j].empty(),
                   "UnbalancedStudy: condition pair with no usable fold");
    }
  }

  /** Cross-information between two sets: sum over shared runs. */
  Matrix cross_info(const Set& sa, const Set& sb) const {
    Matrix out = Matrix::Zero(sa.width, sb.width);
    for (std::size_t slot_a = 0; slot_a < sa.members.size(); ++slot_a) {
      const int r = sa.members[slot_a];
      auto it = std::find(sb.members.begin(), sb.members.end(), r);
      if (it == sb.members.end()) continue;
      const int slot_b = static_cast<int>(it - sb.members.begin());
      accumulate_info(sa, static_cast<int>(slot_a),
                      runs_[static_cast<std::size_t>(r)].info, sb, slot_b,
                      &out);
    }
    return out;
  }

  std::size_t tensor_index(int pa, int pb, int sa, int sb) const {
    const std::size_t sets = static_cast<std::size_t>(2 * m_);
    const std::size_t d = static_cast<std::size_t>(pair_count());
    return ((static_cast<std::size_t>(pa) * d + static_cast<std::size_t>(pb)) *
                sets +
            static_cast<std::size_t>(sa)) *
               sets +
           static_cast<std::size_t>(sb);
  }

  void build_xi_tensor() {
    const auto pairs = pair_list(k_);
    const int d = pair_count();
    const int n_sets = 2 * m_;
    xi_tensor_.assign(static_cast<std::size_t>(d) * static_cast<std::size_t>(d) *
                          static_cast<std::size_t>(n_sets) *
                          static_cast<std::size_t>(n_sets),
                      0.0);
    // Pre-solve G^-1 c for every (set, pair) combination that exists.
    std::vector<std::vector<Vector>> weights(
        static_cast<std::size_t>(n_sets),
        std::vector<Vector>(static_cast<std::size_t>(d)));
    for (int s = 0; s < n_sets; ++s) {
      for (int j = 0; j < d; ++j) {
        const Set& set = sets_[static_cast<std::size_t>(s)];
        if (!pair_in_set(set, pairs[static_cast<std::size_t>(j)])) continue;
        weights[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)] =
            set.g_solver.solve(
                contrast_in_layout(set, pairs[static_cast<std::size_t>(j)]));
      }
    }
    for (int sa = 0; sa < n_sets; ++sa) {
      for (int sb = 0; sb < n_sets; ++sb) {
        Matrix cross = cross_info(sets_[static_cast<std::size_t>(sa)],
                                  sets_[static_cast<std::size_t>(sb)]);
        for (int pa = 0; pa < d; ++pa) {
          const Vector& wa =
              weights[static_cast<std::size_t>(sa)][static_cast<std::size_t>(pa)];
          if (wa.size() == 0) continue;
          Vector cross_wa = cross.transpose() * wa;
          for (int pb = 0; pb < d; ++pb) {
            const Vector& wb = weights[static_cast<std::size_t>(sb)]
                                      [static_cast<std::size_t>(pb)];
            if (wb.size() == 0) continue;
            xi_tensor_[tensor_index(pa, pb, sa, sb)] = cross_wa.dot(wb);
          }
        }
      }
    }
  }

  int k_ = 0;
  int m_ = 0;
  std::vector<Run> runs_;
  std::vector<Set> sets_;
  std::vector<std::vector<int>> folds_;
  std::vector<double> xi_tensor_;
};

/**
 * Persists a covariance prediction as a file set sharing @p prefix:
 * prefix.v.ldcm, prefix.delta.ldcm, prefix.xi.ldcm plus a text prefix.meta
 * with the scalar fields.
 */
inline void save_cov_prediction(const std::string& prefix,
                                const CovPrediction& pred) {
  write_matrix(prefix + ".v.ldcm", pred.v);
  write_matrix(prefix + ".delta.ldcm", pred.delta);
  Matrix xi = pred.xi.size() == 0 ? Matrix::Zero(pred.v.rows(), pred.v.cols())
                                  : pred.xi;
  write_matrix(prefix + ".xi.ldcm", xi);
  std::string meta;
  meta += "trace_rr = " + format_full(pred.trace_rr) + "\n";
  meta += "m = " + std::to_string(pred.m) + "\n";
  meta += "p = " + std::to_string(pred.p) + "\n";
  write_text(prefix + ".meta", meta);
}

/** Loads a covariance prediction saved by save_cov_prediction. */
inline CovPrediction load_cov_prediction(const std::string& prefix) {
  CovPrediction pred;
  pred.v = read_matrix(prefix + ".v.ldcm");
  pred.delta = read_matrix(prefix + ".delta.ldcm");
  pred.xi = read_matrix(prefix + ".xi.ldcm");
  RunConfig meta = RunConfig::parse_file(prefix + ".meta");
  meta.validate_keys({"trace_rr", "m", "p"});
  pred.trace_rr = meta.get_double("trace_rr");
  pred.m = static_cast<int>(meta.get_int("m"));
  pred.p = static_cast<int>(meta.get_int("p"));
  require_dims(pred.v.rows() == pred.v.cols() &&
                   pred.delta.rows() == pred.v.rows() &&
                   pred.xi.rows() == pred.v.rows(),
               "load_cov_prediction: inconsistent matrix shapes");
  return pred;
}

}  // namespace ldc

#endif  // LDC_VARIANCE_HPP
