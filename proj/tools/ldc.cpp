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
 * @file ldc.cpp
 * @brief Command-line front end: simulation experiments, cross-validated
 *        distance estimation with covariance predictions, z-tests, and
 *        model comparison.  Every subcommand is a thin shell over the
 *        library; all numeric file output is bit-exact on re-runs.
 */

#include <cctype>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ldc/ldc.hpp"

namespace {

using ldc::ConfigError;
using ldc::CovPrediction;
using ldc::DimensionError;
using ldc::Matrix;
using ldc::RunConfig;
using ldc::Vector;

/** Reads a matrix file holding a single row or column vector. */
Vector read_vector_file(const std::string& path) {
  Matrix m = ldc::read_matrix(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw ldc::DimensionError("expected a vector in " + path + ", got " +
                            std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()));
}

/** A parsed distance contrast: one index, or a difference of two. */
struct ContrastSpec {
  Vector c;       ///< contrast over the distance vector
  int first = 0;  ///< 0-based tested index
  int second = -1;  ///< 0-based subtracted index, -1 for a single index
};

/**
 * Parses "j" or "j-l" with 1-based distance indices into a contrast
 * vector of length @p d.
 */
ContrastSpec parse_contrast(const std::string& text, int d) {
  const auto bad = [&text](const std::string& why) {
    return ConfigError("contrast '" + text + "': " + why +
                       "; expected \"j\" or \"j-l\" with 1-based indices");
  };
  std::vector<long> numbers;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t start = pos;
    while (pos < text.size() &&
           std::isdigit(static_cast<unsigned char>(text[pos]))) {
      ++pos;
    }
    if (pos == start || pos - start > 9) throw bad("malformed index");
    numbers.push_back(std::stol(text.substr(start, pos - start)));
    if (pos == text.size()) break;
    if (text[pos] != '-' || numbers.size() == 2) throw bad("malformed syntax");
    ++pos;
    if (pos == text.size()) throw bad("missing second index");
  }
  if (numbers.empty()) throw bad("empty");

  ContrastSpec spec;
  spec.c = Vector::Zero(d);
  for (long index : numbers) {
    if (index < 1 || index > d) {
      throw bad("index " + std::to_string(index) + " outside 1.." +
                std::to_string(d));
    }
  }
  spec.first = static_cast<int>(numbers[0] - 1);
  spec.c(spec.first) = 1.0;
  if (numbers.size() == 2) {
    spec.second = static_cast<int>(numbers[1] - 1);
    if (spec.second == spec.first) throw bad("indices must differ");
    spec.c(spec.second) = -1.0;
  }
  return spec;
}

/** Formats with six significant digits for the headline lines. */
std::string format_brief(double x) {
  std::ostringstream out;
  out << std::setprecision(6) << x;
  return out.str();
}

int run_simulate(const std::string& kind, const std::string& config_path,
                 std::uint64_t seed, const std::string& out_dir) {
  RunConfig cfg;
  if (!config_path.empty()) cfg = RunConfig::parse_file(config_path);
  ldc::run_experiment(kind, cfg, seed, out_dir);
  std::cout << "experiment = " << kind << "\n"
            << "seed = " << seed << "\n"
            << "out_dir = " << out_dir << "\n";
  return 0;
}

/** Shared tail of the distances subcommand: predict, save, report. */
int finish_distances(const std::vector<Matrix>& u, double trace_rr,
                     const std::string& out_prefix) {
  const int m = static_cast<int>(u.size());
  const int p = static_cast<int>(u.front().cols());
  Vector d_hat = ldc::crossnobis_distances(u);
  Matrix xi = ldc::pair_cov_from_condition_cov(ldc::estimate_condition_cov(u));
  // The signal term of the prediction uses the estimated distances with
  // negative values clamped to zero (a distance structure must be a valid
  // dissimilarity matrix).
  Matrix delta =
      ldc::delta_from_rdm(ldc::squareform(Vector(d_hat.cwiseMax(0.0))));
  CovPrediction pred = ldc::predict_cov_balanced(delta, xi, trace_rr, m, p);

  ldc::write_matrix(out_prefix + ".d.ldcm", Matrix(d_hat));
  ldc::save_cov_prediction(out_prefix, pred);

  std::cout << "partitions = " << m << "\n"
            << "channels = " << p << "\n"
            << "trace_rr = " << ldc::format_full(trace_rr) << "\n";
  for (int j = 0; j < d_hat.size(); ++j) {
    std::cout << "d_" << (j + 1) << " = " << ldc::format_full(d_hat(j))
              << "\n";
  }
  return 0;
}

int run_distances_patterns(const std::vector<std::string>& files,
                           const std::string& out_prefix) {
  std::vector<Matrix> u;
  u.reserve(files.size());
  for (const std::string& path : files) u.push_back(ldc::read_matrix(path));
  if (u.size() < 2) {
    throw DimensionError("distances: need at least 2 partition files");
  }
  // Pattern inputs are taken as already prewhitened, so the residual
  // trace factor collapses to the channel count.
  return finish_distances(u, static_cast<double>(u.front().cols()),
                          out_prefix);
}

/** Parsed timeseries design: shared dimensions plus per-run events. */
struct DesignSpec {
  int k = 0;
  int t = 0;
  double dt = 0.0;
  ldc::TemporalCov temporal;
  std::vector<std::vector<std::vector<ldc::Event>>> run_events;
};

DesignSpec parse_design(const std::string& path) {
  RunConfig cfg = RunConfig::parse_file(path);
  const std::set<std::string> design_keys{"design.k", "design.t", "design.dt",
                                          "design.temporal"};
  std::set<int> run_indices;
  for (const std::string& key : cfg.keys()) {
    if (design_keys.count(key) != 0) continue;
    // Only run sections of the form [run.N] with a single events list are
    // accepted; anything else is a config error.
    const std::string prefix = "run.";
    const std::string suffix = ".events";
    if (key.size() > prefix.size() + suffix.size() &&
        key.compare(0, prefix.size(), prefix) == 0 &&
        key.compare(key.size() - suffix.size(), suffix.size(), suffix) == 0) {
      const std::string digits =
          key.substr(prefix.size(), key.size() - prefix.size() - suffix.size());
      bool numeric = !digits.empty();
      for (char ch : digits) {
        numeric = numeric && std::isdigit(static_cast<unsigned char>(ch));
      }
      if (numeric) {
        run_indices.insert(std::stoi(digits));
        continue;
      }
    }
    throw ConfigError("design " + path + ": unknown key '" + key + "'");
  }

  DesignSpec spec;
  spec.k = static_cast<int>(cfg.get_int("design.k"));
  spec.t = static_cast<int>(cfg.get_int("design.t"));
  spec.dt = cfg.get_double("design.dt");
  const std::string temporal =
      cfg.get_string_or("design.temporal", "double_exponential");
  if (temporal == "identity") {
    spec.temporal = ldc::TemporalCov::identity();
  } else if (temporal == "double_exponential") {
    spec.temporal = ldc::TemporalCov::double_exponential();
  } else {
    throw ConfigError("design " + path + ": temporal must be identity or " +
                      "double_exponential, got '" + temporal + "'");
  }
  ldc::require_config(spec.k >= 2, "design: need at least 2 conditions");

  const int m = static_cast<int>(run_indices.size());
  ldc::require_config(m >= 2, "design: need at least 2 run sections");
  for (int run = 0; run < m; ++run) {
    ldc::require_config(run_indices.count(run) != 0,
                        "design: run sections must be numbered 0.." +
                            std::to_string(m - 1) + " without gaps");
    std::vector<double> flat =
        cfg.get_double_list("run." + std::to_string(run) + ".events");
    ldc::require_config(!flat.empty() && flat.size() % 3 == 0,
                        "design run." + std::to_string(run) +
                            ": events must be (condition onset duration) " +
                            "triples");
    std::vector<std::vector<ldc::Event>> events(
        static_cast<std::size_t>(spec.k));
    for (std::size_t i = 0; i < flat.size(); i += 3) {
      const double cond_raw = flat[i];
      const int cond = static_cast<int>(cond_raw);
      ldc::require_config(
          cond_raw == static_cast<double>(cond) && cond >= 0 &&
              cond < spec.k,
          "design run." + std::to_string(run) +
              ": condition indices are 0-based integers below k");
      events[static_cast<std::size_t>(cond)].push_back(
          ldc::Event{flat[i + 1], flat[i + 2]});
    }
    spec.run_events.push_back(std::move(events));
  }
  return spec;
}

int run_distances_timeseries(const std::vector<std::string>& files,
                             const std::string& design_path, double h,
                             const std::string& out_prefix) {
  DesignSpec design = parse_design(design_path);
  const int m = static_cast<int>(design.run_events.size());
  if (static_cast<int>(files.size()) != m) {
    throw DimensionError("distances: " + std::to_string(files.size()) +
                         " timeseries files for " + std::to_string(m) +
                         " design runs");
  }

  std::vector<double> hrf = ldc::sample_hrf(design.dt / 16.0);
  Matrix sigma_t = design.temporal.build(design.t);

  std::vector<Matrix> residuals;
  std::vector<Matrix> estimates;
  for (int run = 0; run < m; ++run) {
    Matrix y = ldc::read_matrix(files[static_cast<std::size_t>(run)]);
    if (y.rows() != design.t) {
      throw DimensionError("distances: " +
                           files[static_cast<std::size_t>(run)] + " has " +
                           std::to_string(y.rows()) + " samples, design has " +
                           std::to_string(design.t));
    }
    Matrix x = ldc::build_design(design.run_events[static_cast<std::size_t>(
                                     run)],
                                 design.t, design.dt, hrf);
    ldc::GlmFit fit = ldc::gls_fit(y, x, sigma_t);
    residuals.push_back(fit.residuals);
    estimates.push_back(fit.condition_estimates(design.k));
  }

  // One non-condition regressor (the intercept) is appended per design.
  ldc::SpatialWhitening whitening =
      ldc::make_spatial_whitening(residuals, design.k, 1, h);
  std::vector<Matrix> u;
  u.reserve(static_cast<std::size_t>(m));
  for (const Matrix& estimate : estimates) {
    u.push_back(estimate * whitening.whitener);
  }
  return finish_distances(u, whitening.residual.trace_rr, out_prefix);
}

int run_ztest(const std::string& dist_path, const std::string& cov_prefix,
              const std::string& contrast_text, const std::string& null_kind) {
  Vector d_hat = read_vector_file(dist_path);
  CovPrediction pred = ldc::load_cov_prediction(cov_prefix);
  if (pred.v.rows() != d_hat.size()) {
    throw DimensionError("ztest: " + std::to_string(d_hat.size()) +
                         " distances but a " + std::to_string(pred.v.rows()) +
                         "-dimensional covariance prediction");
  }
  ContrastSpec spec = parse_contrast(contrast_text,
                                     static_cast<int>(d_hat.size()));

  CovPrediction used = pred;
  if (null_kind == "zero") {
    used = ldc::null_cov_from_xi(d_hat, ldc::NullSpec::zero_distances(),
                                 pred.xi, pred.trace_rr, pred.m, pred.p);
  } else if (null_kind == "equalized") {
    if (spec.second < 0) {
      throw ConfigError(
          "ztest: the equalized null applies to difference contrasts only");
    }
    used = ldc::null_cov_from_xi(
        d_hat, ldc::NullSpec::equalized_distances(spec.first, spec.second),
        pred.xi, pred.trace_rr, pred.m, pred.p);
  }

  ldc::ContrastTest test = ldc::z_test(d_hat, spec.c, used);
  std::cout << "z = " << format_brief(test.z) << "\n"
            << "p = " << format_brief(test.p) << "\n"
            << "z_full = " << ldc::format_full(test.z) << "\n"
            << "p_full = " << ldc::format_full(test.p) << "\n"
            << "contrast_value = " << ldc::format_full(test.contrast) << "\n"
            << "contrast_variance = " << ldc::format_full(test.variance)
            << "\n"
            << "null = " << (null_kind.empty() ? "none" : null_kind) << "\n";
  return 0;
}

int run_model_compare(const std::string& dist_path,
                      const std::string& cov_prefix,
                      const std::vector<std::string>& model_files,
                      const std::string& method_name) {
  Vector d_hat = read_vector_file(dist_path);
  CovPrediction pred = ldc::load_cov_prediction(cov_prefix);
  std::vector<Vector> models;
  models.reserve(model_files.size());
  for (const std::string& path : model_files) {
    Vector model = read_vector_file(path);
    if (model.size() != d_hat.size()) {
      throw DimensionError("model-compare: model " + path + " has " +
                           std::to_string(model.size()) + " entries, data " +
                           std::to_string(d_hat.size()));
    }
    models.push_back(std::move(model));
  }

  ldc::ScoreMethod method = ldc::ScoreMethod::kSpearman;
  if (method_name == "spearman") {
    method = ldc::ScoreMethod::kSpearman;
  } else if (method_name == "cosine") {
    method = ldc::ScoreMethod::kCosine;
  } else if (method_name == "loglik") {
    method = ldc::ScoreMethod::kLogLikelihood;
  } else {
    throw ConfigError("model-compare: unknown method '" + method_name + "'");
  }

  ldc::ModelSelection sel = ldc::select_model(
      d_hat, models, method, pred.xi, pred.trace_rr, pred.m, pred.p);
  std::cout << "method = " << method_name << "\n";
  for (std::size_t j = 0; j < models.size(); ++j) {
    std::cout << "score_" << (j + 1) << " = "
              << ldc::format_full(sel.scores[j]) << "\n";
    if (method == ldc::ScoreMethod::kLogLikelihood) {
      std::cout << "s_hat_" << (j + 1) << " = "
                << ldc::format_full(sel.fits[j].s) << "\n"
                << "iterations_" << (j + 1) << " = " << sel.fits[j].iterations
                << "\n";
    }
  }
  std::cout << "winner = " << (sel.best + 1) << "\n"
            << "tie = " << (sel.tie ? "true" : "false") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Cross-validated distance estimation with analytical sampling "
      "covariances"};
  app.require_subcommand(1);

  // --- simulate ---------------------------------------------------------
  std::string sim_kind;
  std::string sim_config;
  std::uint64_t sim_seed = 1;
  std::string sim_out_dir = ".";
  CLI::App* simulate =
      app.add_subcommand("simulate", "Run a packaged simulation experiment");
  simulate
      ->add_option("--kind", sim_kind,
                   "Experiment kind: fig1, fig2, fig3, fpr, or modelsel")
      ->required()
      ->check(CLI::IsMember({"fig1", "fig2", "fig3", "fpr", "modelsel"}));
  simulate->add_option("--config", sim_config,
                       "Optional key = value configuration file");
  simulate->add_option("--seed", sim_seed, "Random seed (default 1)");
  simulate->add_option("--out-dir", sim_out_dir,
                       "Output directory (default current directory)");

  // --- distances --------------------------------------------------------
  std::vector<std::string> dist_patterns;
  std::vector<std::string> dist_timeseries;
  std::string dist_design;
  double dist_h = 0.4;
  std::string dist_out;
  CLI::App* distances = app.add_subcommand(
      "distances",
      "Estimate cross-validated distances and their covariance prediction");
  // The shrinkage flag is spelled --h, so this subcommand keeps only the
  // long help spelling.
  distances->set_help_flag("--help", "Print this help message and exit");
  distances->add_option(
      "--patterns", dist_patterns,
      "Prewhitened pattern matrix files, one per partition (K x P)");
  distances->add_option(
      "--timeseries", dist_timeseries,
      "Timeseries matrix files, one per run (T x P); requires --design");
  distances->add_option("--design", dist_design,
                        "Design configuration for --timeseries");
  CLI::Option* h_option = distances->add_option(
      "--h", dist_h,
      "Shrinkage level for spatial whitening in timeseries mode "
      "(default 0.4)");
  distances->add_option("--out", dist_out, "Output file prefix")->required();

  // --- ztest ------------------------------------------------------------
  std::string zt_distances;
  std::string zt_cov;
  std::string zt_contrast;
  std::string zt_null;
  CLI::App* ztest =
      app.add_subcommand("ztest", "Test a contrast over estimated distances");
  ztest->add_option("--distances", zt_distances, "Distance vector file")
      ->required();
  ztest->add_option("--cov", zt_cov, "Covariance prediction file prefix")
      ->required();
  ztest
      ->add_option("--contrast", zt_contrast,
                   "\"j\" or \"j-l\" with 1-based distance indices")
      ->required();
  ztest
      ->add_option("--null", zt_null,
                   "Replace the covariance by a null-hypothesis version: "
                   "zero or equalized")
      ->check(CLI::IsMember({"zero", "equalized"}));

  // --- model-compare ----------------------------------------------------
  std::string mc_distances;
  std::string mc_cov;
  std::vector<std::string> mc_models;
  std::string mc_method;
  CLI::App* model_compare = app.add_subcommand(
      "model-compare", "Score candidate distance models against estimates");
  model_compare->add_option("--distances", mc_distances,
                            "Distance vector file")
      ->required();
  model_compare
      ->add_option("--cov-inputs", mc_cov,
                   "Covariance prediction file prefix")
      ->required();
  model_compare
      ->add_option("--models", mc_models, "Model distance vector files")
      ->required();
  model_compare
      ->add_option("--method", mc_method, "spearman, cosine, or loglik")
      ->required()
      ->check(CLI::IsMember({"spearman", "cosine", "loglik"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(simulate)) {
      return run_simulate(sim_kind, sim_config, sim_seed, sim_out_dir);
    }
    if (app.got_subcommand(distances)) {
      const bool patterns_mode = !dist_patterns.empty();
      const bool timeseries_mode = !dist_timeseries.empty();
      if (patterns_mode == timeseries_mode) {
        throw ConfigError(
            "distances: give exactly one of --patterns or --timeseries");
      }
      if (patterns_mode) {
        if (!dist_design.empty() || h_option->count() > 0) {
          throw ConfigError(
              "distances: --design and --h apply to --timeseries only");
        }
        return run_distances_patterns(dist_patterns, dist_out);
      }
      if (dist_design.empty()) {
        throw ConfigError("distances: --timeseries requires --design");
      }
      return run_distances_timeseries(dist_timeseries, dist_design, dist_h,
                                      dist_out);
    }
    if (app.got_subcommand(ztest)) {
      return run_ztest(zt_distances, zt_cov, zt_contrast, zt_null);
    }
    if (app.got_subcommand(model_compare)) {
      return run_model_compare(mc_distances, mc_cov, mc_models, mc_method);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
