#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sgdm/config.hpp"
#include "sgdm/optimizer.hpp"
#include "sgdm/rand.hpp"
#include "sgdm/spectrum.hpp"

namespace sgdm {

/// Aggregates for one (gamma, alpha) sweep cell. Fields that do not apply to the
/// experiment stay NaN. Divergent replications are counted and excluded from means.
struct CellSummary {
  std::string gamma_label;
  double gamma = 0.0;         ///< mean resolved gamma over replications
  double alpha = 0.0;
  std::size_t batch_size = 0;
  std::size_t replications = 0;
  std::size_t diverged = 0;
  std::int64_t n0 = 0;

  double final_err = 0.0;       ///< mean ||x_n - x*||; inf if every replication diverged
  double best_err = 0.0;        ///< mean min_t ||x_t - x*||
  double steady_mse = 0.0;      ///< mean ||x_t - x*||^2 over the last 25% of steps
  double steady_mse_se = 0.0;
  double iters_to_threshold = 0.0;  ///< mean first t with error below 10x the run's own floor
  double avg_mse = 0.0;         ///< mean ||xbar_n - x*||^2
  double avg_mse_se = 0.0;
  double avg_slope = 0.0;       ///< log-log slope of mean ||xbar - x*||^2 over the last decade
  double coverage = 0.0;
  double region_coverage = 0.0;
  double ks_statistic = 0.0;
  bool ks_pass = false;
  double lambda = 0.0;          ///< closed-form spectral radius on the Hessian spectrum
  bool convergent = false;      ///< no divergence and mean final error below the initial error
  std::string file;             ///< per-cell CSV name, relative to the output directory
};

struct RunSummary {
  Experiment experiment = Experiment::Convergence;
  std::vector<CellSummary> cells;
  /// Sensitivity: largest convergent alpha per gamma label (NaN if none).
  std::vector<std::pair<std::string, double>> max_convergent_alpha;
  /// Spectrum map: grid argmin.
  double map_min_lambda = 0.0;
  double map_argmin_alpha = 0.0;
  double map_argmin_gamma = 0.0;
  double map_alpha_step = 0.0;
  double map_gamma_step = 0.0;
  /// Power bound: number of configurations violating the bound and worst ratio.
  std::size_t power_violations = 0;
  std::size_t power_checked = 0;
  double power_max_ratio = 0.0;
};

/// A random configuration with an admissible (alpha, gamma) and delta > min_delta,
/// drawn from `rng`: log-uniform spectrum on [1, max_cond], gamma in [0, 0.99),
/// alpha uniform below the admissibility limit.
struct RandomSpectralConfig {
  HessianSpectrum spectrum;
  MomentumConfig config;
};
RandomSpectralConfig random_spectral_config(RngStream& rng, std::size_t dim, double max_cond,
                                            double min_delta);

/// Generates the replication's problem (seed = seed_base + replication).
ProblemInstance make_problem(const ExperimentConfig& config, std::uint64_t seed);

/// Initial iterate for the configured start.
Vector initial_point(const ExperimentConfig& config, std::size_t dim);

/// Runs the configured experiment, writing per-cell CSVs, summary.csv and
/// config.txt into config.out. Cell failures are recorded, never thrown.
RunSummary run_experiment(const ExperimentConfig& config);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace sgdm
