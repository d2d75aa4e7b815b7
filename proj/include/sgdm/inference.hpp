#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sgdm/linalg.hpp"
#include "sgdm/problems.hpp"
#include "sgdm/spectrum.hpp"
#include "sgdm/stats.hpp"

namespace sgdm {

/// Plug-in pieces of the asymptotic covariance Sigma^-1 Omega Sigma^-1 of the
/// averaged iterate (scaled by sigma^2 / (B (n - n0))).
struct CovarianceEstimate {
  Matrix sigma_matrix;
  Matrix omega;
  double sigma2 = 0.0;
  Matrix sandwich;
  /// True when Sigma and Omega were evaluated at an estimate instead of the known x*.
  bool estimated = false;

  /// Throws InvalidInput unless Sigma is symmetric PD, Omega is square of the
  /// same size and sigma2 > 0.
  static CovarianceEstimate from_parts(const Matrix& sigma_matrix, const Matrix& omega,
                                       double sigma2);
  /// Simulation mode: the problem's Hessian, Omega and sigma^2 at x*.
  static CovarianceEstimate at_minimizer(const ProblemInstance& problem);
  /// Estimation mode: Hessian and per-sample gradient moments at `x`.
  static CovarianceEstimate at_point(const ProblemInstance& problem, const Vector& x);
};

/// sqrt(B (n - n0)) w'(xbar - x*) / (sigma sqrt(w' S w)), S the sandwich.
/// Throws InvalidInput if |w| is not 1 within 1e-12 or n <= n0, and
/// DegenerateDirection if w' S w <= 0.
double z_statistic(const Vector& xbar, const Vector& x_star, const Vector& omega_vec,
                   const CovarianceEstimate& cov, std::int64_t n, std::int64_t n0,
                   std::size_t batch_size);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const noexcept { return lo <= v && v <= hi; }
};

/// Two-sided interval for w'x* at confidence `level`, centred at w'xbar.
Interval confidence_interval(const Vector& xbar, const Vector& omega_vec,
                             const CovarianceEstimate& cov, std::int64_t n, std::int64_t n0,
                             std::size_t batch_size, double level);

struct RegionStatistic {
  double value = 0.0;
  bool ridged = false;  ///< Omega was near-singular and regularized before inversion
};

/// B (n - n0) / sigma^2 (xbar - x)' Sigma Omega^-1 Sigma (xbar - x). Near-singular
/// Omega gets a ridge of 1e-10 trace(Omega)/d (flagged); if that still fails,
/// throws InvalidInput.
RegionStatistic confidence_region_statistic(const Vector& xbar, const Vector& x_candidate,
                                            const CovarianceEstimate& cov, std::int64_t n,
                                            std::int64_t n0, std::size_t batch_size);

struct InferenceReport {
  Vector xbar;
  std::int64_t n = 0;
  std::int64_t n0 = 0;
  std::size_t batch_size = 0;
  std::vector<double> z_values;
  std::vector<Interval> intervals;
  double region_statistic = 0.0;
  std::optional<double> coverage;
};

/// Z, interval and region statistic for every direction in `directions`.
InferenceReport make_report(const Vector& xbar, const Vector& x_star,
                            const std::vector<Vector>& directions, const CovarianceEstimate& cov,
                            std::int64_t n, std::int64_t n0, std::size_t batch_size,
                            double level = 0.95);

struct CoverageOptions {
  std::int64_t n = 2000;        ///< last iterate index; averaging covers x_{n0+1..n}
  std::int64_t n0 = 1000;
  std::size_t replications = 1000;
  std::uint64_t seed_base = 1;
  std::vector<Vector> directions;  ///< default: (1, ..., 1)/sqrt(d)
  double level = 0.95;
  unsigned threads = 0;
  std::optional<Vector> x_init;
};

struct ReplicationRecord {
  std::uint64_t seed = 0;
  bool diverged = false;
  std::vector<double> z;
  std::vector<bool> covered;
  double region_statistic = 0.0;
  bool region_covered = false;
};

struct CoverageSummary {
  std::vector<ReplicationRecord> records;
  std::vector<double> coverage;  ///< per direction, over non-divergent replications
  double region_coverage = 0.0;
  stats::KsResult ks;            ///< Z of the first direction vs N(0,1)
  std::size_t diverged = 0;
  double gamma_used = 0.0;

  /// One row per replication: seed,diverged,z_0..,covered_0..,region,region_covered.
  void write_csv(std::ostream& out, const std::vector<std::string>& header = {}) const;
  /// Flat JSON object with coverage, KS and the given config echo pairs.
  std::string summary_json(const std::vector<std::pair<std::string, std::string>>& echo = {}) const;
};

/// Replicates averaged SGDM with seeds seed_base + r on a fixed problem and
/// tallies interval / region coverage of x* with the known-x* plug-in.
CoverageSummary run_coverage(const ProblemInstance& problem, const MomentumConfig& config,
                             const CoverageOptions& options);

}  // namespace sgdm
