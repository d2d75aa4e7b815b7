#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

namespace sgdm::stats {

double normal_cdf(double x) noexcept;
/// Standard normal quantile; rational approximation polished by one Halley step.
/// Throws InvalidInput unless 0 < p < 1.
double normal_quantile(double p);

/// Regularized lower / upper incomplete gamma P(a, x), Q(a, x) for a > 0, x >= 0.
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

double chi_square_cdf(double dof, double x);
/// x with P(chi2_dof > x) = upper_tail. Throws InvalidInput unless dof >= 1 and
/// 0 < upper_tail < 1.
double chi_square_quantile(int dof, double upper_tail);

struct KsResult {
  double statistic = 0.0;
  double critical = 0.0;  ///< 1.358 / sqrt(n), asymptotic 5% level
  bool pass = false;      ///< statistic < critical
  std::size_t n = 0;
};

/// sup_x |F_n(x) - cdf(x)|.
double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf);
/// One-sample KS test against N(0, 1). Throws InvalidInput on fewer than 100 samples.
KsResult ks_normality(std::span<const double> samples);

/// Pearson statistic sum (O - E)^2 / E against equal expected counts.
double chi_square_uniform_statistic(std::span<const std::uint64_t> counts);

/// Streaming mean / variance (Welford).
class RunningMoments {
 public:
  void add(double x) noexcept;
  void merge(const RunningMoments& other) noexcept;
  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  /// Unbiased sample variance; 0 for fewer than two samples.
  double variance() const noexcept;
  /// Standard error of the mean.
  double standard_error() const noexcept;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace sgdm::stats
