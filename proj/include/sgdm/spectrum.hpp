#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sgdm/linalg.hpp"

namespace sgdm {

enum class GammaMode { Fixed, Adaptive };

/// Hyperparameters of one SGDM run.
///
/// In Adaptive mode `gamma` is a placeholder until `resolved()` fills it in
/// from the problem's strong-convexity constant.
struct MomentumConfig {
  double alpha = 0.0;
  double gamma = 0.0;
  std::size_t batch_size = 1;
  GammaMode gamma_mode = GammaMode::Fixed;

  /// Throws InvalidInput unless alpha > 0, 0 <= gamma < 1 and batch_size >= 1.
  void validate() const;

  /// Fixed-mode copy; Adaptive mode replaces gamma by adaptive_gamma(mu, alpha).
  MomentumConfig resolved(double mu) const;
};

/// Curvatures kappa_1 <= ... <= kappa_d of a strongly convex Hessian.
class HessianSpectrum {
 public:
  /// Sorts the input; throws InvalidInput on empty input or a non-positive value.
  static HessianSpectrum from_eigenvalues(std::vector<double> eigenvalues);
  /// Throws InvalidInput unless `hessian` is symmetric positive definite.
  static HessianSpectrum from_matrix(const Matrix& hessian);

  std::span<const double> eigenvalues() const noexcept { return kappa_; }
  std::size_t dim() const noexcept { return kappa_.size(); }
  double mu() const noexcept { return kappa_.front(); }
  double ell() const noexcept { return kappa_.back(); }
  double condition_number() const noexcept { return ell() / mu(); }

  HessianSpectrum scaled(double factor) const;

 private:
  explicit HessianSpectrum(std::vector<double> kappa) : kappa_(std::move(kappa)) {}
  std::vector<double> kappa_;
};

enum class Branch { Real, Complex };

const char* to_string(Branch branch) noexcept;

/// Convergence factor of the noiseless SGDM recursion and its companions.
struct SpectralReport {
  double lambda = 0.0;          ///< spectral radius of the iteration matrix
  bool divergent = false;       ///< lambda >= 1
  double phi = 0.0;             ///< min{alpha mu, 2(1+gamma)/(1-gamma) - alpha L}
  Branch branch = Branch::Real;
  double big_m = 0.0;           ///< transient constant bounding ||Gamma^j|| / lambda^j
  bool m_infinite = false;      ///< delta == 0: iteration matrix not diagonalizable
  double delta = 0.0;           ///< min_k |(gamma + 1 - alpha(1-gamma)kappa_k)^2 - 4 gamma|
  bool admissible = false;      ///< alpha L < 2(1+gamma)/(1-gamma)
  double gamma_threshold = 0.0; ///< (1-phi)^2 / (1+phi)^2

  /// Ordered key/value pairs for CSV and log emission.
  std::vector<std::pair<std::string, std::string>> fields() const;
  /// "lambda=... phi=... ..." on one line.
  std::string to_record() const;
};

/// Largest admissible learning rate 2(1+gamma)/((1-gamma) L), exclusive.
double admissible_alpha_limit(double gamma, double ell);

/// Iteration matrix [[gamma I, (1-gamma) H], [-alpha gamma I, I - alpha(1-gamma) H]]
/// acting on (momentum error, iterate error).
/// Throws InvalidInput if `hessian` is not symmetric positive definite.
Matrix build_gamma_matrix(const Matrix& hessian, const MomentumConfig& config);
/// Same matrix with H = diag(kappa_1, ..., kappa_d).
Matrix build_gamma_matrix(const HessianSpectrum& spectrum, const MomentumConfig& config);

/// Closed-form spectral radius with phase classification.
///
/// Admissible configurations never touch complex arithmetic: the branch is
/// decided by the sign of (gamma + 1 - (1-gamma) phi)^2 - 4 gamma. Inadmissible
/// ones fall back to the dense eigensolver so sweeps can chart divergence.
SpectralReport spectral_radius_closed_form(const HessianSpectrum& spectrum,
                                           const MomentumConfig& config);

/// The two eigenvalues of the 2x2 block attached to curvature kappa.
std::pair<std::complex<double>, std::complex<double>> block_eigenvalues(
    double kappa, const MomentumConfig& config);

/// max_k max |block eigenvalue| -- the per-curvature route to the spectral radius.
double blockwise_spectral_radius(const HessianSpectrum& spectrum, const MomentumConfig& config);

struct OptimalHyperparameters {
  double alpha = 0.0;
  double gamma = 0.0;
  double lambda = 0.0;
};

/// alpha* = 1/sqrt(mu L), gamma* = lambda*^2, lambda* = (sqrt L - sqrt mu)/(sqrt L + sqrt mu).
OptimalHyperparameters optimal_hyperparameters(const HessianSpectrum& spectrum);

/// ((1 - mu alpha)/(1 + mu alpha))^2, clamped to 0 once mu alpha >= 1.
double adaptive_gamma(double mu, double alpha);

struct PowerBoundResult {
  bool holds = true;
  double max_ratio = 0.0;   ///< max_j ||Gamma^j|| / (M lambda^j)
  int checked = 0;          ///< powers actually evaluated
  bool partial = false;     ///< stopped early on a non-finite value
};

/// Checks ||Gamma^j||_2 <= M lambda^j for j = 1..horizon.
/// Powers are accumulated as (Gamma/lambda)^j so neither side under- or overflows.
/// Throws InvalidInput if M is not finite (delta == 0) or lambda <= 0.
PowerBoundResult verify_power_bound(const Matrix& gamma_matrix, double big_m, double lambda,
                                    int horizon);

}  // namespace sgdm
