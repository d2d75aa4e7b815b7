#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sgdm/problems.hpp"
#include "sgdm/spectrum.hpp"

namespace sgdm {

enum class Experiment { Convergence, Averaged, Sensitivity, Coverage, SpectrumMap, PowerBound };

const char* to_string(Experiment e) noexcept;
/// Accepts the CLI spellings (e.g. "spectrum-map"); throws ConfigError otherwise.
Experiment parse_experiment(const std::string& name);

/// One entry of a momentum sweep: a fixed weight or the adaptive rule.
struct GammaChoice {
  bool adaptive = false;
  double value = 0.0;

  std::string label() const;
};

enum class InitialPoint { Zero, Ones };

/// Fully resolved experiment description. `iters` is the index n of the last
/// iterate x_n, so a run performs iters - 1 updates and averages x_{n0+1..n}.
struct ExperimentConfig {
  Experiment experiment = Experiment::Convergence;

  Family family = Family::Quadratic;
  std::size_t n_samples = 4000;
  std::size_t dim = 10;
  double rho = 1.0;
  double shift = 10.0;
  double nu = 0.0;

  std::vector<GammaChoice> gammas;
  std::vector<double> alphas;
  /// If set, alpha = iters^(-alpha_power) replaces the alpha list.
  std::optional<double> alpha_power;
  std::optional<std::size_t> batch;
  double batch_frac = 0.2;
  std::int64_t iters = 3000;
  std::optional<std::int64_t> n0;  ///< empty: choose_burn_in
  std::size_t reps = 100;
  std::uint64_t seed = 1;
  std::string out = "out";
  unsigned threads = 0;
  bool paper_scale = false;

  InitialPoint x0 = InitialPoint::Zero;
  std::int64_t record_stride = 10;
  double level = 0.95;
  double cond = 5.0;        ///< spectrum-map: L / mu with mu = 1
  std::size_t grid = 200;   ///< spectrum-map: grid points per axis
  double alpha_max = 0.0;   ///< spectrum-map: 0 means 2 alpha*
  int horizon = 200;        ///< power-bound: largest power checked

  /// Batch size: explicit `batch`, else max(1, round(batch_frac * n_samples)).
  std::size_t batch_size() const;
  /// The alpha sweep after applying alpha_power.
  std::vector<double> alpha_values() const;
  /// Throws ConfigError naming the offending key.
  void validate() const;
  /// key=value pairs in a fixed order; feeding them back through resolve_config
  /// reproduces this config.
  std::vector<std::pair<std::string, std::string>> echo() const;
  std::string echo_text() const;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Reads "key = value" lines; '#' starts a comment. Throws ConfigError on I/O or syntax errors.
KeyValues read_config_file(const std::string& path);
KeyValues parse_config_text(const std::string& text);

/// Layers experiment defaults (desk or full scale), then `file`, then `flags`.
/// Unknown keys and malformed values raise ConfigError naming the key and the
/// expected type; semantic violations (e.g. gamma outside [0,1)) are rejected
/// with the same messages MomentumConfig::validate uses.
ExperimentConfig resolve_config(Experiment experiment, const KeyValues& file,
                                const KeyValues& flags);

/// MomentumConfig for one sweep cell.
MomentumConfig momentum_config(const ExperimentConfig& config, const GammaChoice& gamma,
                               double alpha);

}  // namespace sgdm
