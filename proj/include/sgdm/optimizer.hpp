#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sgdm/linalg.hpp"
#include "sgdm/problems.hpp"
#include "sgdm/spectrum.hpp"

namespace sgdm {

/// Iterate x_t, momentum buffer m_t and step counter t (starting at 1).
struct OptimizerState {
  Vector x;
  Vector m;
  std::int64_t t = 1;
  MomentumConfig config;

  /// x_1 = x0, m_1 = 0.
  static OptimizerState initial(const Vector& x0, const MomentumConfig& config);
};

/// m' = gamma m + (1 - gamma) g, x' = x - alpha m', t' = t + 1.
/// Throws Diverged (carrying t) if any gradient entry is non-finite.
OptimizerState sgdm_step(const OptimizerState& state, const Vector& gradient);
void sgdm_step_inplace(OptimizerState& state, const Vector& gradient);

/// Running arithmetic mean of x_{n0+1}, ..., x_t.
struct AveragingState {
  std::int64_t n0 = 0;
  std::int64_t count = 0;
  Vector sum;

  explicit AveragingState(std::int64_t n0 = 0, std::size_t dim = 0);
  /// Folds x_t in when t > n0.
  void observe(std::int64_t t, const Vector& x);
  /// sum / count; throws InvalidInput while count == 0.
  Vector mean() const;
};

struct TrajectoryRecord {
  std::int64_t step = 0;
  double err_last = 0.0;
  double err_avg = 0.0;  ///< NaN before the averaging window opens
  double loss = 0.0;     ///< NaN unless loss recording is on
};

/// Error path at record points: every step up to 1000, then every `stride` steps,
/// plus the final step.
struct Trajectory {
  std::int64_t stride = 1;
  std::vector<TrajectoryRecord> records;

  static constexpr std::int64_t kDenseSteps = 1000;
  bool wants(std::int64_t t) const noexcept {
    return t <= kDenseSteps || (t - kDenseSteps) % stride == 0;
  }

  /// CSV with columns step,err_last,err_avg,loss; `header` lines are
  /// emitted first, each prefixed with '#'.
  void write_csv(std::ostream& out, const std::vector<std::string>& header = {}) const;
};

struct RunOptions {
  std::int64_t iters = 1;          ///< number of updates; the last iterate is x_{iters+1}
  std::uint64_t seed = 0;
  std::int64_t n0 = 0;
  std::int64_t record_stride = 10;
  bool record = true;
  bool record_loss = false;
  std::optional<Vector> x_init;    ///< default: zero vector
  bool full_batch = false;         ///< deterministic gradient over all samples
  double blowup = 1e12;
};

struct RunResult {
  OptimizerState state;
  AveragingState averaging;
  Trajectory trajectory;
  double gamma_used = 0.0;
};

/// Runs SGDM from x_1 with mini-batches drawn with replacement from
/// RngStream(seed, streams::kSampling). Adaptive momentum is resolved once from
/// problem.tuning_mu(). Throws Diverged if ||x_t - x*|| exceeds `blowup` or
/// turns non-finite; InvalidInput on iters < 1 or n0 >= iters + 1.
RunResult run(const ProblemInstance& problem, const MomentumConfig& config,
              const RunOptions& options);

enum class BurnInMode { Squared, Linear };

/// Least n0 >= 0 with lambda^(2 n0) <= (1 - lambda)/B (Squared) or
/// lambda^n0 <= ((1 - lambda)/B)^(1/2) (Linear). Throws InvalidInput unless 0 < lambda < 1.
std::int64_t choose_burn_in(double lambda, std::size_t batch_size,
                            BurnInMode mode = BurnInMode::Squared);

}  // namespace sgdm
