#include "sgdm/optimizer.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "sgdm/error.hpp"
#include "sgdm/rand.hpp"

namespace sgdm {

OptimizerState OptimizerState::initial(const Vector& x0, const MomentumConfig& config) {
  OptimizerState s;
  s.x = x0;
  s.m = Vector::Zero(x0.size());
  s.t = 1;
  s.config = config;
  return s;
}

void sgdm_step_inplace(OptimizerState& state, const Vector& gradient) {
  if (gradient.size() != state.x.size()) throw InvalidInput("gradient has the wrong dimension");
  if (!gradient.allFinite()) throw Diverged(state.t, "non-finite gradient");
  const double g = state.config.gamma;
  state.m = g * state.m + (1.0 - g) * gradient;
  state.x -= state.config.alpha * state.m;
  ++state.t;
}

OptimizerState sgdm_step(const OptimizerState& state, const Vector& gradient) {
  OptimizerState next = state;
  sgdm_step_inplace(next, gradient);
  return next;
}

AveragingState::AveragingState(std::int64_t n0_, std::size_t dim)
    : n0(n0_), sum(Vector::Zero(static_cast<Eigen::Index>(dim))) {
  if (n0 < 0) throw InvalidInput("n0 must be nonnegative");
}

void AveragingState::observe(std::int64_t t, const Vector& x) {
  if (t <= n0) return;
  if (sum.size() == 0) sum = Vector::Zero(x.size());
  sum += x;
  ++count;
}

Vector AveragingState::mean() const {
  if (count == 0) throw InvalidInput("averaging window is empty");
  return sum / static_cast<double>(count);
}

void Trajectory::write_csv(std::ostream& out, const std::vector<std::string>& header) const {
  for (const auto& line : header) out << "# " << line << '\n';
  out << "step,err_last,err_avg,loss\n";
  const auto old = out.precision(17);
  for (const auto& r : records)
    out << r.step << ',' << r.err_last << ',' << r.err_avg << ',' << r.loss << '\n';
  out.precision(old);
}

RunResult run(const ProblemInstance& problem, const MomentumConfig& config,
              const RunOptions& options) {
  if (options.iters < 1) throw InvalidInput("iters must be >= 1");
  if (options.n0 < 0 || options.n0 >= options.iters) throw InvalidInput("n0 must lie in [0, iters)");
  if (options.record_stride < 1) throw InvalidInput("record stride must be >= 1");
  config.validate();
  const MomentumConfig cfg = config.resolved(problem.tuning_mu());

  const std::size_t d = problem.dim();
  const Vector& x_star = problem.x_star();
  Vector x0 = options.x_init.value_or(Vector::Zero(static_cast<Eigen::Index>(d)));
  if (static_cast<std::size_t>(x0.size()) != d) throw InvalidInput("x_init has the wrong dimension");

  RunResult out{OptimizerState::initial(x0, cfg), AveragingState(options.n0, d), Trajectory{}, cfg.gamma};
  out.trajectory.stride = options.record_stride;
  OptimizerState& state = out.state;
  AveragingState& avg = out.averaging;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  auto record = [&](double err) {
    TrajectoryRecord r;
    r.step = state.t;
    r.err_last = err;
    r.err_avg = avg.count > 0 ? (avg.mean() - x_star).norm() : nan;
    r.loss = options.record_loss ? problem.loss(state.x) : nan;
    out.trajectory.records.push_back(r);
  };

  avg.observe(state.t, state.x);
  if (options.record) record((state.x - x_star).norm());

  const auto n = static_cast<std::uint32_t>(problem.n_samples());
  std::vector<std::uint32_t> idx;
  if (options.full_batch) {
    idx.resize(n);
    std::iota(idx.begin(), idx.end(), 0u);
  } else {
    idx.resize(cfg.batch_size);
  }
  RngStream rng(options.seed, streams::kSampling);
  Vector g(static_cast<Eigen::Index>(d));
  GradientWorkspace work;

  for (std::int64_t k = 1; k <= options.iters; ++k) {
    if (!options.full_batch) fill_batch_indices(rng, n, idx);
    problem.minibatch_gradient(state.x, idx, g, work);
    sgdm_step_inplace(state, g);
    const double err = (state.x - x_star).norm();
    if (!std::isfinite(err)) throw Diverged(state.t, "non-finite iterate");
    if (err > options.blowup) throw Diverged(state.t, "iterate error exceeded blow-up threshold");
    avg.observe(state.t, state.x);
    if (options.record && (out.trajectory.wants(state.t) || k == options.iters)) record(err);
  }
  return out;
}

std::int64_t choose_burn_in(double lambda, std::size_t batch_size, BurnInMode mode) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw InvalidInput("burn-in needs 0 < lambda < 1");
  if (batch_size < 1) throw InvalidInput("batch size must be >= 1");
  const long double lam = lambda;
  const long double target = (1.0L - lam) / static_cast<long double>(batch_size);
  // Squared: lambda^(2 n) <= target. Linear: lambda^n <= sqrt(target).
  const long double base = mode == BurnInMode::Squared ? lam * lam : lam;
  const long double bound = mode == BurnInMode::Squared ? target : std::sqrt(target);
  auto ok = [&](std::int64_t n) { return std::pow(base, static_cast<long double>(n)) <= bound; };

  auto n = static_cast<std::int64_t>(std::ceil(std::log(bound) / std::log(base)));
  if (n < 0) n = 0;
  while (n > 0 && ok(n - 1)) --n;
  while (!ok(n)) ++n;
  return n;
}

}  // namespace sgdm
