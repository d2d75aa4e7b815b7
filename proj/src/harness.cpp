#include "sgdm/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>

#include "sgdm/csv.hpp"
#include "sgdm/error.hpp"
#include "sgdm/inference.hpp"
#include "sgdm/kernels.hpp"
#include "sgdm/parallel.hpp"
#include "sgdm/stats.hpp"

namespace sgdm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

struct RepOutcome {
  bool diverged = false;
  bool failed = false;
  double gamma = 0.0;
  double initial_err = 0.0;
  double final_err = kNaN;
  double best_err = kNaN;
  double steady_mse = kNaN;
  double iters_to_threshold = kNaN;
  double avg_mse = kNaN;
  std::vector<double> curve_err;      // at output points
  std::vector<double> curve_avg_sq;   // ||xbar_t - x*||^2 at output points
};

struct Cell {
  GammaChoice gamma;
  double alpha = 0.0;
  std::int64_t n0 = 0;
  double lambda = kNaN;
};

std::vector<std::string> header_lines(const ExperimentConfig& c) {
  std::string cfg;
  for (const auto& [k, v] : c.echo()) cfg += (cfg.empty() ? "" : " ") + k + "=" + v;
  return {"seed_base=" + std::to_string(c.seed) + " rng=" + RngStream::kAlgorithm +
              " kernels=" + kernels::to_string(kernels::active()),
          "config " + cfg};
}

std::string sanitize(std::string s) {
  for (char& ch : s)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-')) ch = '_';
  return s;
}

std::string cell_file(const ExperimentConfig& c, const Cell& cell) {
  return sanitize(std::string(to_string(c.experiment)) + "_gamma-" + cell.gamma.label() +
                  "_alpha-" + csv::format(cell.alpha)) + ".csv";
}

std::ofstream open_out(const ExperimentConfig& c, const std::string& name) {
  std::filesystem::create_directories(c.out);
  std::ofstream f(std::filesystem::path(c.out) / name);
  if (!f) throw ConfigError("cannot write " + (std::filesystem::path(c.out) / name).string());
  return f;
}

double closed_form_lambda(const ProblemInstance& p, const MomentumConfig& m) {
  try {
    const MomentumConfig r = m.resolved(p.tuning_mu());
    return spectral_radius_closed_form(HessianSpectrum::from_matrix(p.hessian()), r).lambda;
  } catch (const std::exception&) {
    return kNaN;
  }
}

std::int64_t resolve_n0(const ExperimentConfig& c, double lambda, std::size_t batch) {
  std::int64_t n0 = 0;
  if (c.n0) {
    n0 = *c.n0;
  } else if (lambda > 0.0 && lambda < 1.0) {
    n0 = choose_burn_in(lambda, batch);
  } else {
    n0 = c.iters / 2;
  }
  return std::clamp<std::int64_t>(n0, 0, c.iters - 2);
}

std::vector<Cell> make_cells(const ExperimentConfig& c, const ProblemInstance* base) {
  std::vector<Cell> cells;
  for (const auto& g : c.gammas)
    for (double a : c.alpha_values()) {
      Cell cell{g, a, 0, kNaN};
      if (base) {
        cell.lambda = closed_form_lambda(*base, momentum_config(c, g, a));
        cell.n0 = resolve_n0(c, cell.lambda, c.batch_size());
      }
      cells.push_back(cell);
    }
  return cells;
}

std::vector<std::int64_t> output_steps(const ExperimentConfig& c) {
  std::vector<std::int64_t> steps;
  for (std::int64_t t = 1; t <= c.iters; ++t)
    if (t <= Trajectory::kDenseSteps || (t - Trajectory::kDenseSteps) % c.record_stride == 0 || t == c.iters)
      steps.push_back(t);
  return steps;
}

RepOutcome run_replication(const ExperimentConfig& c, const ProblemInstance& problem,
                           const Cell& cell, std::uint64_t seed,
                           const std::vector<std::int64_t>& steps) {
  RepOutcome o;
  const MomentumConfig m = momentum_config(c, cell.gamma, cell.alpha);
  o.gamma = m.resolved(problem.tuning_mu()).gamma;
  const Vector x0 = initial_point(c, problem.dim());
  o.initial_err = (x0 - problem.x_star()).norm();
  RunOptions ro;
  ro.iters = c.iters - 1;
  ro.seed = seed;
  ro.n0 = cell.n0;
  ro.record = true;
  ro.record_stride = 1;
  ro.x_init = x0;
  try {
    const RunResult res = run(problem, m, ro);
    const auto& rec = res.trajectory.records;
    const std::size_t n = rec.size();
    o.final_err = rec.back().err_last;
    o.best_err = kInf;
    for (const auto& r : rec) o.best_err = std::min(o.best_err, r.err_last);
    const std::size_t tail = std::max<std::size_t>(1, n / 4);
    double sq = 0.0;
    double lin = 0.0;
    for (std::size_t i = n - tail; i < n; ++i) {
      sq += rec[i].err_last * rec[i].err_last;
      lin += rec[i].err_last;
    }
    o.steady_mse = sq / static_cast<double>(tail);
    const double threshold = 10.0 * lin / static_cast<double>(tail);
    for (const auto& r : rec)
      if (r.err_last < threshold) {
        o.iters_to_threshold = static_cast<double>(r.step);
        break;
      }
    if (res.averaging.count > 0) o.avg_mse = (res.averaging.mean() - problem.x_star()).squaredNorm();
    o.curve_err.reserve(steps.size());
    o.curve_avg_sq.reserve(steps.size());
    for (std::int64_t t : steps) {
      const auto& r = rec[static_cast<std::size_t>(t - 1)];
      o.curve_err.push_back(r.err_last);
      o.curve_avg_sq.push_back(r.err_avg * r.err_avg);
    }
  } catch (const Diverged&) {
    o.diverged = true;
  }
  return o;
}

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  if (v.size() % 2) return v[mid];
  const double hi = v[mid];
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

CellSummary summarize(const ExperimentConfig& c, const Cell& cell,
                      const std::vector<RepOutcome>& reps) {
  CellSummary s;
  s.gamma_label = cell.gamma.label();
  s.alpha = cell.alpha;
  s.batch_size = c.batch_size();
  s.replications = reps.size();
  s.n0 = cell.n0;
  s.lambda = cell.lambda;
  stats::RunningMoments gamma, fin, best, steady, hit, avg, init;
  for (const auto& r : reps) {
    gamma.add(r.gamma);
    init.add(r.initial_err);
    if (r.diverged || r.failed) {
      ++s.diverged;
      continue;
    }
    fin.add(r.final_err);
    best.add(r.best_err);
    steady.add(r.steady_mse);
    if (!std::isnan(r.iters_to_threshold)) hit.add(r.iters_to_threshold);
    if (!std::isnan(r.avg_mse)) avg.add(r.avg_mse);
  }
  auto mean_or = [](const stats::RunningMoments& m, double fallback) {
    return m.count() ? m.mean() : fallback;
  };
  s.gamma = gamma.mean();
  const bool any = fin.count() > 0;
  s.final_err = any ? fin.mean() : kInf;
  s.best_err = any ? best.mean() : kInf;
  s.steady_mse = mean_or(steady, kInf);
  s.steady_mse_se = steady.count() > 1 ? steady.standard_error() : kNaN;
  s.iters_to_threshold = mean_or(hit, kNaN);
  s.avg_mse = mean_or(avg, kNaN);
  s.avg_mse_se = avg.count() > 1 ? avg.standard_error() : kNaN;
  s.coverage = s.region_coverage = s.ks_statistic = s.avg_slope = kNaN;
  s.convergent = s.diverged == 0 && any && s.final_err < init.mean();
  return s;
}

void write_curve_csv(const ExperimentConfig& c, const CellSummary& s,
                     const std::vector<RepOutcome>& reps, const std::vector<std::int64_t>& steps,
                     CellSummary& out_slope) {
  std::vector<double> mean_err(steps.size(), 0.0), mean_avg(steps.size(), 0.0);
  std::vector<double> med(steps.size(), kNaN);
  std::size_t used = 0;
  for (const auto& r : reps)
    if (!r.diverged && !r.failed) ++used;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    std::vector<double> col;
    double sa = 0.0;
    for (const auto& r : reps) {
      if (r.diverged || r.failed) continue;
      col.push_back(r.curve_err[i]);
      sa += r.curve_avg_sq[i];
    }
    if (used) {
      mean_err[i] = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(used);
      mean_avg[i] = sa / static_cast<double>(used);
      med[i] = median(col);
    } else {
      mean_err[i] = mean_avg[i] = kInf;
    }
  }

  // Slope of the averaged MSE over the last decade of the averaging window.
  const double window = static_cast<double>(c.iters - s.n0);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const double m = static_cast<double>(steps[i] - s.n0);
    if (m >= window / 10.0 && std::isfinite(mean_avg[i]) && mean_avg[i] > 0.0) {
      xs.push_back(m);
      ys.push_back(mean_avg[i]);
    }
  }
  out_slope.avg_slope = xs.size() >= 2 ? loglog_slope(xs, ys) : kNaN;

  auto f = open_out(c, s.file);
  auto header = header_lines(c);
  header.push_back("gamma=" + s.gamma_label + " alpha=" + csv::format(s.alpha) +
                   " n0=" + std::to_string(s.n0) + " replications=" + std::to_string(s.replications) +
                   " diverged=" + std::to_string(s.diverged));
  csv::write_comments(f, header);
  csv::write_row(f, {"step", "mean_err", "median_err", "mean_avg_sq_err"});
  for (std::size_t i = 0; i < steps.size(); ++i)
    csv::write_row(f, {std::to_string(steps[i]), csv::format(mean_err[i]), csv::format(med[i]),
                       csv::format(mean_avg[i])});
}

void write_sensitivity_csv(const ExperimentConfig& c, const CellSummary& s,
                           const std::vector<RepOutcome>& reps) {
  auto f = open_out(c, s.file);
  csv::write_comments(f, header_lines(c));
  csv::write_row(f, {"replication", "seed", "diverged", "initial_err", "final_err", "best_err"});
  for (std::size_t r = 0; r < reps.size(); ++r) {
    const auto& o = reps[r];
    const bool bad = o.diverged || o.failed;
    csv::write_row(f, {std::to_string(r), std::to_string(c.seed + r), bad ? "1" : "0",
                       csv::format(o.initial_err), csv::format(bad ? kInf : o.final_err),
                       csv::format(bad ? kInf : o.best_err)});
  }
}

void write_summary_csv(const ExperimentConfig& c, const std::vector<CellSummary>& cells) {
  auto f = open_out(c, "summary.csv");
  csv::write_comments(f, header_lines(c));
  csv::write_row(f, {"gamma_label", "gamma", "alpha", "batch", "replications", "diverged", "n0",
                     "final_err", "best_err", "steady_mse", "steady_mse_se", "iters_to_threshold",
                     "avg_mse", "avg_mse_se", "avg_slope", "coverage", "region_coverage",
                     "ks_statistic", "ks_pass", "lambda", "convergent", "file"});
  for (const auto& s : cells)
    csv::write_row(f, {s.gamma_label, csv::format(s.gamma), csv::format(s.alpha),
                       std::to_string(s.batch_size), std::to_string(s.replications),
                       std::to_string(s.diverged), std::to_string(s.n0), csv::format(s.final_err),
                       csv::format(s.best_err), csv::format(s.steady_mse),
                       csv::format(s.steady_mse_se), csv::format(s.iters_to_threshold),
                       csv::format(s.avg_mse), csv::format(s.avg_mse_se), csv::format(s.avg_slope),
                       csv::format(s.coverage), csv::format(s.region_coverage),
                       csv::format(s.ks_statistic), s.ks_pass ? "1" : "0", csv::format(s.lambda),
                       s.convergent ? "1" : "0", s.file});
}

void write_key_values(const ExperimentConfig& c,
                      const std::vector<std::pair<std::string, std::string>>& kv) {
  auto f = open_out(c, "summary.csv");
  csv::write_comments(f, header_lines(c));
  csv::write_row(f, {"key", "value"});
  for (const auto& [k, v] : kv) csv::write_row(f, {k, v});
}

RunSummary trajectory_experiment(const ExperimentConfig& c) {
  RunSummary out;
  out.experiment = c.experiment;
  const ProblemInstance base = make_problem(c, c.seed);
  const auto cells = make_cells(c, &base);
  const auto steps = output_steps(c);

  // reps x cells outcomes, filled by index so the reduce is schedule independent.
  std::vector<std::vector<RepOutcome>> grid(cells.size(), std::vector<RepOutcome>(c.reps));
  parallel_for(c.reps, c.threads, [&](std::size_t r) {
    const std::uint64_t seed = c.seed + r;
    std::optional<ProblemInstance> problem;
    try {
      problem = r == 0 ? base : make_problem(c, seed);
    } catch (const std::exception&) {
      for (auto& col : grid) col[r].failed = true;
      return;
    }
    for (std::size_t k = 0; k < cells.size(); ++k) {
      try {
        grid[k][r] = run_replication(c, *problem, cells[k], seed, steps);
      } catch (const std::exception&) {
        grid[k][r].failed = true;
      }
    }
  });

  for (std::size_t k = 0; k < cells.size(); ++k) {
    CellSummary s = summarize(c, cells[k], grid[k]);
    s.file = cell_file(c, cells[k]);
    if (c.experiment == Experiment::Sensitivity && s.diverged > 0) s.final_err = s.best_err = kInf;
    if (c.experiment == Experiment::Sensitivity) write_sensitivity_csv(c, s, grid[k]);
    else write_curve_csv(c, s, grid[k], steps, s);
    out.cells.push_back(std::move(s));
  }

  if (c.experiment == Experiment::Sensitivity) {
    for (const auto& g : c.gammas) {
      double best = kNaN;
      for (const auto& s : out.cells)
        if (s.gamma_label == g.label() && s.convergent && !(s.alpha <= best)) best = s.alpha;
      out.max_convergent_alpha.emplace_back(g.label(), best);
    }
  }
  write_summary_csv(c, out.cells);
  return out;
}

RunSummary coverage_experiment(const ExperimentConfig& c) {
  RunSummary out;
  out.experiment = c.experiment;
  const ProblemInstance problem = make_problem(c, c.seed);
  const auto cells = make_cells(c, &problem);
  for (const auto& cell : cells) {
    CellSummary s;
    s.gamma_label = cell.gamma.label();
    s.alpha = cell.alpha;
    s.batch_size = c.batch_size();
    s.replications = c.reps;
    s.n0 = cell.n0;
    s.lambda = cell.lambda;
    s.file = cell_file(c, cell);
    s.final_err = s.best_err = s.steady_mse = s.steady_mse_se = s.iters_to_threshold = kNaN;
    s.avg_mse = s.avg_mse_se = s.avg_slope = kNaN;
    CoverageOptions opt;
    opt.n = c.iters;
    opt.n0 = cell.n0;
    opt.replications = c.reps;
    opt.seed_base = c.seed;
    opt.level = c.level;
    opt.threads = c.threads;
    opt.x_init = initial_point(c, problem.dim());
    try {
      const CoverageSummary cov = run_coverage(problem, momentum_config(c, cell.gamma, cell.alpha), opt);
      s.gamma = cov.gamma_used;
      s.diverged = cov.diverged;
      s.coverage = cov.coverage.empty() ? kNaN : cov.coverage[0];
      s.region_coverage = cov.region_coverage;
      s.ks_statistic = cov.ks.statistic;
      s.ks_pass = cov.ks.pass;
      s.convergent = cov.diverged == 0;
      auto f = open_out(c, s.file);
      cov.write_csv(f, header_lines(c));
      auto j = open_out(c, s.file.substr(0, s.file.size() - 4) + ".json");
      j << cov.summary_json(c.echo()) << '\n';
    } catch (const std::exception&) {
      s.diverged = c.reps;
      s.coverage = s.region_coverage = s.ks_statistic = kNaN;
    }
    out.cells.push_back(std::move(s));
  }
  write_summary_csv(c, out.cells);
  return out;
}

RunSummary spectrum_map_experiment(const ExperimentConfig& c) {
  RunSummary out;
  out.experiment = c.experiment;
  const auto spectrum = HessianSpectrum::from_eigenvalues({1.0, c.cond});
  const double alpha_max = c.alpha_max > 0.0 ? c.alpha_max : 2.0 / std::sqrt(c.cond);
  const std::size_t g = c.grid;
  out.map_alpha_step = alpha_max / static_cast<double>(g);
  out.map_gamma_step = 1.0 / static_cast<double>(g);
  out.map_min_lambda = kInf;

  auto f = open_out(c, "spectrum_map.csv");
  csv::write_comments(f, header_lines(c));
  csv::write_row(f, {"alpha", "gamma", "lambda", "branch", "admissible", "divergent", "phi", "delta", "M"});
  for (std::size_t i = 0; i < g; ++i) {
    const double alpha = alpha_max * static_cast<double>(i + 1) / static_cast<double>(g);
    for (std::size_t j = 0; j < g; ++j) {
      const double gamma = static_cast<double>(j) / static_cast<double>(g);
      MomentumConfig m;
      m.alpha = alpha;
      m.gamma = gamma;
      const SpectralReport r = spectral_radius_closed_form(spectrum, m);
      if (r.lambda < out.map_min_lambda) {
        out.map_min_lambda = r.lambda;
        out.map_argmin_alpha = alpha;
        out.map_argmin_gamma = gamma;
      }
      csv::write_row(f, {csv::format(alpha), csv::format(gamma), csv::format(r.lambda),
                         to_string(r.branch), r.admissible ? "1" : "0", r.divergent ? "1" : "0",
                         csv::format(r.phi), csv::format(r.delta),
                         r.m_infinite ? "inf" : csv::format(r.big_m)});
    }
  }
  const auto opt = optimal_hyperparameters(spectrum);
  write_key_values(c, {{"cond", csv::format(c.cond)},
                       {"min_lambda", csv::format(out.map_min_lambda)},
                       {"argmin_alpha", csv::format(out.map_argmin_alpha)},
                       {"argmin_gamma", csv::format(out.map_argmin_gamma)},
                       {"alpha_step", csv::format(out.map_alpha_step)},
                       {"gamma_step", csv::format(out.map_gamma_step)},
                       {"optimal_alpha", csv::format(opt.alpha)},
                       {"optimal_gamma", csv::format(opt.gamma)},
                       {"optimal_lambda", csv::format(opt.lambda)}});
  return out;
}

RunSummary power_bound_experiment(const ExperimentConfig& c) {
  RunSummary out;
  out.experiment = c.experiment;
  struct Row {
    RandomSpectralConfig cfg;
    SpectralReport report;
    PowerBoundResult result;
    bool failed = false;
  };
  std::vector<std::optional<Row>> rows(c.reps);
  parallel_for(c.reps, c.threads, [&](std::size_t r) {
    RngStream rng = RngStream(c.seed, streams::kConfigs).child(r);
    auto cfg = random_spectral_config(rng, c.dim, c.cond, 1e-6);
    Row row{cfg, spectral_radius_closed_form(cfg.spectrum, cfg.config), {}, false};
    try {
      row.result = verify_power_bound(build_gamma_matrix(cfg.spectrum, cfg.config),
                                      row.report.big_m, row.report.lambda, c.horizon);
    } catch (const std::exception&) {
      row.failed = true;
    }
    rows[r] = std::move(row);
  });

  auto f = open_out(c, "power_bound.csv");
  csv::write_comments(f, header_lines(c));
  csv::write_row(f, {"config", "mu", "ell", "alpha", "gamma", "lambda", "M", "delta", "max_ratio",
                     "checked", "partial", "holds"});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Row& row = *rows[r];
    const bool holds = !row.failed && row.result.holds;
    ++out.power_checked;
    if (!holds) ++out.power_violations;
    if (!row.failed) out.power_max_ratio = std::max(out.power_max_ratio, row.result.max_ratio);
    csv::write_row(f, {std::to_string(r), csv::format(row.cfg.spectrum.mu()),
                       csv::format(row.cfg.spectrum.ell()), csv::format(row.cfg.config.alpha),
                       csv::format(row.cfg.config.gamma), csv::format(row.report.lambda),
                       csv::format(row.report.big_m), csv::format(row.report.delta),
                       csv::format(row.failed ? kNaN : row.result.max_ratio),
                       std::to_string(row.result.checked), row.result.partial ? "1" : "0",
                       holds ? "1" : "0"});
  }
  write_key_values(c, {{"configs", std::to_string(out.power_checked)},
                       {"violations", std::to_string(out.power_violations)},
                       {"max_ratio", csv::format(out.power_max_ratio)},
                       {"horizon", std::to_string(c.horizon)}});
  return out;
}

}  // namespace

RandomSpectralConfig random_spectral_config(RngStream& rng, std::size_t dim, double max_cond,
                                            double min_delta) {
  if (dim < 1) throw InvalidInput("dimension must be >= 1");
  if (!(max_cond >= 1.0)) throw InvalidInput("max_cond must be >= 1");
  for (;;) {
    const double cond = std::exp(rng.uniform() * std::log(max_cond));
    std::vector<double> kappa(dim);
    kappa[0] = 1.0;
    if (dim > 1) kappa[dim - 1] = cond;
    for (std::size_t k = 1; k + 1 < dim; ++k) kappa[k] = std::exp(rng.uniform() * std::log(cond));
    auto spectrum = HessianSpectrum::from_eigenvalues(std::move(kappa));
    MomentumConfig m;
    m.gamma = 0.99 * rng.uniform();
    m.alpha = (0.001 + 0.998 * rng.uniform()) * admissible_alpha_limit(m.gamma, spectrum.ell());
    const SpectralReport r = spectral_radius_closed_form(spectrum, m);
    if (r.admissible && r.delta > min_delta && !r.m_infinite) return {std::move(spectrum), m};
  }
}

ProblemInstance make_problem(const ExperimentConfig& c, std::uint64_t seed) {
  if (c.family == Family::Quadratic)
    return ProblemInstance(std::make_shared<const QuadraticProblem>(
        generate_quadratic(c.n_samples, c.dim, c.rho, c.shift, seed)));
  const Vector x_true =
      Vector::Ones(static_cast<Eigen::Index>(c.dim)) / std::sqrt(static_cast<double>(c.dim));
  return ProblemInstance(std::make_shared<const LogisticProblem>(
      generate_logistic(c.n_samples, c.dim, x_true, c.nu, seed)));
}

Vector initial_point(const ExperimentConfig& c, std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  return c.x0 == InitialPoint::Ones ? Vector::Ones(d) : Vector::Zero(d);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInput("slope needs >= 2 paired points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

RunSummary run_experiment(const ExperimentConfig& config) {
  config.validate();
  std::filesystem::create_directories(config.out);
  {
    auto f = open_out(config, "config.txt");
    for (const auto& line : header_lines(config)) f << "# " << line << '\n';
    f << config.echo_text();
  }
  switch (config.experiment) {
    case Experiment::Convergence:
    case Experiment::Averaged:
    case Experiment::Sensitivity:
      return trajectory_experiment(config);
    case Experiment::Coverage:
      return coverage_experiment(config);
    case Experiment::SpectrumMap:
      return spectrum_map_experiment(config);
    case Experiment::PowerBound:
      return power_bound_experiment(config);
  }
  throw ConfigError("unknown experiment");
}

}  // namespace sgdm
