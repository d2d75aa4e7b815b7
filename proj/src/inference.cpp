#include "sgdm/inference.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "sgdm/error.hpp"
#include "sgdm/optimizer.hpp"
#include "sgdm/parallel.hpp"

namespace sgdm {

namespace {

void check_direction(const Vector& w, std::size_t dim) {
  if (static_cast<std::size_t>(w.size()) != dim) throw InvalidInput("direction has the wrong dimension");
  if (std::abs(w.norm() - 1.0) > 1e-12) throw InvalidInput("direction must have unit norm");
}

void check_window(std::int64_t n, std::int64_t n0, std::size_t batch_size) {
  if (n <= n0) throw InvalidInput("need n > n0");
  if (n0 < 0) throw InvalidInput("n0 must be nonnegative");
  if (batch_size < 1) throw InvalidInput("batch size must be >= 1");
}

double directional_variance(const Vector& w, const CovarianceEstimate& cov) {
  const double v = w.dot(cov.sandwich * w);
  if (!(v > 0.0)) throw DegenerateDirection("direction has zero sandwich variance");
  return v;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

CovarianceEstimate CovarianceEstimate::from_parts(const Matrix& sigma_matrix, const Matrix& omega,
                                                  double sigma2) {
  if (!linalg::is_symmetric(sigma_matrix, 1e-10)) throw InvalidInput("Sigma is not symmetric");
  if (omega.rows() != sigma_matrix.rows() || omega.cols() != sigma_matrix.cols())
    throw InvalidInput("Omega and Sigma sizes differ");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw InvalidInput("sigma2 must be positive");
  CovarianceEstimate c;
  c.sigma_matrix = sigma_matrix;
  c.omega = omega;
  c.sigma2 = sigma2;
  const Matrix inv = linalg::spd_inverse(sigma_matrix);
  c.sandwich = inv * omega * inv;
  c.sandwich = 0.5 * (c.sandwich + c.sandwich.transpose()).eval();
  return c;
}

CovarianceEstimate CovarianceEstimate::at_minimizer(const ProblemInstance& problem) {
  return from_parts(problem.hessian(), problem.omega(), problem.sigma2());
}

CovarianceEstimate CovarianceEstimate::at_point(const ProblemInstance& problem, const Vector& x) {
  const std::size_t n = problem.n_samples();
  const auto d = static_cast<Eigen::Index>(problem.dim());
  Matrix gram = Matrix::Zero(d, d);
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vector g = problem.sample_gradient(i, x);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(g);
    sq += g.squaredNorm();
  }
  gram = gram.selfadjointView<Eigen::Lower>();
  const double sigma2 = sq / static_cast<double>(n);
  CovarianceEstimate c = from_parts(problem.hessian_at(x), gram / (static_cast<double>(n) * sigma2), sigma2);
  c.estimated = true;
  return c;
}

double z_statistic(const Vector& xbar, const Vector& x_star, const Vector& omega_vec,
                   const CovarianceEstimate& cov, std::int64_t n, std::int64_t n0,
                   std::size_t batch_size) {
  check_window(n, n0, batch_size);
  check_direction(omega_vec, static_cast<std::size_t>(cov.sandwich.rows()));
  const double v = directional_variance(omega_vec, cov);
  const double scale = std::sqrt(static_cast<double>(batch_size) * static_cast<double>(n - n0));
  return scale * omega_vec.dot(xbar - x_star) / (std::sqrt(cov.sigma2) * std::sqrt(v));
}

Interval confidence_interval(const Vector& xbar, const Vector& omega_vec,
                             const CovarianceEstimate& cov, std::int64_t n, std::int64_t n0,
                             std::size_t batch_size, double level) {
  check_window(n, n0, batch_size);
  check_direction(omega_vec, static_cast<std::size_t>(cov.sandwich.rows()));
  if (!(level > 0.0 && level < 1.0)) throw InvalidInput("level must lie in (0,1)");
  const double v = directional_variance(omega_vec, cov);
  const double z = stats::normal_quantile(0.5 + 0.5 * level);
  const double half = z * std::sqrt(cov.sigma2) * std::sqrt(v) /
                      std::sqrt(static_cast<double>(batch_size) * static_cast<double>(n - n0));
  const double centre = omega_vec.dot(xbar);
  return {centre - half, centre + half};
}

RegionStatistic confidence_region_statistic(const Vector& xbar, const Vector& x_candidate,
                                            const CovarianceEstimate& cov, std::int64_t n,
                                            std::int64_t n0, std::size_t batch_size) {
  check_window(n, n0, batch_size);
  const auto d = cov.omega.rows();
  if (xbar.size() != d || x_candidate.size() != d) throw InvalidInput("vector has the wrong dimension");

  RegionStatistic out;
  Matrix omega = cov.omega;
  const Vector ev = linalg::symmetric_eigenvalues(omega);
  if (!(ev(0) > 1e-12 * ev(d - 1))) {
    omega.diagonal().array() += 1e-10 * omega.trace() / static_cast<double>(d);
    out.ridged = true;
  }
  Eigen::LLT<Matrix> llt(omega);
  if (llt.info() != Eigen::Success)
    throw InvalidInput("Omega is singular; supply a ridge-regularized Omega");
  const Vector delta = cov.sigma_matrix * (xbar - x_candidate);
  const double quad = delta.dot(llt.solve(delta));
  out.value = static_cast<double>(batch_size) * static_cast<double>(n - n0) / cov.sigma2 * quad;
  return out;
}

InferenceReport make_report(const Vector& xbar, const Vector& x_star,
                            const std::vector<Vector>& directions, const CovarianceEstimate& cov,
                            std::int64_t n, std::int64_t n0, std::size_t batch_size, double level) {
  InferenceReport r;
  r.xbar = xbar;
  r.n = n;
  r.n0 = n0;
  r.batch_size = batch_size;
  for (const auto& w : directions) {
    r.z_values.push_back(z_statistic(xbar, x_star, w, cov, n, n0, batch_size));
    r.intervals.push_back(confidence_interval(xbar, w, cov, n, n0, batch_size, level));
  }
  r.region_statistic = confidence_region_statistic(xbar, x_star, cov, n, n0, batch_size).value;
  return r;
}

void CoverageSummary::write_csv(std::ostream& out, const std::vector<std::string>& header) const {
  for (const auto& line : header) out << "# " << line << '\n';
  const std::size_t k = coverage.size();
  out << "seed,diverged";
  for (std::size_t j = 0; j < k; ++j) out << ",z_" << j;
  for (std::size_t j = 0; j < k; ++j) out << ",covered_" << j;
  out << ",region,region_covered\n";
  const auto old = out.precision(17);
  for (const auto& r : records) {
    out << r.seed << ',' << (r.diverged ? 1 : 0);
    for (std::size_t j = 0; j < k; ++j) out << ',' << (r.diverged ? NAN : r.z[j]);
    for (std::size_t j = 0; j < k; ++j) out << ',' << (!r.diverged && r.covered[j] ? 1 : 0);
    out << ',' << (r.diverged ? NAN : r.region_statistic) << ',' << (r.region_covered ? 1 : 0) << '\n';
  }
  out.precision(old);
}

std::string CoverageSummary::summary_json(
    const std::vector<std::pair<std::string, std::string>>& echo) const {
  std::ostringstream os;
  os << "{\"replications\": " << records.size() << ", \"diverged\": " << diverged
     << ", \"gamma\": " << num(gamma_used) << ", \"coverage\": [";
  for (std::size_t j = 0; j < coverage.size(); ++j) os << (j ? ", " : "") << num(coverage[j]);
  os << "], \"region_coverage\": " << num(region_coverage) << ", \"ks_statistic\": "
     << num(ks.statistic) << ", \"ks_critical\": " << num(ks.critical)
     << ", \"ks_pass\": " << (ks.pass ? "true" : "false");
  for (const auto& [k, v] : echo) os << ", \"" << k << "\": \"" << v << '"';
  os << '}';
  return os.str();
}

CoverageSummary run_coverage(const ProblemInstance& problem, const MomentumConfig& config,
                             const CoverageOptions& options) {
  check_window(options.n, options.n0, config.batch_size);
  if (options.n < 2) throw InvalidInput("coverage needs n >= 2");
  if (options.replications < 1) throw InvalidInput("replications must be >= 1");
  const std::size_t d = problem.dim();
  std::vector<Vector> directions = options.directions;
  if (directions.empty())
    directions.push_back(Vector::Ones(static_cast<Eigen::Index>(d)) / std::sqrt(static_cast<double>(d)));
  for (const auto& w : directions) check_direction(w, d);

  const CovarianceEstimate cov = CovarianceEstimate::at_minimizer(problem);
  const double chi2 = stats::chi_square_quantile(static_cast<int>(d), 1.0 - options.level);
  const Vector& x_star = problem.x_star();

  CoverageSummary s;
  s.records.resize(options.replications);
  s.gamma_used = config.resolved(problem.tuning_mu()).gamma;
  parallel_for(options.replications, options.threads, [&](std::size_t r) {
    ReplicationRecord& rec = s.records[r];
    rec.seed = options.seed_base + r;
    RunOptions ro;
    ro.iters = options.n - 1;
    ro.n0 = options.n0;
    ro.seed = rec.seed;
    ro.record = false;
    ro.x_init = options.x_init;
    try {
      const RunResult res = run(problem, config, ro);
      const Vector xbar = res.averaging.mean();
      const std::size_t b = config.batch_size;
      for (const auto& w : directions) {
        rec.z.push_back(z_statistic(xbar, x_star, w, cov, options.n, options.n0, b));
        rec.covered.push_back(confidence_interval(xbar, w, cov, options.n, options.n0, b, options.level)
                                  .contains(w.dot(x_star)));
      }
      rec.region_statistic = confidence_region_statistic(xbar, x_star, cov, options.n, options.n0, b).value;
      rec.region_covered = rec.region_statistic <= chi2;
    } catch (const Diverged&) {
      rec.diverged = true;
    }
  });

  s.coverage.assign(directions.size(), 0.0);
  std::vector<double> z0;
  std::size_t region_hits = 0;
  for (const auto& rec : s.records) {
    if (rec.diverged) {
      ++s.diverged;
      continue;
    }
    for (std::size_t j = 0; j < directions.size(); ++j) s.coverage[j] += rec.covered[j] ? 1.0 : 0.0;
    region_hits += rec.region_covered ? 1 : 0;
    z0.push_back(rec.z[0]);
  }
  const double ok = static_cast<double>(z0.size());
  if (ok > 0) {
    for (double& c : s.coverage) c /= ok;
    s.region_coverage = static_cast<double>(region_hits) / ok;
  }
  if (z0.size() >= 100) s.ks = stats::ks_normality(z0);
  return s;
}

}  // namespace sgdm
