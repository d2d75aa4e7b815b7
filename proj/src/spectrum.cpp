#include "sgdm/spectrum.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "sgdm/error.hpp"

namespace sgdm {

void MomentumConfig::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidInput("alpha must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidInput("gamma must lie in [0,1)");
  if (batch_size < 1) throw InvalidInput("batch size must be >= 1");
}

MomentumConfig MomentumConfig::resolved(double mu) const {
  MomentumConfig out = *this;
  if (gamma_mode == GammaMode::Adaptive) out.gamma = adaptive_gamma(mu, alpha);
  out.gamma_mode = GammaMode::Fixed;
  return out;
}

HessianSpectrum HessianSpectrum::from_eigenvalues(std::vector<double> eigenvalues) {
  if (eigenvalues.empty()) throw InvalidInput("spectrum must not be empty");
  for (double k : eigenvalues) {
    if (!(k > 0.0) || !std::isfinite(k))
      throw InvalidInput("spectrum must be strictly positive and finite");
  }
  std::sort(eigenvalues.begin(), eigenvalues.end());
  return HessianSpectrum(std::move(eigenvalues));
}

HessianSpectrum HessianSpectrum::from_matrix(const Matrix& hessian) {
  if (!linalg::is_symmetric(hessian)) throw InvalidInput("Hessian is not symmetric");
  const Vector ev = linalg::symmetric_eigenvalues(hessian);
  if (!(ev(0) > 0.0)) throw InvalidInput("Hessian is not positive definite");
  return HessianSpectrum(std::vector<double>(ev.data(), ev.data() + ev.size()));
}

HessianSpectrum HessianSpectrum::scaled(double factor) const {
  if (!(factor > 0.0)) throw InvalidInput("scale factor must be positive");
  std::vector<double> k = kappa_;
  for (double& v : k) v *= factor;
  return HessianSpectrum(std::move(k));
}

const char* to_string(Branch branch) noexcept {
  return branch == Branch::Real ? "real" : "complex";
}

std::vector<std::pair<std::string, std::string>> SpectralReport::fields() const {
  auto num = [](double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  };
  return {
      {"lambda", num(lambda)},
      {"divergent", divergent ? "1" : "0"},
      {"phi", num(phi)},
      {"branch", to_string(branch)},
      {"M", m_infinite ? std::string("inf") : num(big_m)},
      {"delta", num(delta)},
      {"admissible", admissible ? "1" : "0"},
      {"gamma_threshold", num(gamma_threshold)},
  };
}

std::string SpectralReport::to_record() const {
  std::string out;
  for (const auto& [k, v] : fields()) {
    if (!out.empty()) out += ' ';
    out += k + "=" + v;
  }
  return out;
}

double admissible_alpha_limit(double gamma, double ell) {
  return 2.0 * (1.0 + gamma) / ((1.0 - gamma) * ell);
}

namespace {

Matrix assemble_gamma(const Matrix& hessian, const MomentumConfig& config) {
  const Eigen::Index d = hessian.rows();
  const double g = config.gamma;
  const double a = config.alpha;
  Matrix out(2 * d, 2 * d);
  const Matrix eye = Matrix::Identity(d, d);
  out.topLeftCorner(d, d) = g * eye;
  out.topRightCorner(d, d) = (1.0 - g) * hessian;
  out.bottomLeftCorner(d, d) = -a * g * eye;
  out.bottomRightCorner(d, d) = eye - a * (1.0 - g) * hessian;
  return out;
}

// alpha = 0 is legal here: the matrix is well defined and examples use it.
void validate_for_matrix(const MomentumConfig& config) {
  if (!(config.alpha >= 0.0) || !std::isfinite(config.alpha))
    throw InvalidInput("alpha must be nonnegative");
  if (!(config.gamma >= 0.0 && config.gamma < 1.0))
    throw InvalidInput("gamma must lie in [0,1)");
}

}  // namespace

Matrix build_gamma_matrix(const Matrix& hessian, const MomentumConfig& config) {
  validate_for_matrix(config);
  if (!linalg::is_symmetric(hessian)) throw InvalidInput("Hessian is not symmetric");
  Eigen::LLT<Matrix> llt(hessian);
  if (llt.info() != Eigen::Success) throw InvalidInput("Hessian is not positive definite");
  return assemble_gamma(hessian, config);
}

Matrix build_gamma_matrix(const HessianSpectrum& spectrum, const MomentumConfig& config) {
  validate_for_matrix(config);
  const auto k = spectrum.eigenvalues();
  Vector diag(static_cast<Eigen::Index>(k.size()));
  for (std::size_t i = 0; i < k.size(); ++i) diag(static_cast<Eigen::Index>(i)) = k[i];
  return assemble_gamma(diag.asDiagonal().toDenseMatrix(), config);
}

std::pair<std::complex<double>, std::complex<double>> block_eigenvalues(
    double kappa, const MomentumConfig& config) {
  // Roots of z^2 - trace z + gamma; the determinant of every block is gamma.
  const double trace = config.gamma + 1.0 - config.alpha * (1.0 - config.gamma) * kappa;
  const double disc = trace * trace - 4.0 * config.gamma;
  if (disc >= 0.0) {
    const double s = std::sqrt(disc);
    // Stable pair: large root from the sum, small one from the product.
    const double big = trace >= 0.0 ? 0.5 * (trace + s) : 0.5 * (trace - s);
    const double small = big != 0.0 ? config.gamma / big : 0.5 * (trace - s);
    return {big, small};
  }
  const double im = 0.5 * std::sqrt(-disc);
  return {{0.5 * trace, im}, {0.5 * trace, -im}};
}

double blockwise_spectral_radius(const HessianSpectrum& spectrum, const MomentumConfig& config) {
  double radius = 0.0;
  for (double k : spectrum.eigenvalues()) {
    const auto [p, m] = block_eigenvalues(k, config);
    radius = std::max({radius, std::abs(p), std::abs(m)});
  }
  return radius;
}

SpectralReport spectral_radius_closed_form(const HessianSpectrum& spectrum,
                                           const MomentumConfig& config) {
  config.validate();
  const double a = config.alpha;
  const double g = config.gamma;
  const double mu = spectrum.mu();
  const double ell = spectrum.ell();

  SpectralReport r;
  const double edge = 2.0 * (1.0 + g) / (1.0 - g);
  r.admissible = a * ell < edge;
  r.phi = std::min(a * mu, edge - a * ell);
  r.gamma_threshold = std::pow((1.0 - r.phi) / (1.0 + r.phi), 2);

  double delta = std::numeric_limits<double>::infinity();
  for (double k : spectrum.eigenvalues()) {
    const double t = g + 1.0 - a * (1.0 - g) * k;
    delta = std::min(delta, std::abs(t * t - 4.0 * g));
  }
  r.delta = delta;
  const double scale = 2.0 * (1.0 - g) * (1.0 + a * ell + ell) + 3.0 * a * g;
  if (delta > 0.0) {
    r.big_m = 4.0 / std::sqrt(delta) * scale;
  } else {
    r.big_m = std::numeric_limits<double>::infinity();
    r.m_infinite = true;
  }

  if (!r.admissible) {
    r.branch = Branch::Real;
    r.lambda = linalg::spectral_radius(build_gamma_matrix(spectrum, config));
    r.divergent = r.lambda >= 1.0;
    return r;
  }

  const double sg = std::sqrt(g);
  const double trace = g + 1.0 - (1.0 - g) * r.phi;
  // trace - 2 sqrt(gamma) factored to avoid cancellation near the phase boundary.
  const double gap = (1.0 - sg) * ((1.0 - sg) - (1.0 + sg) * r.phi);
  const double disc = gap * (trace + 2.0 * sg);
  if (disc > 0.0) {
    r.branch = Branch::Real;
    r.lambda = 0.5 * (trace + std::sqrt(disc));
  } else {
    r.branch = Branch::Complex;
    r.lambda = sg;
  }
  r.divergent = r.lambda >= 1.0;
  return r;
}

OptimalHyperparameters optimal_hyperparameters(const HessianSpectrum& spectrum) {
  const double sm = std::sqrt(spectrum.mu());
  const double sl = std::sqrt(spectrum.ell());
  OptimalHyperparameters out;
  out.alpha = 1.0 / (sm * sl);
  out.lambda = (sl - sm) / (sl + sm);
  out.gamma = out.lambda * out.lambda;
  return out;
}

double adaptive_gamma(double mu, double alpha) {
  if (!(mu > 0.0) || !(alpha > 0.0))
    throw InvalidInput("adaptive_gamma: mu and alpha must be positive");
  const double x = mu * alpha;
  if (x >= 1.0) return 0.0;
  const double r = (1.0 - x) / (1.0 + x);
  return r * r;
}

PowerBoundResult verify_power_bound(const Matrix& gamma_matrix, double big_m, double lambda,
                                    int horizon) {
  if (!std::isfinite(big_m)) throw InvalidInput("power bound undefined: delta = 0 (M infinite)");
  if (!(lambda > 0.0)) throw InvalidInput("power bound needs lambda > 0");
  if (gamma_matrix.rows() != gamma_matrix.cols()) throw InvalidInput("matrix must be square");

  PowerBoundResult out;
  const Matrix step = gamma_matrix / lambda;
  Matrix power = Matrix::Identity(gamma_matrix.rows(), gamma_matrix.cols());
  for (int j = 1; j <= horizon; ++j) {
    power = step * power;
    const double norm = linalg::spectral_norm(power);
    if (!std::isfinite(norm)) {
      out.partial = true;
      break;
    }
    const double ratio = norm / big_m;
    out.max_ratio = std::max(out.max_ratio, ratio);
    out.checked = j;
  }
  out.holds = out.max_ratio <= 1.0 + 1e-12;
  return out;
}

}  // namespace sgdm
