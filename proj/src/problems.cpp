#include "sgdm/problems.hpp"

#include <cmath>
#include <numeric>

#include "sgdm/error.hpp"
#include "sgdm/kernels.hpp"
#include "sgdm/rand.hpp"

namespace sgdm {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kMinimizerTol = 1e-10;
constexpr int kMinimizerCap = 100000;

double softplus(double s) {
  return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
}

std::vector<std::uint32_t> all_indices(std::size_t n) {
  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  return idx;
}

// Gram of per-sample gradient rows, normalized to unit trace.
void fill_noise_moments(const RowMatrix& grads, double& sigma2, Matrix& omega) {
  const double n = static_cast<double>(grads.rows());
  sigma2 = grads.rowwise().squaredNorm().sum() / n;
  if (!(sigma2 > 0.0)) {
    omega = Matrix::Zero(grads.cols(), grads.cols());
    return;
  }
  omega = grads.transpose() * grads / (n * sigma2);
  omega = 0.5 * (omega + omega.transpose()).eval();
}

struct LogisticData {
  const double* features;
  const double* labels;
  std::size_t n;
  std::size_t d;
  double nu;

  double loss(const Vector& x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = kernels::dot(features + i * d, x.data(), d);
      s += softplus(z) - labels[i] * z;
    }
    return s / static_cast<double>(n) + 0.5 * nu * x.squaredNorm();
  }

  Vector gradient(const Vector& x, std::span<const std::uint32_t> idx) const {
    Vector g(static_cast<Eigen::Index>(d));
    kernels::logistic_gradient_sum(features, labels, d, idx, x.data(), g.data());
    g /= static_cast<double>(idx.size());
    g += nu * x;
    return g;
  }

  Matrix hessian(const Vector& x) const {
    Eigen::Map<const RowMatrix> f(features, static_cast<Eigen::Index>(n),
                                  static_cast<Eigen::Index>(d));
    Vector w(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const double p = kernels::sigmoid(kernels::dot(features + i * d, x.data(), d));
      w(static_cast<Eigen::Index>(i)) = p * (1.0 - p);
    }
    Matrix h = f.transpose() * w.asDiagonal() * f;
    h /= static_cast<double>(n);
    h = 0.5 * (h + h.transpose()).eval();
    h.diagonal().array() += nu;
    return h;
  }
};

// Full-batch gradient descent with Armijo backtracking. Once the loss
// decrease drops below rounding, a step is accepted if it shrinks the gradient.
Vector minimize_logistic(const LogisticData& data, int& iterations, double& grad_norm) {
  const auto idx = all_indices(data.n);
  Vector x = Vector::Zero(static_cast<Eigen::Index>(data.d));
  Vector g = data.gradient(x, idx);
  double f = data.loss(x);
  double step = 1.0;
  iterations = 0;
  for (; iterations < kMinimizerCap; ++iterations) {
    const double gn = g.norm();
    if (!std::isfinite(gn)) throw GenerationError("logistic minimizer: non-finite gradient");
    if (gn <= kMinimizerTol) break;
    step = std::min(step * 2.0, 1e6);
    bool accepted = false;
    while (step > 1e-20) {
      const Vector xn = x - step * g;
      const double fn = data.loss(xn);
      const double decrease = 0.5 * step * gn * gn;
      const bool resolvable = decrease > 1e-12 * std::max(1.0, std::abs(f));
      if (resolvable && fn <= f - decrease) {
        x = xn;
        f = fn;
        g = data.gradient(x, idx);
        accepted = true;
        break;
      }
      if (!resolvable || std::abs(f - fn) <= 1e-13 * std::max(1.0, std::abs(f))) {
        Vector gn_new = data.gradient(xn, idx);
        if (gn_new.norm() < gn) {
          x = xn;
          f = fn;
          g = std::move(gn_new);
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) {
      throw GenerationError("logistic minimizer: line search failed at iteration " +
                            std::to_string(iterations) + ", gradient norm " + std::to_string(gn));
    }
  }
  grad_norm = g.norm();
  if (!(grad_norm <= kMinimizerTol)) {
    throw GenerationError("logistic minimizer: no convergence in " +
                          std::to_string(kMinimizerCap) + " iterations, gradient norm " +
                          std::to_string(grad_norm));
  }
  return x;
}

}  // namespace

const char* to_string(Family family) noexcept {
  return family == Family::Quadratic ? "quadratic" : "logistic";
}

QuadraticProblem make_quadratic(std::size_t dim, std::vector<double> bank) {
  if (dim == 0) throw InvalidInput("dimension must be >= 1");
  const std::size_t stride = dim * dim + dim;
  if (bank.empty() || bank.size() % stride != 0)
    throw InvalidInput("sample bank size is not a multiple of d*d + d");

  QuadraticProblem p;
  p.dim = dim;
  p.n_samples = bank.size() / stride;
  p.bank = std::move(bank);
  if (p.n_samples > 0xffffffffull) throw InvalidInput("too many samples");

  const auto d = static_cast<Eigen::Index>(dim);
  const auto idx = all_indices(p.n_samples);
  std::vector<double> sum(stride);
  kernels::scalar::gather_sum(p.bank.data(), stride, stride, idx, sum.data());
  const double inv_n = 1.0 / static_cast<double>(p.n_samples);
  p.hessian = Eigen::Map<const RowMatrix>(sum.data(), d, d) * inv_n;
  p.hessian = 0.5 * (p.hessian + p.hessian.transpose()).eval();
  p.b_mean = Eigen::Map<const Vector>(sum.data() + dim * dim, d) * inv_n;

  Eigen::LLT<Matrix> llt(p.hessian);
  if (llt.info() != Eigen::Success) throw GenerationError("mean quadratic Hessian is singular");
  p.x_star = llt.solve(p.b_mean);

  const Vector ev = linalg::symmetric_eigenvalues(p.hessian);
  p.mu = ev(0);
  p.ell = ev(d - 1);
  if (!(p.mu > 0.0)) throw GenerationError("mean quadratic Hessian is not positive definite");

  RowMatrix grads(static_cast<Eigen::Index>(p.n_samples), d);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(d);
  double mu_sum = 0.0;
  double ell_sum = 0.0;
  for (std::size_t i = 0; i < p.n_samples; ++i) {
    Eigen::Map<const RowMatrix> a(p.a(i), d, d);
    Eigen::Map<const Vector> b(p.b(i), d);
    grads.row(static_cast<Eigen::Index>(i)) = (a * p.x_star - b).transpose();
    solver.compute(a, Eigen::EigenvaluesOnly);
    mu_sum += solver.eigenvalues()(0);
    ell_sum += solver.eigenvalues()(d - 1);
  }
  p.sample_mu = mu_sum * inv_n;
  p.sample_ell = ell_sum * inv_n;
  fill_noise_moments(grads, p.sigma2, p.omega);
  return p;
}

QuadraticProblem generate_quadratic(std::size_t n_samples, std::size_t dim, double rho,
                                    double shift, std::uint64_t seed) {
  if (dim == 0) throw InvalidInput("dimension must be >= 1");
  if (n_samples < dim) throw InvalidInput("n_samples must be >= dim");
  if (!(shift > 0.0)) throw InvalidInput("diagonal shift must be positive");
  if (!(rho >= 0.0)) throw InvalidInput("rho must be nonnegative");

  const auto d = static_cast<Eigen::Index>(dim);
  const std::size_t stride = dim * dim + dim;
  std::vector<double> bank(n_samples * stride);
  RngStream rng(seed, streams::kProblem);
  RowMatrix v(d, d);
  for (std::size_t i = 0; i < n_samples; ++i) {
    fill_normal(rng, std::span<double>(v.data(), dim * dim));
    double* row = bank.data() + i * stride;
    Eigen::Map<RowMatrix> a(row, d, d);
    a.noalias() = rho * (v.transpose() * v);
    a = 0.5 * (a + a.transpose()).eval();
    a.diagonal().array() += shift;
    fill_normal(rng, std::span<double>(row + dim * dim, dim));
  }
  QuadraticProblem p = make_quadratic(dim, std::move(bank));
  p.seed = seed;
  p.rho = rho;
  p.shift = shift;
  return p;
}

LogisticProblem make_logistic(std::size_t dim, std::vector<double> features,
                              std::vector<double> labels, double nu) {
  if (dim == 0) throw InvalidInput("dimension must be >= 1");
  if (!(nu >= 0.0)) throw InvalidInput("nu must be nonnegative");
  if (labels.empty() || features.size() != labels.size() * dim)
    throw InvalidInput("features must hold N x d values for N labels");
  for (double b : labels) {
    if (b != 0.0 && b != 1.0) throw InvalidInput("labels must be 0 or 1");
  }

  LogisticProblem p;
  p.dim = dim;
  p.n_samples = labels.size();
  p.features = std::move(features);
  p.labels = std::move(labels);
  p.nu = nu;
  p.x_true = Vector::Zero(static_cast<Eigen::Index>(dim));

  const LogisticData data{p.features.data(), p.labels.data(), p.n_samples, dim, nu};
  p.x_star = minimize_logistic(data, p.gd_iterations, p.grad_norm_at_star);
  p.hessian = data.hessian(p.x_star);
  Eigen::LLT<Matrix> llt(p.hessian);
  const Vector ev = linalg::symmetric_eigenvalues(p.hessian);
  if (llt.info() != Eigen::Success || !(ev(0) > 0.0))
    throw GenerationError("logistic Hessian at the minimizer is not positive definite");
  p.mu = ev(0);
  p.ell = ev(ev.size() - 1);

  const auto d = static_cast<Eigen::Index>(dim);
  RowMatrix grads(static_cast<Eigen::Index>(p.n_samples), d);
  double cube = 0.0;
  double square = 0.0;
  for (std::size_t i = 0; i < p.n_samples; ++i) {
    Eigen::Map<const Vector> a(p.a(i), d);
    const double r = kernels::sigmoid(a.dot(p.x_star)) - p.labels[i];
    grads.row(static_cast<Eigen::Index>(i)) = (r * a + nu * p.x_star).transpose();
    const double n2 = a.squaredNorm();
    square += n2;
    cube += n2 * std::sqrt(n2);
  }
  const double inv_n = 1.0 / static_cast<double>(p.n_samples);
  p.lbar = std::sqrt(3.0) / 6.0 * cube * inv_n + nu;
  p.lf = square * inv_n + nu;
  fill_noise_moments(grads, p.sigma2, p.omega);
  return p;
}

LogisticProblem generate_logistic(std::size_t n_samples, std::size_t dim, const Vector& x_true,
                                  double nu, std::uint64_t seed) {
  if (dim == 0) throw InvalidInput("dimension must be >= 1");
  if (n_samples == 0) throw InvalidInput("n_samples must be >= 1");
  if (static_cast<std::size_t>(x_true.size()) != dim)
    throw InvalidInput("x_true has the wrong dimension");
  RngStream rng(seed, streams::kProblem);
  std::vector<double> features(n_samples * dim);
  std::vector<double> labels(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    double* a = features.data() + i * dim;
    fill_normal(rng, std::span<double>(a, dim));
    const double p = kernels::sigmoid(kernels::scalar::dot(a, x_true.data(), dim));
    labels[i] = rng.bernoulli(p) ? 1.0 : 0.0;
  }
  LogisticProblem out = make_logistic(dim, std::move(features), std::move(labels), nu);
  out.x_true = x_true;
  out.seed = seed;
  return out;
}

ProblemInstance::ProblemInstance(std::shared_ptr<const QuadraticProblem> p) : p_(std::move(p)) {
  if (!std::get<0>(p_)) throw InvalidInput("null problem");
}

ProblemInstance::ProblemInstance(std::shared_ptr<const LogisticProblem> p) : p_(std::move(p)) {
  if (!std::get<1>(p_)) throw InvalidInput("null problem");
}

Family ProblemInstance::family() const noexcept {
  return p_.index() == 0 ? Family::Quadratic : Family::Logistic;
}

const QuadraticProblem* ProblemInstance::quadratic() const noexcept {
  return p_.index() == 0 ? std::get<0>(p_).get() : nullptr;
}

const LogisticProblem* ProblemInstance::logistic() const noexcept {
  return p_.index() == 1 ? std::get<1>(p_).get() : nullptr;
}

#define SGDM_VISIT(expr) std::visit([&](const auto& q) -> decltype(auto) { return (expr); }, p_)

std::size_t ProblemInstance::dim() const noexcept { return SGDM_VISIT(q->dim); }
std::size_t ProblemInstance::n_samples() const noexcept { return SGDM_VISIT(q->n_samples); }
std::uint64_t ProblemInstance::seed() const noexcept { return SGDM_VISIT(q->seed); }
const Vector& ProblemInstance::x_star() const noexcept { return SGDM_VISIT(q->x_star); }
const Matrix& ProblemInstance::hessian() const noexcept { return SGDM_VISIT(q->hessian); }
double ProblemInstance::sigma2() const noexcept { return SGDM_VISIT(q->sigma2); }
const Matrix& ProblemInstance::omega() const noexcept { return SGDM_VISIT(q->omega); }
double ProblemInstance::mu() const noexcept { return SGDM_VISIT(q->mu); }
double ProblemInstance::ell() const noexcept { return SGDM_VISIT(q->ell); }

#undef SGDM_VISIT

double ProblemInstance::tuning_mu() const noexcept {
  if (const auto* q = quadratic()) return q->sample_mu;
  return logistic()->mu;
}

double ProblemInstance::tuning_ell() const noexcept {
  if (const auto* q = quadratic()) return q->sample_ell;
  return logistic()->ell;
}

void ProblemInstance::minibatch_gradient(const Vector& x, std::span<const std::uint32_t> indices,
                                         Vector& out, GradientWorkspace& work) const {
  const std::size_t d = dim();
  out.resize(static_cast<Eigen::Index>(d));
  const double inv_b = 1.0 / static_cast<double>(indices.size());
  if (const auto* q = quadratic()) {
    const std::size_t stride = q->stride();
    work.resize(stride);
    kernels::gather_sum(q->bank.data(), stride, stride, indices, work.data());
    const double* bsum = work.data() + d * d;
    for (std::size_t r = 0; r < d; ++r)
      out(static_cast<Eigen::Index>(r)) =
          (kernels::dot(work.data() + r * d, x.data(), d) - bsum[r]) * inv_b;
    return;
  }
  const auto* l = logistic();
  kernels::logistic_gradient_sum(l->features.data(), l->labels.data(), d, indices, x.data(),
                                 out.data());
  out *= inv_b;
  if (l->nu != 0.0) out += l->nu * x;
}

Vector ProblemInstance::sample_gradient(std::size_t i, const Vector& x) const {
  if (i >= n_samples()) throw InvalidInput("sample index out of range");
  const auto d = static_cast<Eigen::Index>(dim());
  if (const auto* q = quadratic()) {
    Eigen::Map<const RowMatrix> a(q->a(i), d, d);
    Eigen::Map<const Vector> b(q->b(i), d);
    return a * x - b;
  }
  const auto* l = logistic();
  Eigen::Map<const Vector> a(l->a(i), d);
  return (kernels::sigmoid(a.dot(x)) - l->labels[i]) * a + l->nu * x;
}

Vector ProblemInstance::full_gradient(const Vector& x) const {
  if (const auto* q = quadratic()) return q->hessian * x - q->b_mean;
  const auto* l = logistic();
  const LogisticData data{l->features.data(), l->labels.data(), l->n_samples, l->dim, l->nu};
  return data.gradient(x, all_indices(l->n_samples));
}

Matrix ProblemInstance::hessian_at(const Vector& x) const {
  if (const auto* q = quadratic()) return q->hessian;
  const auto* l = logistic();
  const LogisticData data{l->features.data(), l->labels.data(), l->n_samples, l->dim, l->nu};
  return data.hessian(x);
}

double ProblemInstance::sample_loss(std::size_t i, const Vector& x) const {
  if (i >= n_samples()) throw InvalidInput("sample index out of range");
  const auto d = static_cast<Eigen::Index>(dim());
  if (const auto* q = quadratic()) {
    Eigen::Map<const RowMatrix> a(q->a(i), d, d);
    Eigen::Map<const Vector> b(q->b(i), d);
    return 0.5 * x.dot(a * x) - b.dot(x);
  }
  const auto* l = logistic();
  Eigen::Map<const Vector> a(l->a(i), d);
  const double z = a.dot(x);
  return softplus(z) - l->labels[i] * z + 0.5 * l->nu * x.squaredNorm();
}

double ProblemInstance::loss(const Vector& x) const {
  if (const auto* q = quadratic()) return 0.5 * x.dot(q->hessian * x) - q->b_mean.dot(x);
  const auto* l = logistic();
  const LogisticData data{l->features.data(), l->labels.data(), l->n_samples, l->dim, l->nu};
  return data.loss(x);
}

Vector minibatch_gradient(const ProblemInstance& problem, const Vector& x,
                          std::span<const std::uint32_t> indices) {
  if (indices.empty()) throw InvalidInput("mini-batch must be non-empty");
  for (std::uint32_t i : indices) {
    if (i >= problem.n_samples()) throw InvalidInput("sample index out of range");
  }
  if (static_cast<std::size_t>(x.size()) != problem.dim()) throw InvalidInput("x has the wrong dimension");
  Vector out;
  GradientWorkspace work;
  problem.minibatch_gradient(x, indices, out, work);
  return out;
}

Matrix hessian_at(const ProblemInstance& problem, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != problem.dim()) throw InvalidInput("x has the wrong dimension");
  return problem.hessian_at(x);
}

}  // namespace sgdm
