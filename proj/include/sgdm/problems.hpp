#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sgdm/linalg.hpp"

namespace sgdm {

/// Finite-sum quadratic f_i(x) = 1/2 x'A_i x - b_i'x.
///
/// Samples are stored interleaved, one row of d*d + d doubles per sample
/// (A_i row-major followed by b_i), so a mini-batch gradient is one gather-sum
/// over rows followed by a single d x d matvec.
struct QuadraticProblem {
  std::size_t n_samples = 0;
  std::size_t dim = 0;
  std::vector<double> bank;

  Matrix hessian;       ///< Sigma = mean A_i
  Vector b_mean;        ///< mean b_i
  Vector x_star;
  double sigma2 = 0.0;  ///< mean ||A_i x* - b_i||^2
  Matrix omega;         ///< (1/(N sigma2)) sum g_i g_i' at x*
  double mu = 0.0;      ///< extreme eigenvalues of Sigma
  double ell = 0.0;
  double sample_mu = 0.0;   ///< mean over i of the smallest eigenvalue of A_i
  double sample_ell = 0.0;  ///< mean over i of the largest eigenvalue of A_i

  std::uint64_t seed = 0;
  double rho = 0.0;
  double shift = 0.0;

  std::size_t stride() const noexcept { return dim * dim + dim; }
  const double* a(std::size_t i) const noexcept { return bank.data() + i * stride(); }
  const double* b(std::size_t i) const noexcept { return a(i) + dim * dim; }
};

/// l2-regularized logistic regression, labels in {0, 1}.
/// f_i(x) = log(1 + exp(a_i'x)) - b_i a_i'x + nu/2 ||x||^2.
struct LogisticProblem {
  std::size_t n_samples = 0;
  std::size_t dim = 0;
  std::vector<double> features;  ///< N x d, row-major
  std::vector<double> labels;
  double nu = 0.0;
  Vector x_true;

  Vector x_star;
  Matrix hessian;       ///< Hessian at x*
  double sigma2 = 0.0;
  Matrix omega;
  double mu = 0.0;
  double ell = 0.0;
  double lbar = 0.0;    ///< Hessian-Lipschitz estimate (sqrt 3 / 6) mean ||a||^3 + nu
  double lf = 0.0;      ///< smoothness estimate mean ||a||^2 + nu
  double grad_norm_at_star = 0.0;
  int gd_iterations = 0;

  std::uint64_t seed = 0;

  const double* a(std::size_t i) const noexcept { return features.data() + i * dim; }
};

enum class Family { Quadratic, Logistic };

const char* to_string(Family family) noexcept;

/// Scratch buffer reused across mini-batch gradient calls.
using GradientWorkspace = std::vector<double>;

/// Immutable, cheaply copyable handle over either problem family with a
/// uniform oracle interface. Safe to share across threads.
class ProblemInstance {
 public:
  ProblemInstance(std::shared_ptr<const QuadraticProblem> p);
  ProblemInstance(std::shared_ptr<const LogisticProblem> p);

  Family family() const noexcept;
  const QuadraticProblem* quadratic() const noexcept;
  const LogisticProblem* logistic() const noexcept;

  std::size_t dim() const noexcept;
  std::size_t n_samples() const noexcept;
  std::uint64_t seed() const noexcept;
  const Vector& x_star() const noexcept;
  const Matrix& hessian() const noexcept;
  double sigma2() const noexcept;
  const Matrix& omega() const noexcept;
  double mu() const noexcept;
  double ell() const noexcept;
  /// Strong-convexity constant used for adaptive momentum:
  /// mean per-sample minimum curvature (quadratic) or mu of Sigma(x*) (logistic).
  double tuning_mu() const noexcept;
  /// Matching smoothness constant, for condition-number reporting.
  double tuning_ell() const noexcept;

  /// out = (1/B) sum_{i in indices} grad f_i(x). `indices` must be non-empty.
  void minibatch_gradient(const Vector& x, std::span<const std::uint32_t> indices, Vector& out,
                          GradientWorkspace& work) const;
  Vector sample_gradient(std::size_t i, const Vector& x) const;
  Vector full_gradient(const Vector& x) const;
  Matrix hessian_at(const Vector& x) const;
  double sample_loss(std::size_t i, const Vector& x) const;
  double loss(const Vector& x) const;

 private:
  std::variant<std::shared_ptr<const QuadraticProblem>, std::shared_ptr<const LogisticProblem>> p_;
};

/// A_i = rho V_i'V_i + shift I with V_i a d x d standard normal matrix, b_i ~ N(0, I).
/// Throws InvalidInput on n_samples < dim, dim == 0, shift <= 0 or rho < 0.
QuadraticProblem generate_quadratic(std::size_t n_samples, std::size_t dim, double rho,
                                    double shift, std::uint64_t seed);

/// Derived fields from explicit samples. Throws GenerationError if mean A_i is not PD.
QuadraticProblem make_quadratic(std::size_t dim, std::vector<double> bank);

/// a_i ~ N(0, I), b_i ~ Bernoulli(sigmoid(x_true'a_i)); x* by full-batch gradient descent.
LogisticProblem generate_logistic(std::size_t n_samples, std::size_t dim, const Vector& x_true,
                                  double nu, std::uint64_t seed);

/// Derived fields from explicit data. Throws GenerationError if the minimizer search
/// fails or the Hessian at x* is not positive definite.
LogisticProblem make_logistic(std::size_t dim, std::vector<double> features,
                              std::vector<double> labels, double nu);

Vector minibatch_gradient(const ProblemInstance& problem, const Vector& x,
                          std::span<const std::uint32_t> indices);
Matrix hessian_at(const ProblemInstance& problem, const Vector& x);

/// Binary dump: a text header (family, seed, N, d, parameters) followed by
/// little-endian float64 arrays, matrices row-major.
void save_problem(const ProblemInstance& problem, std::ostream& out);
void save_problem(const ProblemInstance& problem, const std::string& path);
ProblemInstance load_problem(std::istream& in);
ProblemInstance load_problem(const std::string& path);

}  // namespace sgdm
