#include <cmath>
#include <functional>
#include <sstream>

#include "doctest.h"
#include "sgdm/error.hpp"
#include "sgdm/problems.hpp"
#include "sgdm/rand.hpp"

using namespace sgdm;

namespace {

ProblemInstance quad(std::uint64_t seed = 3, std::size_t n = 40, std::size_t d = 4) {
  return ProblemInstance(std::make_shared<const QuadraticProblem>(generate_quadratic(n, d, 1.0, 0.5, seed)));
}

ProblemInstance logi(std::uint64_t seed = 3, double nu = 0.01) {
  Vector xt = Vector::Ones(3) / std::sqrt(3.0);
  return ProblemInstance(std::make_shared<const LogisticProblem>(generate_logistic(300, 3, xt, nu, seed)));
}

Vector random_point(RngStream& r, std::size_t d) {
  Vector v(d);
  for (std::size_t i = 0; i < d; ++i) v(i) = r.normal();
  return v;
}

// Central differences of a scalar function.
Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h = 1e-5) {
  Vector g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Vector p = x, m = x;
    p(k) += h;
    m(k) -= h;
    g(k) = (f(p) - f(m)) / (2 * h);
  }
  return g;
}

Matrix fd_hessian(const ProblemInstance& pr, const Vector& x, double h = 1e-5) {
  Matrix hm(x.size(), x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Vector p = x, m = x;
    p(k) += h;
    m(k) -= h;
    hm.col(k) = (pr.full_gradient(p) - pr.full_gradient(m)) / (2 * h);
  }
  return hm;
}

void check_oracles(const ProblemInstance& pr) {
  RngStream r(99, 1);
  for (int t = 0; t < 5; ++t) {
    const Vector x = random_point(r, pr.dim());
    const std::size_t i = r.below(pr.n_samples());
    const Vector g = pr.sample_gradient(i, x);
    const Vector fd = fd_gradient([&](const Vector& y) { return pr.sample_loss(i, y); }, x);
    CHECK((g - fd).norm() <= 1e-6 * std::max(1.0, g.norm()));

    Vector mean = Vector::Zero(pr.dim());
    for (std::size_t j = 0; j < pr.n_samples(); ++j) mean += pr.sample_gradient(j, x);
    mean /= double(pr.n_samples());
    CHECK((pr.full_gradient(x) - mean).norm() <= 1e-10 * std::max(1.0, mean.norm()));
    const Vector lfd = fd_gradient([&](const Vector& y) { return pr.loss(y); }, x);
    CHECK((pr.full_gradient(x) - lfd).norm() <= 1e-6 * std::max(1.0, lfd.norm()));

    const Matrix h = pr.hessian_at(x);
    CHECK((h - fd_hessian(pr, x)).norm() <= 1e-5 * std::max(1.0, h.norm()));

    const std::vector<std::uint32_t> idx = {0, 2, 2, 7, 1};
    Vector expect = Vector::Zero(pr.dim());
    for (auto j : idx) expect += pr.sample_gradient(j, x);
    expect /= double(idx.size());
    CHECK((minibatch_gradient(pr, x, idx) - expect).norm() <= 1e-12 * std::max(1.0, expect.norm()));
  }
}

void check_noise_model(const ProblemInstance& pr) {
  CHECK(pr.full_gradient(pr.x_star()).norm() < 1e-9);
  double s2 = 0.0;
  Matrix om = Matrix::Zero(pr.dim(), pr.dim());
  for (std::size_t i = 0; i < pr.n_samples(); ++i) {
    const Vector g = pr.sample_gradient(i, pr.x_star());
    s2 += g.squaredNorm();
    om += g * g.transpose();
  }
  s2 /= double(pr.n_samples());
  om /= pr.n_samples() * s2;
  CHECK(pr.sigma2() == doctest::Approx(s2).epsilon(1e-10));
  CHECK((pr.omega() - om).norm() < 1e-10);
  CHECK(pr.omega().trace() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(linalg::symmetric_eigenvalues(pr.omega())(0) >= -1e-12);
  const Vector ev = linalg::symmetric_eigenvalues(pr.hessian());
  CHECK(pr.mu() == doctest::Approx(ev(0)));
  CHECK(pr.ell() == doctest::Approx(ev(ev.size() - 1)));
  CHECK(pr.mu() > 0.0);
}

}  // namespace

TEST_CASE("quadratic gradient and Hessian oracles match finite differences") { check_oracles(quad()); }
TEST_CASE("logistic gradient and Hessian oracles match finite differences") { check_oracles(logi()); }

TEST_CASE("quadratic minimizer and noise model") {
  const auto pr = quad();
  const auto* q = pr.quadratic();
  const Vector direct = q->hessian.fullPivLu().solve(q->b_mean);
  CHECK((direct - pr.x_star()).norm() < 1e-12);
  check_noise_model(pr);
  CHECK((pr.hessian_at(Vector::Zero(4)) - pr.hessian()).norm() == 0.0);
  CHECK(pr.tuning_mu() == q->sample_mu);
  CHECK(q->sample_mu <= q->sample_ell);
  CHECK(q->sample_mu >= q->shift);
}

TEST_CASE("logistic minimizer and noise model") {
  const auto pr = logi();
  check_noise_model(pr);
  CHECK(pr.logistic()->grad_norm_at_star <= 1e-10);
  CHECK(pr.logistic()->gd_iterations > 0);
  CHECK(pr.tuning_mu() == pr.mu());
}

TEST_CASE("Lipschitz constants hold on random pairs") {
  RngStream r(4, 4);
  const auto q = quad();
  const auto l = logi(5, 0.0);
  const double lbar = l.logistic()->lbar;
  const double lf = l.logistic()->lf;
  for (int t = 0; t < 50; ++t) {
    const Vector x = random_point(r, 4), y = random_point(r, 4);
    CHECK((q.full_gradient(x) - q.full_gradient(y)).norm() <= q.ell() * (x - y).norm() * (1 + 1e-12));
    const Vector u = random_point(r, 3), v = random_point(r, 3);
    CHECK(linalg::spectral_norm(l.hessian_at(u) - l.hessian_at(v)) <= lbar * (u - v).norm());
    CHECK(linalg::spectral_norm(l.hessian_at(u)) <= lf);
  }
}

TEST_CASE("regeneration is bit-identical and seeds differ") {
  const auto a = generate_quadratic(30, 3, 1.0, 1.0, 17);
  const auto b = generate_quadratic(30, 3, 1.0, 1.0, 17);
  const auto c = generate_quadratic(30, 3, 1.0, 1.0, 18);
  CHECK(a.bank == b.bank);
  CHECK(a.bank != c.bank);
  CHECK((a.x_star - b.x_star).norm() == 0.0);
  const Vector xt = Vector::Ones(2);
  const auto la = generate_logistic(200, 2, xt, 0.0, 9);
  const auto lb = generate_logistic(200, 2, xt, 0.0, 9);
  CHECK(la.features == lb.features);
  CHECK(la.labels == lb.labels);
  CHECK((la.x_star - lb.x_star).norm() == 0.0);
}

TEST_CASE("dump round trip is exact") {
  for (const auto& pr : {quad(8), logi(8)}) {
    std::stringstream ss;
    save_problem(pr, ss);
    const auto back = load_problem(ss);
    CHECK(back.family() == pr.family());
    CHECK(back.seed() == pr.seed());
    CHECK(back.n_samples() == pr.n_samples());
    CHECK((back.x_star() - pr.x_star()).norm() == 0.0);
    CHECK((back.hessian() - pr.hessian()).norm() == 0.0);
    CHECK((back.omega() - pr.omega()).norm() == 0.0);
    CHECK(back.sigma2() == pr.sigma2());
    if (pr.quadratic()) CHECK(back.quadratic()->bank == pr.quadratic()->bank);
    else CHECK(back.logistic()->features == pr.logistic()->features);
  }
  std::stringstream bad("not a problem\n");
  CHECK_THROWS(load_problem(bad));
}

TEST_CASE("rho = 0 gives a deterministic Hessian") {
  const auto p = generate_quadratic(20, 3, 0.0, 2.0, 1);
  CHECK((p.hessian - 2.0 * Matrix::Identity(3, 3)).norm() == 0.0);
  CHECK(p.mu == 2.0);
  CHECK(p.ell == 2.0);
  CHECK(p.sample_mu == doctest::Approx(2.0));
}

TEST_CASE("a zero feature row contributes only the ridge term") {
  const std::size_t d = 2;
  std::vector<double> feat = {1.0, 0.5, -0.3, 1.2, 0.0, 0.0, 0.7, -0.9, -1.1, 0.2, 0.4, 0.4};
  std::vector<double> labels = {1, 0, 1, 1, 0, 1};
  const ProblemInstance pr(std::make_shared<const LogisticProblem>(make_logistic(d, feat, labels, 0.1)));
  Vector x(2);
  x << 0.3, -0.2;
  CHECK((pr.sample_gradient(2, x) - 0.1 * x).norm() < 1e-15);
  CHECK(pr.sample_loss(2, x) == doctest::Approx(std::log(2.0) + 0.05 * x.squaredNorm()));
  CHECK(pr.full_gradient(pr.x_star()).norm() < 1e-9);
}

TEST_CASE("invalid generation parameters") {
  CHECK_THROWS_AS(generate_quadratic(2, 3, 1.0, 1.0, 1), InvalidInput);
  CHECK_THROWS_AS(generate_quadratic(10, 0, 1.0, 1.0, 1), InvalidInput);
  CHECK_THROWS_AS(generate_quadratic(10, 2, 1.0, 0.0, 1), InvalidInput);
  CHECK_THROWS_AS(generate_quadratic(10, 2, -1.0, 1.0, 1), InvalidInput);
  const auto pr = quad();
  CHECK_THROWS_AS(minibatch_gradient(pr, Vector::Zero(4), std::vector<std::uint32_t>{}), InvalidInput);
  CHECK_THROWS_AS(minibatch_gradient(pr, Vector::Zero(4), std::vector<std::uint32_t>{40}), InvalidInput);
  CHECK_THROWS_AS(minibatch_gradient(pr, Vector::Zero(3), std::vector<std::uint32_t>{0}), InvalidInput);
}
