#include <cmath>
#include <sstream>

#include "doctest.h"
#include "sgdm/error.hpp"
#include "sgdm/inference.hpp"
#include "sgdm/optimizer.hpp"
#include "sgdm/rand.hpp"

using namespace sgdm;

namespace {

Matrix m1(double v) { return Matrix::Constant(1, 1, v); }
Vector v1(double v) { return Vector::Constant(1, v); }

Matrix random_spd(RngStream& r, int d, double floor) {
  Matrix g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = r.normal();
  return g.transpose() * g + floor * Matrix::Identity(d, d);
}

Vector random_unit(RngStream& r, int d) {
  Vector v(d);
  for (int i = 0; i < d; ++i) v(i) = r.normal();
  return v.normalized();
}

Matrix random_orthogonal(RngStream& r, int d) {
  Matrix g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = r.normal();
  return Eigen::HouseholderQR<Matrix>(g).householderQ();
}

ProblemInstance quad(std::size_t d = 2) {
  return ProblemInstance(std::make_shared<const QuadraticProblem>(generate_quadratic(200, d, 1.0, 1.0, 4)));
}

}  // namespace

TEST_CASE("one-dimensional Z by hand") {
  const auto cov = CovarianceEstimate::from_parts(m1(2.0), m1(1.0), 4.0);
  CHECK(cov.sandwich(0, 0) == doctest::Approx(0.25));
  // sqrt(10 * 100) * 0.1 / (2 * 0.5)
  CHECK(z_statistic(v1(1.1), v1(1.0), v1(1.0), cov, 150, 50, 10) == doctest::Approx(std::sqrt(10.0)));
  CHECK(z_statistic(v1(1.0), v1(1.0), v1(1.0), cov, 150, 50, 10) == 0.0);
  CHECK(z_statistic(v1(1.1), v1(1.0), v1(-1.0), cov, 150, 50, 10) == doctest::Approx(-std::sqrt(10.0)));
}

TEST_CASE("Z scales with the square root of B(n - n0)") {
  RngStream r(1, 1);
  const auto cov = CovarianceEstimate::from_parts(random_spd(r, 3, 0.5), random_spd(r, 3, 0.1), 2.0);
  const Vector w = random_unit(r, 3);
  const Vector xb = Vector::Ones(3) * 0.01;
  const Vector xs = Vector::Zero(3);
  const double z1 = z_statistic(xb, xs, w, cov, 200, 100, 5);
  CHECK(z_statistic(xb, xs, w, cov, 300, 100, 5) == doctest::Approx(std::sqrt(2.0) * z1));
  CHECK(z_statistic(xb, xs, w, cov, 200, 100, 20) == doctest::Approx(2.0 * z1));
  const auto ci1 = confidence_interval(xb, w, cov, 200, 100, 5, 0.95);
  const auto ci4 = confidence_interval(xb, w, cov, 500, 100, 5, 0.95);
  CHECK((ci4.hi - ci4.lo) == doctest::Approx(0.5 * (ci1.hi - ci1.lo)));
  CHECK(0.5 * (ci1.hi + ci1.lo) == doctest::Approx(w.dot(xb)));
}

TEST_CASE("interval contains w'x* exactly when |Z| <= z_0.975") {
  RngStream r(2, 2);
  const double zc = stats::normal_quantile(0.975);
  int inside = 0;
  for (int i = 0; i < 500; ++i) {
    const auto cov = CovarianceEstimate::from_parts(random_spd(r, 2, 0.5), random_spd(r, 2, 0.1), 1.5);
    const Vector w = random_unit(r, 2);
    Vector xs(2), xb(2);
    xs << r.normal(), r.normal();
    xb = xs + 0.05 * Vector::NullaryExpr(2, [&](Eigen::Index) { return r.normal(); });
    const double z = z_statistic(xb, xs, w, cov, 1000, 500, 4);
    if (std::abs(std::abs(z) - zc) < 1e-9) continue;
    const bool in = confidence_interval(xb, w, cov, 1000, 500, 4, 0.95).contains(w.dot(xs));
    CHECK(in == (std::abs(z) <= zc));
    inside += in;
  }
  CHECK(inside > 0);
  CHECK(inside < 500);
}

TEST_CASE("region statistic in one dimension equals Z squared") {
  RngStream r(3, 3);
  for (int i = 0; i < 50; ++i) {
    const auto cov = CovarianceEstimate::from_parts(m1(0.1 + r.uniform()), m1(0.1 + r.uniform()), 0.5 + r.uniform());
    const Vector xb = v1(r.normal()), xs = v1(r.normal());
    const double z = z_statistic(xb, xs, v1(1.0), cov, 400, 100, 3);
    const auto reg = confidence_region_statistic(xb, xs, cov, 400, 100, 3);
    CHECK(reg.value == doctest::Approx(z * z).epsilon(1e-12));
    CHECK_FALSE(reg.ridged);
  }
}

TEST_CASE("Z and the region statistic are rotation equivariant") {
  RngStream r(4, 4);
  for (int i = 0; i < 50; ++i) {
    const int d = 4;
    const Matrix s = random_spd(r, d, 0.3), o = random_spd(r, d, 0.2);
    const Matrix q = random_orthogonal(r, d);
    const Vector w = random_unit(r, d), xb = random_unit(r, d) * 0.1, xs = Vector::Zero(d);
    const auto c1 = CovarianceEstimate::from_parts(s, o, 1.7);
    const auto c2 = CovarianceEstimate::from_parts(q * s * q.transpose(), q * o * q.transpose(), 1.7);
    CHECK(z_statistic(q * xb, xs, q * w, c2, 900, 100, 8) ==
          doctest::Approx(z_statistic(xb, xs, w, c1, 900, 100, 8)).epsilon(1e-10));
    CHECK(confidence_region_statistic(q * xb, xs, c2, 900, 100, 8).value ==
          doctest::Approx(confidence_region_statistic(xb, xs, c1, 900, 100, 8).value).epsilon(1e-10));
  }
}

TEST_CASE("sandwich inverts Sigma Omega^-1 Sigma") {
  RngStream r(5, 5);
  for (int i = 0; i < 20; ++i) {
    const Matrix s = random_spd(r, 3, 0.5), o = random_spd(r, 3, 0.5);
    const auto c = CovarianceEstimate::from_parts(s, o, 1.0);
    CHECK((c.sandwich * (s * o.inverse() * s) - Matrix::Identity(3, 3)).norm() < 1e-9);
  }
}

TEST_CASE("input validation and degenerate directions") {
  const auto cov = CovarianceEstimate::from_parts(Matrix::Identity(2, 2), Vector(Eigen::Vector2d(1.0, 0.0)).asDiagonal(), 1.0);
  const Vector x = Vector::Zero(2);
  Vector e2(2);
  e2 << 0.0, 1.0;
  CHECK_THROWS_AS(z_statistic(x, x, e2, cov, 10, 5, 1), DegenerateDirection);
  CHECK_THROWS_AS(z_statistic(x, x, Vector::Ones(2), cov, 10, 5, 1), InvalidInput);
  CHECK_THROWS_AS(z_statistic(x, x, e2, cov, 5, 5, 1), InvalidInput);
  const auto reg = confidence_region_statistic(Vector::Ones(2), x, cov, 10, 5, 1);
  CHECK(reg.ridged);
  CHECK(std::isfinite(reg.value));
  CHECK_THROWS_AS(CovarianceEstimate::from_parts(-Matrix::Identity(2, 2), Matrix::Identity(2, 2), 1.0), InvalidInput);
  CHECK_THROWS_AS(CovarianceEstimate::from_parts(Matrix::Identity(2, 2), Matrix::Identity(3, 3), 1.0), InvalidInput);
  CHECK_THROWS_AS(CovarianceEstimate::from_parts(Matrix::Identity(2, 2), Matrix::Identity(2, 2), 0.0), InvalidInput);
}

TEST_CASE("estimation mode at x* matches simulation mode") {
  const auto pr = quad(3);
  const auto a = CovarianceEstimate::at_minimizer(pr);
  const auto b = CovarianceEstimate::at_point(pr, pr.x_star());
  CHECK_FALSE(a.estimated);
  CHECK(b.estimated);
  CHECK((a.sigma_matrix - b.sigma_matrix).norm() < 1e-12);
  CHECK((a.omega - b.omega).norm() < 1e-10);
  CHECK(a.sigma2 == doctest::Approx(b.sigma2).epsilon(1e-12));
}

TEST_CASE("make_report covers every direction") {
  const auto cov = CovarianceEstimate::from_parts(Matrix::Identity(2, 2), Matrix::Identity(2, 2), 1.0);
  std::vector<Vector> dirs = {Vector(Eigen::Vector2d(1, 0)), Vector(Eigen::Vector2d(0, 1))};
  const auto rep = make_report(Vector(Eigen::Vector2d(0.1, 0.2)), Vector::Zero(2), dirs, cov, 200, 100, 1);
  REQUIRE(rep.z_values.size() == 2);
  CHECK(rep.z_values[0] == doctest::Approx(1.0));
  CHECK(rep.z_values[1] == doctest::Approx(2.0));
  CHECK(rep.region_statistic == doctest::Approx(5.0));
  CHECK(rep.intervals.size() == 2);
}

TEST_CASE("coverage is thread-count independent and serializes") {
  const auto pr = quad(2);
  MomentumConfig m;
  m.alpha = 0.01;
  m.gamma = 0.9;
  m.batch_size = 10;
  CoverageOptions o;
  o.n = 400;
  o.n0 = 200;
  o.replications = 120;
  o.threads = 1;
  const auto a = run_coverage(pr, m, o);
  o.threads = 4;
  const auto b = run_coverage(pr, m, o);
  REQUIRE(a.records.size() == 120);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].seed == o.seed_base + i);
    CHECK(a.records[i].z == b.records[i].z);
    CHECK(a.records[i].region_statistic == b.records[i].region_statistic);
  }
  CHECK(a.coverage == b.coverage);
  CHECK(a.ks.n == 120);
  std::stringstream ss;
  a.write_csv(ss, {"x=1"});
  int lines = 0;
  for (std::string l; std::getline(ss, l);) ++lines;
  CHECK(lines == 1 + 1 + 120);
  const auto js = a.summary_json({{"alpha", "0.01"}});
  CHECK(js.find("\"coverage\"") != std::string::npos);
  CHECK(js.find("\"alpha\"") != std::string::npos);
}

TEST_CASE("sandwich consistency: empirical covariance of the scaled average") {
  const auto pr = quad(2);
  MomentumConfig m;
  m.alpha = 0.01;
  m.gamma = 0.5;
  m.batch_size = 10;
  const std::int64_t n = 4000, n0 = 1000;
  const int reps = 600;
  const double scale = std::sqrt(double(m.batch_size) * (n - n0) / pr.sigma2());
  std::vector<Vector> u(reps);
  for (int r = 0; r < reps; ++r) {
    RunOptions o;
    o.iters = n - 1;
    o.n0 = n0;
    o.seed = 1000 + r;
    o.record = false;
    o.x_init = pr.x_star();
    u[r] = scale * (run(pr, m, o).averaging.mean() - pr.x_star());
  }
  const Matrix s = CovarianceEstimate::at_minimizer(pr).sandwich;
  Matrix emp = Matrix::Zero(2, 2);
  for (const auto& v : u) emp += v * v.transpose();
  emp /= reps;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double se = std::sqrt((s(i, i) * s(j, j) + s(i, j) * s(i, j)) / reps);
      CHECK(std::abs(emp(i, j) - s(i, j)) <= 3.0 * se);
    }
}
