#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "sgdm/csv.hpp"
#include "sgdm/error.hpp"
#include "sgdm/harness.hpp"
#include "sgdm/parallel.hpp"

using namespace sgdm;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// File body without the '#' header (which echoes out= and threads=).
std::string body(const fs::path& p) {
  std::ifstream in(p);
  std::string out;
  for (std::string line; std::getline(in, line);)
    if (line.rfind("#", 0) != 0) out += line + "\n";
  return out;
}

ExperimentConfig small(Experiment e, const std::string& out, KeyValues extra = {}) {
  KeyValues flags = {{"n", "60"}, {"dim", "3"}, {"reps", "6"}, {"out", out}};
  flags.insert(flags.end(), extra.begin(), extra.end());
  return resolve_config(e, {}, flags);
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("sgdm_test_harness_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("parallel_for visits every index once and rethrows") {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS_AS(parallel_for(100, 3, [](std::size_t i) {
                    if (i == 57) throw InvalidInput("boom");
                  }),
                  InvalidInput);
  parallel_for(0, 2, [](std::size_t) { FAIL("no work expected"); });
  CHECK(default_threads() >= 1);
}

TEST_CASE("csv formatting and parsing round-trip") {
  for (double v : {0.1, 1e-300, -2.5e17, 1.0 / 3.0}) CHECK(std::stod(csv::format(v)) == v);
  CHECK(csv::format(INFINITY) == "inf");
  CHECK(csv::format(-INFINITY) == "-inf");
  CHECK(csv::format(NAN) == "nan");
  std::stringstream ss;
  csv::write_comments(ss, {"a=1"});
  csv::write_row(ss, {"name", "value"});
  csv::write_row(ss, {"x,y", "inf"});
  csv::write_row(ss, {"say \"hi\"", "nan"});
  const auto t = csv::read(ss);
  CHECK(t.comments == std::vector<std::string>{"a=1"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][0] == "x,y");
  CHECK(t.rows[1][0] == "say \"hi\"");
  CHECK(std::isinf(t.number(0, "value")));
  CHECK(std::isnan(t.number(1, "value")));
  CHECK_THROWS_AS(t.column("missing"), InvalidInput);
}

TEST_CASE("loglog slope recovers a power law") {
  std::vector<double> x, y;
  for (int i = 1; i <= 50; ++i) {
    x.push_back(i * 10.0);
    y.push_back(3.0 / (i * 10.0));
  }
  CHECK(loglog_slope(x, y) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("random spectral configs are admissible with a separated delta") {
  RngStream r(3, streams::kConfigs);
  for (int i = 0; i < 200; ++i) {
    const auto c = random_spectral_config(r, 4, 100.0, 1e-4);
    const auto rep = spectral_radius_closed_form(c.spectrum, c.config);
    CHECK(rep.admissible);
    CHECK(rep.delta > 1e-4);
    CHECK(c.spectrum.condition_number() <= 100.0 * (1 + 1e-12));
    CHECK(c.config.gamma < 0.99);
  }
}

TEST_CASE("problem generation follows the replication seed") {
  const auto c = small(Experiment::Convergence, "unused");
  CHECK(make_problem(c, 5).x_star() == make_problem(c, 5).x_star());
  CHECK(make_problem(c, 5).x_star() != make_problem(c, 6).x_star());
  CHECK(initial_point(c, 3) == Vector::Ones(3));
}

TEST_CASE("thread count does not change results") {
  const auto a = scratch("t1"), b = scratch("t4");
  const KeyValues extra = {{"iters", "300"}, {"gamma", "0,adaptive"}, {"alpha", "0.01"}};
  auto ca = small(Experiment::Averaged, a.string(), extra);
  auto cb = small(Experiment::Averaged, b.string(), extra);
  ca.threads = 1;
  cb.threads = 4;
  const auto ra = run_experiment(ca);
  const auto rb = run_experiment(cb);
  REQUIRE(ra.cells.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(ra.cells[i].final_err == rb.cells[i].final_err);
    CHECK(ra.cells[i].avg_mse == rb.cells[i].avg_mse);
    CHECK(body(a / ra.cells[i].file) == body(b / rb.cells[i].file));
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("summary csv round-trips the cell summaries") {
  const auto dir = scratch("summary");
  const auto s = run_experiment(small(Experiment::Convergence, dir.string(), {{"iters", "200"}}));
  const auto t = csv::read_file((dir / "summary.csv").string());
  REQUIRE(t.rows.size() == s.cells.size());
  for (std::size_t i = 0; i < s.cells.size(); ++i) {
    CHECK(t.number(i, "final_err") == s.cells[i].final_err);
    CHECK(t.number(i, "alpha") == s.cells[i].alpha);
    CHECK(t.rows[i][t.column("gamma_label")] == s.cells[i].gamma_label);
  }
  CHECK(fs::exists(dir / "config.txt"));
  CHECK(t.comments.size() >= 2);
  CHECK(t.comments[0].find("seed_base=1") != std::string::npos);
  const auto curve = csv::read_file((dir / s.cells[0].file).string());
  CHECK(curve.columns == std::vector<std::string>{"step", "mean_err", "median_err", "mean_avg_sq_err"});
  CHECK(curve.number(curve.rows.size() - 1, "step") == 200.0);
  fs::remove_all(dir);
}

TEST_CASE("divergent sensitivity cells report inf and seeds follow the replication index") {
  const auto dir = scratch("sens");
  const auto s = run_experiment(small(Experiment::Sensitivity, dir.string(),
                                      {{"gamma", "0"}, {"alpha", "4,0.01"}, {"iters", "100"}, {"seed", "40"}}));
  REQUIRE(s.cells.size() == 2);
  CHECK(s.cells[0].diverged == 6);
  CHECK(std::isinf(s.cells[0].final_err));
  CHECK_FALSE(s.cells[0].convergent);
  CHECK(s.cells[1].diverged == 0);
  CHECK(s.cells[1].convergent);
  REQUIRE(s.max_convergent_alpha.size() == 1);
  CHECK(s.max_convergent_alpha[0].second == 0.01);
  const auto t = csv::read_file((dir / s.cells[0].file).string());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    CHECK(t.number(r, "seed") == 40.0 + r);
    CHECK(t.number(r, "diverged") == 1.0);
  }
  const auto sum = csv::read_file((dir / "summary.csv").string());
  CHECK(std::isinf(sum.number(0, "final_err")));
  fs::remove_all(dir);
}

TEST_CASE("spectrum map finds the optimum on the grid") {
  const auto dir = scratch("map");
  const auto s = run_experiment(small(Experiment::SpectrumMap, dir.string(), {{"grid", "60"}, {"cond", "5"}}));
  const double lam = (std::sqrt(5.0) - 1.0) / (std::sqrt(5.0) + 1.0);
  CHECK(s.map_min_lambda >= lam - 1e-12);
  CHECK(s.map_min_lambda <= lam + 0.05);
  CHECK(std::abs(s.map_argmin_alpha - 1.0 / std::sqrt(5.0)) <= 2 * s.map_alpha_step);
  CHECK(std::abs(s.map_argmin_gamma - lam * lam) <= 2 * s.map_gamma_step);
  CHECK(csv::read_file((dir / "spectrum_map.csv").string()).rows.size() == 3600);
  fs::remove_all(dir);
}

TEST_CASE("power-bound experiment finds no violations") {
  const auto dir = scratch("power");
  const auto s = run_experiment(small(Experiment::PowerBound, dir.string(), {{"reps", "20"}, {"horizon", "60"}}));
  CHECK(s.power_checked == 20);
  CHECK(s.power_violations == 0);
  CHECK(s.power_max_ratio <= 1.0);
  fs::remove_all(dir);
}

TEST_CASE("coverage experiment writes csv and json per cell") {
  const auto dir = scratch("cov");
  const auto s = run_experiment(small(Experiment::Coverage, dir.string(),
                                      {{"reps", "100"}, {"iters", "400"}, {"n0", "200"}, {"alpha", "0.01"}}));
  REQUIRE(s.cells.size() == 1);
  CHECK(s.cells[0].coverage >= 0.0);
  CHECK(s.cells[0].coverage <= 1.0);
  CHECK(fs::exists(dir / s.cells[0].file));
  auto json = s.cells[0].file;
  json.replace(json.size() - 4, 4, ".json");
  CHECK(slurp(dir / json).find("\"ks_statistic\"") != std::string::npos);
  fs::remove_all(dir);
}
