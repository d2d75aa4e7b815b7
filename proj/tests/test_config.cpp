#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "sgdm/error.hpp"
#include "sgdm/config.hpp"

using namespace sgdm;

TEST_CASE("experiment names") {
  for (auto e : {Experiment::Convergence, Experiment::Averaged, Experiment::Sensitivity,
                 Experiment::Coverage, Experiment::SpectrumMap, Experiment::PowerBound})
    CHECK(parse_experiment(to_string(e)) == e);
  CHECK(std::string(to_string(Experiment::SpectrumMap)) == "spectrum-map");
  CHECK_THROWS_AS(parse_experiment("nope"), ConfigError);
}

TEST_CASE("defaults, then file, then flags") {
  const auto d = resolve_config(Experiment::Convergence, {}, {});
  CHECK(d.alphas == std::vector<double>{0.001});
  REQUIRE(d.gammas.size() == 4);
  CHECK(d.gammas[1].adaptive);
  CHECK(d.gammas[1].label() == "adaptive");
  CHECK(d.x0 == InitialPoint::Ones);
  CHECK(d.batch_size() == 800);

  const KeyValues file = {{"alpha", "0.01"}, {"reps", "7"}, {"batch", "50"}};
  const auto f = resolve_config(Experiment::Convergence, file, {});
  CHECK(f.alphas == std::vector<double>{0.01});
  CHECK(f.reps == 7);
  CHECK(f.batch_size() == 50);

  const auto g = resolve_config(Experiment::Convergence, file, {{"alpha", "2^-3,0.5"}, {"--batch-frac", "0.5"}});
  CHECK(g.alphas == std::vector<double>{0.125, 0.5});
  CHECK(g.reps == 7);
  // a later batch fraction supersedes an earlier explicit batch
  CHECK(g.batch_size() == 2000);
  CHECK(g.batch_frac == 0.5);
}

TEST_CASE("per-experiment defaults") {
  const auto s = resolve_config(Experiment::Sensitivity, {}, {});
  CHECK(s.alphas.size() == 12);
  CHECK(s.alphas.front() == 2.0);
  CHECK(s.alphas.back() == std::ldexp(1.0, -10));
  CHECK(s.iters == 500);
  const auto c = resolve_config(Experiment::Coverage, {}, {});
  CHECK(c.iters == 2000);
  CHECK(c.n0 == 1000);
  const auto p = resolve_config(Experiment::Coverage, {}, {{"paper_scale", "true"}});
  CHECK(p.n_samples == 20000);
  CHECK(p.reps == 1000);
  const auto l = resolve_config(Experiment::Convergence, {{"problem", "logistic"}}, {});
  CHECK(l.family == Family::Logistic);
  CHECK(l.x0 == InitialPoint::Zero);
}

TEST_CASE("alpha power replaces the alpha list") {
  const auto c = resolve_config(Experiment::Coverage, {}, {{"alpha_power", "0.6"}, {"iters", "1000"}, {"n0", "500"}});
  REQUIRE(c.alpha_values().size() == 1);
  CHECK(c.alpha_values()[0] == doctest::Approx(std::pow(1000.0, -0.6)));
}

TEST_CASE("rejections name the key") {
  CHECK_THROWS_WITH_AS(resolve_config(Experiment::Convergence, {}, {{"gamma", "1.0"}}),
                       doctest::Contains("gamma must lie in [0,1)"), ConfigError);
  CHECK_THROWS_WITH_AS(resolve_config(Experiment::Convergence, {}, {{"bogus", "1"}}),
                       doctest::Contains("bogus"), ConfigError);
  CHECK_THROWS_WITH_AS(resolve_config(Experiment::Convergence, {}, {{"reps", "many"}}),
                       doctest::Contains("reps"), ConfigError);
  CHECK_THROWS_AS(resolve_config(Experiment::Convergence, {}, {{"alpha", "-1"}}), ConfigError);
  CHECK_THROWS_AS(resolve_config(Experiment::Averaged, {}, {{"iters", "100"}, {"n0", "100"}}), ConfigError);
  CHECK_THROWS_AS(parse_config_text("alpha 0.1\n"), ConfigError);
  CHECK_THROWS_AS(read_config_file("/nonexistent/file.cfg"), ConfigError);
}

TEST_CASE("config text parsing") {
  const auto kv = parse_config_text("# comment\n experiment = coverage \nreps=1000 # trailing\n\nn0=1000\n");
  REQUIRE(kv.size() == 3);
  CHECK(kv[0] == std::pair<std::string, std::string>{"experiment", "coverage"});
  const auto c = resolve_config(Experiment::Convergence, kv, {});
  CHECK(c.experiment == Experiment::Coverage);
  CHECK(c.reps == 1000);
  CHECK(c.n0 == 1000);
}

TEST_CASE("echo round-trips through resolve_config") {
  for (auto e : {Experiment::Convergence, Experiment::Sensitivity, Experiment::Coverage, Experiment::SpectrumMap}) {
    const auto c = resolve_config(e, {}, {{"gamma", "0,adaptive,0.35"}, {"alpha", "0.003"}, {"seed", "99"}});
    const auto back = resolve_config(Experiment::PowerBound, c.echo(), {});
    CHECK(back.echo() == c.echo());
    CHECK(back.experiment == e);
  }
  const std::string path = "test_config_echo.cfg";
  {
    std::ofstream out(path);
    out << resolve_config(Experiment::Averaged, {}, {}).echo_text();
  }
  CHECK(resolve_config(Experiment::Convergence, read_config_file(path), {}).echo() ==
        resolve_config(Experiment::Averaged, {}, {}).echo());
  std::remove(path.c_str());
}

TEST_CASE("momentum config for a cell") {
  const auto c = resolve_config(Experiment::Convergence, {}, {{"batch", "16"}});
  const auto m = momentum_config(c, GammaChoice{true, 0.0}, 0.01);
  CHECK(m.gamma_mode == GammaMode::Adaptive);
  CHECK(m.batch_size == 16);
  CHECK(momentum_config(c, GammaChoice{false, 0.9}, 0.01).gamma == 0.9);
}
