// sgdm: experiment driver.
//
//   sgdm convergence --gamma 0,adaptive,0.9,0.99 --alpha 0.001 --batch-frac 0.2 --out out/conv
//   sgdm coverage --config coverage.cfg --reps 1000
//   sgdm spectrum-map --cond 5 --grid 200

#include <cmath>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "sgdm/config.hpp"
#include "sgdm/csv.hpp"
#include "sgdm/error.hpp"
#include "sgdm/harness.hpp"
#include "sgdm/kernels.hpp"

namespace {

struct FlagSet {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::string config_path;
  bool paper_scale = false;
  bool scalar = false;
  CLI::Option* paper_flag = nullptr;
};

void add_flags(CLI::App& app, FlagSet& fs) {
  const std::pair<const char*, const char*> opts[] = {
      {"problem", "quadratic | logistic"},
      {"n", "number of samples N"},
      {"dim", "dimension d"},
      {"rho", "quadratic: scale of V'V"},
      {"shift", "quadratic: diagonal shift"},
      {"nu", "logistic: ridge parameter"},
      {"gamma", "comma-separated momentum weights or 'adaptive'"},
      {"alpha", "comma-separated learning rates (2^-3 style accepted)"},
      {"alpha-power", "use alpha = iters^(-p)"},
      {"batch", "batch size B"},
      {"batch-frac", "batch size as a fraction of N"},
      {"iters", "index n of the last iterate"},
      {"n0", "burn-in (integer or auto)"},
      {"reps", "replications"},
      {"seed", "seed base"},
      {"out", "output directory"},
      {"threads", "worker threads (default: $SGDM_THREADS or all cores)"},
      {"x0", "initial point: zero | ones"},
      {"record-stride", "trajectory stride after step 1000"},
      {"level", "confidence level"},
      {"cond", "spectrum-map / power-bound: condition number"},
      {"grid", "spectrum-map: points per axis"},
      {"alpha-max", "spectrum-map: largest alpha on the grid"},
      {"horizon", "power-bound: largest power"},
  };
  for (const auto& [name, help] : opts) {
    const std::string key = name;
    fs.options[key] = app.add_option("--" + key, fs.values[key], help)
                          ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  }
  app.add_option("--config", fs.config_path, "key=value config file");
  fs.paper_flag = app.add_flag("--paper-scale", fs.paper_scale, "full-size runs: N=20000, 200 replications (1000 for coverage)");
  app.add_flag("--scalar", fs.scalar, "force the scalar reference kernels");
}

void print_summary(const sgdm::RunSummary& s, const sgdm::ExperimentConfig& c) {
  using sgdm::csv::format;
  std::cout << "experiment " << sgdm::to_string(s.experiment) << " -> " << c.out << "\n";
  switch (s.experiment) {
    case sgdm::Experiment::SpectrumMap:
      std::cout << "min lambda " << format(s.map_min_lambda) << " at alpha "
                << format(s.map_argmin_alpha) << ", gamma " << format(s.map_argmin_gamma) << "\n";
      return;
    case sgdm::Experiment::PowerBound:
      std::cout << s.power_checked << " configurations, " << s.power_violations
                << " violations, max ratio " << format(s.power_max_ratio) << "\n";
      return;
    default:
      break;
  }
  for (const auto& cell : s.cells) {
    std::cout << "gamma=" << cell.gamma_label << " (" << format(cell.gamma) << ") alpha="
              << format(cell.alpha) << " diverged=" << cell.diverged << "/" << cell.replications;
    if (s.experiment == sgdm::Experiment::Coverage)
      std::cout << " coverage=" << format(cell.coverage) << " region=" << format(cell.region_coverage)
                << " ks=" << format(cell.ks_statistic) << (cell.ks_pass ? " pass" : " fail");
    else
      std::cout << " final_err=" << format(cell.final_err) << " steady_mse=" << format(cell.steady_mse)
                << " avg_mse=" << format(cell.avg_mse);
    std::cout << "\n";
  }
  for (const auto& [g, a] : s.max_convergent_alpha)
    std::cout << "max convergent alpha, gamma=" << g << ": " << format(a) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mini-batch SGD with momentum: spectral tuning, averaging and inference experiments"};
  app.require_subcommand(1);
  const sgdm::Experiment experiments[] = {
      sgdm::Experiment::Convergence, sgdm::Experiment::Averaged,    sgdm::Experiment::Sensitivity,
      sgdm::Experiment::Coverage,    sgdm::Experiment::SpectrumMap, sgdm::Experiment::PowerBound};
  std::map<CLI::App*, sgdm::Experiment> which;
  std::map<CLI::App*, FlagSet> flag_sets;
  for (auto e : experiments) {
    CLI::App* sub = app.add_subcommand(sgdm::to_string(e), std::string("run the ") + sgdm::to_string(e) + " experiment");
    which[sub] = e;
    add_flags(*sub, flag_sets[sub]);
  }
  CLI11_PARSE(app, argc, argv);

  try {
    for (auto& [sub, fs] : flag_sets) {
      if (!sub->parsed()) continue;
      if (fs.scalar) sgdm::kernels::set_active(sgdm::kernels::Isa::Scalar);
      sgdm::KeyValues flags;
      for (const auto& [key, opt] : fs.options)
        if (opt->count() > 0) flags.emplace_back(key, fs.values[key]);
      if (fs.paper_flag->count() > 0) flags.emplace_back("paper-scale", fs.paper_scale ? "true" : "false");
      const sgdm::KeyValues file =
          fs.config_path.empty() ? sgdm::KeyValues{} : sgdm::read_config_file(fs.config_path);
      const sgdm::ExperimentConfig config = sgdm::resolve_config(which[sub], file, flags);
      const sgdm::RunSummary summary = sgdm::run_experiment(config);
      print_summary(summary, config);
    }
  } catch (const sgdm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
