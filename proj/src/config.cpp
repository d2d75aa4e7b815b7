#include "sgdm/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "sgdm/csv.hpp"
#include "sgdm/error.hpp"

namespace sgdm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string normalize_key(std::string key) {
  key = trim(key);
  while (!key.empty() && key[0] == '-') key.erase(0, 1);
  for (char& c : key)
    if (c == '-') c = '_';
  return key;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& expected,
                            const std::string& got) {
  throw ConfigError("invalid value for '" + key + "': expected " + expected + ", got '" + got + "'");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) out.push_back(trim(cur));
  return out;
}

// Accepts plain reals and dyadic shorthands such as 2^-3.
bool to_double(const std::string& s, double& out) {
  const auto caret = s.find('^');
  if (caret != std::string::npos) {
    double base = 0.0;
    double expo = 0.0;
    if (!to_double(s.substr(0, caret), base) || !to_double(s.substr(caret + 1), expo)) return false;
    out = std::pow(base, expo);
    return std::isfinite(out);
  }
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

double parse_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  if (!to_double(v, out)) bad_value(key, "a real number", v);
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    bad_value(key, "a nonnegative integer", v);
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    bad_value(key, "a nonnegative integer", v);
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  bad_value(key, "a boolean (true/false)", v);
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : ",") + p;
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"experiment", [](ExperimentConfig& c, const std::string&, const std::string& v) {
         c.experiment = parse_experiment(v);
       }},
      {"problem", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         if (v == "quadratic") c.family = Family::Quadratic;
         else if (v == "logistic") c.family = Family::Logistic;
         else bad_value(k, "quadratic or logistic", v);
       }},
      {"n", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.n_samples = parse_uint(k, v); }},
      {"dim", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.dim = parse_uint(k, v); }},
      {"rho", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.rho = parse_real(k, v); }},
      {"shift", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.shift = parse_real(k, v); }},
      {"nu", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.nu = parse_real(k, v); }},
      {"gamma", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.gammas.clear();
         for (const auto& item : split_list(v)) {
           GammaChoice g;
           if (item == "adaptive" || item == "adap") {
             g.adaptive = true;
           } else if (!to_double(item, g.value)) {
             bad_value(k, "a comma-separated list of reals or 'adaptive'", v);
           }
           c.gammas.push_back(g);
         }
       }},
      {"alpha", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.alphas.clear();
         for (const auto& item : split_list(v)) {
           double a = 0.0;
           if (!to_double(item, a)) bad_value(k, "a comma-separated list of reals", v);
           c.alphas.push_back(a);
         }
       }},
      {"alpha_power", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.alpha_power = parse_real(k, v);
       }},
      {"batch", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.batch = parse_uint(k, v); }},
      {"batch_frac", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.batch_frac = parse_real(k, v);
         c.batch.reset();
       }},
      {"iters", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.iters = static_cast<std::int64_t>(parse_uint(k, v));
       }},
      {"n0", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         if (v == "auto") c.n0.reset();
         else c.n0 = static_cast<std::int64_t>(parse_uint(k, v));
       }},
      {"reps", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.reps = parse_uint(k, v); }},
      {"seed", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.seed = parse_uint(k, v); }},
      {"out", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.out = v; }},
      {"threads", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.threads = static_cast<unsigned>(parse_uint(k, v));
       }},
      {"paper_scale", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.paper_scale = parse_bool(k, v);
       }},
      {"x0", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         if (v == "zero") c.x0 = InitialPoint::Zero;
         else if (v == "ones") c.x0 = InitialPoint::Ones;
         else bad_value(k, "zero or ones", v);
       }},
      {"record_stride", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.record_stride = static_cast<std::int64_t>(parse_uint(k, v));
       }},
      {"level", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.level = parse_real(k, v); }},
      {"cond", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.cond = parse_real(k, v); }},
      {"grid", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.grid = parse_uint(k, v); }},
      {"alpha_max", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.alpha_max = parse_real(k, v);
       }},
      {"horizon", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.horizon = static_cast<int>(parse_uint(k, v));
       }},
  };
  return table;
}

void apply_defaults(ExperimentConfig& c) {
  const double dyadic[] = {2.0, 1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625,
                           0.0078125, 0.00390625, 0.001953125, 0.0009765625};
  switch (c.experiment) {
    case Experiment::Convergence:
      c.gammas = {{false, 0.0}, {true, 0.0}, {false, 0.9}, {false, 0.99}};
      c.alphas = {0.001};
      c.iters = 3000;
      c.x0 = InitialPoint::Ones;
      break;
    case Experiment::Averaged:
      c.gammas = {{false, 0.0}, {true, 0.0}, {false, 0.9}};
      c.alphas = {0.001};
      c.iters = 3000;
      c.n0.reset();
      c.x0 = InitialPoint::Ones;
      break;
    case Experiment::Sensitivity:
      c.shift = 1.0;
      c.gammas = {{false, 0.0}, {false, 0.8}, {false, 0.9}};
      c.alphas.assign(std::begin(dyadic), std::end(dyadic));
      c.iters = 500;
      c.reps = 20;
      c.x0 = InitialPoint::Ones;
      break;
    case Experiment::Coverage:
      c.gammas = {{false, 0.9}};
      c.alphas = {0.001};
      c.iters = 2000;
      c.n0 = 1000;
      break;
    case Experiment::SpectrumMap:
      c.gammas = {{false, 0.0}};
      c.alphas = {1.0};
      c.reps = 1;
      break;
    case Experiment::PowerBound:
      c.gammas = {{false, 0.0}};
      c.alphas = {1.0};
      c.dim = 6;
      c.reps = 500;
      c.cond = 1000.0;
      break;
  }
  if (c.paper_scale) {
    c.n_samples = 20000;
    if (c.experiment == Experiment::Coverage) c.reps = 1000;
    else if (c.experiment != Experiment::SpectrumMap && c.experiment != Experiment::PowerBound) c.reps = 200;
  }
}

const std::string* find(const KeyValues& kv, const std::string& key) {
  const std::string* out = nullptr;
  for (const auto& [k, v] : kv)
    if (normalize_key(k) == key) out = &v;
  return out;
}

}  // namespace

const char* to_string(Experiment e) noexcept {
  switch (e) {
    case Experiment::Convergence: return "convergence";
    case Experiment::Averaged: return "averaged";
    case Experiment::Sensitivity: return "sensitivity";
    case Experiment::Coverage: return "coverage";
    case Experiment::SpectrumMap: return "spectrum-map";
    case Experiment::PowerBound: return "power-bound";
  }
  return "?";
}

Experiment parse_experiment(const std::string& name) {
  std::string n = name;
  for (char& c : n)
    if (c == '_') c = '-';
  for (auto e : {Experiment::Convergence, Experiment::Averaged, Experiment::Sensitivity,
                 Experiment::Coverage, Experiment::SpectrumMap, Experiment::PowerBound})
    if (n == to_string(e)) return e;
  bad_value("experiment",
            "one of convergence, averaged, sensitivity, coverage, spectrum-map, power-bound", name);
}

std::string GammaChoice::label() const { return adaptive ? "adaptive" : csv::format(value); }

std::size_t ExperimentConfig::batch_size() const {
  if (batch) return *batch;
  const auto b = static_cast<std::size_t>(std::llround(batch_frac * static_cast<double>(n_samples)));
  return b < 1 ? 1 : b;
}

std::vector<double> ExperimentConfig::alpha_values() const {
  if (alpha_power) return {std::pow(static_cast<double>(iters), -*alpha_power)};
  return alphas;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& msg) {
    throw ConfigError("invalid value for '" + key + "': " + msg);
  };
  if (dim < 1) fail("dim", "must be >= 1");
  if (family == Family::Quadratic && experiment != Experiment::SpectrumMap &&
      experiment != Experiment::PowerBound) {
    if (n_samples < dim) fail("n", "n_samples must be >= dim");
    if (!(shift > 0.0)) fail("shift", "diagonal shift must be positive");
    if (!(rho >= 0.0)) fail("rho", "must be nonnegative");
  }
  if (n_samples < 1) fail("n", "must be >= 1");
  if (n_samples > 0xffffffffull) fail("n", "must fit in 32 bits");
  if (!(nu >= 0.0)) fail("nu", "must be nonnegative");
  if (gammas.empty()) fail("gamma", "list is empty");
  for (const auto& g : gammas)
    if (!g.adaptive && !(g.value >= 0.0 && g.value < 1.0)) fail("gamma", "gamma must lie in [0,1)");
  if (alpha_values().empty()) fail("alpha", "list is empty");
  for (double a : alpha_values())
    if (!(a > 0.0) || !std::isfinite(a)) fail("alpha", "alpha must be positive");
  if (alpha_power && !(*alpha_power > 0.0)) fail("alpha_power", "must be positive");
  if (batch && *batch < 1) fail("batch", "batch size must be >= 1");
  if (!batch && !(batch_frac > 0.0)) fail("batch_frac", "must be positive");
  if (iters < 2) fail("iters", "must be >= 2");
  if (n0 && *n0 >= iters) fail("n0", "must be smaller than iters");
  if (reps < 1) fail("reps", "replications must be >= 1");
  if (record_stride < 1) fail("record_stride", "must be >= 1");
  if (!(level > 0.0 && level < 1.0)) fail("level", "must lie in (0,1)");
  if (!(cond >= 1.0)) fail("cond", "must be >= 1");
  if (grid < 2) fail("grid", "must be >= 2");
  if (!(alpha_max >= 0.0)) fail("alpha_max", "must be nonnegative");
  if (horizon < 1) fail("horizon", "must be >= 1");
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::echo() const {
  std::vector<std::string> g;
  for (const auto& x : gammas) g.push_back(x.label());
  std::vector<std::string> a;
  for (double x : alphas) a.push_back(csv::format(x));
  std::vector<std::pair<std::string, std::string>> out = {
      {"experiment", to_string(experiment)},
      {"problem", to_string(family)},
      {"n", std::to_string(n_samples)},
      {"dim", std::to_string(dim)},
      {"rho", csv::format(rho)},
      {"shift", csv::format(shift)},
      {"nu", csv::format(nu)},
      {"gamma", join(g)},
      {"alpha", join(a)},
  };
  if (alpha_power) out.emplace_back("alpha_power", csv::format(*alpha_power));
  if (batch) out.emplace_back("batch", std::to_string(*batch));
  else out.emplace_back("batch_frac", csv::format(batch_frac));
  out.emplace_back("iters", std::to_string(iters));
  out.emplace_back("n0", n0 ? std::to_string(*n0) : std::string("auto"));
  out.emplace_back("reps", std::to_string(reps));
  out.emplace_back("seed", std::to_string(seed));
  out.emplace_back("out", this->out);
  out.emplace_back("threads", std::to_string(threads));
  out.emplace_back("paper_scale", paper_scale ? "true" : "false");
  out.emplace_back("x0", x0 == InitialPoint::Ones ? "ones" : "zero");
  out.emplace_back("record_stride", std::to_string(record_stride));
  out.emplace_back("level", csv::format(level));
  out.emplace_back("cond", csv::format(cond));
  out.emplace_back("grid", std::to_string(grid));
  out.emplace_back("alpha_max", csv::format(alpha_max));
  out.emplace_back("horizon", std::to_string(horizon));
  return out;
}

std::string ExperimentConfig::echo_text() const {
  std::string s;
  for (const auto& [k, v] : echo()) s += k + "=" + v + "\n";
  return s;
}

KeyValues parse_config_text(const std::string& text) {
  KeyValues out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    out.emplace_back(normalize_key(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

KeyValues read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

ExperimentConfig resolve_config(Experiment experiment, const KeyValues& file,
                                const KeyValues& flags) {
  for (const auto* kv : {&file, &flags})
    for (const auto& [k, v] : *kv)
      if (!setters().count(normalize_key(k))) throw ConfigError("unknown config key '" + k + "'");

  ExperimentConfig c;
  if (const auto* v = find(flags, "experiment")) c.experiment = parse_experiment(*v);
  else if (const auto* f = find(file, "experiment")) c.experiment = parse_experiment(*f);
  else c.experiment = experiment;

  if (const auto* v = find(flags, "paper_scale")) c.paper_scale = parse_bool("paper_scale", *v);
  else if (const auto* f = find(file, "paper_scale")) c.paper_scale = parse_bool("paper_scale", *f);

  const bool logistic = [&] {
    const std::string* v = find(flags, "problem");
    if (!v) v = find(file, "problem");
    return v && *v == "logistic";
  }();
  apply_defaults(c);
  if (logistic) {
    c.alphas = {0.5};
    c.x0 = InitialPoint::Zero;
  }

  for (const auto* kv : {&file, &flags})
    for (const auto& [k, v] : *kv) {
      const std::string key = normalize_key(k);
      setters().at(key)(c, key, trim(v));
    }
  c.validate();
  return c;
}

MomentumConfig momentum_config(const ExperimentConfig& config, const GammaChoice& gamma,
                               double alpha) {
  MomentumConfig m;
  m.alpha = alpha;
  m.gamma = gamma.adaptive ? 0.0 : gamma.value;
  m.gamma_mode = gamma.adaptive ? GammaMode::Adaptive : GammaMode::Fixed;
  m.batch_size = config.batch_size();
  return m;
}

}  // namespace sgdm
