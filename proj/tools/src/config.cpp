#include "config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "usbp/expr.hpp"

namespace usbp::cli {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw ConfigError(key + ": " + what);
}

const json& require(const json& obj, const std::string& parent,
                    const std::string& key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(parent.empty() ? key : parent + "." + key,
                            "missing required key");
  return *it;
}

std::string key_path(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

double get_number(const json& obj, const std::string& parent,
                  const std::string& key) {
  const json& v = require(obj, parent, key);
  if (!v.is_number()) fail(key_path(parent, key), "expected a number");
  return v.get<double>();
}

double get_number_or(const json& obj, const std::string& parent,
                     const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  return get_number(obj, parent, key);
}

int get_int(const json& obj, const std::string& parent,
            const std::string& key) {
  const json& v = require(obj, parent, key);
  if (!v.is_number_integer()) fail(key_path(parent, key),
                                   "expected an integer");
  return v.get<int>();
}

int get_int_or(const json& obj, const std::string& parent,
               const std::string& key, int fallback) {
  if (!obj.contains(key)) return fallback;
  return get_int(obj, parent, key);
}

std::string get_string(const json& obj, const std::string& parent,
                       const std::string& key) {
  const json& v = require(obj, parent, key);
  if (!v.is_string()) fail(key_path(parent, key), "expected a string");
  return v.get<std::string>();
}

bool get_bool_or(const json& obj, const std::string& parent,
                 const std::string& key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) fail(key_path(parent, key), "expected a boolean");
  return v.get<bool>();
}

const json& get_object(const json& obj, const std::string& parent,
                       const std::string& key) {
  const json& v = require(obj, parent, key);
  if (!v.is_object()) fail(key_path(parent, key), "expected an object");
  return v;
}

void check_keys(const json& obj, const std::string& parent,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) fail(key_path(parent, it.key()), "unknown key");
  }
}

// One value per line; blank lines and lines starting with '#' are skipped.
Eigen::VectorXd read_csv_column(const std::string& path,
                                const std::string& key) {
  std::ifstream in(path);
  if (!in) fail(key, "cannot open file \"" + path + "\"");
  std::vector<double> values;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream row(line);
    double x = 0.0;
    if (!(row >> x)) {
      fail(key, "\"" + path + "\" line " + std::to_string(line_no) +
                    ": not a number");
    }
    std::string rest;
    if (row >> rest) {
      fail(key, "\"" + path + "\" line " + std::to_string(line_no) +
                    ": expected a single value per line");
    }
    values.push_back(x);
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<long>(values.size()));
}

// A "csv" preset names either a file ("path"/"rhoT_*" keys) or carries its
// values inline ("values"/"*_values"); the manifest echo always uses the
// inline form, so it reproduces the run even if the files later change.
Eigen::VectorXd read_values(const json& obj, const std::string& parent,
                            const std::string& path_key,
                            const std::string& values_key, int expected,
                            const char* what) {
  Eigen::VectorXd out;
  if (obj.contains(values_key)) {
    const json& v = obj.at(values_key);
    if (!v.is_array()) fail(key_path(parent, values_key), "expected an array");
    out.resize(static_cast<long>(v.size()));
    long i = 0;
    for (const json& e : v) {
      if (!e.is_number()) fail(key_path(parent, values_key),
                               "expected an array of numbers");
      out[i++] = e.get<double>();
    }
  } else if (obj.contains(path_key)) {
    out = read_csv_column(get_string(obj, parent, path_key),
                          key_path(parent, path_key));
  } else {
    fail(key_path(parent, path_key),
         std::string("missing (csv preset needs \"") + path_key +
             "\" or \"" + values_key + "\")");
  }
  if (out.size() != expected) {
    fail(key_path(parent, obj.contains(values_key) ? values_key : path_key),
         std::string(what) + " needs " + std::to_string(expected) +
             " values, got " + std::to_string(out.size()));
  }
  return out;
}

ordered_json echo_vector(const Eigen::VectorXd& v) {
  ordered_json arr = ordered_json::array();
  for (long i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Expr parse_coefficient(const json& coeffs, const std::string& key) {
  const std::string src = get_string(coeffs, "coefficients", key);
  try {
    return parse_expr(src);
  } catch (const ParseError& e) {
    fail("coefficients." + key, e.what());
  }
}

Eigen::VectorXd gaussian_density(const GridSpec& grid, double mean,
                                 double stddev) {
  Eigen::VectorXd d(grid.n_space);
  for (int k = 0; k < grid.n_space; ++k) {
    const double z = (grid.node(k) - mean) / stddev;
    d[k] = std::exp(-0.5 * z * z) / stddev;
  }
  return d;
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("config", "cannot open \"" + path + "\"");
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    fail("config", e.what());
  }
  if (!root.is_object()) fail("config", "top level must be an object");
  check_keys(root, "",
             {"grid", "coefficients", "scenario", "mu0", "targets", "solver",
              "simulate", "compare", "output_dir"});

  ExperimentConfig cfg;

  // --- grid ---------------------------------------------------------------
  const json& grid = get_object(root, "", "grid");
  check_keys(grid, "grid", {"x_min", "x_max", "n_space", "t_horizon",
                            "n_steps"});
  cfg.grid.x_min = get_number(grid, "grid", "x_min");
  cfg.grid.x_max = get_number(grid, "grid", "x_max");
  cfg.grid.n_space = get_int(grid, "grid", "n_space");
  cfg.grid.t_horizon = get_number(grid, "grid", "t_horizon");
  cfg.grid.n_steps = get_int(grid, "grid", "n_steps");
  try {
    cfg.grid.validate();
  } catch (const std::invalid_argument& e) {
    fail("grid", e.what());
  }

  // --- coefficients -------------------------------------------------------
  const json& coeffs = get_object(root, "", "coefficients");
  check_keys(coeffs, "coefficients", {"b", "sigma", "v"});
  cfg.coeffs.b = parse_coefficient(coeffs, "b");
  cfg.coeffs.sigma = parse_coefficient(coeffs, "sigma");
  cfg.coeffs.v = parse_coefficient(coeffs, "v");

  // --- scenario -----------------------------------------------------------
  const std::string scen_name = get_string(root, "", "scenario");
  try {
    cfg.scenario = scenario_from_name(scen_name);
  } catch (const std::invalid_argument& e) {
    fail("scenario", e.what());
  }
  const DeadSupport ds(cfg.scenario, cfg.grid);

  // --- mu0 ----------------------------------------------------------------
  const Eigen::VectorXd w = cfg.grid.quad_weights();
  const json& mu0 = get_object(root, "", "mu0");
  const std::string mu0_preset = get_string(mu0, "mu0", "preset");
  ordered_json mu0_echo;
  mu0_echo["preset"] = mu0_preset;
  if (mu0_preset == "uniform") {
    check_keys(mu0, "mu0", {"preset"});
    cfg.mu0_mass = w / w.sum();
  } else if (mu0_preset == "gaussian") {
    check_keys(mu0, "mu0", {"preset", "mean", "stddev"});
    const double mean = get_number(mu0, "mu0", "mean");
    const double stddev = get_number(mu0, "mu0", "stddev");
    if (!(stddev > 0.0)) fail("mu0.stddev", "must be > 0");
    Eigen::VectorXd mass =
        gaussian_density(cfg.grid, mean, stddev).cwiseProduct(w);
    const double total = mass.sum();
    if (!(total > 0.0)) fail("mu0", "gaussian carries no mass on the grid");
    cfg.mu0_mass = mass / total;
    mu0_echo["mean"] = mean;
    mu0_echo["stddev"] = stddev;
  } else if (mu0_preset == "point") {
    check_keys(mu0, "mu0", {"preset", "x"});
    const double x = get_number(mu0, "mu0", "x");
    cfg.mu0_mass = Eigen::VectorXd::Zero(cfg.grid.n_space);
    cfg.mu0_mass[cfg.grid.nearest_node(x)] = 1.0;
    mu0_echo["x"] = x;
  } else if (mu0_preset == "csv") {
    check_keys(mu0, "mu0", {"preset", "path", "values"});
    const Eigen::VectorXd density = read_values(
        mu0, "mu0", "path", "values", cfg.grid.n_space, "mu0 density");
    if ((density.array() < 0.0).any()) fail("mu0", "density must be >= 0");
    Eigen::VectorXd mass = density.cwiseProduct(w);
    const double total = mass.sum();
    if (!(total > 0.0)) fail("mu0", "density must have positive total mass");
    cfg.mu0_mass = mass / total;
    mu0_echo["values"] = echo_vector(density);
  } else {
    fail("mu0.preset",
         "unknown preset \"" + mu0_preset +
             "\" (expected uniform, gaussian, point or csv)");
  }

  // --- targets ------------------------------------------------------------
  const json& targets = get_object(root, "", "targets");
  auto& spec = cfg.target_spec;
  spec.preset = get_string(targets, "targets", "preset");
  ordered_json targets_echo;
  targets_echo["preset"] = spec.preset;
  const bool star = cfg.scenario == ScenarioKind::Star;
  if (spec.preset == "reference_kill_law") {
    check_keys(targets, "targets", {"preset"});
  } else if (spec.preset == "gaussian") {
    check_keys(targets, "targets", {"preset", "dead_mass", "components"});
    spec.dead_mass = get_number(targets, "targets", "dead_mass");
    if (!(spec.dead_mass > 0.0 && spec.dead_mass < 1.0)) {
      fail("targets.dead_mass", "mass split must lie strictly in (0, 1)");
    }
    targets_echo["dead_mass"] = spec.dead_mass;
    if (star && targets.contains("components")) {
      fail("targets.components",
           "the star scenario leaves the surviving marginal free");
    }
    if (targets.contains("components")) {
      const json& comps = targets.at("components");
      if (!comps.is_array() || comps.empty()) {
        fail("targets.components", "expected a non-empty array");
      }
      for (const json& c : comps) {
        if (!c.is_object()) fail("targets.components", "expected objects");
        check_keys(c, "targets.components", {"weight", "mean", "stddev"});
        ExperimentConfig::TargetSpec::Component comp;
        comp.weight = get_number_or(c, "targets.components", "weight", 1.0);
        comp.mean = get_number(c, "targets.components", "mean");
        comp.stddev = get_number(c, "targets.components", "stddev");
        if (!(comp.weight > 0.0)) fail("targets.components.weight",
                                       "must be > 0");
        if (!(comp.stddev > 0.0)) fail("targets.components.stddev",
                                       "must be > 0");
        spec.components.push_back(comp);
      }
    } else if (!star) {
      fail("targets.components", "missing required key");
    }
    ordered_json comps_echo = ordered_json::array();
    for (const auto& c : spec.components) {
      comps_echo.push_back(ordered_json{
          {"weight", c.weight}, {"mean", c.mean}, {"stddev", c.stddev}});
    }
    if (!spec.components.empty()) targets_echo["components"] = comps_echo;
  } else if (spec.preset == "csv") {
    check_keys(targets, "targets",
               {"preset", "rhoT_active", "rhoT_active_values", "rhoT_dead",
                "rhoT_dead_values"});
    if (!star) {
      spec.csv_active =
          read_values(targets, "targets", "rhoT_active", "rhoT_active_values",
                      cfg.grid.n_space, "surviving terminal density");
      targets_echo["rhoT_active_values"] = echo_vector(spec.csv_active);
    } else if (targets.contains("rhoT_active") ||
               targets.contains("rhoT_active_values")) {
      fail("targets.rhoT_active",
           "the star scenario leaves the surviving marginal free");
    }
    spec.csv_dead =
        read_values(targets, "targets", "rhoT_dead", "rhoT_dead_values",
                    ds.size(), "dead terminal density");
    targets_echo["rhoT_dead_values"] = echo_vector(spec.csv_dead);
  } else {
    fail("targets.preset",
         "unknown preset \"" + spec.preset +
             "\" (expected reference_kill_law, gaussian or csv)");
  }

  // --- solver -------------------------------------------------------------
  if (root.contains("solver")) {
    const json& solver = get_object(root, "", "solver");
    check_keys(solver, "solver", {"tol", "max_iter"});
    cfg.solver_tol = get_number_or(solver, "solver", "tol", cfg.solver_tol);
    cfg.solver_max_iter =
        get_int_or(solver, "solver", "max_iter", cfg.solver_max_iter);
    if (!(cfg.solver_tol > 0.0)) fail("solver.tol", "must be > 0");
    if (cfg.solver_max_iter < 1) fail("solver.max_iter", "must be >= 1");
  }

  // --- simulate -----------------------------------------------------------
  if (root.contains("simulate")) {
    const json& sim = get_object(root, "", "simulate");
    check_keys(sim, "simulate", {"n_paths", "seed"});
    cfg.n_paths = get_int_or(sim, "simulate", "n_paths", cfg.n_paths);
    if (cfg.n_paths < 1) fail("simulate.n_paths", "must be >= 1");
    if (sim.contains("seed")) {
      const json& s = sim.at("seed");
      if (s.is_number_unsigned()) {
        cfg.seed = s.get<std::uint64_t>();
      } else if (s.is_number_integer() && s.get<long long>() >= 0) {
        cfg.seed = static_cast<std::uint64_t>(s.get<long long>());
      } else {
        fail("simulate.seed", "expected a nonnegative integer");
      }
    }
  }

  // --- compare ------------------------------------------------------------
  if (root.contains("compare")) {
    const json& cmp = get_object(root, "", "compare");
    check_keys(cmp, "compare", {"enabled", "tol"});
    cfg.compare_enabled = get_bool_or(cmp, "compare", "enabled", false);
    cfg.compare_tol = get_number_or(cmp, "compare", "tol", 0.0);
  }
  if (cfg.compare_enabled && cfg.scenario != ScenarioKind::Joint) {
    fail("compare.enabled",
         "cross-scenario comparison needs scenario \"joint\", got \"" +
             scen_name + "\"");
  }

  if (root.contains("output_dir")) {
    cfg.output_dir = get_string(root, "", "output_dir");
    if (cfg.output_dir.empty()) fail("output_dir", "must not be empty");
  }

  // --- normalized echo ----------------------------------------------------
  ordered_json echo;
  echo["grid"] = ordered_json{{"x_min", cfg.grid.x_min},
                              {"x_max", cfg.grid.x_max},
                              {"n_space", cfg.grid.n_space},
                              {"t_horizon", cfg.grid.t_horizon},
                              {"n_steps", cfg.grid.n_steps}};
  echo["coefficients"] = ordered_json{{"b", get_string(coeffs, "", "b")},
                                      {"sigma", get_string(coeffs, "", "sigma")},
                                      {"v", get_string(coeffs, "", "v")}};
  echo["scenario"] = scenario_name(cfg.scenario);
  echo["mu0"] = mu0_echo;
  echo["targets"] = targets_echo;
  echo["solver"] = ordered_json{{"tol", cfg.solver_tol},
                                {"max_iter", cfg.solver_max_iter}};
  ordered_json sim_echo;
  sim_echo["n_paths"] = cfg.n_paths;
  if (cfg.seed) sim_echo["seed"] = *cfg.seed;
  echo["simulate"] = sim_echo;
  echo["compare"] = ordered_json{{"enabled", cfg.compare_enabled},
                                 {"tol", cfg.compare_tol}};
  echo["output_dir"] = cfg.output_dir;
  cfg.echo = std::move(echo);

  return cfg;
}

TargetPair resolve_targets(const ExperimentConfig& cfg,
                           const ReferenceLaw& ref) {
  const GridSpec& grid = cfg.grid;
  const DeadSupport ds(cfg.scenario, grid);
  const Eigen::VectorXd w = grid.quad_weights();
  const bool star = cfg.scenario == ScenarioKind::Star;

  TargetPair t;
  t.scenario = cfg.scenario;
  t.rho0 = cfg.mu0_mass.cwiseQuotient(w);

  const auto& spec = cfg.target_spec;
  if (spec.preset == "reference_kill_law") {
    if (!star) {
      t.rhoT_active = ref.terminal_active_mass.cwiseQuotient(w);
    }
    t.rhoT_dead = ref.terminal_dead_mass / ds.cell_weight();
  } else if (spec.preset == "gaussian") {
    const double dead_total = ref.terminal_dead_mass.sum();
    t.rhoT_dead =
        ref.terminal_dead_mass * (spec.dead_mass / dead_total) /
        ds.cell_weight();
    if (!star) {
      Eigen::VectorXd density = Eigen::VectorXd::Zero(grid.n_space);
      for (const auto& c : spec.components) {
        density += c.weight * gaussian_density(grid, c.mean, c.stddev);
      }
      const double total = density.cwiseProduct(w).sum();
      t.rhoT_active = density * ((1.0 - spec.dead_mass) / total);
    }
  } else {  // csv
    if (!star) t.rhoT_active = spec.csv_active;
    t.rhoT_dead = spec.csv_dead;
  }
  return t;
}

}  // namespace usbp::cli
