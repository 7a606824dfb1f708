#include "config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace nhocp::cli {

namespace {

const char* const kPaperSleigh = R"({
  "model": {"type": "sleigh", "m": 1.0, "J": 1.0, "a": 0.5},
  "obstacle": {"kappa": 0.25, "center": [0.5, 0.5], "clearance": 0.05},
  "boundary": {
    "T": 1.0,
    "start": {"q": [0.0, 0.0, 0.0], "y": [0.0, 0.0]},
    "target": {"q": [1.0, 1.0, 0.0], "y": [0.0, 0.0]}
  },
  "solver": {
    "h": 0.001, "method": "rk4", "newton_tol": 1e-10, "newton_max_iter": 50,
    "fd_step": 1e-6, "damping": 0.5, "min_step": 1e-6, "segments": 1,
    "guess": "zero", "initial_costates": [1.8, 25.2, 11.2, 2.2, 7.2]
  },
  "simulate": {"T": 10.0, "h": 0.001, "start": {"q": [0.0, 0.0, 0.0], "y": [0.3, 0.5]}},
  "sweep": {"kappas": [0.0, 0.01, 0.1, 0.25, 0.5], "warm_start": true},
  "check": {"samples": 100, "seed": 20240601},
  "planted": {"seed": 1, "velocity_scale": 0.5, "costate_scale": 0.5, "tolerance": 1e-6, "T": 1.0,
              "guess": "linearized"}
})";

const char* const kPaperCvt = R"({
  "model": {"type": "cvt", "m": 1.0, "J1": 1.0, "J2": 1.0},
  "boundary": {
    "T": 1.0,
    "start": {"q": [0.0, 0.0, 0.3], "y": [0.0, 0.0]},
    "target": {"q": [1.0, 0.5, 0.6], "y": [0.0, 0.0]}
  },
  "solver": {
    "h": 0.001, "method": "rk4", "newton_tol": 1e-10, "newton_max_iter": 50,
    "fd_step": 1e-6, "damping": 0.5, "min_step": 1e-6, "segments": 1, "guess": "linearized"
  },
  "simulate": {"T": 10.0, "h": 0.001, "start": {"q": [0.0, 0.0, 0.5], "y": [0.0, 0.5]}},
  "check": {"samples": 100, "seed": 20240601},
  "planted": {"seed": 1, "velocity_scale": 0.5, "costate_scale": 0.5, "tolerance": 1e-6, "T": 1.0,
              "guess": "linearized"}
})";

void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) throw ConfigError("unknown key " + where + "." + item.key());
  }
}

const json& required(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) throw ConfigError("missing " + where + "." + key);
  return obj.at(key);
}

double number(const json& v, const std::string& what) {
  if (!v.is_number()) throw ConfigError(what + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(what + " must be finite");
  return x;
}

double required_number(const json& obj, const std::string& where, const char* key) {
  return number(required(obj, where, key), where + "." + key);
}

template <class T>
void optional_number(const json& obj, const std::string& where, const char* key, T& out) {
  if (!obj.contains(key)) return;
  const double x = number(obj.at(key), where + "." + key);
  if constexpr (std::is_integral_v<T>) {
    if (x != std::floor(x)) throw ConfigError(where + "." + key + " must be an integer");
  }
  out = static_cast<T>(x);
}

Vec vector_of(const json& v, const std::string& what, int size) {
  if (!v.is_array()) throw ConfigError(what + " must be an array");
  if (size >= 0 && static_cast<int>(v.size()) != size) {
    throw ConfigError(what + " must have " + std::to_string(size) + " entries");
  }
  Vec out(static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<int>(i)) = number(v[i], what);
  return out;
}

AdaptedState state_of(const json& v, const std::string& where) {
  allow_keys(v, where, {"q", "y"});
  return {vector_of(required(v, where, "q"), where + ".q", 3), vector_of(required(v, where, "y"), where + ".y", 2)};
}

CostateGuess guess_of(const json& v, const std::string& what) {
  if (!v.is_string()) throw ConfigError(what + " must be a string");
  const std::string s = v.get<std::string>();
  if (s == "zero") return CostateGuess::Zero;
  if (s == "linearized") return CostateGuess::Linearized;
  throw ConfigError(what + " must be zero or linearized");
}

void parse_model(const json& m, RunConfig& cfg) {
  const std::string type = required(m, "model", "type").is_string() ? m.at("type").get<std::string>() : "";
  if (type == "sleigh") {
    allow_keys(m, "model", {"type", "m", "J", "a"});
    cfg.kind = ModelKind::Sleigh;
    cfg.sleigh.m = required_number(m, "model", "m");
    cfg.sleigh.J = required_number(m, "model", "J");
    cfg.sleigh.a = required_number(m, "model", "a");
    models::validate(cfg.sleigh);
  } else if (type == "cvt") {
    allow_keys(m, "model", {"type", "m", "J1", "J2"});
    cfg.kind = ModelKind::Cvt;
    cfg.cvt.m = required_number(m, "model", "m");
    cfg.cvt.J1 = required_number(m, "model", "J1");
    cfg.cvt.J2 = required_number(m, "model", "J2");
    models::validate(cfg.cvt);
  } else {
    throw ConfigError("model.type must be sleigh or cvt");
  }
}

void parse_solver(const json& s, ShootingConfig& out) {
  allow_keys(s, "solver", {"h", "method", "newton_tol", "newton_max_iter", "fd_step", "damping", "min_step",
                           "segments", "guess", "initial_costates", "parallel_jacobian"});
  optional_number(s, "solver", "h", out.h);
  optional_number(s, "solver", "newton_tol", out.newton_tol);
  optional_number(s, "solver", "newton_max_iter", out.newton_max_iter);
  optional_number(s, "solver", "fd_step", out.fd_step);
  optional_number(s, "solver", "damping", out.damping);
  optional_number(s, "solver", "min_step", out.min_step);
  optional_number(s, "solver", "segments", out.segments);
  if (s.contains("method")) {
    const json& m = s.at("method");
    const std::string name = m.is_string() ? m.get<std::string>() : "";
    if (name == "rk4") out.method = Method::RK4;
    else if (name == "heun") out.method = Method::Heun;
    else if (name == "euler") out.method = Method::Euler;
    else throw ConfigError("solver.method must be rk4, heun or euler");
  }
  if (s.contains("guess")) out.guess = guess_of(s.at("guess"), "solver.guess");
  if (s.contains("initial_costates")) out.initial_costate_guess = vector_of(s.at("initial_costates"), "solver.initial_costates", 5);
  if (s.contains("parallel_jacobian")) {
    if (!s.at("parallel_jacobian").is_boolean()) throw ConfigError("solver.parallel_jacobian must be a boolean");
    out.parallel_jacobian = s.at("parallel_jacobian").get<bool>();
  }
  if (!(out.h > 0.0) || !(out.newton_tol > 0.0) || out.newton_max_iter < 1 || !(out.fd_step > 0.0) ||
      !(out.damping > 0.0 && out.damping < 1.0) || !(out.min_step > 0.0) || out.segments < 1) {
    throw ConfigError("solver settings out of range");
  }
}

}  // namespace

json preset_document(const std::string& name) {
  if (name == "paper-sleigh") return json::parse(kPaperSleigh);
  if (name == "paper-cvt") return json::parse(kPaperCvt);
  throw ConfigError("unknown preset " + name + " (paper-sleigh, paper-cvt)");
}

json load_document(const std::optional<std::filesystem::path>& config, const std::optional<std::string>& preset) {
  json doc = preset ? preset_document(*preset) : json::object();
  if (config) {
    std::ifstream in(*config);
    if (!in) throw ConfigError("cannot open config " + config->string());
    json patch;
    try {
      patch = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("config " + config->string() + ": " + e.what());
    }
    if (!patch.is_object()) throw ConfigError("config must be a JSON object");
    doc.merge_patch(patch);
  }
  if (!config && !preset) throw ConfigError("either --config or --preset is required");
  return doc;
}

RunConfig parse_config(const json& doc) {
  RunConfig cfg;
  cfg.document = doc;
  allow_keys(doc, "config", {"model", "obstacle", "boundary", "solver", "simulate", "sweep", "check", "planted"});
  try {
    parse_model(required(doc, "config", "model"), cfg);

    if (doc.contains("obstacle")) {
      const json& o = doc.at("obstacle");
      allow_keys(o, "obstacle", {"kappa", "center", "clearance"});
      if (cfg.kind != ModelKind::Sleigh) throw ConfigError("obstacle is only defined for the sleigh");
      models::ObstacleParams p;
      p.kappa = required_number(o, "obstacle", "kappa");
      const Vec c = vector_of(required(o, "obstacle", "center"), "obstacle.center", 2);
      p.center = {c(0), c(1)};
      models::validate(p);
      cfg.obstacle = p;
      cfg.clearance = required_number(o, "obstacle", "clearance");
      if (cfg.clearance < 0.0) throw ConfigError("obstacle.clearance must be >= 0");
    }

    if (doc.contains("boundary")) {
      const json& b = doc.at("boundary");
      allow_keys(b, "boundary", {"T", "start", "target"});
      BoundaryConditions bc;
      bc.horizon = required_number(b, "boundary", "T");
      if (!(bc.horizon > 0.0)) throw ConfigError("boundary.T must be positive");
      bc.start = state_of(required(b, "boundary", "start"), "boundary.start");
      bc.target = state_of(required(b, "boundary", "target"), "boundary.target");
      cfg.bc = bc;
    }

    if (doc.contains("solver")) parse_solver(doc.at("solver"), cfg.solver);

    if (doc.contains("simulate")) {
      const json& s = doc.at("simulate");
      allow_keys(s, "simulate", {"T", "h", "start", "control"});
      SimulateSettings sim;
      sim.horizon = required_number(s, "simulate", "T");
      optional_number(s, "simulate", "h", sim.h);
      if (!(sim.horizon > 0.0) || !(sim.h > 0.0)) throw ConfigError("simulate.T and simulate.h must be positive");
      sim.start = state_of(required(s, "simulate", "start"), "simulate.start");
      if (s.contains("control")) sim.control = vector_of(s.at("control"), "simulate.control", 2);
      cfg.simulate = sim;
    }

    if (doc.contains("sweep")) {
      const json& s = doc.at("sweep");
      allow_keys(s, "sweep", {"kappas", "warm_start"});
      const Vec k = vector_of(required(s, "sweep", "kappas"), "sweep.kappas", -1);
      cfg.kappas.assign(k.data(), k.data() + k.size());
      for (double v : cfg.kappas) {
        if (v < 0.0) throw ConfigError("sweep.kappas must be >= 0");
      }
      if (s.contains("warm_start")) {
        if (!s.at("warm_start").is_boolean()) throw ConfigError("sweep.warm_start must be a boolean");
        cfg.warm_start = s.at("warm_start").get<bool>();
      }
    }

    if (doc.contains("check")) {
      const json& c = doc.at("check");
      allow_keys(c, "check", {"samples", "seed"});
      optional_number(c, "check", "samples", cfg.check.samples);
      optional_number(c, "check", "seed", cfg.check.seed);
      if (cfg.check.samples < 1) throw ConfigError("check.samples must be >= 1");
    }

    if (doc.contains("planted")) {
      const json& p = doc.at("planted");
      allow_keys(p, "planted", {"seed", "velocity_scale", "costate_scale", "tolerance", "T", "guess"});
      optional_number(p, "planted", "seed", cfg.planted.seed);
      optional_number(p, "planted", "velocity_scale", cfg.planted.velocity_scale);
      optional_number(p, "planted", "costate_scale", cfg.planted.costate_scale);
      optional_number(p, "planted", "tolerance", cfg.planted.tolerance);
      optional_number(p, "planted", "T", cfg.planted.horizon);
      if (p.contains("guess")) cfg.planted.guess = guess_of(p.at("guess"), "planted.guess");
      if (!(cfg.planted.horizon > 0.0) || !(cfg.planted.tolerance > 0.0)) {
        throw ConfigError("planted.T and planted.tolerance must be positive");
      }
    }
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

MechanicalModel build_model(const RunConfig& cfg) {
  return cfg.kind == ModelKind::Sleigh ? models::chaplygin_sleigh(cfg.sleigh) : models::cvt(cfg.cvt);
}

CostModel build_cost(const RunConfig& cfg, std::optional<double> kappa) {
  if (cfg.kind != ModelKind::Sleigh) return quadratic_cost();
  models::ObstacleParams o = cfg.obstacle.value_or(models::ObstacleParams{});
  if (kappa) o.kappa = *kappa;
  return models::sleigh_with_obstacle(cfg.sleigh, o);
}

std::function<double(const Vec&)> expected_determinant(const RunConfig& cfg) {
  if (cfg.kind == ModelKind::Sleigh) {
    const double det = models::sleigh_regularity_determinant(cfg.sleigh);
    return [det](const Vec&) { return det; };
  }
  const models::CvtParams p = cfg.cvt;
  return [p](const Vec& q) { return models::cvt_regularity_determinant(p, q(2)); };
}

json parameters_json(const RunConfig& cfg) {
  json out;
  out["model"] = cfg.document.at("model");
  if (cfg.obstacle) out["obstacle"] = cfg.document.at("obstacle");
  return out;
}

}  // namespace nhocp::cli
