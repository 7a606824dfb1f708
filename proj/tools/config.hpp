#pragma once

#include "nhocp/checks.hpp"
#include "nhocp/models.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

namespace nhocp::cli {

using json = nlohmann::ordered_json;

/// Malformed, incomplete or out-of-range configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ModelKind { Sleigh, Cvt };

struct SimulateSettings {
  double horizon = 1.0;
  double h = 1e-3;
  AdaptedState start;
  Vec control;  ///< constant input; empty means free motion
};

struct PlantedSettings {
  std::uint64_t seed = 1;
  double velocity_scale = 0.5;
  double costate_scale = 0.5;
  double tolerance = 1e-6;
  double horizon = 1.0;
  CostateGuess guess = CostateGuess::Linearized;
};

struct RunConfig {
  json document;  ///< merged document the run was built from
  ModelKind kind = ModelKind::Sleigh;
  models::SleighParams sleigh;
  models::CvtParams cvt;
  std::optional<models::ObstacleParams> obstacle;
  double clearance = 0.05;

  std::optional<BoundaryConditions> bc;
  ShootingConfig solver;
  std::optional<SimulateSettings> simulate;
  std::vector<double> kappas;
  bool warm_start = true;
  checks::CheckOptions check;
  PlantedSettings planted;
};

/// Named preset documents; throws ConfigError for unknown names.
json preset_document(const std::string& name);

/// Preset (if any) with the config file merge-patched over it.
json load_document(const std::optional<std::filesystem::path>& config, const std::optional<std::string>& preset);

RunConfig parse_config(const json& doc);

MechanicalModel build_model(const RunConfig& cfg);
/// Running cost; the obstacle kappa is replaced by kappa when given.
CostModel build_cost(const RunConfig& cfg, std::optional<double> kappa = std::nullopt);
/// Expected Legendre determinant at q for the regularity check.
std::function<double(const Vec&)> expected_determinant(const RunConfig& cfg);

/// Parameter record echoed into summaries.
json parameters_json(const RunConfig& cfg);

}  // namespace nhocp::cli
