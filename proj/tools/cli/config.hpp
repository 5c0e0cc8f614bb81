#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "flexform/dynamics.hpp"
#include "flexform/integrate.hpp"
#include "flexform/scenarios.hpp"
#include "flexform/stability.hpp"

namespace flexform::cli {

/// Overridable numeric tolerances. Defaults are documented in the README.
struct Tolerances {
  double rank = kDefaultRankTolerance;
  double zero = kDefaultZeroTolerance;
  double speed = 1e-6;
  double equilibrium_residual = 1e-10;
  double equilibrium_horizon = 20.0;
  double fd_step = 1e-6;
};

struct Outputs {
  std::string trajectory_csv;
  std::string summary_json;
  std::string report_json;
  std::string plot_svg;
  std::string sweep_csv;
  std::string sweep_footer;
};

struct SweepSettings {
  std::vector<double> epsilons{1e-1, 1e-2, 1e-3, 1e-4};
  /// "config", "destabilizing", "stabilizing" or "zero".
  std::string direction = "config";
  double probe_epsilon = 1e-2;
};

struct RunConfig {
  std::string name;
  FormationSystem system;
  /// Reference positions, 2n entries.
  Eigen::VectorXd positions;
  std::optional<Perturbation> perturbation;
  IntegrationParams integrator;
  Tolerances tolerances;
  Outputs outputs;
  SweepSettings sweep;

  [[nodiscard]] Eigen::VectorXd initial_positions() const;
  [[nodiscard]] StabilityOptions stability_options() const;
};

/// Validates against the documented schema; unknown keys are rejected.
/// Throws Error(Config) with the offending key path.
RunConfig parse_run_config(const nlohmann::json& document);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& config);

/// Config equivalent of a registry scenario, for export.
RunConfig config_from_scenario(const Scenario& scenario);

}  // namespace flexform::cli
