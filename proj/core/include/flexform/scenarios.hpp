#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "flexform/dynamics.hpp"
#include "flexform/integrate.hpp"
#include "flexform/stability.hpp"

namespace flexform {

/// Each agent is displaced by a vector drawn uniformly from a disk.
struct Perturbation {
  std::uint64_t seed = 1;
  double radius = 0.0;
};

/// Reproducible uniform-in-disk displacement of every agent.
Eigen::VectorXd perturb(const Eigen::VectorXd& reference, const Perturbation& perturbation);

struct ScenarioResult;

struct CheckOutcome {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
};

struct ScenarioCheck {
  std::string name;
  std::function<CheckOutcome(const ScenarioResult&)> evaluate;
};

struct Scenario {
  std::string name;
  std::string description;
  FormationSystem system;
  /// Unperturbed positions; also the starting point of the equilibrium search.
  Eigen::VectorXd reference;
  std::optional<Perturbation> perturbation;
  IntegrationParams integration;
  double speed_tolerance = 1e-6;
  bool analyze_stability = true;
  StabilityOptions stability;
  std::vector<ScenarioCheck> checks;

  [[nodiscard]] Eigen::VectorXd initial_positions() const;
};

struct ScenarioOverrides {
  std::optional<double> dt;
  std::optional<double> t_final;
  std::optional<std::uint64_t> seed;
  /// Disturbance magnitude; used by chain_mismatch.
  std::optional<double> epsilon;
};

struct ScenarioInfo {
  std::string name;
  std::string description;
};

std::vector<ScenarioInfo> list_scenarios();

/// Throws Error(InvalidArgument) for unknown names.
Scenario make_scenario(std::string_view name, const ScenarioOverrides& overrides = {});

struct ScenarioResult {
  Scenario scenario;
  Trajectory trajectory;
  std::optional<double> diverged_at;
  std::optional<SteadyStateInfo> steady_state;
  std::optional<VirtualAugmentation> augmentation;
  std::optional<StabilityAnalysis> stability;
  /// "ok", "skipped", or the error kind that stopped the analysis.
  std::string stability_status = "skipped";
  std::vector<CheckOutcome> checks;

  [[nodiscard]] bool all_passed() const;
};

/// Simulates from the (perturbed) initial positions, runs the stability
/// pipeline from the reference and evaluates the scenario's checks. Check
/// failures are reported in the result, not thrown.
ScenarioResult run_scenario(const Scenario& scenario);
ScenarioResult run_scenario(std::string_view name, const ScenarioOverrides& overrides = {});

}  // namespace flexform
