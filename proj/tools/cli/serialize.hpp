#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "flexform/integrate.hpp"
#include "flexform/rigidity.hpp"
#include "flexform/scenarios.hpp"
#include "flexform/stability.hpp"
#include "flexform/sweep.hpp"

namespace flexform::cli {

using ojson = nlohmann::ordered_json;

/// Writes to a sibling temporary file, then renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);

/// Shortest round-trip decimal form; "nan" / "inf" / "-inf" for non-finite values.
std::string format_number(double value);

/// Header t, p_1x, p_1y, ..., e_1, ..., etilde_1, ...; one row per sample.
std::string trajectory_csv(const Trajectory& trajectory, const FormationGraph& graph);

ojson points_json(const Eigen::VectorXd& positions);
ojson augmentation_json(const VirtualAugmentation& augmentation);

ojson rigidity_report_json(const FormationGraph& graph, const RigidityInfo& info,
                           const std::optional<VirtualAugmentation>& augmentation);

ojson simulation_summary_json(const std::string& name, const Trajectory& trajectory,
                              const std::optional<double>& diverged_at, const std::optional<SteadyStateInfo>& steady);

ojson stability_report_json(const StabilityReport& report);
ojson stability_analysis_json(const StabilityAnalysis& analysis, const VirtualAugmentation& augmentation);

std::string sweep_csv(const SweepResult& sweep);
ojson sweep_footer_json(const SweepResult& sweep, const std::string& direction_label);

ojson scenario_result_json(const ScenarioResult& result);

/// Agent paths as polylines, start marked by a circle and end by a square.
std::string trajectory_svg(const Trajectory& trajectory, const FormationGraph& graph);

}  // namespace flexform::cli
