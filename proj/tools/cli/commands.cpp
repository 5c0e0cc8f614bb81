#include "cli/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cli/serialize.hpp"
#include "flexform/errors.hpp"
#include "flexform/rigidity.hpp"
#include "flexform/sweep.hpp"

namespace flexform::cli {
namespace {

std::string dump(const ojson& doc) { return doc.dump(2) + "\n"; }

std::string pick(const std::string& flag, const std::string& configured, const std::string& fallback = {}) {
  if (!flag.empty()) return flag;
  if (!configured.empty()) return configured;
  return fallback;
}

std::optional<VirtualAugmentation> try_augmentation(const RunConfig& config) {
  try {
    return select_augmentation(config);
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::filesystem::path footer_path_for(const std::filesystem::path& csv) {
  std::filesystem::path footer = csv;
  footer.replace_extension(".footer.json");
  return footer;
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::InvalidGraph:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::InvalidArgument:
      return kExitConfig;
    case ErrorKind::DegenerateConfiguration:
    case ErrorKind::AugmentationFailed:
    case ErrorKind::NonGenericEquilibrium:
    case ErrorKind::Precondition:
      return kExitDegenerate;
    case ErrorKind::Divergence:
      return kExitDivergence;
    case ErrorKind::EquilibriumNotFound:
      return kExitEquilibrium;
    case ErrorKind::AnalysisFailed:
      return kExitFailure;
  }
  return kExitFailure;
}

VirtualAugmentation select_augmentation(const RunConfig& config) {
  const FormationGraph& graph = config.system.graph;
  const RigidityInfo info = classify_rigidity(graph, config.positions, config.tolerances.rank);
  if (info.cls == RigidityClass::MinimallyInfinitesimallyRigid) return VirtualAugmentation{{}, Eigen::VectorXd(0)};
  if (info.cls == RigidityClass::InfinitesimallyRigid) {
    throw Error(ErrorKind::AugmentationFailed,
                "formation is rigid but not minimally rigid; the augmented error system needs exactly 2n-3 edges");
  }
  return augment_to_rigid(graph, config.positions, config.tolerances.rank);
}

int cmd_analyze(const RunConfig& config, const AnalyzeArgs& args, std::ostream& out) {
  const RigidityInfo info = classify_rigidity(config.system.graph, config.positions, config.tolerances.rank);
  std::optional<VirtualAugmentation> aug;
  if (info.cls == RigidityClass::Flexible) aug = try_augmentation(config);
  const std::string text = dump(rigidity_report_json(config.system.graph, info, aug));
  const std::string path = pick(args.out, config.outputs.report_json);
  if (!path.empty()) write_atomic(path, text);
  out << text;
  return kExitOk;
}

int cmd_simulate(const RunConfig& config, const SimulateArgs& args, std::ostream& out) {
  const std::optional<VirtualAugmentation> aug = try_augmentation(config);
  const VirtualAugmentation* aug_ptr = aug ? &*aug : nullptr;

  Trajectory trajectory;
  std::optional<double> diverged_at;
  try {
    trajectory = simulate(config.system, config.initial_positions(), config.integrator, aug_ptr);
  } catch (const DivergenceError& err) {
    trajectory = err.partial();
    diverged_at = err.last_finite_time();
  }
  std::optional<SteadyStateInfo> steady;
  if (!diverged_at && trajectory.size() >= 3) {
    steady = detect_steady_state(trajectory, config.system.graph, aug_ptr, config.tolerances.speed);
  }

  write_atomic(pick(args.csv, config.outputs.trajectory_csv, "trajectory.csv"),
               trajectory_csv(trajectory, config.system.graph));
  const std::string summary = dump(simulation_summary_json(config.name, trajectory, diverged_at, steady));
  const std::string summary_path = pick(args.summary, config.outputs.summary_json);
  if (!summary_path.empty()) write_atomic(summary_path, summary);
  const std::string plot_path = pick(args.plot, config.outputs.plot_svg);
  if (!plot_path.empty()) write_atomic(plot_path, trajectory_svg(trajectory, config.system.graph));
  out << summary;
  return diverged_at ? kExitDivergence : kExitOk;
}

int cmd_stability(const RunConfig& config, const StabilityArgs& args, std::ostream& out) {
  const VirtualAugmentation aug = select_augmentation(config);
  const std::string path = pick(args.out, config.outputs.report_json);
  try {
    const StabilityAnalysis analysis = analyze_stability(config.system, aug, config.positions, config.stability_options());
    const std::string text = dump(stability_analysis_json(analysis, aug));
    if (!path.empty()) write_atomic(path, text);
    out << text;
    return kExitOk;
  } catch (const EquilibriumNotFound& err) {
    ojson failure;
    failure["error"] = std::string(to_string(err.kind()));
    failure["best_residual"] = err.best_residual();
    failure["residual_tolerance"] = config.tolerances.equilibrium_residual;
    failure["best_positions"] = points_json(err.best_positions());
    const std::string text = dump(failure);
    if (!path.empty()) write_atomic(path, text);
    out << text;
    throw;
  }
}

int cmd_sweep(const RunConfig& config, const SweepArgs& args, std::ostream& out) {
  const VirtualAugmentation aug = select_augmentation(config);
  const FormationGraph& graph = config.system.graph;
  const std::string direction = args.direction.empty() ? config.sweep.direction : args.direction;
  const std::vector<double>& epsilons = args.epsilons.empty() ? config.sweep.epsilons : args.epsilons;
  const StabilityOptions options = config.stability_options();

  DisturbanceSet dir(graph.edge_count());
  std::string label = direction;
  if (direction == "config") {
    dir = config.system.disturbances;
  } else if (direction == "destabilizing" || direction == "stabilizing") {
    const DirectionSearch search = search_mismatch_directions(graph, config.system.distances, aug, config.positions,
                                                              config.sweep.probe_epsilon, options);
    const std::optional<std::size_t> index = direction == "destabilizing" ? search.destabilizing : search.stabilizing;
    if (!index) throw Error(ErrorKind::AnalysisFailed, "no " + direction + " scalar-mismatch direction found");
    dir = search.probes[*index].direction;
    label = direction + " (" + search.probes[*index].label + ")";
  } else if (direction != "zero") {
    throw Error(ErrorKind::Config, "--direction: expected config, destabilizing, stabilizing or zero");
  }

  const SweepResult result =
      mismatch_sweep(graph, config.system.distances, aug, dir, epsilons, config.positions, options);
  const std::filesystem::path csv_path = pick(args.csv, config.outputs.sweep_csv, "sweep.csv");
  const std::filesystem::path footer = pick(args.footer, config.outputs.sweep_footer, footer_path_for(csv_path).string());
  const std::string csv = sweep_csv(result);
  write_atomic(csv_path, csv);
  write_atomic(footer, dump(sweep_footer_json(result, label)));
  out << csv;
  return kExitOk;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Distance-based formation control: simulation and stability analysis", "flexform"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "flexform 0.1.0");

  std::string config_path;
  AnalyzeArgs analyze_args;
  SimulateArgs simulate_args;
  StabilityArgs stability_args;
  SweepArgs sweep_args;

  auto* analyze = app.add_subcommand("analyze", "Rigidity report for a configuration");
  analyze->add_option("config", config_path, "JSON config file")->required();
  analyze->add_option("--out", analyze_args.out, "Also write the report to this file");

  auto* sim = app.add_subcommand("simulate", "Integrate the closed loop; CSV trajectory and JSON summary");
  sim->add_option("config", config_path, "JSON config file")->required();
  sim->add_option("--csv", simulate_args.csv, "Trajectory CSV path (default trajectory.csv)");
  sim->add_option("--summary", simulate_args.summary, "Also write the summary JSON to this file");
  sim->add_option("--plot", simulate_args.plot, "Write an SVG of the agent paths");

  auto* stab = app.add_subcommand("stability", "Equilibrium, Jacobian and eigenvalue verdict");
  stab->add_option("config", config_path, "JSON config file")->required();
  stab->add_option("--out", stability_args.out, "Also write the report to this file");

  auto* sweep = app.add_subcommand("sweep", "Critical eigenvalue against disturbance magnitude");
  sweep->add_option("config", config_path, "JSON config file")->required();
  sweep->add_option("--direction", sweep_args.direction, "config | destabilizing | stabilizing | zero")
      ->check(CLI::IsMember({"config", "destabilizing", "stabilizing", "zero"}));
  sweep->add_option("--epsilons", sweep_args.epsilons, "Magnitudes, strictly descending")->delimiter(',');
  sweep->add_option("--csv", sweep_args.csv, "Sweep CSV path (default sweep.csv)");
  sweep->add_option("--footer", sweep_args.footer, "Footer JSON path (default <csv stem>.footer.json)");

  auto* scenario = app.add_subcommand("scenario", "Built-in scenarios");
  scenario->require_subcommand(1);
  scenario->add_subcommand("list", "List built-in scenarios");
  std::string scenario_name;
  std::string out_dir;
  std::string export_path;
  double dt = 0.0;
  double t_final = 0.0;
  std::uint64_t seed = 0;
  double epsilon = 0.0;
  auto* run = scenario->add_subcommand("run", "Run a scenario and evaluate its checks");
  auto* exp = scenario->add_subcommand("export", "Write a scenario as a config file");
  std::vector<CLI::Option*> override_opts;
  for (CLI::App* sub : {run, exp}) {
    sub->add_option("name", scenario_name, "Scenario name")->required();
    override_opts.push_back(sub->add_option("--dt", dt, "Step size override"));
    override_opts.push_back(sub->add_option("--t-final", t_final, "Horizon override"));
    override_opts.push_back(sub->add_option("--seed", seed, "Perturbation seed override"));
    override_opts.push_back(sub->add_option("--epsilon", epsilon, "Disturbance magnitude override"));
  }
  run->add_option("--out-dir", out_dir, "Write trajectory.csv, summary.json, stability.json, result.json here");
  exp->add_option("--out", export_path, "Output file (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  auto overrides = [&]() {
    ScenarioOverrides o;
    for (CLI::Option* opt : override_opts) {
      if (opt->count() == 0) continue;
      if (opt->get_name() == "--dt") o.dt = dt;
      if (opt->get_name() == "--t-final") o.t_final = t_final;
      if (opt->get_name() == "--seed") o.seed = seed;
      if (opt->get_name() == "--epsilon") o.epsilon = epsilon;
    }
    return o;
  };

  try {
    if (scenario->parsed()) {
      if (scenario->got_subcommand("list")) {
        ojson list = ojson::array();
        for (const ScenarioInfo& info : list_scenarios()) {
          list.push_back({{"name", info.name}, {"description", info.description}});
        }
        out << dump(list);
        return kExitOk;
      }
      const Scenario s = make_scenario(scenario_name, overrides());
      if (exp->parsed()) {
        const std::string text = to_json(config_from_scenario(s)).dump(2) + "\n";
        if (export_path.empty()) {
          out << text;
        } else {
          write_atomic(export_path, text);
        }
        return kExitOk;
      }
      const ScenarioResult result = run_scenario(s);
      const std::string text = dump(scenario_result_json(result));
      if (!out_dir.empty()) {
        const std::filesystem::path dir(out_dir);
        write_atomic(dir / "trajectory.csv", trajectory_csv(result.trajectory, s.system.graph));
        write_atomic(dir / "summary.json",
                     dump(simulation_summary_json(s.name, result.trajectory, result.diverged_at, result.steady_state)));
        if (result.stability && result.augmentation) {
          write_atomic(dir / "stability.json", dump(stability_analysis_json(*result.stability, *result.augmentation)));
        }
        write_atomic(dir / "result.json", text);
      }
      out << text;
      if (result.diverged_at) return kExitDivergence;
      return result.all_passed() ? kExitOk : kExitFailure;
    }

    const RunConfig config = load_run_config(config_path);
    if (analyze->parsed()) return cmd_analyze(config, analyze_args, out);
    if (sim->parsed()) {
      const int code = cmd_simulate(config, simulate_args, out);
      if (code == kExitDivergence) err << "error: trajectory diverged; partial CSV written\n";
      return code;
    }
    if (stab->parsed()) return cmd_stability(config, stability_args, out);
    if (sweep->parsed()) return cmd_sweep(config, sweep_args, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace flexform::cli
