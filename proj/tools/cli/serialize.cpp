#include "cli/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <system_error>

#include <fmt/format.h>

#include "flexform/errors.hpp"

namespace flexform::cli {
namespace {

ojson vector_json(const Eigen::VectorXd& v) {
  ojson out = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

ojson optional_number(const std::optional<double>& value) {
  return value ? ojson(*value) : ojson(nullptr);
}

}  // namespace

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  const std::filesystem::path parent = path.parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::filesystem::path temp = path;
  temp += ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Config, "cannot write '" + temp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::Config, "write failed for '" + temp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(temp, path, ec);
  if (ec) {
    std::filesystem::remove(temp);
    throw Error(ErrorKind::Config, "cannot replace '" + path.string() + "': " + ec.message());
  }
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return fmt::format("{}", value);
}

std::string trajectory_csv(const Trajectory& trajectory, const FormationGraph& graph) {
  const int n = graph.agent_count();
  const int m = graph.edge_count();
  const int v = trajectory.virtual_errors.empty() ? 0 : static_cast<int>(trajectory.virtual_errors.front().size());
  std::string out = "t";
  for (int i = 1; i <= n; ++i) out += fmt::format(",p_{0}x,p_{0}y", i);
  for (int k = 1; k <= m; ++k) out += fmt::format(",e_{}", k);
  for (int k = 1; k <= v; ++k) out += fmt::format(",etilde_{}", k);
  out += '\n';
  for (std::size_t s = 0; s < trajectory.size(); ++s) {
    out += format_number(trajectory.times[s]);
    const Eigen::VectorXd& p = trajectory.states[s];
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      out += ',';
      out += format_number(p[i]);
    }
    if (s < trajectory.errors.size()) {
      for (Eigen::Index k = 0; k < trajectory.errors[s].size(); ++k) {
        out += ',';
        out += format_number(trajectory.errors[s][k]);
      }
    }
    if (s < trajectory.virtual_errors.size()) {
      for (Eigen::Index k = 0; k < trajectory.virtual_errors[s].size(); ++k) {
        out += ',';
        out += format_number(trajectory.virtual_errors[s][k]);
      }
    }
    out += '\n';
  }
  return out;
}

ojson points_json(const Eigen::VectorXd& positions) {
  ojson out = ojson::array();
  for (Eigen::Index i = 0; i < positions.size() / 2; ++i) {
    out.push_back(ojson::array({positions[2 * i], positions[2 * i + 1]}));
  }
  return out;
}

ojson augmentation_json(const VirtualAugmentation& augmentation) {
  ojson edges = ojson::array();
  for (const Edge& e : augmentation.edges) edges.push_back(ojson::array({e.tail + 1, e.head + 1}));
  return ojson{{"edges", edges}, {"distances", vector_json(augmentation.distances)}};
}

ojson rigidity_report_json(const FormationGraph& graph, const RigidityInfo& info,
                           const std::optional<VirtualAugmentation>& augmentation) {
  ojson out;
  out["n"] = graph.agent_count();
  out["edges"] = graph.edge_count();
  out["rank"] = info.rank;
  out["class"] = to_string(info.cls);
  out["flex_dof"] = info.flex_dof;
  out["virtual_edges_needed"] = info.flex_dof;
  out["generic_rank"] = info.generic_rank;
  out["non_generic"] = info.non_generic;
  out["singular_values"] = vector_json(info.singular_values);
  out["virtual_augmentation"] = augmentation ? augmentation_json(*augmentation) : ojson(nullptr);
  return out;
}

ojson simulation_summary_json(const std::string& name, const Trajectory& trajectory,
                              const std::optional<double>& diverged_at, const std::optional<SteadyStateInfo>& steady) {
  ojson out;
  if (!name.empty()) out["name"] = name;
  out["samples"] = trajectory.size();
  out["t_end"] = trajectory.empty() ? ojson(nullptr) : ojson(trajectory.times.back());
  out["diverged_at"] = optional_number(diverged_at);
  if (!steady) {
    out["terminal"] = nullptr;
    out["angular_rate"] = nullptr;
    return out;
  }
  ojson terminal;
  terminal["max_abs_error"] = steady->max_abs_error;
  terminal["error_norm"] = steady->error_norm;
  terminal["virtual_error_norm"] = steady->virtual_error_norm;
  terminal["max_agent_speed"] = steady->agent_speeds.size() ? steady->agent_speeds.maxCoeff() : 0.0;
  terminal["all_stopped"] = steady->all_stopped();
  terminal["speed_tolerance"] = steady->speed_tolerance;
  terminal["agent_speeds"] = vector_json(steady->agent_speeds);
  terminal["edge_lengths"] = vector_json(steady->edge_lengths);
  terminal["angular_rates"] = vector_json(steady->angular_rates);
  terminal["virtual_edge_lengths"] = vector_json(steady->virtual_edge_lengths);
  terminal["final_positions"] = points_json(trajectory.final_state());
  out["terminal"] = terminal;
  // Signed rate of the fastest-turning edge.
  double rate = 0.0;
  for (Eigen::Index k = 0; k < steady->angular_rates.size(); ++k) {
    if (std::abs(steady->angular_rates[k]) > std::abs(rate)) rate = steady->angular_rates[k];
  }
  out["angular_rate"] = rate;
  return out;
}

ojson stability_report_json(const StabilityReport& report) {
  ojson eigenvalues = ojson::array();
  for (const auto& lambda : report.eigenvalues) eigenvalues.push_back(ojson::array({lambda.real(), lambda.imag()}));
  ojson out;
  out["verdict"] = to_string(report.verdict);
  out["eigenvalues"] = eigenvalues;
  out["zero_count"] = report.zero_count;
  out["unstable_count"] = report.unstable_count;
  out["max_real_part"] = report.max_real_part;
  out["raw_max_real_part"] = report.raw_max_real_part;
  out["threshold"] = report.threshold;
  out["block_structure_ok"] = report.block_structure_ok ? ojson(*report.block_structure_ok) : ojson(nullptr);
  out["max_virtual_column_norm"] = report.max_virtual_column_norm;
  return out;
}

ojson stability_analysis_json(const StabilityAnalysis& analysis, const VirtualAugmentation& augmentation) {
  ojson out = stability_report_json(analysis.report);
  out["virtual_augmentation"] = augmentation_json(augmentation);
  out["equilibrium"] = {{"positions", points_json(analysis.equilibrium.positions)},
                        {"residual", analysis.equilibrium.residual},
                        {"refine_iterations", analysis.equilibrium.refine_iterations}};
  return out;
}

std::string sweep_csv(const SweepResult& sweep) {
  std::string out = "epsilon,max_re_lambda,verdict,status,zero_count,equilibrium_shift,residual\n";
  for (const SweepRow& row : sweep.rows) {
    if (row.ok()) {
      out += fmt::format("{},{},{},{},{},{},{}\n", format_number(row.epsilon), format_number(row.max_real_part),
                         to_string(row.verdict), row.status, row.zero_count, format_number(row.equilibrium_shift),
                         format_number(row.residual));
    } else {
      out += fmt::format("{},nan,n/a,{},,,\n", format_number(row.epsilon), row.status);
    }
  }
  return out;
}

ojson sweep_footer_json(const SweepResult& sweep, const std::string& direction_label) {
  ojson out;
  out["direction"] = direction_label;
  out["rows"] = sweep.rows.size();
  out["failed_rows"] = std::count_if(sweep.rows.begin(), sweep.rows.end(), [](const SweepRow& r) { return !r.ok(); });
  out["critical_sign"] = sweep.critical_sign;
  out["sign_constant"] = sweep.sign_constant;
  out["scaling_exponent"] = optional_number(sweep.scaling_exponent);
  return out;
}

ojson scenario_result_json(const ScenarioResult& result) {
  ojson checks = ojson::array();
  for (const CheckOutcome& c : result.checks) {
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"threshold", c.threshold}});
  }
  ojson out;
  out["scenario"] = result.scenario.name;
  out["passed"] = result.all_passed();
  out["checks"] = checks;
  out["stability_status"] = result.stability_status;
  out["verdict"] = result.stability ? ojson(to_string(result.stability->report.verdict)) : ojson(nullptr);
  out["diverged_at"] = optional_number(result.diverged_at);
  return out;
}

std::string trajectory_svg(const Trajectory& trajectory, const FormationGraph& graph) {
  constexpr double size = 600.0;
  constexpr double margin = 30.0;
  const int n = graph.agent_count();
  double lo_x = std::numeric_limits<double>::infinity();
  double lo_y = lo_x;
  double hi_x = -lo_x;
  double hi_y = -lo_x;
  for (const Eigen::VectorXd& p : trajectory.states) {
    for (int i = 0; i < n; ++i) {
      lo_x = std::min(lo_x, p[2 * i]);
      hi_x = std::max(hi_x, p[2 * i]);
      lo_y = std::min(lo_y, p[2 * i + 1]);
      hi_y = std::max(hi_y, p[2 * i + 1]);
    }
  }
  const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-12});
  const double scale = (size - 2 * margin) / span;
  auto sx = [&](double x) { return margin + (x - lo_x) * scale; };
  auto sy = [&](double y) { return size - margin - (y - lo_y) * scale; };
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                            "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{0}\" viewBox=\"0 0 {0} {0}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      size);
  if (!trajectory.empty()) {
    const Eigen::VectorXd& last = trajectory.final_state();
    for (const Edge& e : graph.edges()) {
      out += fmt::format(
          "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n",
          sx(last[2 * e.tail]), sy(last[2 * e.tail + 1]), sx(last[2 * e.head]), sy(last[2 * e.head + 1]));
    }
  }
  for (int i = 0; i < n; ++i) {
    const char* color = kColors[i % 8];
    out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"", color);
    for (std::size_t s = 0; s < trajectory.size(); ++s) {
      const Eigen::VectorXd& p = trajectory.states[s];
      out += fmt::format("{}{:.2f},{:.2f}", s ? " " : "", sx(p[2 * i]), sy(p[2 * i + 1]));
    }
    out += "\"/>\n";
    if (!trajectory.empty()) {
      const Eigen::VectorXd& first = trajectory.states.front();
      const Eigen::VectorXd& last = trajectory.final_state();
      out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\" fill=\"none\" stroke=\"{}\"/>\n",
                         sx(first[2 * i]), sy(first[2 * i + 1]), color);
      out += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"7\" height=\"7\" fill=\"{}\"/>\n",
                         sx(last[2 * i]) - 3.5, sy(last[2 * i + 1]) - 3.5, color);
      out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"12\">{}</text>\n", sx(last[2 * i]) + 6,
                         sy(last[2 * i + 1]) - 6, i + 1);
    }
  }
  out += "</svg>\n";
  return out;
}

}  // namespace flexform::cli
