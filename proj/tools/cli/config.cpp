#include "cli/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "flexform/errors.hpp"

namespace flexform::cli {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::Config, path + ": " + what);
}

void reject_unknown(const json& object, const std::string& path, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : object.items()) {
    bool known = false;
    for (const char* name : allowed) known = known || key == name;
    if (!known) fail(path.empty() ? key : path + "." + key, "unknown key");
  }
}

const json& require_object(const json& value, const std::string& path) {
  if (!value.is_object()) fail(path, "expected an object");
  return value;
}

double number(const json& value, const std::string& path) {
  if (!value.is_number()) fail(path, "expected a number");
  return value.get<double>();
}

double positive(const json& value, const std::string& path) {
  const double x = number(value, path);
  if (!(x > 0.0)) fail(path, "must be positive");
  return x;
}

long long integer(const json& value, const std::string& path) {
  if (!value.is_number_integer()) fail(path, "expected an integer");
  return value.get<long long>();
}

std::string string(const json& value, const std::string& path) {
  if (!value.is_string()) fail(path, "expected a string");
  return value.get<std::string>();
}

std::string index_path(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

Eigen::Matrix2d matrix2(const json& value, const std::string& path) {
  if (!value.is_array() || value.size() != 2) fail(path, "expected [[a, b], [c, d]]");
  Eigen::Matrix2d m;
  for (std::size_t r = 0; r < 2; ++r) {
    const json& row = value[r];
    if (!row.is_array() || row.size() != 2) fail(index_path(path, r), "expected a row of two numbers");
    for (std::size_t c = 0; c < 2; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number(row[c], index_path(index_path(path, r), c));
  }
  return m;
}

Eigen::VectorXd point_list(const json& value, const std::string& path, int agents) {
  if (!value.is_array()) fail(path, "expected a list of [x, y] pairs");
  if (static_cast<int>(value.size()) != agents) {
    fail(path, "expected " + std::to_string(agents) + " positions, got " + std::to_string(value.size()));
  }
  Eigen::VectorXd p(2 * agents);
  for (std::size_t i = 0; i < value.size(); ++i) {
    const json& xy = value[i];
    if (!xy.is_array() || xy.size() != 2) fail(index_path(path, i), "expected [x, y]");
    p[static_cast<Eigen::Index>(2 * i)] = number(xy[0], index_path(path, i));
    p[static_cast<Eigen::Index>(2 * i + 1)] = number(xy[1], index_path(path, i));
  }
  return p;
}

json matrix_json(const Eigen::Matrix2d& m) {
  return json::array({json::array({m(0, 0), m(0, 1)}), json::array({m(1, 0), m(1, 1)})});
}

json points_json(const Eigen::VectorXd& p) {
  json out = json::array();
  for (Eigen::Index i = 0; i < p.size() / 2; ++i) out.push_back(json::array({p[2 * i], p[2 * i + 1]}));
  return out;
}

DisturbanceSet parse_disturbances(const json& value, int edge_count) {
  DisturbanceSet set(edge_count);
  if (!value.is_array()) fail("disturbances", "expected a list");
  for (std::size_t i = 0; i < value.size(); ++i) {
    const std::string path = index_path("disturbances", i);
    const json& entry = require_object(value[i], path);
    reject_unknown(entry, path, {"edge", "tail", "scalar", "rotor", "head"});
    if (!entry.contains("edge")) fail(path + ".edge", "missing");
    const long long edge = integer(entry["edge"], path + ".edge");
    if (edge < 1 || edge > edge_count) fail(path + ".edge", "edge index out of range (1-based)");
    const int k = static_cast<int>(edge - 1);
    const int tail_forms = static_cast<int>(entry.contains("tail")) + static_cast<int>(entry.contains("scalar")) +
                           static_cast<int>(entry.contains("rotor"));
    if (tail_forms > 1) fail(path, "give at most one of tail, scalar, rotor");
    if (tail_forms == 0 && !entry.contains("head")) fail(path, "needs one of tail, scalar, rotor or head");
    if (entry.contains("tail")) set.add_tail(k, matrix2(entry["tail"], path + ".tail"));
    if (entry.contains("scalar")) set.add_scalar_mismatch(k, number(entry["scalar"], path + ".scalar"));
    if (entry.contains("rotor")) set.add_rotor(k, number(entry["rotor"], path + ".rotor"));
    if (entry.contains("head")) set.add_head(k, matrix2(entry["head"], path + ".head"));
  }
  return set;
}

FormationSystem parse_system(const json& doc) {
  for (const char* key : {"agents", "edges", "distances"}) {
    if (!doc.contains(key)) fail(key, "missing");
  }
  const long long agents = integer(doc["agents"], "agents");
  if (agents < 2 || agents > 100000) fail("agents", "must be at least 2");

  const json& edges = doc["edges"];
  if (!edges.is_array()) fail("edges", "expected a list of [tail, head]");
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const json& e = edges[k];
    if (!e.is_array() || e.size() != 2) fail(index_path("edges", k), "expected [tail, head]");
    pairs.emplace_back(static_cast<int>(integer(e[0], index_path("edges", k))),
                       static_cast<int>(integer(e[1], index_path("edges", k))));
  }

  const json& dist = doc["distances"];
  if (!dist.is_array()) fail("distances", "expected a list of numbers");
  if (dist.size() != edges.size()) fail("distances", "expected one distance per edge");
  Eigen::VectorXd d(static_cast<Eigen::Index>(dist.size()));
  for (std::size_t k = 0; k < dist.size(); ++k) d[static_cast<Eigen::Index>(k)] = positive(dist[k], index_path("distances", k));

  try {
    FormationGraph graph = build_formation(static_cast<int>(agents), pairs);
    DisturbanceSet disturbances = doc.contains("disturbances")
                                      ? parse_disturbances(doc["disturbances"], graph.edge_count())
                                      : DisturbanceSet(graph.edge_count());
    return FormationSystem(std::move(graph), DistanceSpec(d), std::move(disturbances));
  } catch (const Error& err) {
    if (err.kind() == ErrorKind::Config) throw;
    throw Error(ErrorKind::Config, err.what());
  }
}

}  // namespace

Eigen::VectorXd RunConfig::initial_positions() const {
  return perturbation ? perturb(positions, *perturbation) : positions;
}

StabilityOptions RunConfig::stability_options() const {
  StabilityOptions out;
  out.zero_tol = tolerances.zero;
  out.rank_tol = tolerances.rank;
  out.fd_step = tolerances.fd_step;
  out.equilibrium.residual_tol = tolerances.equilibrium_residual;
  out.equilibrium.horizon = tolerances.equilibrium_horizon;
  out.equilibrium.fd_step = tolerances.fd_step;
  return out;
}

RunConfig parse_run_config(const json& doc) {
  if (!doc.is_object()) fail("config", "expected a JSON object");
  reject_unknown(doc, "", {"name", "agents", "edges", "distances", "disturbances", "initial", "integrator",
                           "tolerances", "outputs", "sweep"});

  RunConfig config{"", parse_system(doc), Eigen::VectorXd(), std::nullopt, {}, {}, {}, {}};
  if (doc.contains("name")) config.name = string(doc["name"], "name");
  const int agents = config.system.graph.agent_count();

  if (!doc.contains("initial")) fail("initial", "missing");
  const json& initial = require_object(doc["initial"], "initial");
  reject_unknown(initial, "initial", {"positions", "seed", "radius"});
  if (!initial.contains("positions")) fail("initial.positions", "missing");
  config.positions = point_list(initial["positions"], "initial.positions", agents);
  if (initial.contains("seed") || initial.contains("radius")) {
    Perturbation perturbation;
    if (initial.contains("seed")) {
      const long long seed = integer(initial["seed"], "initial.seed");
      if (seed < 0) fail("initial.seed", "must be non-negative");
      perturbation.seed = static_cast<std::uint64_t>(seed);
    }
    if (initial.contains("radius")) {
      perturbation.radius = number(initial["radius"], "initial.radius");
      if (!(perturbation.radius >= 0.0)) fail("initial.radius", "must be non-negative");
    }
    config.perturbation = perturbation;
  }

  if (doc.contains("integrator")) {
    const json& in = require_object(doc["integrator"], "integrator");
    reject_unknown(in, "integrator", {"dt", "t_final", "stride", "divergence_bound"});
    if (in.contains("dt")) config.integrator.dt = positive(in["dt"], "integrator.dt");
    if (in.contains("t_final")) config.integrator.t_final = positive(in["t_final"], "integrator.t_final");
    if (in.contains("stride")) {
      const long long stride = integer(in["stride"], "integrator.stride");
      if (stride < 1 || stride > 1'000'000'000) fail("integrator.stride", "must be at least 1");
      config.integrator.record_stride = static_cast<int>(stride);
    }
    if (in.contains("divergence_bound")) {
      config.integrator.divergence_bound = positive(in["divergence_bound"], "integrator.divergence_bound");
    }
    try {
      config.integrator.validate();
    } catch (const Error& err) {
      fail("integrator", err.what());
    }
  }

  if (doc.contains("tolerances")) {
    const json& tol = require_object(doc["tolerances"], "tolerances");
    reject_unknown(tol, "tolerances", {"rank", "zero", "speed", "equilibrium_residual", "equilibrium_horizon", "fd_step"});
    Tolerances& t = config.tolerances;
    if (tol.contains("rank")) t.rank = positive(tol["rank"], "tolerances.rank");
    if (tol.contains("zero")) t.zero = positive(tol["zero"], "tolerances.zero");
    if (tol.contains("speed")) t.speed = positive(tol["speed"], "tolerances.speed");
    if (tol.contains("equilibrium_residual")) {
      t.equilibrium_residual = positive(tol["equilibrium_residual"], "tolerances.equilibrium_residual");
    }
    if (tol.contains("equilibrium_horizon")) {
      t.equilibrium_horizon = positive(tol["equilibrium_horizon"], "tolerances.equilibrium_horizon");
    }
    if (tol.contains("fd_step")) t.fd_step = positive(tol["fd_step"], "tolerances.fd_step");
  }

  if (doc.contains("outputs")) {
    const json& out = require_object(doc["outputs"], "outputs");
    reject_unknown(out, "outputs", {"trajectory_csv", "summary_json", "report_json", "plot_svg", "sweep_csv", "sweep_footer"});
    Outputs& o = config.outputs;
    if (out.contains("trajectory_csv")) o.trajectory_csv = string(out["trajectory_csv"], "outputs.trajectory_csv");
    if (out.contains("summary_json")) o.summary_json = string(out["summary_json"], "outputs.summary_json");
    if (out.contains("report_json")) o.report_json = string(out["report_json"], "outputs.report_json");
    if (out.contains("plot_svg")) o.plot_svg = string(out["plot_svg"], "outputs.plot_svg");
    if (out.contains("sweep_csv")) o.sweep_csv = string(out["sweep_csv"], "outputs.sweep_csv");
    if (out.contains("sweep_footer")) o.sweep_footer = string(out["sweep_footer"], "outputs.sweep_footer");
  }

  if (doc.contains("sweep")) {
    const json& sw = require_object(doc["sweep"], "sweep");
    reject_unknown(sw, "sweep", {"epsilons", "direction", "probe_epsilon"});
    if (sw.contains("epsilons")) {
      const json& eps = sw["epsilons"];
      if (!eps.is_array() || eps.empty()) fail("sweep.epsilons", "expected a non-empty list");
      config.sweep.epsilons.clear();
      for (std::size_t i = 0; i < eps.size(); ++i) {
        config.sweep.epsilons.push_back(positive(eps[i], index_path("sweep.epsilons", i)));
      }
    }
    if (sw.contains("direction")) {
      const std::string dir = string(sw["direction"], "sweep.direction");
      if (dir != "config" && dir != "destabilizing" && dir != "stabilizing" && dir != "zero") {
        fail("sweep.direction", "expected config, destabilizing, stabilizing or zero");
      }
      config.sweep.direction = dir;
    }
    if (sw.contains("probe_epsilon")) config.sweep.probe_epsilon = positive(sw["probe_epsilon"], "sweep.probe_epsilon");
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open config file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buffer.str());
  } catch (const json::parse_error& err) {
    throw Error(ErrorKind::Config, "malformed JSON in '" + path.string() + "': " + err.what());
  }
  return parse_run_config(doc);
}

json to_json(const RunConfig& config) {
  const FormationSystem& sys = config.system;
  json doc = json::object();
  if (!config.name.empty()) doc["name"] = config.name;
  doc["agents"] = sys.graph.agent_count();
  json edges = json::array();
  for (const Edge& e : sys.graph.edges()) edges.push_back(json::array({e.tail + 1, e.head + 1}));
  doc["edges"] = edges;
  json distances = json::array();
  for (int k = 0; k < sys.distances.size(); ++k) distances.push_back(sys.distances[k]);
  doc["distances"] = distances;

  json disturbances = json::array();
  for (int k = 0; k < sys.disturbances.edge_count(); ++k) {
    const EdgeDisturbance& term = sys.disturbances[k];
    const bool has_tail = !term.tail.isZero(0.0);
    const bool has_head = !term.head.isZero(0.0);
    if (!has_tail && !has_head) continue;
    json entry = {{"edge", k + 1}};
    if (has_tail) entry["tail"] = matrix_json(term.tail);
    if (has_head) entry["head"] = matrix_json(term.head);
    disturbances.push_back(entry);
  }
  doc["disturbances"] = disturbances;

  json initial = {{"positions", points_json(config.positions)}};
  if (config.perturbation) {
    initial["seed"] = config.perturbation->seed;
    initial["radius"] = config.perturbation->radius;
  }
  doc["initial"] = initial;
  doc["integrator"] = {{"dt", config.integrator.dt},
                       {"t_final", config.integrator.t_final},
                       {"stride", config.integrator.record_stride},
                       {"divergence_bound", config.integrator.divergence_bound}};
  const Tolerances& t = config.tolerances;
  doc["tolerances"] = {{"rank", t.rank},
                       {"zero", t.zero},
                       {"speed", t.speed},
                       {"equilibrium_residual", t.equilibrium_residual},
                       {"equilibrium_horizon", t.equilibrium_horizon},
                       {"fd_step", t.fd_step}};
  json outputs = json::object();
  const Outputs& o = config.outputs;
  for (const auto& [key, value] : {std::pair<const char*, const std::string*>{"trajectory_csv", &o.trajectory_csv},
                                   {"summary_json", &o.summary_json},
                                   {"report_json", &o.report_json},
                                   {"plot_svg", &o.plot_svg},
                                   {"sweep_csv", &o.sweep_csv},
                                   {"sweep_footer", &o.sweep_footer}}) {
    if (!value->empty()) outputs[key] = *value;
  }
  if (!outputs.empty()) doc["outputs"] = outputs;
  doc["sweep"] = {{"epsilons", config.sweep.epsilons},
                  {"direction", config.sweep.direction},
                  {"probe_epsilon", config.sweep.probe_epsilon}};
  return doc;
}

RunConfig config_from_scenario(const Scenario& scenario) {
  RunConfig config{scenario.name, scenario.system, scenario.reference, scenario.perturbation,
                   scenario.integration, {}, {}, {}};
  const StabilityOptions& s = scenario.stability;
  config.tolerances.rank = s.rank_tol;
  config.tolerances.zero = s.zero_tol;
  config.tolerances.speed = scenario.speed_tolerance;
  config.tolerances.equilibrium_residual = s.equilibrium.residual_tol;
  config.tolerances.equilibrium_horizon = s.equilibrium.horizon;
  config.tolerances.fd_step = s.fd_step;
  return config;
}

}  // namespace flexform::cli
