#include "flexform/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "flexform/sweep.hpp"

namespace flexform {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Eigen::VectorXd stack(std::initializer_list<Eigen::Vector2d> points) {
  Eigen::VectorXd p(2 * static_cast<Eigen::Index>(points.size()));
  Eigen::Index i = 0;
  for (const Eigen::Vector2d& q : points) p.segment<2>(2 * i++) = q;
  return p;
}

std::vector<std::pair<int, int>> pairs(std::initializer_list<std::pair<int, int>> list) { return list; }

// ---- checks ---------------------------------------------------------------

ScenarioCheck max_error_below(double threshold) {
  return {"max |e_k| < " + std::to_string(threshold), [threshold](const ScenarioResult& r) {
            const double v = r.steady_state ? r.steady_state->max_abs_error : kNaN;
            return CheckOutcome{"", v < threshold, v, threshold};
          }};
}

ScenarioCheck agents_stopped(std::vector<int> agents, double threshold, std::string label) {
  return {label, [agents = std::move(agents), threshold](const ScenarioResult& r) {
            double worst = r.steady_state ? 0.0 : kNaN;
            if (r.steady_state) {
              for (int a : agents) worst = std::max(worst, r.steady_state->agent_speeds[a]);
            }
            return CheckOutcome{"", worst < threshold, worst, threshold};
          }};
}

// |z_a - sign * perp(z_b)| at the final state.
ScenarioCheck perp_relation(int a, int b, double sign, double threshold) {
  const std::string s = sign > 0 ? "" : "-";
  return {"|z" + std::to_string(a + 1) + " - " + s + "perp(z" + std::to_string(b + 1) + ")| < " +
              std::to_string(threshold),
          [a, b, sign, threshold](const ScenarioResult& r) {
            if (r.trajectory.empty()) return CheckOutcome{"", false, kNaN, threshold};
            const Eigen::VectorXd z = relative_positions(r.scenario.system.graph, r.trajectory.final_state());
            const double v = (Eigen::Vector2d(z.segment<2>(2 * a)) - sign * perp(z.segment<2>(2 * b))).norm();
            return CheckOutcome{"", v < threshold, v, threshold};
          }};
}

ScenarioCheck verdict_is(Verdict expected) {
  return {std::string("stability verdict ") + to_string(expected), [expected](const ScenarioResult& r) {
            if (!r.stability) return CheckOutcome{"", false, kNaN, 0.0};
            return CheckOutcome{"", r.stability->report.verdict == expected, r.stability->report.max_real_part, 0.0};
          }};
}

ScenarioCheck zero_modes_match_virtual_edges() {
  return {"zero eigenvalues == virtual edges", [](const ScenarioResult& r) {
            if (!r.stability || !r.augmentation) return CheckOutcome{"", false, kNaN, 0.0};
            const int zeros = r.stability->report.zero_count;
            return CheckOutcome{"", zeros == r.augmentation->size(), static_cast<double>(zeros),
                                static_cast<double>(r.augmentation->size())};
          }};
}

ScenarioCheck virtual_columns_vanish() {
  return {"virtual Jacobian columns vanish", [](const ScenarioResult& r) {
            if (!r.stability) return CheckOutcome{"", false, kNaN, 0.0};
            const auto& rep = r.stability->report;
            return CheckOutcome{"", rep.block_structure_ok.value_or(false), rep.max_virtual_column_norm,
                                r.scenario.stability.zero_tol};
          }};
}

ScenarioCheck virtual_distance(int index, double expected, double tol) {
  return {"virtual distance " + std::to_string(index + 1) + " == " + std::to_string(expected),
          [index, expected, tol](const ScenarioResult& r) {
            if (!r.augmentation || r.augmentation->size() <= index) return CheckOutcome{"", false, kNaN, tol};
            const double v = r.augmentation->distances[index];
            return CheckOutcome{"", std::abs(v - expected) <= tol, v, expected};
          }};
}

ScenarioCheck edge_lengths_settle(std::vector<int> edges, double tol) {
  return {"satellite |z_k| within " + std::to_string(tol) + " of d_k",
          [edges = std::move(edges), tol](const ScenarioResult& r) {
            if (!r.steady_state) return CheckOutcome{"", false, kNaN, tol};
            double worst = 0.0;
            for (int k : edges) {
              worst = std::max(worst, std::abs(r.steady_state->edge_lengths[k] - r.scenario.system.distances[k]));
            }
            return CheckOutcome{"", worst < tol, worst, tol};
          }};
}

ScenarioCheck angular_rate_magnitude(std::vector<int> edges, double omega, double rel_tol) {
  return {"satellite |angular rate| within 1% of omega",
          [edges = std::move(edges), omega, rel_tol](const ScenarioResult& r) {
            if (!r.steady_state) return CheckOutcome{"", false, kNaN, rel_tol};
            double worst = 0.0;
            for (int k : edges) {
              worst = std::max(worst, std::abs(std::abs(r.steady_state->angular_rates[k]) - omega) / omega);
            }
            return CheckOutcome{"", worst < rel_tol, worst, rel_tol};
          }};
}

ScenarioCheck exponential_decay(double min_r_squared) {
  return {"log-linear decay of |e| (R^2)", [min_r_squared](const ScenarioResult& r) {
            std::vector<double> norms;
            for (const Eigen::VectorXd& e : r.trajectory.errors) norms.push_back(e.norm());
            const double d = std::max(1.0, r.scenario.system.distances.max());
            const DecayFit fit = fit_exponential_decay(r.trajectory.times, norms, 1e-9 * d * d);
            return CheckOutcome{"", fit.points >= 3 && fit.r_squared > min_r_squared, fit.r_squared, min_r_squared};
          }};
}

ScenarioCheck equilibrium_found() {
  return {"perturbed equilibrium found", [](const ScenarioResult& r) {
            return CheckOutcome{"", r.stability.has_value(), r.stability ? r.stability->equilibrium.residual : kNaN,
                                r.scenario.stability.equilibrium.residual_tol};
          }};
}

IntegrationParams integration(double t_final, int stride = 100) {
  IntegrationParams p;
  p.dt = 1e-3;
  p.t_final = t_final;
  p.record_stride = stride;
  return p;
}

// ---- presets --------------------------------------------------------------

Scenario triangle_rigid() {
  const auto edges = pairs({{1, 2}, {2, 3}, {3, 1}});
  Scenario s{"triangle_rigid",
             "Minimally rigid right triangle under the plain gradient law; baseline for exponential convergence.",
             FormationSystem(build_formation(3, edges), DistanceSpec{1.0, std::numbers::sqrt2, 1.0}),
             stack({{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}}),
             Perturbation{1, 0.1},
             integration(50.0), 1e-6, true, {}, {}};
  s.checks = {max_error_below(1e-8), agents_stopped({0, 1, 2}, 1e-6, "all agent speeds < 1e-6"),
              verdict_is(Verdict::AsymptoticallyStable)};
  return s;
}

Scenario four_cycle_flexible() {
  const auto edges = pairs({{1, 2}, {2, 3}, {3, 4}, {4, 1}});
  Scenario s{"four_cycle_flexible",
             "Unit-side four-cycle (a flexible parallelogram) without disturbances; one zero mode per virtual edge.",
             FormationSystem(build_formation(4, edges), DistanceSpec{1.0, 1.0, 1.0, 1.0}),
             stack({{0.0, 0.0}, {-1.0, 0.0}, {-1.0, 1.0}, {0.0, 1.0}}),
             Perturbation{1, 0.1},
             integration(50.0), 1e-6, true, {}, {}};
  s.checks = {max_error_below(1e-8), verdict_is(Verdict::MarginalWithZeroModes), zero_modes_match_virtual_edges(),
              virtual_columns_vanish(), virtual_distance(0, std::numbers::sqrt2, 1e-12)};
  return s;
}

Scenario satellites_square() {
  constexpr double side = 10.0;
  constexpr double radius = 3.0;
  constexpr double omega = 1.0;
  // Rigid square 1..4 with one diagonal; satellites 5..8 are the tails of the last four edges.
  const auto edges = pairs({{1, 2}, {2, 3}, {3, 4}, {4, 1}, {1, 3}, {5, 1}, {6, 2}, {7, 3}, {8, 4}});
  const FormationGraph graph = build_formation(8, edges);
  DisturbanceSet rotors(graph.edge_count());
  for (int k = 5; k < 9; ++k) rotors.add_rotor(k, omega);
  Scenario s{"satellites_square",
             "Four rigid agents holding a square (side 10, one diagonal) with four satellites orbiting them at "
             "radius 3 and 1 rad/s.",
             FormationSystem(graph,
                             DistanceSpec{side, side, side, side, side * std::numbers::sqrt2, radius, radius, radius,
                                          radius},
                             rotors),
             stack({{0.0, 0.0},
                    {side, 0.0},
                    {side, side},
                    {0.0, side},
                    {-radius, 0.0},
                    {side + radius, 0.0},
                    {side + radius, side},
                    {-radius, side}}),
             Perturbation{1, 0.3},
             integration(30.0), 1e-6, true, {}, {}};
  // Satellites keep moving, so the augmented errors have no rest point.
  s.analyze_stability = false;
  s.checks = {agents_stopped({0, 1, 2, 3}, 1e-6, "rigid agent speeds < 1e-6"), edge_lengths_settle({5, 6, 7, 8}, 1e-4),
              angular_rate_magnitude({5, 6, 7, 8}, omega, 0.01), exponential_decay(0.99)};
  return s;
}

// Square held by four edges. Agents 1 and 3 add -z of the edge they lead and
// +perp(z) of the edge they close, so the rest set is e = 0 with
// z1 = perp(z4), z3 = perp(z2). `mirror` flips the perp terms.
Scenario square_four_edges(bool mirror) {
  constexpr double d = 10.0;
  const double sign = mirror ? -1.0 : 1.0;
  const auto edges = pairs({{1, 2}, {2, 3}, {3, 4}, {4, 1}});
  const FormationGraph graph = build_formation(4, edges);
  DisturbanceSet dist(graph.edge_count());
  dist.add_tail(0, Eigen::Matrix2d::Identity())
      .add_tail(2, Eigen::Matrix2d::Identity())
      .add_head(1, -sign * perp_matrix())
      .add_head(3, -sign * perp_matrix());
  Scenario s{mirror ? "square_four_edges_mirrored" : "square_four_edges",
             mirror ? "Four-edge square with sign-flipped perpendicular terms; converges to the mirrored square."
                    : "Square of side 10 stabilized with only four edges by deliberate perpendicular biases.",
             FormationSystem(graph, DistanceSpec{d, d, d, d}, dist),
             stack({{0.0, 0.0}, {-sign * d, 0.0}, {-sign * d, d}, {0.0, d}}),
             Perturbation{1, 0.1 * d},
             integration(60.0), 1e-6, true, {}, {}};
  s.checks = {max_error_below(1e-6),
              perp_relation(0, 3, sign, 1e-4),
              perp_relation(2, 1, sign, 1e-4),
              agents_stopped({0, 1, 2, 3}, 1e-6, "all agent speeds < 1e-6"),
              verdict_is(Verdict::AsymptoticallyStable),
              virtual_distance(0, std::numbers::sqrt2 * d, 1e-9)};
  return s;
}

// Three agents, two edges with d = (1, 3). A tail mismatch on edge 1 forces
// the perturbed equilibrium to z1 . z2 = -2 d1^2, which is non-collinear
// because d2 > 2 d1; the reference sits there.
Scenario chain_mismatch(double epsilon) {
  const auto edges = pairs({{1, 2}, {2, 3}});
  const FormationGraph graph = build_formation(3, edges);
  const DistanceSpec distances{1.0, 3.0};
  const double cos_phi = -2.0 / 3.0;
  const Eigen::Vector2d z2 = 3.0 * Eigen::Vector2d(cos_phi, std::sqrt(1.0 - cos_phi * cos_phi));
  const Eigen::VectorXd reference = stack({{1.0, 0.0}, {0.0, 0.0}, -z2});

  const VirtualAugmentation aug = augment_to_rigid(graph, reference);
  const DirectionSearch search = search_mismatch_directions(graph, distances, aug, reference, 1e-2);
  DisturbanceSet direction(graph.edge_count());
  std::string label = "none";
  if (search.destabilizing) {
    direction = search.probes[*search.destabilizing].direction;
    label = search.probes[*search.destabilizing].label;
  }
  Scenario s{"chain_mismatch",
             "Three agents on a two-edge chain with a small scalar range mismatch along the destabilizing "
             "direction found by sign search (" + label + ").",
             FormationSystem(graph, distances, direction.scaled(epsilon)),
             reference,
             Perturbation{1, 0.1},
             integration(20.0), 1e-6, true, {}, {}};
  s.checks = {equilibrium_found(), verdict_is(Verdict::Unstable)};
  return s;
}

struct Entry {
  const char* name;
  const char* description;
};

constexpr Entry kRegistry[] = {
    {"triangle_rigid", "Minimally rigid triangle, plain gradient law."},
    {"four_cycle_flexible", "Flexible four-cycle without disturbances (zero modes)."},
    {"satellites_square", "Rigid square with four orbiting satellite agents."},
    {"square_four_edges", "Square of side 10 held by four edges and perpendicular biases."},
    {"square_four_edges_mirrored", "Same with sign-flipped perpendicular terms (mirrored square)."},
    {"chain_mismatch", "Two-edge chain destabilized by an arbitrarily small mismatch."},
};

}  // namespace

Eigen::VectorXd perturb(const Eigen::VectorXd& reference, const Perturbation& perturbation) {
  std::mt19937_64 rng(perturbation.seed);
  Eigen::VectorXd out = reference;
  for (Eigen::Index i = 0; i < reference.size() / 2; ++i) {
    const double r = perturbation.radius * std::sqrt(unit_uniform(rng));
    const double theta = 2.0 * std::numbers::pi * unit_uniform(rng);
    out[2 * i] += r * std::cos(theta);
    out[2 * i + 1] += r * std::sin(theta);
  }
  return out;
}

Eigen::VectorXd Scenario::initial_positions() const {
  return perturbation ? perturb(reference, *perturbation) : reference;
}

std::vector<ScenarioInfo> list_scenarios() {
  std::vector<ScenarioInfo> out;
  for (const Entry& e : kRegistry) out.push_back({e.name, e.description});
  return out;
}

Scenario make_scenario(std::string_view name, const ScenarioOverrides& overrides) {
  const double epsilon = overrides.epsilon.value_or(1e-3);
  if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon override must be positive");
  Scenario s = [&]() -> Scenario {
    if (name == "triangle_rigid") return triangle_rigid();
    if (name == "four_cycle_flexible") return four_cycle_flexible();
    if (name == "satellites_square") return satellites_square();
    if (name == "square_four_edges") return square_four_edges(false);
    if (name == "square_four_edges_mirrored") return square_four_edges(true);
    if (name == "chain_mismatch") return chain_mismatch(epsilon);
    throw Error(ErrorKind::InvalidArgument, "unknown scenario '" + std::string(name) + "'");
  }();
  if (overrides.dt) s.integration.dt = *overrides.dt;
  if (overrides.t_final) s.integration.t_final = *overrides.t_final;
  if (overrides.seed && s.perturbation) s.perturbation->seed = *overrides.seed;
  s.integration.validate();
  return s;
}

bool ScenarioResult::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckOutcome& c) { return c.passed; });
}

ScenarioResult run_scenario(const Scenario& scenario) {
  ScenarioResult result{scenario, {}, {}, {}, {}, {}, "skipped", {}};
  const FormationSystem& system = scenario.system;

  // Virtual completion at the reference, when the real edges allow one.
  const RigidityInfo info = classify_rigidity(system.graph, scenario.reference, scenario.stability.rank_tol);
  if (info.cls == RigidityClass::Flexible && info.rank == system.graph.edge_count()) {
    result.augmentation = augment_to_rigid(system.graph, scenario.reference, scenario.stability.rank_tol);
  } else if (info.cls == RigidityClass::MinimallyInfinitesimallyRigid) {
    result.augmentation = VirtualAugmentation{{}, Eigen::VectorXd(0)};
  }
  const VirtualAugmentation* aug = result.augmentation ? &*result.augmentation : nullptr;

  try {
    result.trajectory = simulate(system, scenario.initial_positions(), scenario.integration, aug);
  } catch (const DivergenceError& err) {
    result.trajectory = err.partial();
    result.diverged_at = err.last_finite_time();
  }
  if (!result.diverged_at && result.trajectory.size() >= 3) {
    result.steady_state = detect_steady_state(result.trajectory, system.graph, aug, scenario.speed_tolerance);
  }

  if (scenario.analyze_stability) {
    if (aug == nullptr) {
      result.stability_status = "not-applicable";
    } else {
      try {
        result.stability = analyze_stability(system, *aug, scenario.reference, scenario.stability);
        result.stability_status = "ok";
      } catch (const Error& err) {
        result.stability_status = std::string(to_string(err.kind()));
      }
    }
  }

  for (const ScenarioCheck& check : scenario.checks) {
    CheckOutcome outcome = check.evaluate(result);
    outcome.name = check.name;
    result.checks.push_back(std::move(outcome));
  }
  return result;
}

ScenarioResult run_scenario(std::string_view name, const ScenarioOverrides& overrides) {
  return run_scenario(make_scenario(name, overrides));
}

}  // namespace flexform
