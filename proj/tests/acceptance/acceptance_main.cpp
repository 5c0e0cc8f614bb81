// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "flexform/errors.hpp"
#include "flexform/scenarios.hpp"
#include "flexform/stability.hpp"
#include "flexform/sweep.hpp"
#include "support.hpp"

#if FLEXFORM_WITH_CLI
#include "cli/serialize.hpp"
#endif

namespace {

using namespace flexform;

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail.clear();
    pass = false;
    detail += (detail.empty() ? "" : "; ") + why;
  }
};

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string failed_checks(const ScenarioResult& r) {
  std::string s;
  for (const CheckOutcome& c : r.checks) {
    if (!c.passed) s += (s.empty() ? "" : ", ") + c.name + "=" + fmt_double(c.value);
  }
  if (r.diverged_at) s += " diverged";
  return s;
}

Outcome rigid_baseline() {
  Outcome out;
  double worst_error = 0.0;
  double worst_re = -INFINITY;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    ScenarioOverrides o;
    o.seed = seed;
    o.dt = 1e-3;
    o.t_final = 50.0;
    const ScenarioResult r = run_scenario("triangle_rigid", o);
    if (!r.all_passed()) out.fail("seed " + std::to_string(seed) + ": " + failed_checks(r));
    if (r.steady_state) worst_error = std::max(worst_error, r.steady_state->max_abs_error);
    if (r.stability) worst_re = std::max(worst_re, r.stability->report.raw_max_real_part);
    if (!r.stability || r.stability->report.raw_max_real_part >= 0.0) out.fail("seed " + std::to_string(seed) + ": Re >= 0");
  }
  if (out.pass) out.detail = "10 seeds, max|e| " + fmt_double(worst_error) + ", max Re " + fmt_double(worst_re);
  return out;
}

Outcome zero_mode_certificate() {
  Outcome out;
  std::mt19937_64 rng(2024);
  const std::pair<const char*, FormationGraph> graphs[] = {
      {"4-cycle", testing::cycle(4)}, {"5-cycle", testing::cycle(5)}, {"4-path", testing::path(4)}};
  std::string summary;
  for (const auto& [name, graph] : graphs) {
    const int n = graph.agent_count();
    const Eigen::VectorXd p = testing::regular_polygon(n, 2.0) + 0.3 * testing::random_configuration(n, rng);
    const DistanceSpec d = testing::realized_distances(graph, p);
    try {
      const ZeroModeCertificate cert = certify_zero_modes(graph, d, p);
      int exact = 0;
      double worst_column = 0.0;
      for (const CertificateEntry& e : cert.entries) {
        exact += e.exact ? 1 : 0;
        worst_column = std::max(worst_column, e.report.max_virtual_column_norm);
        if (!e.exact || !e.pass) out.fail(std::string(name) + ": zero_count " + std::to_string(e.report.zero_count) +
                                          " vs " + std::to_string(e.augmentation.size()));
      }
      if (!cert.pass || cert.entries.empty()) out.fail(std::string(name) + ": certificate failed");
      summary += std::string(summary.empty() ? "" : ", ") + name + " " + std::to_string(exact) + "/" +
                 std::to_string(cert.entries.size()) + " (col " + fmt_double(worst_column) + ")";
    } catch (const Error& e) {
      out.fail(std::string(name) + ": " + e.what());
    }
  }
  if (out.pass) out.detail = summary;
  return out;
}

Outcome square_four_edges() {
  Outcome out;
  double worst_error = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    ScenarioOverrides o;
    o.seed = seed;
    const ScenarioResult r = run_scenario("square_four_edges", o);
    if (!r.all_passed()) out.fail("seed " + std::to_string(seed) + ": " + failed_checks(r));
    if (r.steady_state) worst_error = std::max(worst_error, r.steady_state->max_abs_error);
  }
  if (out.pass) out.detail = "10 seeds, max|e| " + fmt_double(worst_error) + ", virtual diagonal 10*sqrt(2)";
  return out;
}

Outcome satellites() {
  Outcome out;
  double worst_rate = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ScenarioOverrides o;
    o.seed = seed;
    const ScenarioResult r = run_scenario("satellites_square", o);
    if (!r.all_passed()) out.fail("seed " + std::to_string(seed) + ": " + failed_checks(r));
    if (r.steady_state) {
      for (int k = 5; k < 9; ++k) {
        worst_rate = std::max(worst_rate, std::abs(std::abs(r.steady_state->angular_rates[k]) - 1.0));
      }
    }
  }
  if (out.pass) out.detail = "5 seeds, worst |rate - 1| " + fmt_double(worst_rate);
  return out;
}

Outcome chain_sweep() {
  Outcome out;
  const Scenario chain = make_scenario("chain_mismatch");
  const FormationGraph& g = chain.system.graph;
  const VirtualAugmentation aug = augment_to_rigid(g, chain.reference);
  const DirectionSearch search = search_mismatch_directions(g, chain.system.distances, aug, chain.reference);
  if (!search.destabilizing || !search.stabilizing) {
    out.fail("no destabilizing direction found");
    return out;
  }
  const std::vector<double> eps{1e-1, 1e-2, 1e-3, 1e-4};
  const DirectionProbe& bad = search.probes[*search.destabilizing];
  const DirectionProbe& good = search.probes[*search.stabilizing];
  const SweepResult up = mismatch_sweep(g, chain.system.distances, aug, bad.direction, eps, chain.reference);
  const SweepResult down = mismatch_sweep(g, chain.system.distances, aug, good.direction, eps, chain.reference);
  for (const SweepRow& row : up.rows) {
    if (!row.ok() || !(row.max_real_part > 0.0)) out.fail(bad.label + " eps " + fmt_double(row.epsilon) + " not unstable");
  }
  for (const SweepRow& row : down.rows) {
    if (!row.ok() || !(row.max_real_part < 0.0)) out.fail(good.label + " eps " + fmt_double(row.epsilon) + " not stable");
  }
  if (!up.scaling_exponent || std::abs(*up.scaling_exponent - 1.0) > 0.2) {
    out.fail("exponent " + (up.scaling_exponent ? fmt_double(*up.scaling_exponent) : std::string("n/a")));
  }
  if (out.pass) {
    out.detail = bad.label + " unstable at all eps, exponent " + fmt_double(*up.scaling_exponent) + "; " + good.label +
                 " stable at all eps";
  }
  return out;
}

// Central difference of the recorded error signal against the analytic rate.
Outcome oracle_equivalences() {
  Outcome out;
  std::mt19937_64 rng(77);
  double worst_rate = 0.0;
  double worst_plain = 0.0;
  double worst_gradient = 0.0;
  for (const ScenarioInfo& info : list_scenarios()) {
    const Scenario s = make_scenario(info.name);
    const FormationGraph& g = s.system.graph;
    const int n = g.agent_count();
    const VirtualAugmentation aug = augment_to_rigid(g, s.reference);
    const double scale = s.system.distances.min();
    const bool undisturbed = s.system.disturbances.is_zero();
    const VectorField field = make_field(s.system);
    IntegrationParams params;
    // Rates grow like d^2 per unit error; keep the difference step proportionate.
    const double d_max = std::max(1.0, s.system.distances.max());
    params.dt = 1e-4 / (d_max * d_max);
    params.t_final = 200.0 * params.dt;
    params.record_stride = 1;
    for (int trial = 0; trial < 5; ++trial) {
      const Eigen::VectorXd p0 = s.reference + 0.2 * scale * testing::random_configuration(n, rng);
      const Trajectory traj = simulate(s.system, p0, params, &aug);
      for (std::size_t i = 50; i + 1 < traj.size(); i += 75) {
        Eigen::VectorXd fd(traj.errors[i].size() + traj.virtual_errors[i].size());
        fd << traj.errors[i + 1] - traj.errors[i - 1], traj.virtual_errors[i + 1] - traj.virtual_errors[i - 1];
        fd /= 2.0 * params.dt;
        const Eigen::VectorXd analytic = augmented_error_rate(g, aug, field, traj.states[i]);
        worst_rate = std::max(worst_rate, testing::relative_error(fd, analytic));
        if (undisturbed) {
          const Eigen::MatrixXd r = rigidity_matrix(g, relative_positions(g, traj.states[i]));
          const Eigen::VectorXd plain = -2.0 * r * r.transpose() * traj.errors[i];
          worst_plain = std::max(worst_plain, testing::relative_error(fd.head(g.edge_count()), plain));
        }
      }
      const auto potential = [&](const Eigen::VectorXd& p) {
        return Eigen::VectorXd::Constant(1, formation_potential(g, s.system.distances, p));
      };
      const Eigen::VectorXd grad = testing::numeric_jacobian(potential, p0, 1e-5 * scale).row(0).transpose();
      worst_gradient = std::max(worst_gradient,
                                testing::relative_error(gradient_field(g, s.system.distances, p0), -0.25 * grad));
    }
  }
  if (worst_rate > 1e-5) out.fail("augmented rate rel err " + fmt_double(worst_rate));
  if (worst_plain > 1e-5) out.fail("-2RR^T e rel err " + fmt_double(worst_plain));
  if (worst_gradient > 1e-6) out.fail("gradient rel err " + fmt_double(worst_gradient));
  if (out.pass) {
    out.detail = "rate " + fmt_double(worst_rate) + ", -2RR^T e " + fmt_double(worst_plain) + ", gradient " +
                 fmt_double(worst_gradient);
  }
  return out;
}

std::vector<std::string> rendered_outputs(const ScenarioResult& r) {
#if FLEXFORM_WITH_CLI
  return {cli::trajectory_csv(r.trajectory, r.scenario.system.graph), cli::scenario_result_json(r).dump(2)};
#else
  std::vector<std::string> out;
  for (const Eigen::VectorXd& s : r.trajectory.states) {
    out.emplace_back(reinterpret_cast<const char*>(s.data()), sizeof(double) * static_cast<std::size_t>(s.size()));
  }
  return out;
#endif
}

Outcome determinism() {
  Outcome out;
  int compared = 0;
  for (const ScenarioInfo& info : list_scenarios()) {
    ScenarioOverrides o;
    o.seed = 11;
    const std::vector<std::string> a = rendered_outputs(run_scenario(info.name, o));
    const std::vector<std::string> b = rendered_outputs(run_scenario(info.name, o));
    if (a != b) out.fail(info.name + " differs");
    ++compared;
  }
  if (out.pass) out.detail = std::to_string(compared) + " scenarios byte-identical across repeated runs";
  return out;
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {1, "rigid triangle baseline", 5.0, rigid_baseline},
      {2, "zero-mode certificate", 10.0, zero_mode_certificate},
      {3, "square from four edges", 20.0, square_four_edges},
      {4, "satellites around a rigid square", 20.0, satellites},
      {5, "small-mismatch destabilization", 30.0, chain_sweep},
      {6, "finite-difference oracles", 10.0, oracle_equivalences},
      {7, "determinism", 0.0, determinism},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome.fail(std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0.0 && seconds > c.budget_s) {
      outcome.fail("runtime " + fmt_double(seconds) + " s over " + fmt_double(c.budget_s) + " s");
    }
    failures += outcome.pass ? 0 : 1;
    std::printf("%s %d %s (%.2f s): %s\n", outcome.pass ? "PASS" : "FAIL", c.id, c.name, seconds,
                outcome.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
