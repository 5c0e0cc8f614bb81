#include "flexform/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace flexform {
namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit fit;
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = (sxx > 0.0 && syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

double unwrap_step(double previous, double angle) {
  double delta = angle - previous;
  while (delta > std::numbers::pi) delta -= 2.0 * std::numbers::pi;
  while (delta < -std::numbers::pi) delta += 2.0 * std::numbers::pi;
  return previous + delta;
}

}  // namespace

bool SteadyStateInfo::all_stopped() const {
  return std::all_of(stopped.begin(), stopped.end(), [](bool s) { return s; });
}

SteadyStateInfo detect_steady_state(const Trajectory& trajectory, const FormationGraph& graph,
                                    const VirtualAugmentation* augmentation, double speed_tolerance) {
  if (trajectory.size() < 3) {
    throw Error(ErrorKind::Precondition, "trajectory too short to estimate rates (need at least 3 samples)");
  }
  const Eigen::VectorXd& p = trajectory.final_state();
  require_configuration(graph, p);

  SteadyStateInfo info;
  info.speed_tolerance = speed_tolerance;
  const int n = graph.agent_count();
  info.agent_speeds.resize(n);
  for (int i = 0; i < n; ++i) {
    info.agent_speeds[i] = trajectory.terminal_velocity.size() == 2 * n
                               ? trajectory.terminal_velocity.segment<2>(2 * i).norm()
                               : std::numeric_limits<double>::quiet_NaN();
    info.stopped.push_back(info.agent_speeds[i] < speed_tolerance);
  }

  const Eigen::VectorXd z = relative_positions(graph, p);
  info.edge_lengths.resize(graph.edge_count());
  for (int k = 0; k < graph.edge_count(); ++k) info.edge_lengths[k] = z.segment<2>(2 * k).norm();

  const std::size_t total = trajectory.size();
  const std::size_t window = std::max<std::size_t>(2, (total + 9) / 10);
  const std::size_t first = total - window;
  std::vector<double> t(trajectory.times.begin() + static_cast<std::ptrdiff_t>(first), trajectory.times.end());
  info.angular_rates.resize(graph.edge_count());
  for (int k = 0; k < graph.edge_count(); ++k) {
    std::vector<double> angle;
    angle.reserve(window);
    for (std::size_t s = first; s < total; ++s) {
      const Eigen::VectorXd zs = relative_positions(graph, trajectory.states[s]);
      const double raw = std::atan2(zs[2 * k + 1], zs[2 * k]);
      angle.push_back(angle.empty() ? raw : unwrap_step(angle.back(), raw));
    }
    info.angular_rates[k] = fit_line(t, angle).slope;
  }

  if (!trajectory.errors.empty()) {
    info.error_norm = trajectory.errors.back().norm();
    info.max_abs_error = trajectory.errors.back().size() ? trajectory.errors.back().cwiseAbs().maxCoeff() : 0.0;
  }
  if (!trajectory.virtual_errors.empty()) info.virtual_error_norm = trajectory.virtual_errors.back().norm();
  if (augmentation != nullptr) {
    info.virtual_edge_lengths.resize(augmentation->size());
    for (int k = 0; k < augmentation->size(); ++k) {
      const Edge& e = augmentation->edges[static_cast<std::size_t>(k)];
      info.virtual_edge_lengths[k] = (agent_position(p, e.tail) - agent_position(p, e.head)).norm();
    }
  }
  return info;
}

DecayFit fit_exponential_decay(const std::vector<double>& times, const std::vector<double>& norms, double floor,
                               double upper_fraction) {
  DecayFit out;
  if (times.size() != norms.size() || norms.empty()) return out;
  const double peak = *std::max_element(norms.begin(), norms.end());
  const double upper = upper_fraction * peak;
  // Start once the norm first drops below `upper`, stop at the floor.
  std::size_t begin = 0;
  while (begin < norms.size() && norms[begin] > upper) ++begin;
  std::vector<double> t, logn;
  for (std::size_t i = begin; i < norms.size() && norms[i] > floor; ++i) {
    t.push_back(times[i]);
    logn.push_back(std::log(norms[i]));
  }
  out.points = static_cast<int>(t.size());
  if (t.size() < 3) return out;
  const LineFit fit = fit_line(t, logn);
  out.rate = -fit.slope;
  out.r_squared = fit.r_squared;
  return out;
}

}  // namespace flexform
