#include "flexform/integrate.hpp"

#include <cmath>
#include <string>

#include "flexform/stability.hpp"

namespace flexform {
namespace {

bool within_bound(const Eigen::VectorXd& x, double bound) {
  return x.allFinite() && (x.size() == 0 || x.cwiseAbs().maxCoeff() <= bound);
}

}  // namespace

void IntegrationParams::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
  if (!(t_final >= dt) || !std::isfinite(t_final)) {
    throw Error(ErrorKind::InvalidArgument, "t_final must be at least dt");
  }
  if (record_stride < 1) throw Error(ErrorKind::InvalidArgument, "record stride must be >= 1");
  if (!(divergence_bound > 0.0)) throw Error(ErrorKind::InvalidArgument, "divergence bound must be positive");
}

long long IntegrationParams::step_count() const { return std::llround(t_final / dt); }

DivergenceError::DivergenceError(Trajectory partial, double last_finite_time)
    : Error(ErrorKind::Divergence, "state left the finite region after t = " + std::to_string(last_finite_time)),
      partial_(std::move(partial)),
      last_finite_time_(last_finite_time) {}

Trajectory integrate(const VectorField& field, const Eigen::VectorXd& initial, const IntegrationParams& params,
                     const StopPredicate& stop) {
  params.validate();
  Eigen::VectorXd x = initial;
  Trajectory traj;
  if (!within_bound(x, params.divergence_bound)) {
    throw DivergenceError(std::move(traj), 0.0);
  }

  const long long steps = params.step_count();
  const double h = params.dt;
  traj.times.push_back(0.0);
  traj.states.push_back(x);
  if (stop && stop(0.0, x)) {
    traj.stopped_early = true;
    traj.terminal_velocity = field(x);
    return traj;
  }

  for (long long step = 1; step <= steps; ++step) {
    const Eigen::VectorXd k1 = field(x);
    const Eigen::VectorXd k2 = field(x + 0.5 * h * k1);
    const Eigen::VectorXd k3 = field(x + 0.5 * h * k2);
    const Eigen::VectorXd k4 = field(x + h * k3);
    Eigen::VectorXd next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    const double t = static_cast<double>(step) * h;
    if (!within_bound(next, params.divergence_bound)) {
      const double last = static_cast<double>(step - 1) * h;
      if (traj.times.back() != last) {
        traj.times.push_back(last);
        traj.states.push_back(x);
      }
      throw DivergenceError(std::move(traj), last);
    }
    x = std::move(next);

    if (step % params.record_stride == 0 || step == steps) {
      traj.times.push_back(t);
      traj.states.push_back(x);
      if (stop && stop(t, x)) {
        traj.stopped_early = step != steps;
        break;
      }
    }
  }
  traj.terminal_velocity = field(x);
  return traj;
}

void record_errors(Trajectory& trajectory, const FormationSystem& system,
                   const VirtualAugmentation* augmentation) {
  trajectory.errors.clear();
  trajectory.virtual_errors.clear();
  for (const Eigen::VectorXd& p : trajectory.states) {
    if (augmentation != nullptr) {
      const AugmentedError ae = augmented_error(system.graph, *augmentation, system.distances, p);
      trajectory.errors.push_back(ae.real);
      trajectory.virtual_errors.push_back(ae.virtual_part);
    } else {
      trajectory.errors.push_back(edge_errors(relative_positions(system.graph, p), system.distances));
    }
  }
}

Trajectory simulate(const FormationSystem& system, const Eigen::VectorXd& initial, const IntegrationParams& params,
                    const VirtualAugmentation* augmentation) {
  require_configuration(system.graph, initial);
  const VectorField field = [&system](const Eigen::VectorXd& p) { return system.velocity(p); };
  try {
    Trajectory traj = integrate(field, initial, params);
    record_errors(traj, system, augmentation);
    return traj;
  } catch (DivergenceError& err) {
    Trajectory partial = err.partial();
    record_errors(partial, system, augmentation);
    throw DivergenceError(std::move(partial), err.last_finite_time());
  }
}

}  // namespace flexform
