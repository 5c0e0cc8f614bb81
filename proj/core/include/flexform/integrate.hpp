#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "flexform/dynamics.hpp"
#include "flexform/errors.hpp"
#include "flexform/rigidity.hpp"

namespace flexform {

struct IntegrationParams {
  double dt = 1e-3;
  double t_final = 10.0;
  /// Steps between recorded samples. The initial and final states are always recorded.
  int record_stride = 100;
  /// Any |coordinate| above this aborts the run.
  double divergence_bound = 1e9;

  /// Throws Error(InvalidArgument) unless dt > 0, t_final >= dt and stride >= 1.
  void validate() const;
  [[nodiscard]] long long step_count() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  /// Real edge errors per sample; filled by simulate().
  std::vector<Eigen::VectorXd> errors;
  /// Virtual edge errors per sample; filled when an augmentation is attached.
  std::vector<Eigen::VectorXd> virtual_errors;
  Eigen::VectorXd terminal_velocity;
  /// True if a stop predicate ended the run before t_final.
  bool stopped_early = false;

  [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
  [[nodiscard]] bool empty() const noexcept { return times.empty(); }
  [[nodiscard]] const Eigen::VectorXd& final_state() const { return states.back(); }
};

/// Raised when the state stops being finite or leaves the divergence bound.
/// Carries everything recorded up to the last finite state.
class DivergenceError : public Error {
 public:
  DivergenceError(Trajectory partial, double last_finite_time);

  [[nodiscard]] const Trajectory& partial() const noexcept { return partial_; }
  [[nodiscard]] double last_finite_time() const noexcept { return last_finite_time_; }

 private:
  Trajectory partial_;
  double last_finite_time_;
};

/// Checked at every recorded sample; returning true ends the run.
using StopPredicate = std::function<bool(double t, const Eigen::VectorXd& state)>;

/// Classical fixed-step fourth-order Runge-Kutta.
Trajectory integrate(const VectorField& field, const Eigen::VectorXd& initial, const IntegrationParams& params,
                     const StopPredicate& stop = {});

/// Integrates the closed loop and records e (and the virtual errors when
/// `augmentation` is given) at every sample.
Trajectory simulate(const FormationSystem& system, const Eigen::VectorXd& initial, const IntegrationParams& params,
                    const VirtualAugmentation* augmentation = nullptr);

/// Fills errors / virtual_errors from the recorded states.
void record_errors(Trajectory& trajectory, const FormationSystem& system,
                   const VirtualAugmentation* augmentation);

struct SteadyStateInfo {
  Eigen::VectorXd agent_speeds;
  Eigen::VectorXd edge_lengths;
  /// Signed rate of change of atan2(z_k) in rad/s, counterclockwise positive.
  Eigen::VectorXd angular_rates;
  Eigen::VectorXd virtual_edge_lengths;
  double error_norm = 0.0;
  double max_abs_error = 0.0;
  double virtual_error_norm = 0.0;
  double speed_tolerance = 0.0;
  /// Per agent: terminal speed below speed_tolerance.
  std::vector<bool> stopped;

  [[nodiscard]] bool all_stopped() const;
};

/// Terminal metrics. Angular rates are least-squares slopes of the unwrapped
/// edge angles over the trailing 10% of samples.
SteadyStateInfo detect_steady_state(const Trajectory& trajectory, const FormationGraph& graph,
                                    const VirtualAugmentation* augmentation, double speed_tolerance);

struct DecayFit {
  double rate = 0.0;  ///< fitted exponent, log|e| ~ a - rate * t
  double r_squared = 0.0;
  int points = 0;
};

/// Log-linear fit of a decaying norm over the samples that lie between
/// `upper_fraction` of its peak and `floor`.
DecayFit fit_exponential_decay(const std::vector<double>& times, const std::vector<double>& norms,
                               double floor, double upper_fraction = 0.1);

}  // namespace flexform
