#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flexform/stability.hpp"

namespace flexform {

/// Rotates and translates `positions` (no reflection) to best match `target`
/// in the least-squares sense.
Eigen::VectorXd align_rigid(const Eigen::VectorXd& positions, const Eigen::VectorXd& target);

struct SweepRow {
  double epsilon = 0.0;
  /// "ok" or the error kind that stopped this row.
  std::string status = "ok";
  double max_real_part = 0.0;
  Verdict verdict = Verdict::MarginalWithZeroModes;
  int zero_count = 0;
  /// |p*(eps) - p*(0)| after rigid alignment.
  double equilibrium_shift = 0.0;
  double residual = 0.0;

  [[nodiscard]] bool ok() const { return status == "ok"; }
};

struct SweepResult {
  std::vector<SweepRow> rows;
  /// Sign of the critical real part over the successful rows (+1, -1 or 0).
  int critical_sign = 0;
  bool sign_constant = false;
  /// Slope of log|max Re lambda| against log eps.
  std::optional<double> scaling_exponent;
};

/// For each eps: equilibrium of the system disturbed by eps * direction,
/// its Jacobian and verdict. Per-row failures are recorded in the row status.
/// Throws Error(InvalidArgument) unless the epsilons are positive and
/// strictly descending.
SweepResult mismatch_sweep(const FormationGraph& graph, const DistanceSpec& distances,
                           const VirtualAugmentation& augmentation, const DisturbanceSet& direction,
                           std::span<const double> epsilons, const Eigen::VectorXd& reference,
                           const StabilityOptions& options = {});

struct DirectionProbe {
  std::string label;
  DisturbanceSet direction;
  std::string status = "ok";
  double max_real_part = 0.0;
  Verdict verdict = Verdict::MarginalWithZeroModes;
};

struct DirectionSearch {
  std::vector<DirectionProbe> probes;
  /// Probe with the largest positive critical real part, if any.
  std::optional<std::size_t> destabilizing;
  /// The probe with the opposite sign of the destabilizing one.
  std::optional<std::size_t> stabilizing;
};

/// Tries a unit scalar mismatch of each sign on the tail of every edge at
/// `probe_epsilon` and ranks them by the critical real part at the perturbed
/// equilibrium near `reference`.
DirectionSearch search_mismatch_directions(const FormationGraph& graph, const DistanceSpec& distances,
                                           const VirtualAugmentation& augmentation,
                                           const Eigen::VectorXd& reference, double probe_epsilon = 1e-2,
                                           const StabilityOptions& options = {});

}  // namespace flexform
