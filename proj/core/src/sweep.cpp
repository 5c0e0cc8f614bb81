#include "flexform/sweep.hpp"

#include <cmath>

namespace flexform {
namespace {

int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

Eigen::VectorXd align_rigid(const Eigen::VectorXd& positions, const Eigen::VectorXd& target) {
  if (positions.size() != target.size() || positions.size() % 2 != 0) {
    throw Error(ErrorKind::DimensionMismatch, "alignment needs two configurations of equal size");
  }
  const Eigen::Index n = positions.size() / 2;
  const Eigen::Map<const Eigen::Matrix2Xd> src(positions.data(), 2, n);
  const Eigen::Map<const Eigen::Matrix2Xd> dst(target.data(), 2, n);
  const Eigen::Vector2d cs = src.rowwise().mean();
  const Eigen::Vector2d cd = dst.rowwise().mean();
  // Optimal planar rotation angle from the cross-covariance.
  double dot = 0.0, cross = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector2d a = src.col(i) - cs;
    const Eigen::Vector2d b = dst.col(i) - cd;
    dot += a.dot(b);
    cross += a.x() * b.y() - a.y() * b.x();
  }
  const double theta = std::atan2(cross, dot);
  const Eigen::Matrix2d rot = Eigen::Rotation2Dd(theta).toRotationMatrix();
  Eigen::VectorXd out(positions.size());
  for (Eigen::Index i = 0; i < n; ++i) out.segment<2>(2 * i) = rot * (src.col(i) - cs) + cd;
  return out;
}

SweepResult mismatch_sweep(const FormationGraph& graph, const DistanceSpec& distances,
                           const VirtualAugmentation& augmentation, const DisturbanceSet& direction,
                           std::span<const double> epsilons, const Eigen::VectorXd& reference,
                           const StabilityOptions& options) {
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0) || (i > 0 && !(epsilons[i] < epsilons[i - 1]))) {
      throw Error(ErrorKind::InvalidArgument, "sweep epsilons must be positive and strictly descending");
    }
  }
  const FormationSystem base(graph, distances);
  const Eigen::VectorXd unperturbed = find_error_equilibrium(base, augmentation, reference, options.equilibrium).positions;

  SweepResult result;
  for (double eps : epsilons) {
    SweepRow row;
    row.epsilon = eps;
    try {
      const FormationSystem system = base.with_disturbances(direction.scaled(eps));
      const StabilityAnalysis analysis = analyze_stability(system, augmentation, reference, options);
      row.max_real_part = analysis.report.max_real_part;
      row.verdict = analysis.report.verdict;
      row.zero_count = analysis.report.zero_count;
      row.residual = analysis.equilibrium.residual;
      row.equilibrium_shift = (align_rigid(analysis.equilibrium.positions, unperturbed) - unperturbed).norm();
    } catch (const Error& err) {
      row.status = std::string(to_string(err.kind()));
    }
    result.rows.push_back(std::move(row));
  }

  std::vector<double> log_eps, log_re;
  bool first = true;
  result.sign_constant = false;
  for (const SweepRow& row : result.rows) {
    if (!row.ok()) continue;
    const int s = sign_of(row.max_real_part);
    if (first) {
      result.critical_sign = s;
      result.sign_constant = true;
      first = false;
    } else if (s != result.critical_sign) {
      result.sign_constant = false;
    }
    if (row.max_real_part != 0.0) {
      log_eps.push_back(std::log(row.epsilon));
      log_re.push_back(std::log(std::abs(row.max_real_part)));
    }
  }
  if (log_eps.size() >= 2) {
    const auto n = static_cast<double>(log_eps.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < log_eps.size(); ++i) {
      mx += log_eps[i] / n;
      my += log_re[i] / n;
    }
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < log_eps.size(); ++i) {
      sxx += (log_eps[i] - mx) * (log_eps[i] - mx);
      sxy += (log_eps[i] - mx) * (log_re[i] - my);
    }
    if (sxx > 0.0) result.scaling_exponent = sxy / sxx;
  }
  return result;
}

DirectionSearch search_mismatch_directions(const FormationGraph& graph, const DistanceSpec& distances,
                                           const VirtualAugmentation& augmentation,
                                           const Eigen::VectorXd& reference, double probe_epsilon,
                                           const StabilityOptions& options) {
  if (!(probe_epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "probe epsilon must be positive");
  const FormationSystem base(graph, distances);
  DirectionSearch search;
  for (int k = 0; k < graph.edge_count(); ++k) {
    for (double sign : {1.0, -1.0}) {
      DirectionProbe probe;
      probe.label = std::string(sign > 0 ? "+" : "-") + "mu@edge" + std::to_string(k + 1);
      probe.direction = DisturbanceSet(graph.edge_count());
      probe.direction.add_scalar_mismatch(k, sign);
      try {
        const StabilityAnalysis analysis =
            analyze_stability(base.with_disturbances(probe.direction.scaled(probe_epsilon)), augmentation, reference,
                              options);
        probe.max_real_part = analysis.report.max_real_part;
        probe.verdict = analysis.report.verdict;
      } catch (const Error& err) {
        probe.status = std::string(to_string(err.kind()));
      }
      search.probes.push_back(std::move(probe));
    }
  }
  for (std::size_t i = 0; i < search.probes.size(); ++i) {
    const DirectionProbe& p = search.probes[i];
    if (p.status != "ok" || p.verdict != Verdict::Unstable) continue;
    if (!search.destabilizing || p.max_real_part > search.probes[*search.destabilizing].max_real_part) {
      search.destabilizing = i;
    }
  }
  if (search.destabilizing) search.stabilizing = *search.destabilizing ^ 1U;
  return search;
}

}  // namespace flexform
