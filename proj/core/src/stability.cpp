#include "flexform/stability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <string>

#include "flexform/integrate.hpp"

namespace flexform {
namespace {

int full_rank(const FormationGraph& graph) { return 2 * graph.agent_count() - 3; }

void require_complete(const FormationGraph& graph, const VirtualAugmentation& augmentation) {
  if (graph.edge_count() + augmentation.size() != full_rank(graph)) {
    throw Error(ErrorKind::Precondition,
                "real plus virtual edges must number 2n-3 = " + std::to_string(full_rank(graph)) + ", got " +
                    std::to_string(graph.edge_count() + augmentation.size()));
  }
  if (augmentation.distances.size() != augmentation.size()) {
    throw Error(ErrorKind::DimensionMismatch, "virtual distance count does not match the virtual edges");
  }
}

// Central-difference Jacobian of a map R^N -> R^M.
template <typename Map>
Eigen::MatrixXd central_difference(const Map& map, const Eigen::VectorXd& x, double step) {
  const Eigen::VectorXd f0 = map(x);
  Eigen::MatrixXd jac(f0.size(), x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    probe[j] = x[j] + step;
    const Eigen::VectorXd plus = map(probe);
    probe[j] = x[j] - step;
    const Eigen::VectorXd minus = map(probe);
    probe[j] = x[j];
    jac.col(j) = (plus - minus) / (2.0 * step);
  }
  return jac;
}

double largest_singular_value(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()[0];
}

std::vector<std::pair<int, int>> edge_key(const VirtualAugmentation& aug) {
  std::vector<std::pair<int, int>> key;
  for (const Edge& e : aug.edges) key.emplace_back(std::min(e.tail, e.head), std::max(e.tail, e.head));
  std::sort(key.begin(), key.end());
  return key;
}

}  // namespace

Eigen::VectorXd AugmentedError::stacked() const {
  Eigen::VectorXd out(real.size() + virtual_part.size());
  out << real, virtual_part;
  return out;
}

AugmentedError augmented_error(const FormationGraph& graph, const VirtualAugmentation& augmentation,
                               const DistanceSpec& distances, const Eigen::VectorXd& positions) {
  require_configuration(graph, positions);
  if (augmentation.distances.size() != augmentation.size()) {
    throw Error(ErrorKind::DimensionMismatch, "virtual distance count does not match the virtual edges");
  }
  AugmentedError out;
  out.real = edge_errors(relative_positions(graph, positions), distances);
  out.virtual_part.resize(augmentation.size());
  for (int k = 0; k < augmentation.size(); ++k) {
    const Edge& e = augmentation.edges[static_cast<std::size_t>(k)];
    const double dk = augmentation.distances[k];
    out.virtual_part[k] = (agent_position(positions, e.tail) - agent_position(positions, e.head)).squaredNorm() - dk * dk;
  }
  return out;
}

Eigen::MatrixXd augmented_rigidity_matrix(const FormationGraph& graph, const VirtualAugmentation& augmentation,
                                          const Eigen::VectorXd& positions) {
  require_configuration(graph, positions);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(graph.edge_count() + augmentation.size(), 2 * graph.agent_count());
  const auto put_row = [&](int row, const Edge& e) {
    const Eigen::Vector2d zk = agent_position(positions, e.tail) - agent_position(positions, e.head);
    r.block<1, 2>(row, 2 * e.tail) = zk.transpose();
    r.block<1, 2>(row, 2 * e.head) = -zk.transpose();
  };
  for (int k = 0; k < graph.edge_count(); ++k) put_row(k, graph.edge(k));
  for (int k = 0; k < augmentation.size(); ++k) {
    put_row(graph.edge_count() + k, augmentation.edges[static_cast<std::size_t>(k)]);
  }
  return r;
}

Eigen::VectorXd augmented_error_rate(const FormationGraph& graph, const VirtualAugmentation& augmentation,
                                     const VectorField& field, const Eigen::VectorXd& positions) {
  const Eigen::VectorXd velocity = field(positions);
  if (velocity.size() != positions.size()) {
    throw Error(ErrorKind::DimensionMismatch, "field returned a vector of the wrong length");
  }
  return 2.0 * augmented_rigidity_matrix(graph, augmentation, positions) * velocity;
}

Eigen::VectorXd augmented_error_rate(const FormationSystem& system, const VirtualAugmentation& augmentation,
                                     const Eigen::VectorXd& positions) {
  return 2.0 * augmented_rigidity_matrix(system.graph, augmentation, positions) * system.velocity(positions);
}

double error_rate_scale(const FormationSystem& system) {
  const double d = std::max(1.0, system.distances.max());
  return d * d * d * d;
}

namespace {

std::string format_residual(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", r);
  return buf;
}

}  // namespace

EquilibriumNotFound::EquilibriumNotFound(double best_residual, Eigen::VectorXd best_positions)
    : Error(ErrorKind::EquilibriumNotFound,
            "no rest point of the augmented error dynamics found (best normalized residual " +
                format_residual(best_residual) + ")"),
      best_residual_(best_residual),
      best_positions_(std::move(best_positions)) {}

Equilibrium find_error_equilibrium(const FormationSystem& system, const VirtualAugmentation& augmentation,
                                   const Eigen::VectorXd& initial, const EquilibriumOptions& options) {
  require_configuration(system.graph, initial);
  require_complete(system.graph, augmentation);
  const double scale = error_rate_scale(system);
  const auto rate = [&](const Eigen::VectorXd& p) { return augmented_error_rate(system, augmentation, p); };
  const auto residual = [&](const Eigen::VectorXd& p) { return rate(p).norm() / scale; };

  Equilibrium out;
  Eigen::VectorXd p = initial;
  double best = residual(p);

  // Flow phase.
  if (best >= options.residual_tol && options.horizon > 0.0) {
    IntegrationParams params;
    params.dt = options.dt;
    params.t_final = std::max(options.horizon, options.dt);
    params.record_stride = std::max(1, options.check_stride);
    try {
      const Trajectory traj = integrate(
          [&](const Eigen::VectorXd& x) { return system.velocity(x); }, initial, params,
          [&](double, const Eigen::VectorXd& x) { return residual(x) < options.residual_tol; });
      const double flowed = residual(traj.final_state());
      out.integrated_time = traj.times.back();
      if (flowed < best) {
        best = flowed;
        p = traj.final_state();
      }
    } catch (const DivergenceError&) {
      // Keep the initial guess for the refinement phase.
    }
  }

  // Damped least-squares refinement.
  Eigen::VectorXd r = rate(p);
  double lambda = 1e-3;
  int iter = 0;
  while (r.norm() / scale >= options.residual_tol && iter < options.max_refine_iterations) {
    ++iter;
    const double h = options.fd_step * (1.0 + p.cwiseAbs().maxCoeff());
    const Eigen::MatrixXd jac = central_difference(rate, p, h);
    const Eigen::MatrixXd normal = jac * jac.transpose();
    const double diag = std::max(normal.diagonal().maxCoeff(), 1e-300);
    bool improved = false;
    while (lambda < 1e10) {
      const Eigen::MatrixXd damped =
          normal + lambda * diag * Eigen::MatrixXd::Identity(normal.rows(), normal.cols());
      const Eigen::VectorXd y = damped.ldlt().solve(-r);
      const Eigen::VectorXd candidate = p + jac.transpose() * y;
      if (!candidate.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd r_candidate = rate(candidate);
      if (r_candidate.norm() < r.norm()) {
        p = candidate;
        r = r_candidate;
        lambda = std::max(lambda * 0.1, 1e-14);
        improved = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) break;
  }
  out.refine_iterations = iter;
  out.residual = r.norm() / scale;
  out.positions = p;
  if (!(out.residual < options.residual_tol)) {
    throw EquilibriumNotFound(out.residual, std::move(out.positions));
  }
  return out;
}

Eigen::MatrixXd augmented_jacobian(const FormationSystem& system, const VirtualAugmentation& augmentation,
                                   const Eigen::VectorXd& positions, double fd_step, double rank_tol) {
  require_configuration(system.graph, positions);
  require_complete(system.graph, augmentation);
  const Eigen::MatrixXd r_aug = augmented_rigidity_matrix(system.graph, augmentation, positions);
  const int rank = numerical_rank(r_aug, rank_tol);
  if (rank != full_rank(system.graph)) {
    throw Error(ErrorKind::NonGenericEquilibrium,
                "augmented rigidity matrix has rank " + std::to_string(rank) + " < " +
                    std::to_string(full_rank(system.graph)) + " at the equilibrium");
  }
  const double h = fd_step * (1.0 + positions.cwiseAbs().maxCoeff());
  const Eigen::MatrixXd d_rate = central_difference(
      [&](const Eigen::VectorXd& p) { return augmented_error_rate(system, augmentation, p); }, positions, h);
  const Eigen::MatrixXd pinv = (2.0 * r_aug).completeOrthogonalDecomposition().pseudoInverse();
  return d_rate * pinv;
}

const char* to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::AsymptoticallyStable: return "AsymptoticallyStable";
    case Verdict::MarginalWithZeroModes: return "MarginalWithZeroModes";
    case Verdict::Unstable: return "Unstable";
  }
  return "MarginalWithZeroModes";
}

StabilityReport eigen_analysis(const Eigen::MatrixXd& jacobian, double zero_tol, int real_edge_count) {
  if (jacobian.rows() != jacobian.cols()) {
    throw Error(ErrorKind::InvalidArgument, "eigen analysis needs a square matrix");
  }
  if (!jacobian.allFinite()) throw Error(ErrorKind::AnalysisFailed, "Jacobian has non-finite entries");
  StabilityReport report;
  const double sigma_max = largest_singular_value(jacobian);
  report.threshold = zero_tol * sigma_max;

  if (jacobian.size() > 0) {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(jacobian, false);
    if (solver.info() != Eigen::Success) throw Error(ErrorKind::AnalysisFailed, "eigenvalue solver did not converge");
    const Eigen::VectorXcd values = solver.eigenvalues();
    report.eigenvalues.assign(values.data(), values.data() + values.size());
    std::sort(report.eigenvalues.begin(), report.eigenvalues.end(),
              [](const std::complex<double>& a, const std::complex<double>& b) {
                return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
              });
  }

  bool all_negative = true;
  for (const auto& lambda : report.eigenvalues) {
    if (std::abs(lambda) <= report.threshold) ++report.zero_count;
    if (lambda.real() > report.threshold) ++report.unstable_count;
    if (!(lambda.real() < -report.threshold)) all_negative = false;
  }
  if (report.unstable_count > 0) {
    report.verdict = Verdict::Unstable;
  } else if (all_negative) {
    report.verdict = Verdict::AsymptoticallyStable;
  } else {
    report.verdict = Verdict::MarginalWithZeroModes;
  }
  if (!report.eigenvalues.empty()) {
    report.raw_max_real_part = report.eigenvalues.front().real();
    report.max_real_part =
        std::abs(report.raw_max_real_part) <= report.threshold ? 0.0 : report.raw_max_real_part;
  }

  if (real_edge_count >= 0 && real_edge_count <= jacobian.cols()) {
    double worst = 0.0;
    for (Eigen::Index c = real_edge_count; c < jacobian.cols(); ++c) worst = std::max(worst, jacobian.col(c).norm());
    report.max_virtual_column_norm = sigma_max > 0.0 ? worst / sigma_max : worst;
    report.block_structure_ok = report.max_virtual_column_norm <= zero_tol;
  }
  return report;
}

StabilityAnalysis analyze_stability(const FormationSystem& system, const VirtualAugmentation& augmentation,
                                    const Eigen::VectorXd& initial, const StabilityOptions& options) {
  StabilityAnalysis out;
  out.equilibrium = find_error_equilibrium(system, augmentation, initial, options.equilibrium);
  out.jacobian = augmented_jacobian(system, augmentation, out.equilibrium.positions, options.fd_step, options.rank_tol);
  out.report = eigen_analysis(out.jacobian, options.zero_tol, system.graph.edge_count());
  return out;
}

ZeroModeCertificate certify_zero_modes(const FormationGraph& graph, const DistanceSpec& distances,
                                       const Eigen::VectorXd& positions, const CertificateOptions& options) {
  const RigidityInfo info = classify_rigidity(graph, positions, options.stability.rank_tol);
  if (info.cls != RigidityClass::Flexible) {
    throw Error(ErrorKind::Precondition, std::string("formation is ") + to_string(info.cls) + ", not flexible");
  }
  const FormationSystem system(graph, distances);
  const VirtualAugmentation first = augment_to_rigid(graph, positions, options.stability.rank_tol);
  const Equilibrium eq = find_error_equilibrium(system, first, positions, options.stability.equilibrium);

  ZeroModeCertificate cert;
  cert.equilibrium = eq.positions;

  std::vector<VirtualAugmentation> augmentations;
  std::vector<std::vector<std::pair<int, int>>> seen;
  const auto consider = [&](VirtualAugmentation aug) {
    auto key = edge_key(aug);
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) return;
    seen.push_back(std::move(key));
    augmentations.push_back(std::move(aug));
  };
  consider(augment_to_rigid(graph, eq.positions, options.stability.rank_tol));

  std::vector<Edge> candidates = lexicographic_non_edges(graph);
  std::mt19937_64 rng(options.seed);
  for (int s = 0; s < options.max_shuffles && static_cast<int>(augmentations.size()) < options.min_augmentations; ++s) {
    for (std::size_t i = candidates.size(); i > 1; --i) {
      std::swap(candidates[i - 1], candidates[static_cast<std::size_t>(rng() % i)]);
    }
    consider(augment_to_rigid(graph, eq.positions, candidates, options.stability.rank_tol));
  }

  cert.pass = !augmentations.empty();
  for (VirtualAugmentation& aug : augmentations) {
    CertificateEntry entry;
    const Eigen::MatrixXd jac =
        augmented_jacobian(system, aug, eq.positions, options.stability.fd_step, options.stability.rank_tol);
    entry.report = eigen_analysis(jac, options.stability.zero_tol, graph.edge_count());
    entry.pass = entry.report.zero_count >= aug.size() && entry.report.block_structure_ok.value_or(false);
    entry.exact = entry.report.zero_count == aug.size();
    entry.augmentation = std::move(aug);
    cert.pass = cert.pass && entry.pass;
    cert.entries.push_back(std::move(entry));
  }
  return cert;
}

}  // namespace flexform
