#include "flexform/rigidity.hpp"

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>

#include "flexform/errors.hpp"

namespace flexform {
namespace {

Eigen::VectorXd singular_values(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return {};
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
}

int rank_from_singular_values(const Eigen::VectorXd& sv, double rel_tol) {
  if (sv.size() == 0 || sv[0] <= 0.0) return 0;
  const double cutoff = rel_tol * sv[0];
  return static_cast<int>((sv.array() > cutoff).count());
}

int rank_at(const FormationGraph& graph, const Eigen::VectorXd& positions, double rank_tol) {
  return numerical_rank(rigidity_matrix(graph, relative_positions(graph, positions)), rank_tol);
}

// Generic rank of the graph, estimated at a few fixed pseudo-random placements.
int generic_rank(const FormationGraph& graph, double rank_tol) {
  std::mt19937_64 rng(0x5eedf00dULL);
  int best = 0;
  for (int trial = 0; trial < 3; ++trial) {
    Eigen::VectorXd p(2 * graph.agent_count());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      p[i] = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    }
    best = std::max(best, rank_at(graph, p, rank_tol));
  }
  return best;
}

int full_rank(const FormationGraph& graph) { return 2 * graph.agent_count() - 3; }

}  // namespace

const char* to_string(RigidityClass cls) {
  switch (cls) {
    case RigidityClass::MinimallyInfinitesimallyRigid: return "MinimallyInfinitesimallyRigid";
    case RigidityClass::InfinitesimallyRigid: return "InfinitesimallyRigid";
    case RigidityClass::Flexible: return "Flexible";
  }
  return "Flexible";
}

int numerical_rank(const Eigen::MatrixXd& m, double rel_tol) {
  return rank_from_singular_values(singular_values(m), rel_tol);
}

RigidityInfo classify_rigidity(const FormationGraph& graph, const Eigen::VectorXd& positions,
                               double rank_tol) {
  require_configuration(graph, positions);
  const Eigen::Vector2d first = agent_position(positions, 0);
  bool spread = false;
  for (int i = 1; i < graph.agent_count() && !spread; ++i) {
    spread = (agent_position(positions, i) - first).norm() > 0.0;
  }
  if (!spread) {
    throw Error(ErrorKind::DegenerateConfiguration, "all agents are coincident");
  }

  RigidityInfo info;
  const Eigen::MatrixXd r = rigidity_matrix(graph, relative_positions(graph, positions));
  info.singular_values = singular_values(r);
  info.rank = rank_from_singular_values(info.singular_values, rank_tol);
  info.flex_dof = full_rank(graph) - info.rank;
  info.generic_rank = generic_rank(graph, rank_tol);
  info.non_generic = info.rank < info.generic_rank;

  if (info.rank == full_rank(graph)) {
    info.cls = graph.edge_count() == full_rank(graph) ? RigidityClass::MinimallyInfinitesimallyRigid
                                                     : RigidityClass::InfinitesimallyRigid;
  } else {
    info.cls = RigidityClass::Flexible;
  }
  return info;
}

std::vector<Edge> lexicographic_non_edges(const FormationGraph& graph) {
  std::vector<Edge> out;
  for (int i = 0; i < graph.agent_count(); ++i) {
    for (int j = i + 1; j < graph.agent_count(); ++j) {
      if (!graph.connects(i, j)) out.push_back({i, j});
    }
  }
  return out;
}

VirtualAugmentation augment_to_rigid(const FormationGraph& graph, const Eigen::VectorXd& positions,
                                     double rank_tol) {
  const std::vector<Edge> candidates = lexicographic_non_edges(graph);
  return augment_to_rigid(graph, positions, candidates, rank_tol);
}

VirtualAugmentation augment_to_rigid(const FormationGraph& graph, const Eigen::VectorXd& positions,
                                     std::span<const Edge> candidates, double rank_tol) {
  require_configuration(graph, positions);
  const int target = full_rank(graph);
  const int real_rank = rank_at(graph, positions, rank_tol);
  if (graph.edge_count() > target || real_rank < graph.edge_count()) {
    throw Error(ErrorKind::AugmentationFailed,
                "real edges are not independent at this configuration (rank " + std::to_string(real_rank) +
                    " with " + std::to_string(graph.edge_count()) + " edges)");
  }

  // Rows of the augmented rigidity matrix, grown one accepted edge at a time.
  Eigen::MatrixXd rows = rigidity_matrix(graph, relative_positions(graph, positions));
  int rank = real_rank;
  VirtualAugmentation aug;
  std::vector<double> lengths;
  for (const Edge& candidate : candidates) {
    if (rank == target) break;
    if (graph.connects(candidate.tail, candidate.head)) continue;
    const bool seen = std::any_of(aug.edges.begin(), aug.edges.end(), [&](const Edge& e) {
      return (e.tail == candidate.tail && e.head == candidate.head) ||
             (e.tail == candidate.head && e.head == candidate.tail);
    });
    if (seen) continue;

    const Eigen::Vector2d zk = agent_position(positions, candidate.tail) - agent_position(positions, candidate.head);
    Eigen::MatrixXd grown(rows.rows() + 1, rows.cols());
    grown.topRows(rows.rows()) = rows;
    grown.bottomRows(1).setZero();
    grown.block<1, 2>(rows.rows(), 2 * candidate.tail) = zk.transpose();
    grown.block<1, 2>(rows.rows(), 2 * candidate.head) = -zk.transpose();
    const int grown_rank = numerical_rank(grown, rank_tol);
    if (grown_rank > rank) {
      rows = std::move(grown);
      rank = grown_rank;
      aug.edges.push_back(candidate);
      lengths.push_back(zk.norm());
    }
  }
  if (rank != target) {
    throw Error(ErrorKind::AugmentationFailed,
                "could not reach rank " + std::to_string(target) + " (stuck at " + std::to_string(rank) +
                    "); the configuration is not generic");
  }
  aug.distances = Eigen::VectorXd::Map(lengths.data(), static_cast<Eigen::Index>(lengths.size()));
  return aug;
}

FormationGraph augmented_graph(const FormationGraph& graph, const VirtualAugmentation& augmentation) {
  return graph.with_edges(augmentation.edges);
}

}  // namespace flexform
