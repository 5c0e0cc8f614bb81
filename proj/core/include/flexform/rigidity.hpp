#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "flexform/graph.hpp"

namespace flexform {

/// Singular values below this fraction of the largest one count as zero.
inline constexpr double kDefaultRankTolerance = 1e-9;

enum class RigidityClass { MinimallyInfinitesimallyRigid, InfinitesimallyRigid, Flexible };

const char* to_string(RigidityClass cls);

struct RigidityInfo {
  RigidityClass cls = RigidityClass::Flexible;
  int rank = 0;
  /// (2n - 3) - rank: local dimension of the set of shape deformations that
  /// keep every controlled distance fixed.
  int flex_dof = 0;
  /// Rank the same graph reaches at random (generic) positions.
  int generic_rank = 0;
  /// Set when the configuration loses rank compared to a generic placement,
  /// e.g. collinear agents.
  bool non_generic = false;
  Eigen::VectorXd singular_values;
};

/// Rank of `m` counting singular values > rel_tol * sigma_max.
int numerical_rank(const Eigen::MatrixXd& m, double rel_tol = kDefaultRankTolerance);

/// Throws Error(DegenerateConfiguration) when all agents coincide.
RigidityInfo classify_rigidity(const FormationGraph& graph, const Eigen::VectorXd& positions,
                               double rank_tol = kDefaultRankTolerance);

/// Analysis-only edges that complete a flexible framework to a minimally
/// infinitesimally rigid one. Distances are measured on the reference
/// configuration so the virtual errors vanish there.
struct VirtualAugmentation {
  std::vector<Edge> edges;
  Eigen::VectorXd distances;

  [[nodiscard]] int size() const noexcept { return static_cast<int>(edges.size()); }
  [[nodiscard]] bool empty() const noexcept { return edges.empty(); }
};

/// All non-edges (i, j), i < j, in lexicographic order.
std::vector<Edge> lexicographic_non_edges(const FormationGraph& graph);

/// Greedy completion using lexicographic candidate order.
VirtualAugmentation augment_to_rigid(const FormationGraph& graph, const Eigen::VectorXd& positions,
                                     double rank_tol = kDefaultRankTolerance);

/// Greedy completion trying `candidates` in the given order; each candidate
/// is kept only if it raises the rank of the augmented rigidity matrix.
VirtualAugmentation augment_to_rigid(const FormationGraph& graph, const Eigen::VectorXd& positions,
                                     std::span<const Edge> candidates,
                                     double rank_tol = kDefaultRankTolerance);

/// Real edges followed by the virtual ones.
FormationGraph augmented_graph(const FormationGraph& graph, const VirtualAugmentation& augmentation);

}  // namespace flexform
