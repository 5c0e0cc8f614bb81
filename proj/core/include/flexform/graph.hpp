#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace flexform {

/// Oriented edge between two agents, 0-based. The tail is the first agent
/// listed by the user; z_k = p_tail - p_head.
struct Edge {
  int tail = 0;
  int head = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

enum class Endpoint { Tail, Head };

/// Undirected sensing graph with a fixed orientation and ordering of its edges.
/// Immutable after construction.
class FormationGraph {
 public:
  /// Throws Error(InvalidGraph) on self-loops, duplicate unordered pairs,
  /// out-of-range agents or fewer than two agents.
  FormationGraph(int agent_count, std::vector<Edge> edges);

  [[nodiscard]] int agent_count() const noexcept { return agent_count_; }
  [[nodiscard]] int edge_count() const noexcept { return static_cast<int>(edges_.size()); }
  [[nodiscard]] const std::vector<Edge>& edges() const noexcept { return edges_; }
  [[nodiscard]] const Edge& edge(int k) const { return edges_.at(static_cast<std::size_t>(k)); }

  /// True if {i, j} is an edge in either orientation.
  [[nodiscard]] bool connects(int i, int j) const;
  [[nodiscard]] std::vector<int> neighbors(int agent) const;

  /// Graph over the same agents with `extra` appended after the existing edges.
  [[nodiscard]] FormationGraph with_edges(std::span<const Edge> extra) const;

 private:
  int agent_count_;
  std::vector<Edge> edges_;
};

/// Builds a graph from 1-based (tail, head) pairs, the convention used in
/// configuration files. Errors name the offending pair in 1-based form.
FormationGraph build_formation(int agent_count, std::span<const std::pair<int, int>> edges);

/// Positive target distance per edge.
class DistanceSpec {
 public:
  DistanceSpec() = default;
  explicit DistanceSpec(Eigen::VectorXd distances);
  DistanceSpec(std::initializer_list<double> distances);

  [[nodiscard]] int size() const noexcept { return static_cast<int>(values_.size()); }
  [[nodiscard]] double operator[](int k) const { return values_[k]; }
  [[nodiscard]] const Eigen::VectorXd& values() const noexcept { return values_; }
  [[nodiscard]] double max() const { return values_.size() ? values_.maxCoeff() : 0.0; }
  [[nodiscard]] double min() const { return values_.size() ? values_.minCoeff() : 0.0; }

 private:
  Eigen::VectorXd values_;
};

/// n x |E| matrix with +1 at each edge's tail and -1 at its head.
Eigen::MatrixXd incidence_matrix(const FormationGraph& graph);

/// Keeps the tail (or head) entries of the incidence matrix for the edges in
/// `edge_subset` as +1 and zeroes the rest.
Eigen::MatrixXd selector_matrix(const FormationGraph& graph, std::span<const int> edge_subset,
                                Endpoint endpoint);

/// Stacked z_k = p_tail(k) - p_head(k), 2|E| entries.
Eigen::VectorXd relative_positions(const FormationGraph& graph, const Eigen::VectorXd& positions);

/// e_k = |z_k|^2 - d_k^2.
Eigen::VectorXd edge_errors(const Eigen::VectorXd& z, const DistanceSpec& distances);

/// |E| x 2n matrix, half the Jacobian of the squared edge lengths: row k holds
/// z_k^T in the tail block and -z_k^T in the head block.
Eigen::MatrixXd rigidity_matrix(const FormationGraph& graph, const Eigen::VectorXd& z);

/// Clockwise rotation by pi/2: (x, y) -> (y, -x).
inline Eigen::Vector2d perp(const Eigen::Vector2d& v) { return {v.y(), -v.x()}; }

/// Position of `agent` in a stacked configuration.
inline Eigen::Vector2d agent_position(const Eigen::VectorXd& positions, int agent) {
  return positions.segment<2>(2 * agent);
}

void require_configuration(const FormationGraph& graph, const Eigen::VectorXd& positions);

}  // namespace flexform
