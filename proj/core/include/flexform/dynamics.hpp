#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "flexform/graph.hpp"

namespace flexform {

/// Generator of counterclockwise rotations, [[0, -1], [1, 0]].
inline Eigen::Matrix2d rotation_generator() {
  return (Eigen::Matrix2d() << 0.0, -1.0, 1.0, 0.0).finished();
}

/// Matrix form of perp(): P * z == perp(z).
inline Eigen::Matrix2d perp_matrix() { return -rotation_generator(); }

/// Extra velocity terms on the endpoints of one edge: the tail moves by
/// -tail * z_k and the head by -head * z_k.
struct EdgeDisturbance {
  Eigen::Matrix2d tail = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d head = Eigen::Matrix2d::Zero();
};

/// Per-edge 2x2 disturbances. A scalar range-sensor mismatch mu on the tail is
/// tail = mu * I; a rotor with gain omega is tail = -omega * H, which makes the
/// tail circle its head counterclockwise at omega rad/s once the edge error
/// has vanished.
class DisturbanceSet {
 public:
  DisturbanceSet() = default;
  explicit DisturbanceSet(int edge_count);

  [[nodiscard]] int edge_count() const noexcept { return static_cast<int>(terms_.size()); }
  [[nodiscard]] const EdgeDisturbance& operator[](int k) const { return terms_.at(static_cast<std::size_t>(k)); }
  [[nodiscard]] bool is_zero() const;

  DisturbanceSet& add_tail(int k, const Eigen::Matrix2d& a);
  DisturbanceSet& add_head(int k, const Eigen::Matrix2d& a);
  DisturbanceSet& add_scalar_mismatch(int k, double mu);
  DisturbanceSet& add_rotor(int k, double omega);

  [[nodiscard]] DisturbanceSet scaled(double factor) const;
  [[nodiscard]] DisturbanceSet operator-() const { return scaled(-1.0); }

  /// True if every matrix commutes with planar rotations (span{I, H}).
  [[nodiscard]] bool rotation_equivariant(double tol = 1e-12) const;

 private:
  EdgeDisturbance& at(int k);

  std::vector<EdgeDisturbance> terms_;
};

/// Graph, targets and disturbances: everything that defines the closed loop.
struct FormationSystem {
  FormationGraph graph;
  DistanceSpec distances;
  DisturbanceSet disturbances;

  FormationSystem(FormationGraph g, DistanceSpec d);
  FormationSystem(FormationGraph g, DistanceSpec d, DisturbanceSet dist);

  [[nodiscard]] Eigen::VectorXd velocity(const Eigen::VectorXd& positions) const;
  [[nodiscard]] FormationSystem undisturbed() const { return {graph, distances}; }
  [[nodiscard]] FormationSystem with_disturbances(DisturbanceSet dist) const { return {graph, distances, std::move(dist)}; }
};

using VectorField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// p_dot = -R(z)^T e, evaluated agent-wise.
Eigen::VectorXd gradient_field(const FormationGraph& graph, const DistanceSpec& distances,
                               const Eigen::VectorXd& positions);

/// Gradient law plus the per-endpoint disturbance terms.
Eigen::VectorXd disturbed_field(const FormationGraph& graph, const DistanceSpec& distances,
                                const DisturbanceSet& disturbances, const Eigen::VectorXd& positions);

/// Potential sum_k e_k^2 whose negative quarter-gradient is gradient_field.
double formation_potential(const FormationGraph& graph, const DistanceSpec& distances,
                           const Eigen::VectorXd& positions);

/// Copies the system into a callable.
VectorField make_field(FormationSystem system);

}  // namespace flexform
