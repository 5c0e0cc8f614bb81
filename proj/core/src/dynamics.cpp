#include "flexform/dynamics.hpp"

#include <string>

#include "flexform/errors.hpp"

namespace flexform {

DisturbanceSet::DisturbanceSet(int edge_count) : terms_(static_cast<std::size_t>(edge_count)) {}

EdgeDisturbance& DisturbanceSet::at(int k) {
  if (k < 0 || k >= edge_count()) {
    throw Error(ErrorKind::InvalidArgument, "disturbance references unknown edge " + std::to_string(k + 1));
  }
  return terms_[static_cast<std::size_t>(k)];
}

bool DisturbanceSet::is_zero() const {
  for (const EdgeDisturbance& t : terms_) {
    if (!t.tail.isZero(0.0) || !t.head.isZero(0.0)) return false;
  }
  return true;
}

DisturbanceSet& DisturbanceSet::add_tail(int k, const Eigen::Matrix2d& a) {
  if (!a.allFinite()) throw Error(ErrorKind::InvalidArgument, "disturbance entries must be finite");
  at(k).tail += a;
  return *this;
}

DisturbanceSet& DisturbanceSet::add_head(int k, const Eigen::Matrix2d& a) {
  if (!a.allFinite()) throw Error(ErrorKind::InvalidArgument, "disturbance entries must be finite");
  at(k).head += a;
  return *this;
}

DisturbanceSet& DisturbanceSet::add_scalar_mismatch(int k, double mu) {
  return add_tail(k, mu * Eigen::Matrix2d::Identity());
}

DisturbanceSet& DisturbanceSet::add_rotor(int k, double omega) {
  return add_tail(k, -omega * rotation_generator());
}

DisturbanceSet DisturbanceSet::scaled(double factor) const {
  DisturbanceSet out = *this;
  for (EdgeDisturbance& t : out.terms_) {
    t.tail *= factor;
    t.head *= factor;
  }
  return out;
}

bool DisturbanceSet::rotation_equivariant(double tol) const {
  // span{I, H} is exactly the set of 2x2 matrices [[a, -b], [b, a]].
  const auto conformal = [tol](const Eigen::Matrix2d& a) {
    return std::abs(a(0, 0) - a(1, 1)) <= tol && std::abs(a(0, 1) + a(1, 0)) <= tol;
  };
  for (const EdgeDisturbance& t : terms_) {
    if (!conformal(t.tail) || !conformal(t.head)) return false;
  }
  return true;
}

FormationSystem::FormationSystem(FormationGraph g, DistanceSpec d)
    : FormationSystem(std::move(g), std::move(d), DisturbanceSet{}) {}

FormationSystem::FormationSystem(FormationGraph g, DistanceSpec d, DisturbanceSet dist)
    : graph(std::move(g)), distances(std::move(d)), disturbances(std::move(dist)) {
  if (distances.size() != graph.edge_count()) {
    throw Error(ErrorKind::DimensionMismatch,
                std::to_string(distances.size()) + " target distances for " +
                    std::to_string(graph.edge_count()) + " edges");
  }
  if (disturbances.edge_count() == 0) {
    disturbances = DisturbanceSet(graph.edge_count());
  } else if (disturbances.edge_count() != graph.edge_count()) {
    throw Error(ErrorKind::DimensionMismatch, "disturbance set does not match the edge count");
  }
}

Eigen::VectorXd FormationSystem::velocity(const Eigen::VectorXd& positions) const {
  return disturbed_field(graph, distances, disturbances, positions);
}

Eigen::VectorXd gradient_field(const FormationGraph& graph, const DistanceSpec& distances,
                               const Eigen::VectorXd& positions) {
  require_configuration(graph, positions);
  if (distances.size() != graph.edge_count()) {
    throw Error(ErrorKind::DimensionMismatch, "distance count does not match the edge count");
  }
  Eigen::VectorXd v = Eigen::VectorXd::Zero(positions.size());
  for (int k = 0; k < graph.edge_count(); ++k) {
    const Edge& edge = graph.edge(k);
    const Eigen::Vector2d zk = positions.segment<2>(2 * edge.tail) - positions.segment<2>(2 * edge.head);
    const double ek = zk.squaredNorm() - distances[k] * distances[k];
    v.segment<2>(2 * edge.tail) -= zk * ek;
    v.segment<2>(2 * edge.head) += zk * ek;
  }
  return v;
}

Eigen::VectorXd disturbed_field(const FormationGraph& graph, const DistanceSpec& distances,
                                const DisturbanceSet& disturbances, const Eigen::VectorXd& positions) {
  Eigen::VectorXd v = gradient_field(graph, distances, positions);
  if (disturbances.edge_count() == 0) return v;
  if (disturbances.edge_count() != graph.edge_count()) {
    throw Error(ErrorKind::DimensionMismatch, "disturbance set does not match the edge count");
  }
  for (int k = 0; k < graph.edge_count(); ++k) {
    const Edge& edge = graph.edge(k);
    const Eigen::Vector2d zk = positions.segment<2>(2 * edge.tail) - positions.segment<2>(2 * edge.head);
    v.segment<2>(2 * edge.tail) -= disturbances[k].tail * zk;
    v.segment<2>(2 * edge.head) -= disturbances[k].head * zk;
  }
  return v;
}

double formation_potential(const FormationGraph& graph, const DistanceSpec& distances,
                           const Eigen::VectorXd& positions) {
  return edge_errors(relative_positions(graph, positions), distances).squaredNorm();
}

VectorField make_field(FormationSystem system) {
  return [system = std::move(system)](const Eigen::VectorXd& p) { return system.velocity(p); };
}

}  // namespace flexform
