#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "flexform/graph.hpp"

namespace flexform::testing {

inline Eigen::VectorXd stack(std::initializer_list<std::pair<double, double>> points) {
  Eigen::VectorXd p(2 * static_cast<Eigen::Index>(points.size()));
  Eigen::Index i = 0;
  for (const auto& [x, y] : points) {
    p[i++] = x;
    p[i++] = y;
  }
  return p;
}

inline FormationGraph graph_of(int n, std::initializer_list<std::pair<int, int>> one_based) {
  const std::vector<std::pair<int, int>> pairs(one_based);
  return build_formation(n, pairs);
}

inline FormationGraph cycle(int n) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 1; i <= n; ++i) pairs.emplace_back(i, i % n + 1);
  return build_formation(n, pairs);
}

inline FormationGraph path(int n) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 1; i < n; ++i) pairs.emplace_back(i, i + 1);
  return build_formation(n, pairs);
}

inline Eigen::VectorXd regular_polygon(int n, double circumradius = 1.0) {
  Eigen::VectorXd p(2 * n);
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * M_PI * i / n;
    p[2 * i] = circumradius * std::cos(a);
    p[2 * i + 1] = circumradius * std::sin(a);
  }
  return p;
}

inline Eigen::VectorXd random_configuration(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::VectorXd p(2 * n);
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = u(rng);
  return p;
}

/// Distances realized by `positions`, so the configuration is a desired shape.
inline DistanceSpec realized_distances(const FormationGraph& graph, const Eigen::VectorXd& positions) {
  Eigen::VectorXd d(graph.edge_count());
  for (int k = 0; k < graph.edge_count(); ++k) {
    d[k] = (agent_position(positions, graph.edge(k).tail) - agent_position(positions, graph.edge(k).head)).norm();
  }
  return DistanceSpec(d);
}

template <typename Map>
Eigen::MatrixXd numeric_jacobian(const Map& map, const Eigen::VectorXd& x, double h = 1e-6) {
  const Eigen::VectorXd f0 = map(x);
  Eigen::MatrixXd jac(f0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Eigen::VectorXd a = x;
    Eigen::VectorXd b = x;
    a[j] += h;
    b[j] -= h;
    jac.col(j) = (map(a) - map(b)) / (2.0 * h);
  }
  return jac;
}

inline double relative_error(const Eigen::MatrixXd& actual, const Eigen::MatrixXd& expected) {
  return (actual - expected).norm() / std::max(expected.norm(), 1e-300);
}

/// Stacks T applied to every agent.
inline Eigen::VectorXd rotate_all(const Eigen::VectorXd& p, double angle) {
  const Eigen::Rotation2Dd rot(angle);
  Eigen::VectorXd out(p.size());
  for (Eigen::Index i = 0; i < p.size() / 2; ++i) out.segment<2>(2 * i) = rot * Eigen::Vector2d(p.segment<2>(2 * i));
  return out;
}

inline Eigen::VectorXd translate_all(const Eigen::VectorXd& p, const Eigen::Vector2d& v) {
  Eigen::VectorXd out = p;
  for (Eigen::Index i = 0; i < p.size() / 2; ++i) out.segment<2>(2 * i) += v;
  return out;
}

}  // namespace flexform::testing
