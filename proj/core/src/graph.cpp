#include "flexform/graph.hpp"

#include <cmath>
#include <string>

#include "flexform/errors.hpp"

namespace flexform {
namespace {

std::string describe(int tail, int head) {
  return "(" + std::to_string(tail + 1) + "," + std::to_string(head + 1) + ")";
}

}  // namespace

FormationGraph::FormationGraph(int agent_count, std::vector<Edge> edges)
    : agent_count_(agent_count), edges_(std::move(edges)) {
  if (agent_count_ < 2) {
    throw Error(ErrorKind::InvalidGraph, "a formation needs at least two agents");
  }
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const Edge& e = edges_[k];
    if (e.tail < 0 || e.tail >= agent_count_ || e.head < 0 || e.head >= agent_count_) {
      throw Error(ErrorKind::InvalidGraph,
                  "edge " + describe(e.tail, e.head) + " references an agent outside 1.." +
                      std::to_string(agent_count_));
    }
    if (e.tail == e.head) {
      throw Error(ErrorKind::InvalidGraph, "edge " + describe(e.tail, e.head) + " is a self-loop");
    }
    for (std::size_t j = 0; j < k; ++j) {
      const Edge& o = edges_[j];
      if ((o.tail == e.tail && o.head == e.head) || (o.tail == e.head && o.head == e.tail)) {
        throw Error(ErrorKind::InvalidGraph,
                    "edge " + describe(e.tail, e.head) + " duplicates edge " + describe(o.tail, o.head));
      }
    }
  }
}

bool FormationGraph::connects(int i, int j) const {
  for (const Edge& e : edges_) {
    if ((e.tail == i && e.head == j) || (e.tail == j && e.head == i)) return true;
  }
  return false;
}

std::vector<int> FormationGraph::neighbors(int agent) const {
  std::vector<int> out;
  for (const Edge& e : edges_) {
    if (e.tail == agent) out.push_back(e.head);
    if (e.head == agent) out.push_back(e.tail);
  }
  return out;
}

FormationGraph FormationGraph::with_edges(std::span<const Edge> extra) const {
  std::vector<Edge> all = edges_;
  all.insert(all.end(), extra.begin(), extra.end());
  return FormationGraph(agent_count_, std::move(all));
}

FormationGraph build_formation(int agent_count, std::span<const std::pair<int, int>> edges) {
  std::vector<Edge> converted;
  converted.reserve(edges.size());
  for (const auto& [tail, head] : edges) converted.push_back({tail - 1, head - 1});
  return FormationGraph(agent_count, std::move(converted));
}

DistanceSpec::DistanceSpec(Eigen::VectorXd distances) : values_(std::move(distances)) {
  for (Eigen::Index k = 0; k < values_.size(); ++k) {
    if (!std::isfinite(values_[k]) || values_[k] <= 0.0) {
      throw Error(ErrorKind::InvalidArgument,
                  "target distance for edge " + std::to_string(k + 1) + " must be positive and finite");
    }
  }
}

DistanceSpec::DistanceSpec(std::initializer_list<double> distances)
    : DistanceSpec(Eigen::VectorXd::Map(distances.begin(), static_cast<Eigen::Index>(distances.size()))) {}

Eigen::MatrixXd incidence_matrix(const FormationGraph& graph) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(graph.agent_count(), graph.edge_count());
  for (int k = 0; k < graph.edge_count(); ++k) {
    b(graph.edge(k).tail, k) = 1.0;
    b(graph.edge(k).head, k) = -1.0;
  }
  return b;
}

Eigen::MatrixXd selector_matrix(const FormationGraph& graph, std::span<const int> edge_subset,
                                Endpoint endpoint) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(graph.agent_count(), graph.edge_count());
  for (int k : edge_subset) {
    if (k < 0 || k >= graph.edge_count()) {
      throw Error(ErrorKind::InvalidArgument, "selector references unknown edge " + std::to_string(k + 1));
    }
    const Edge& e = graph.edge(k);
    s(endpoint == Endpoint::Tail ? e.tail : e.head, k) = 1.0;
  }
  return s;
}

void require_configuration(const FormationGraph& graph, const Eigen::VectorXd& positions) {
  if (positions.size() != 2 * graph.agent_count()) {
    throw Error(ErrorKind::DimensionMismatch,
                "configuration has " + std::to_string(positions.size()) + " entries, expected " +
                    std::to_string(2 * graph.agent_count()));
  }
}

Eigen::VectorXd relative_positions(const FormationGraph& graph, const Eigen::VectorXd& positions) {
  require_configuration(graph, positions);
  Eigen::VectorXd z(2 * graph.edge_count());
  for (int k = 0; k < graph.edge_count(); ++k) {
    const Edge& e = graph.edge(k);
    z.segment<2>(2 * k) = positions.segment<2>(2 * e.tail) - positions.segment<2>(2 * e.head);
  }
  return z;
}

Eigen::VectorXd edge_errors(const Eigen::VectorXd& z, const DistanceSpec& distances) {
  if (z.size() != 2 * distances.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                std::to_string(z.size() / 2) + " edge vectors but " + std::to_string(distances.size()) +
                    " target distances");
  }
  Eigen::VectorXd e(distances.size());
  for (int k = 0; k < distances.size(); ++k) {
    e[k] = z.segment<2>(2 * k).squaredNorm() - distances[k] * distances[k];
  }
  return e;
}

Eigen::MatrixXd rigidity_matrix(const FormationGraph& graph, const Eigen::VectorXd& z) {
  if (z.size() != 2 * graph.edge_count()) {
    throw Error(ErrorKind::DimensionMismatch, "edge vector length does not match the graph");
  }
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(graph.edge_count(), 2 * graph.agent_count());
  for (int k = 0; k < graph.edge_count(); ++k) {
    const Edge& e = graph.edge(k);
    const Eigen::Vector2d zk = z.segment<2>(2 * k);
    r.block<1, 2>(k, 2 * e.tail) = zk.transpose();
    r.block<1, 2>(k, 2 * e.head) = -zk.transpose();
  }
  return r;
}

}  // namespace flexform
