#include "hgformer/hypergraph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hgformer/error.hpp"

namespace hgformer {

Hypergraph Hypergraph::from_edge_list(std::vector<std::vector<NodeId>> edges, std::size_t num_nodes,
                                      std::optional<std::vector<double>> weights) {
  if (edges.empty()) throw Error(ErrorKind::InvalidParameters, "hypergraph needs at least one edge");
  if (weights && weights->size() != edges.size())
    throw Error(ErrorKind::ShapeMismatch, "got " + std::to_string(weights->size()) +
                                              " weights for " + std::to_string(edges.size()) +
                                              " edges");

  Hypergraph hg;
  hg.num_nodes_ = num_nodes;
  hg.incidence_.resize(num_nodes);
  for (std::size_t j = 0; j < edges.size(); ++j) {
    auto& e = edges[j];
    if (e.size() < 2)
      throw Error(ErrorKind::EdgeTooSmall, "edge " + std::to_string(j) + " has " +
                                               std::to_string(e.size()) + " node(s)");
    std::sort(e.begin(), e.end());
    for (std::size_t k = 0; k < e.size(); ++k) {
      if (e[k] >= num_nodes)
        throw Error(ErrorKind::NodeIdOutOfRange, "edge " + std::to_string(j) + " references node " +
                                                     std::to_string(e[k]) + " >= " +
                                                     std::to_string(num_nodes));
      if (k > 0 && e[k] == e[k - 1])
        throw Error(ErrorKind::DuplicateNode, "edge " + std::to_string(j) + " repeats node " +
                                                  std::to_string(e[k]));
    }
  }
  if (weights) {
    for (std::size_t j = 0; j < weights->size(); ++j)
      if (!((*weights)[j] > 0.0) || !std::isfinite((*weights)[j]))
        throw Error(ErrorKind::NonPositiveWeight, "edge " + std::to_string(j) + " weight " +
                                                      std::to_string((*weights)[j]));
    hg.weights_ = std::move(*weights);
  } else {
    hg.weights_.assign(edges.size(), 1.0);
  }
  for (std::size_t j = 0; j < edges.size(); ++j)
    for (NodeId v : edges[j]) hg.incidence_[v].push_back(static_cast<EdgeId>(j));
  hg.edges_ = std::move(edges);
  return hg;
}

std::span<const EdgeId> Hypergraph::incident_edges(NodeId v) const {
  if (v >= num_nodes_)
    throw Error(ErrorKind::NodeIdOutOfRange, "node " + std::to_string(v) + " >= " +
                                                 std::to_string(num_nodes_));
  return incidence_[v];
}

DegreeVectors compute_degrees(const Hypergraph& hg) {
  DegreeVectors d;
  d.node_degrees.assign(hg.num_nodes(), 0.0);
  d.edge_degrees.reserve(hg.num_edges());
  for (std::size_t j = 0; j < hg.num_edges(); ++j) {
    const auto& e = hg.edges()[j];
    d.edge_degrees.push_back(e.size());
    for (NodeId v : e) d.node_degrees[v] += hg.weights()[j];
  }
  return d;
}

LaplacianMatrix laplacian(const Hypergraph& hg) {
  const std::size_t n = hg.num_nodes();
  const DegreeVectors deg = compute_degrees(hg);

  LaplacianMatrix out{Matrix(n, n), {}};
  std::vector<double> inv_sqrt(n, 0.0);  // pseudo-inverse: 0 for isolated nodes
  for (std::size_t i = 0; i < n; ++i) {
    if (deg.node_degrees[i] > 0.0)
      inv_sqrt[i] = 1.0 / std::sqrt(deg.node_degrees[i]);
    else
      out.isolated_nodes.push_back(static_cast<NodeId>(i));
  }

  for (std::size_t j = 0; j < hg.num_edges(); ++j) {
    const auto& e = hg.edges()[j];
    const double w = hg.weights()[j] / static_cast<double>(deg.edge_degrees[j]);
    for (NodeId a : e)
      for (NodeId b : e) out.values(a, b) += w * (inv_sqrt[a] * inv_sqrt[b]);
  }
  return out;
}

std::set<NodeId> neighborhood(const Hypergraph& hg, NodeId v) {
  std::set<NodeId> out;
  for (EdgeId e : hg.incident_edges(v))
    for (NodeId u : hg.edge(e))
      if (u != v) out.insert(u);
  return out;
}

Matrix incidence_dense(const Hypergraph& hg) {
  Matrix h(hg.num_nodes(), hg.num_edges());
  for (std::size_t j = 0; j < hg.num_edges(); ++j)
    for (NodeId v : hg.edges()[j]) h(v, j) = 1.0;
  return h;
}

}  // namespace hgformer
