#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "hgformer/matrix.hpp"

namespace hgformer {

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;

/// Undirected, weighted hypergraph. Immutable after construction.
///
/// Invariants: every hyperedge holds >= 2 distinct node ids, all in
/// [0, num_nodes); every weight is strictly positive. Node ids inside a
/// hyperedge are stored sorted.
class Hypergraph {
 public:
  static Hypergraph from_edge_list(std::vector<std::vector<NodeId>> edges, std::size_t num_nodes,
                                   std::optional<std::vector<double>> weights = std::nullopt);

  std::size_t num_nodes() const noexcept { return num_nodes_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }

  std::span<const NodeId> edge(EdgeId e) const { return edges_.at(e); }
  const std::vector<std::vector<NodeId>>& edges() const noexcept { return edges_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  /// Hyperedges incident to v, ascending.
  std::span<const EdgeId> incident_edges(NodeId v) const;

  bool operator==(const Hypergraph&) const = default;

 private:
  Hypergraph() = default;

  std::size_t num_nodes_ = 0;
  std::vector<std::vector<NodeId>> edges_;
  std::vector<double> weights_;
  std::vector<std::vector<EdgeId>> incidence_;
};

struct DegreeVectors {
  std::vector<double> node_degrees;  // d(v) = sum_e w_e H(v,e)
  std::vector<std::size_t> edge_degrees;  // d(e) = |e|
};

DegreeVectors compute_degrees(const Hypergraph& hg);

struct LaplacianMatrix {
  Matrix values;  // N x N
  std::vector<NodeId> isolated_nodes;  // zero row/column; reported as a warning
};

/// Normalized hypergraph Laplacian D_v^{-1/2} H W D_e^{-1} H^T D_v^{-1/2},
/// assembled edge by edge without forming H.
LaplacianMatrix laplacian(const Hypergraph& hg);

/// Union of all hyperedges containing v, without v itself.
std::set<NodeId> neighborhood(const Hypergraph& hg, NodeId v);

/// N x M 0/1 incidence matrix.
Matrix incidence_dense(const Hypergraph& hg);

}  // namespace hgformer
