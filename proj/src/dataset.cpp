#include "hgformer/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hgformer/error.hpp"
#include "hgformer/tensor.hpp"

namespace hgformer {

void Dataset::validate() const {
  const std::size_t n = hypergraph.num_nodes();
  if (features.rows() != n)
    throw Error(ErrorKind::ShapeMismatch, "features have " + std::to_string(features.rows()) +
                                              " rows for " + std::to_string(n) + " nodes");
  if (labels.size() != n)
    throw Error(ErrorKind::ShapeMismatch, std::to_string(labels.size()) + " labels for " +
                                              std::to_string(n) + " nodes");
  if (num_classes < 1) throw Error(ErrorKind::InvalidParameters, "num_classes must be >= 1");
  for (std::size_t i = 0; i < n; ++i)
    if (labels[i] < 0 || labels[i] >= num_classes)
      throw Error(ErrorKind::LabelOutOfRange, "node " + std::to_string(i) + " has label " +
                                                  std::to_string(labels[i]));
}

std::vector<std::string> Dataset::warnings(int folds) const {
  std::vector<std::string> out;
  std::vector<std::size_t> counts(static_cast<std::size_t>(std::max(num_classes, 0)), 0);
  for (int y : labels)
    if (y >= 0 && y < num_classes) ++counts[static_cast<std::size_t>(y)];
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (counts[c] < static_cast<std::size_t>(folds))
      out.push_back("class " + std::to_string(c) + " has " + std::to_string(counts[c]) +
                    " members, fewer than " + std::to_string(folds) + " folds");
  const auto lap_isolated = [&] {
    std::size_t isolated = 0;
    for (NodeId v = 0; v < hypergraph.num_nodes(); ++v)
      if (hypergraph.incident_edges(v).empty()) ++isolated;
    return isolated;
  }();
  if (lap_isolated > 0)
    out.push_back(std::to_string(lap_isolated) + " node(s) belong to no hyperedge");
  return out;
}

Dataset generate_synthetic(const SyntheticOptions& o) {
  if (o.num_nodes < 2 || o.num_classes < 1 || o.edges_per_class < 1 || o.edge_size < 2 ||
      !(o.noise >= 0.0) || o.num_nodes < static_cast<std::size_t>(o.num_classes) * o.edge_size)
    throw Error(ErrorKind::InvalidParameters,
                "synthetic: need edge_size >= 2, noise >= 0 and at least edge_size nodes per class");
  Rng rng(o.seed);
  const auto classes = static_cast<std::size_t>(o.num_classes);

  std::vector<int> labels(o.num_nodes);
  std::vector<std::vector<NodeId>> members(classes);
  for (std::size_t v = 0; v < o.num_nodes; ++v) {
    labels[v] = static_cast<int>(v % classes);
    members[v % classes].push_back(static_cast<NodeId>(v));
  }

  std::vector<std::vector<NodeId>> edges;
  for (std::size_t c = 0; c < classes; ++c) {
    // Walk shuffled copies of the class in chunks so early edges cover it.
    std::vector<NodeId> pool;
    for (std::size_t j = 0; j < o.edges_per_class; ++j) {
      std::vector<NodeId> edge;
      while (edge.size() < o.edge_size) {
        if (pool.empty()) {
          pool = members[c];
          std::shuffle(pool.begin(), pool.end(), rng);
        }
        const NodeId v = pool.back();
        pool.pop_back();
        if (std::find(edge.begin(), edge.end(), v) == edge.end()) edge.push_back(v);
      }
      edges.push_back(std::move(edge));
    }
  }

  const std::size_t cross = static_cast<std::size_t>(
      std::lround(0.1 * static_cast<double>(o.edges_per_class * classes)));
  for (std::size_t j = 0; j < cross; ++j) {
    std::vector<NodeId> edge;
    auto single_class = [&] {
      return std::all_of(edge.begin(), edge.end(),
                         [&](NodeId v) { return labels[v] == labels[edge.front()]; });
    };
    while (edge.size() < o.edge_size || (classes > 1 && single_class())) {
      if (edge.size() == o.edge_size) edge.clear();
      const auto v = static_cast<NodeId>(rng() % o.num_nodes);
      if (std::find(edge.begin(), edge.end(), v) == edge.end()) edge.push_back(v);
    }
    edges.push_back(std::move(edge));
  }

  Matrix features(o.num_nodes, classes);
  for (std::size_t v = 0; v < o.num_nodes; ++v) {
    for (std::size_t f = 0; f < classes; ++f) features(v, f) = uniform(rng, -o.noise, o.noise);
    features(v, static_cast<std::size_t>(labels[v])) += 1.0;
  }

  return Dataset{"synthetic", Hypergraph::from_edge_list(std::move(edges), o.num_nodes),
                 std::move(features), std::move(labels), o.num_classes};
}

}  // namespace hgformer
