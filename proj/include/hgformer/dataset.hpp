#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hgformer/hypergraph.hpp"
#include "hgformer/matrix.hpp"

namespace hgformer {

struct Dataset {
  std::string name;
  Hypergraph hypergraph;
  Matrix features;          // N x c
  std::vector<int> labels;  // length N, in [0, num_classes)
  int num_classes = 0;

  std::size_t num_nodes() const { return hypergraph.num_nodes(); }

  /// Throws ShapeMismatch / LabelOutOfRange on inconsistent fields.
  void validate() const;

  /// Human-readable notes, e.g. classes with fewer than `folds` members.
  std::vector<std::string> warnings(int folds = 10) const;

  bool operator==(const Dataset&) const = default;
};

struct SyntheticOptions {
  std::size_t num_nodes = 60;
  int num_classes = 3;
  std::size_t edges_per_class = 20;
  std::size_t edge_size = 4;
  double noise = 1.0;
  std::uint64_t seed = 0;
};

/// Community hypergraph: nodes take classes round-robin; each class gets
/// `edges_per_class` hyperedges drawn inside the class (the first ones
/// cover every member), plus cross-class edges numbering 10% of the
/// intra-class edge count, each spanning at least two classes. Features
/// are the one-hot class indicator plus independent uniform noise in
/// [-noise, noise] per entry.
Dataset generate_synthetic(const SyntheticOptions& opts);

}  // namespace hgformer
