#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hgformer/hypergraph.hpp"
#include "hgformer/matrix.hpp"

namespace hgformer {

/// N x c node features; one row per node of the hypergraph.
using FeatureMatrix = Matrix;

/// Per-hyperedge scalar used by UniGCN; empty means 1.0 everywhere.
using EdgeWeights = std::vector<double>;

// Degrees in these propagations are incidence counts: d(v) = |E_v|,
// d(e) = |e|. Hyperedge weights of the graph are not involved.

/// e_j = ((1/d_e) sum_{k in e_j} v_k^p)^(1/p);
/// v_i = ((1/d_v) sum_{e_j in E_i} (d_e / |N(v_i)|) e_j^p)^(1/p).
FeatureMatrix hypersage_two_stage(const Hypergraph& hg, const FeatureMatrix& v, double p = 1.0);

/// Merged p = 1 form: v_i = 1/(d_v |N(v_i)|) sum_{e_j in E_i} sum_{k in e_j} v_k.
FeatureMatrix hypersage_one_stage(const Hypergraph& hg, const FeatureMatrix& v);

/// e_j = (1/d_e) sum_{k in e_j} v_k;  v_i = (1/sqrt d_v) sum_{e_j} w_j / sqrt(d_e) e_j.
FeatureMatrix unigcn_two_stage(const Hypergraph& hg, const FeatureMatrix& v,
                               const EdgeWeights& w = {});

/// Merged form: v_i = (1/sqrt d_v) sum_{e_j in E_i} sum_{k in e_j} w_j / d_e^{3/2} v_k.
FeatureMatrix unigcn_one_stage(const Hypergraph& hg, const FeatureMatrix& v,
                               const EdgeWeights& w = {});

/// Pairwise weight on the shared hyperedges of (k, i): w(E_k ∩ E_i, k, i).
using PairWeightFn =
    std::function<double(std::span<const EdgeId> shared_edges, NodeId k, NodeId i)>;

/// v_i = sum_k w(E_k ∩ E_i, k, i) v_k. The weight vanishes on pairs that
/// share no hyperedge, so the function is only consulted for co-incident
/// pairs (including k == i when d(i) > 0).
FeatureMatrix generic_one_stage(const Hypergraph& hg, const FeatureMatrix& v,
                                const PairWeightFn& weight_fn);

/// Pair weights that make generic_one_stage reproduce the merged forms.
PairWeightFn hypersage_pair_weight(const Hypergraph& hg);
PairWeightFn unigcn_pair_weight(const Hypergraph& hg, const EdgeWeights& w = {});

struct EquivalenceReport {
  std::size_t trials = 0;
  double hypersage_max_dev = 0.0;
  double unigcn_max_dev = 0.0;

  bool passed(double tol = 1e-9) const {
    return hypersage_max_dev < tol && unigcn_max_dev < tol;
  }
  bool operator==(const EquivalenceReport&) const = default;
};

/// Random degree-positive hypergraph: every node lies in >= 1 edge, edges
/// have >= 2 distinct nodes. num_nodes >= 2, max_edges >= 1.
Hypergraph random_connected_hypergraph(std::size_t num_nodes, std::size_t max_edges,
                                       std::uint64_t seed);

/// Two-stage vs merged deviation of both baselines on one hypergraph.
EquivalenceReport compare_forms(const Hypergraph& hg, const FeatureMatrix& v);

/// Compares two-stage vs merged forms of both baselines on `trials` random
/// hypergraphs with up to max_nodes nodes and 8 edges, features in [-1, 1].
EquivalenceReport verify_equivalence(std::size_t trials, std::size_t max_nodes, std::uint64_t seed);

}  // namespace hgformer
