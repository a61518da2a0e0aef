#include "hgformer/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numeric>
#include <string>

#include "hgformer/error.hpp"
#include "hgformer/tensor.hpp"

namespace hgformer {

namespace {

void check_rows(const Hypergraph& hg, const FeatureMatrix& v) {
  if (v.rows() != hg.num_nodes())
    throw Error(ErrorKind::ShapeMismatch, "features have " + std::to_string(v.rows()) +
                                              " rows, hypergraph has " +
                                              std::to_string(hg.num_nodes()) + " nodes");
}

void require_incident(const Hypergraph& hg, NodeId i) {
  if (hg.incident_edges(i).empty())
    throw Error(ErrorKind::IsolatedNode, "node " + std::to_string(i) + " is in no hyperedge");
}

double edge_weight(const EdgeWeights& w, std::size_t j) { return w.empty() ? 1.0 : w[j]; }

void check_weights(const Hypergraph& hg, const EdgeWeights& w) {
  if (!w.empty() && w.size() != hg.num_edges())
    throw Error(ErrorKind::ShapeMismatch, std::to_string(w.size()) + " edge weights for " +
                                              std::to_string(hg.num_edges()) + " edges");
}

double power(double x, double p) { return p == 1.0 ? x : std::pow(x, p); }

}  // namespace

FeatureMatrix hypersage_two_stage(const Hypergraph& hg, const FeatureMatrix& v, double p) {
  check_rows(hg, v);
  if (!(p >= 1.0)) throw Error(ErrorKind::InvalidParameters, "p must be >= 1");
  if (p != 1.0 && std::any_of(v.data().begin(), v.data().end(), [](double x) { return x < 0.0; }))
    throw Error(ErrorKind::NegativeFeatureWithFractionalPower,
                "negative features with p = " + std::to_string(p));
  const std::size_t c = v.cols();

  // Stage 1: node -> hyperedge.
  Matrix e(hg.num_edges(), c);
  for (std::size_t j = 0; j < hg.num_edges(); ++j) {
    const auto& edge = hg.edges()[j];
    for (NodeId k : edge)
      for (std::size_t f = 0; f < c; ++f) e(j, f) += power(v(k, f), p);
    for (std::size_t f = 0; f < c; ++f)
      e(j, f) = power(e(j, f) / static_cast<double>(edge.size()), 1.0 / p);
  }

  // Stage 2: hyperedge -> node.
  FeatureMatrix out(hg.num_nodes(), c);
  for (NodeId i = 0; i < hg.num_nodes(); ++i) {
    require_incident(hg, i);
    const auto incident = hg.incident_edges(i);
    const double n_neigh = static_cast<double>(neighborhood(hg, i).size());
    if (n_neigh == 0.0)
      throw Error(ErrorKind::IsolatedNode, "node " + std::to_string(i) + " has no neighbours");
    const double d_v = static_cast<double>(incident.size());
    for (EdgeId j : incident) {
      const double d_e = static_cast<double>(hg.edge(j).size());
      for (std::size_t f = 0; f < c; ++f) out(i, f) += d_e / n_neigh * power(e(j, f), p);
    }
    for (std::size_t f = 0; f < c; ++f) out(i, f) = power(out(i, f) / d_v, 1.0 / p);
  }
  return out;
}

FeatureMatrix hypersage_one_stage(const Hypergraph& hg, const FeatureMatrix& v) {
  check_rows(hg, v);
  FeatureMatrix out(hg.num_nodes(), v.cols());
  for (NodeId i = 0; i < hg.num_nodes(); ++i) {
    require_incident(hg, i);
    const auto incident = hg.incident_edges(i);
    const double n_neigh = static_cast<double>(neighborhood(hg, i).size());
    const double norm = 1.0 / (static_cast<double>(incident.size()) * n_neigh);
    auto row = out.row(i);
    for (EdgeId j : incident)
      for (NodeId k : hg.edge(j))
        for (std::size_t f = 0; f < v.cols(); ++f) row[f] += v(k, f);
    for (double& x : row) x *= norm;
  }
  return out;
}

FeatureMatrix unigcn_two_stage(const Hypergraph& hg, const FeatureMatrix& v, const EdgeWeights& w) {
  check_rows(hg, v);
  check_weights(hg, w);
  const std::size_t c = v.cols();
  Matrix e(hg.num_edges(), c);
  for (std::size_t j = 0; j < hg.num_edges(); ++j) {
    const auto& edge = hg.edges()[j];
    for (NodeId k : edge)
      for (std::size_t f = 0; f < c; ++f) e(j, f) += v(k, f);
    for (std::size_t f = 0; f < c; ++f) e(j, f) /= static_cast<double>(edge.size());
  }
  FeatureMatrix out(hg.num_nodes(), c);
  for (NodeId i = 0; i < hg.num_nodes(); ++i) {
    require_incident(hg, i);
    const auto incident = hg.incident_edges(i);
    for (EdgeId j : incident) {
      const double coef = edge_weight(w, j) / std::sqrt(static_cast<double>(hg.edge(j).size()));
      for (std::size_t f = 0; f < c; ++f) out(i, f) += coef * e(j, f);
    }
    const double norm = 1.0 / std::sqrt(static_cast<double>(incident.size()));
    for (std::size_t f = 0; f < c; ++f) out(i, f) *= norm;
  }
  return out;
}

FeatureMatrix unigcn_one_stage(const Hypergraph& hg, const FeatureMatrix& v, const EdgeWeights& w) {
  check_rows(hg, v);
  check_weights(hg, w);
  FeatureMatrix out(hg.num_nodes(), v.cols());
  for (NodeId i = 0; i < hg.num_nodes(); ++i) {
    require_incident(hg, i);
    const auto incident = hg.incident_edges(i);
    auto row = out.row(i);
    for (EdgeId j : incident) {
      const double coef = edge_weight(w, j) / std::pow(static_cast<double>(hg.edge(j).size()), 1.5);
      for (NodeId k : hg.edge(j))
        for (std::size_t f = 0; f < v.cols(); ++f) row[f] += coef * v(k, f);
    }
    const double norm = 1.0 / std::sqrt(static_cast<double>(incident.size()));
    for (double& x : row) x *= norm;
  }
  return out;
}

FeatureMatrix generic_one_stage(const Hypergraph& hg, const FeatureMatrix& v,
                                const PairWeightFn& weight_fn) {
  check_rows(hg, v);
  FeatureMatrix out(hg.num_nodes(), v.cols());
  std::vector<EdgeId> shared;
  for (NodeId i = 0; i < hg.num_nodes(); ++i) {
    const auto e_i = hg.incident_edges(i);
    if (e_i.empty()) continue;
    std::set<NodeId> candidates;  // every k with E_k ∩ E_i non-empty
    for (EdgeId j : e_i) candidates.insert(hg.edge(j).begin(), hg.edge(j).end());
    auto row = out.row(i);
    for (NodeId k : candidates) {
      const auto e_k = hg.incident_edges(k);
      shared.clear();
      std::set_intersection(e_i.begin(), e_i.end(), e_k.begin(), e_k.end(),
                            std::back_inserter(shared));
      const double w = weight_fn(shared, k, i);
      if (w == 0.0) continue;
      for (std::size_t f = 0; f < v.cols(); ++f) row[f] += w * v(k, f);
    }
  }
  return out;
}

PairWeightFn hypersage_pair_weight(const Hypergraph& hg) {
  std::vector<double> norm(hg.num_nodes(), 0.0);
  for (NodeId i = 0; i < hg.num_nodes(); ++i) {
    const double d_v = static_cast<double>(hg.incident_edges(i).size());
    const double n = static_cast<double>(neighborhood(hg, i).size());
    if (d_v > 0.0 && n > 0.0) norm[i] = 1.0 / (d_v * n);
  }
  return [norm = std::move(norm)](std::span<const EdgeId> shared, NodeId, NodeId i) {
    return static_cast<double>(shared.size()) * norm[i];
  };
}

PairWeightFn unigcn_pair_weight(const Hypergraph& hg, const EdgeWeights& w) {
  check_weights(hg, w);
  std::vector<double> edge_coef(hg.num_edges());
  for (std::size_t j = 0; j < hg.num_edges(); ++j)
    edge_coef[j] = edge_weight(w, j) / std::pow(static_cast<double>(hg.edge(j).size()), 1.5);
  std::vector<double> node_norm(hg.num_nodes(), 0.0);
  for (NodeId i = 0; i < hg.num_nodes(); ++i) {
    const auto d = hg.incident_edges(i).size();
    if (d > 0) node_norm[i] = 1.0 / std::sqrt(static_cast<double>(d));
  }
  return [edge_coef = std::move(edge_coef), node_norm = std::move(node_norm)](
             std::span<const EdgeId> shared, NodeId, NodeId i) {
    double acc = 0.0;
    for (EdgeId j : shared) acc += edge_coef[j];
    return node_norm[i] * acc;
  };
}

Hypergraph random_connected_hypergraph(std::size_t num_nodes, std::size_t max_edges,
                                       std::uint64_t seed) {
  if (num_nodes < 2 || max_edges < 1)
    throw Error(ErrorKind::InvalidParameters, "need >= 2 nodes and >= 1 edge");
  Rng rng(seed);
  const std::size_t m = 1 + rng() % max_edges;

  std::vector<NodeId> perm(num_nodes);
  std::iota(perm.begin(), perm.end(), NodeId{0});
  std::shuffle(perm.begin(), perm.end(), rng);

  // Round-robin cover so every node is incident to some edge.
  std::vector<std::vector<bool>> member(m, std::vector<bool>(num_nodes, false));
  for (std::size_t idx = 0; idx < num_nodes; ++idx) member[idx % m][perm[idx]] = true;
  // Extra memberships, then top up edges that are still too small.
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t v = 0; v < num_nodes; ++v)
      if (uniform01(rng) < 0.25) member[j][v] = true;
    while (std::count(member[j].begin(), member[j].end(), true) < 2)
      member[j][rng() % num_nodes] = true;
  }

  std::vector<std::vector<NodeId>> edges(m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t v = 0; v < num_nodes; ++v)
      if (member[j][v]) edges[j].push_back(static_cast<NodeId>(v));
  return Hypergraph::from_edge_list(std::move(edges), num_nodes);
}

EquivalenceReport compare_forms(const Hypergraph& hg, const FeatureMatrix& v) {
  EquivalenceReport r;
  r.trials = 1;
  r.hypersage_max_dev = max_abs_diff(hypersage_two_stage(hg, v, 1.0), hypersage_one_stage(hg, v));
  r.unigcn_max_dev = max_abs_diff(unigcn_two_stage(hg, v), unigcn_one_stage(hg, v));
  return r;
}

EquivalenceReport verify_equivalence(std::size_t trials, std::size_t max_nodes, std::uint64_t seed) {
  if (trials < 1) throw Error(ErrorKind::InvalidParameters, "trials must be >= 1");
  if (max_nodes < 2) throw Error(ErrorKind::InvalidParameters, "max_nodes must be >= 2");
  constexpr std::size_t kMaxEdges = 8;
  constexpr std::size_t kFeatureDim = 3;

  Rng rng(seed);
  EquivalenceReport report;
  report.trials = trials;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t n = 2 + rng() % (max_nodes - 1);
    const Hypergraph hg = random_connected_hypergraph(n, kMaxEdges, rng());
    FeatureMatrix v(n, kFeatureDim);
    for (double& x : v.data()) x = uniform(rng, -1.0, 1.0);
    const EquivalenceReport one = compare_forms(hg, v);
    report.hypersage_max_dev = std::max(report.hypersage_max_dev, one.hypersage_max_dev);
    report.unigcn_max_dev = std::max(report.unigcn_max_dev, one.unigcn_max_dev);
  }
  return report;
}

}  // namespace hgformer
