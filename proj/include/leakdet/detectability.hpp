#pragma once

// Structural detectability of a fault structure.
//
// A fault structure is detectable exactly when every weakly connected
// component of its fault graph is a directed tree. Components other than
// the one holding the reference node only carry sensor-fault edges, which
// oppose edges of the sensor tree and so cannot close a cycle; checking the
// reference component is therefore enough.

#include <leakdet/graph_model.hpp>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace leakdet {

struct ComponentPartition {
  std::vector<Component> unconnected;  // isolated non-reference nodes
  std::vector<Component> sensor_only;  // sensor-fault edges only
  Component ps_component;              // holds the reference, possibly alone

  std::size_t component_count() const { return unconnected.size() + sensor_only.size() + 1; }
};

struct DetectabilityVerdict {
  bool detectable = true;
  std::optional<Component> failing_component;  // set iff !detectable
  std::vector<NodeId> culprit_nodes;
};

/// Work counters for the linear-time check.
struct TraversalStats {
  std::size_t node_visits = 0;
  std::size_t edge_visits = 0;
};

inline ComponentPartition classify_components(const Topology& t, const FaultStructure& faults) {
  const CombinedGraph g = build_combined_graph(t, faults);
  ComponentPartition p;
  bool have_ps = false;
  for (auto& c : weakly_connected_components(g.fault_graph())) {
    if (c.nodes.front() == kReference) {
      p.ps_component = std::move(c);
      have_ps = true;
    } else if (c.edges.empty()) {
      p.unconnected.push_back(std::move(c));
    } else {
      for (const auto j : c.edge_indices)
        if (faults.edges()[j].kind != FaultKind::sensor_fault)
          fail(ErrorCategory::internal, "leak-like edge outside the reference component");
      p.sensor_only.push_back(std::move(c));
    }
  }
  if (!have_ps) fail(ErrorCategory::internal, "reference node missing from partition");
  return p;
}

namespace detail {

/// Weak components of a fault edge list, seeded from node 0 (the reference).
struct FaultComponents {
  std::vector<std::size_t> component;  // per node
  std::vector<std::size_t> nodes;      // per component
  std::vector<std::size_t> edges;      // per component

  bool is_tree(std::size_t c) const { return edges[c] + 1 == nodes[c]; }
};

inline FaultComponents label_fault_components(std::size_t n, std::span<const Edge> edges,
                                              TraversalStats* stats = nullptr) {
  for (const auto& e : edges)
    if (e.tail.index() >= n || e.head.index() >= n)
      fail(ErrorCategory::structural, "fault edge endpoint outside the topology");

  // Compressed adjacency: offsets into a flat incidence list.
  std::vector<std::size_t> start(n + 1, 0);
  for (const auto& e : edges) {
    ++start[e.tail.index() + 1];
    ++start[e.head.index() + 1];
  }
  for (std::size_t i = 0; i < n; ++i) start[i + 1] += start[i];
  std::vector<std::size_t> fill(start.begin(), start.end() - 1);
  std::vector<std::size_t> incident(2 * edges.size());
  for (std::size_t j = 0; j < edges.size(); ++j) {
    incident[fill[edges[j].tail.index()]++] = j;
    incident[fill[edges[j].head.index()]++] = j;
  }

  constexpr auto unseen = static_cast<std::size_t>(-1);
  FaultComponents fc;
  fc.component.assign(n, unseen);
  std::vector<std::size_t> ends;  // each edge counted at both endpoints
  std::vector<std::size_t> queue;
  queue.reserve(n);
  for (std::size_t root = 0; root < n; ++root) {
    if (fc.component[root] != unseen) continue;
    const std::size_t id = fc.nodes.size();
    fc.nodes.push_back(0);
    ends.push_back(0);
    queue.clear();
    queue.push_back(root);
    fc.component[root] = id;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const std::size_t v = queue[q];
      ++fc.nodes[id];
      if (stats) ++stats->node_visits;
      for (std::size_t k = start[v]; k < start[v + 1]; ++k) {
        if (stats) ++stats->edge_visits;
        ++ends[id];
        const auto& e = edges[incident[k]];
        const std::size_t w = e.tail.index() == v ? e.head.index() : e.tail.index();
        if (fc.component[w] == unseen) {
          fc.component[w] = id;
          queue.push_back(w);
        }
      }
    }
  }
  for (const auto e : ends) fc.edges.push_back(e / 2);
  return fc;
}

}  // namespace detail

inline DetectabilityVerdict is_detectable(const Topology& t, const FaultStructure& faults,
                                          TraversalStats* stats = nullptr) {
  std::vector<Edge> edges;
  edges.reserve(faults.size());
  for (const auto& e : faults.edges()) edges.push_back(e.edge());
  const auto fc = detail::label_fault_components(t.node_count(), edges, stats);

  for (std::size_t c = 1; c < fc.nodes.size(); ++c)
    if (!fc.is_tree(c)) fail(ErrorCategory::internal, "sensor-only fault component is not a tree");

  DetectabilityVerdict v;
  v.detectable = fc.is_tree(0);
  if (!v.detectable) {
    Component ps;
    for (std::size_t i = 0; i < t.node_count(); ++i)
      if (fc.component[i] == 0) ps.nodes.push_back(node_at(i));
    for (std::size_t j = 0; j < edges.size(); ++j) {
      if (fc.component[edges[j].tail.index()] == 0) {
        ps.edge_indices.push_back(j);
        ps.edges.push_back(edges[j]);
      }
    }
    v.failing_component = std::move(ps);
  }
  return v;
}

struct UndetectabilityDiagnosis {
  /// Sensor-only components, each detectable on its own.
  std::vector<FaultStructure> detectable_components;
  /// Smallest node set whose fault edges must go; ties broken by smallest ids.
  std::vector<NodeId> culprit_nodes;
  /// Every culprit set of the minimal size, lexicographic.
  std::vector<std::vector<NodeId>> alternatives;
  /// The structure with the culprits' fault edges removed.
  FaultStructure remaining;
};

inline UndetectabilityDiagnosis diagnose_undetectability(const Topology& t, const FaultStructure& faults,
                                                         std::size_t max_subsets = 1'000'000) {
  const DetectabilityVerdict verdict = is_detectable(t, faults);
  if (verdict.detectable) fail(ErrorCategory::contract, "diagnose_undetectability called on a detectable structure");

  UndetectabilityDiagnosis d;
  const ComponentPartition p = classify_components(t, faults);
  for (const auto& c : p.sensor_only) {
    std::vector<FaultEdge> part;
    for (const auto j : c.edge_indices) part.push_back(faults.edges()[j]);
    d.detectable_components.push_back(FaultStructure::create(t, std::move(part)));
  }

  std::vector<NodeId> pool;
  for (const auto n : p.ps_component.nodes) {
    if (n == kReference) continue;
    const bool has_edge = std::any_of(faults.edges().begin(), faults.edges().end(),
                                      [&](const FaultEdge& e) { return e.tail == n; });
    if (has_edge) pool.push_back(n);
  }

  const auto without = [&](const std::vector<NodeId>& removed) {
    std::vector<FaultEdge> kept;
    for (const auto& e : faults.edges())
      if (std::find(removed.begin(), removed.end(), e.tail) == removed.end()) kept.push_back(e);
    return FaultStructure::create(t, std::move(kept));
  };

  std::size_t tried = 0;
  for (std::size_t k = 1; k <= pool.size() && d.alternatives.empty(); ++k) {
    std::vector<std::size_t> pick(k);
    std::iota(pick.begin(), pick.end(), 0);
    while (true) {
      if (++tried > max_subsets) fail(ErrorCategory::infeasible, "culprit search exceeded its subset budget");
      std::vector<NodeId> subset;
      for (const auto i : pick) subset.push_back(pool[i]);
      if (is_detectable(t, without(subset)).detectable) d.alternatives.push_back(subset);
      // Next k-combination in lexicographic order.
      std::size_t i = k;
      while (i > 0 && pick[i - 1] == pool.size() - k + i - 1) --i;
      if (i == 0) break;
      ++pick[i - 1];
      for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
    }
  }
  // Removing every PS fault edge always leaves a forest, so a set exists.
  if (d.alternatives.empty()) fail(ErrorCategory::internal, "no culprit set found");
  d.culprit_nodes = d.alternatives.front();
  d.remaining = without(d.culprit_nodes);
  return d;
}

}  // namespace leakdet
