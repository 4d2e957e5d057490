#pragma once

// Offline catalog of every detectable fault structure with |V|-1 edges.
//
// A detectable structure of that size is a spanning tree of the fault
// graph, so its reduced nodal system can be solved by peeling leaves toward
// the reference. Each entry stores that peeling order.

#include <leakdet/detectability.hpp>
#include <leakdet/graph_model.hpp>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace leakdet {

/// Leaf-to-root elimination order for a spanning-tree fault structure.
struct SolvePlan {
  struct Step {
    std::uint32_t node;    // equation being consumed
    std::uint32_t slot;    // unknown it determines (position in the structure)
    std::uint32_t parent;  // other endpoint of that unknown's edge
    double sign;           // +1 if the edge leaves `node`
  };
  std::vector<Step> steps;

  /// Solves the reduced system for the nodal balance `b` (reference row
  /// ignored). `scratch` must hold node_count entries; `x` one per step.
  void solve(std::span<const double> b, std::span<double> scratch, std::span<double> x) const {
    std::fill(scratch.begin(), scratch.end(), 0.0);
    for (const auto& s : steps) {
      const double value = (b[s.node] - scratch[s.node]) * s.sign;
      x[s.slot] = value;
      scratch[s.parent] -= s.sign * value;
    }
  }
};

/// Builds the plan, or returns nothing when the edges are not a spanning tree.
inline std::optional<SolvePlan> make_solve_plan(std::size_t node_count, std::span<const Edge> edges) {
  if (edges.size() + 1 != node_count) return std::nullopt;
  std::vector<std::vector<std::uint32_t>> incident(node_count);
  for (std::uint32_t j = 0; j < edges.size(); ++j) {
    incident[edges[j].tail.index()].push_back(j);
    incident[edges[j].head.index()].push_back(j);
  }
  std::vector<bool> seen(node_count, false);
  std::vector<SolvePlan::Step> order;
  std::vector<std::uint32_t> queue{0};
  seen[0] = true;
  for (std::size_t q = 0; q < queue.size(); ++q) {
    const std::uint32_t v = queue[q];
    for (const auto j : incident[v]) {
      const auto& e = edges[j];
      const std::uint32_t w = e.tail.value == v ? e.head.value : e.tail.value;
      if (seen[w]) continue;
      seen[w] = true;
      queue.push_back(w);
      order.push_back({w, j, v, e.tail.value == w ? 1.0 : -1.0});
    }
  }
  if (order.size() + 1 != node_count) return std::nullopt;
  std::reverse(order.begin(), order.end());
  return SolvePlan{std::move(order)};
}

struct CatalogEntry {
  std::vector<std::uint32_t> members;  // ascending indices into the candidate list
  SolvePlan plan;
};

struct DetectableCatalog {
  std::string fingerprint;
  std::size_t node_count = 0;
  std::vector<FaultEdge> candidates;
  std::vector<std::string> forced;
  std::vector<std::string> excluded;
  std::vector<CatalogEntry> entries;
  std::size_t detectable_count = 0;
  std::size_t undetectable_count = 0;

  FaultStructure structure(const Topology& t, std::size_t i) const {
    std::vector<FaultEdge> edges;
    for (const auto m : entries.at(i).members) edges.push_back(candidates[m]);
    return FaultStructure::create(t, std::move(edges));
  }

  std::optional<std::size_t> find(std::span<const std::uint32_t> members) const {
    for (std::size_t i = 0; i < entries.size(); ++i)
      if (std::equal(entries[i].members.begin(), entries[i].members.end(), members.begin(), members.end())) return i;
    return std::nullopt;
  }
};

struct EnumerationOptions {
  double max_subsets = 1e7;
};

inline double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

namespace detail {

inline std::vector<std::uint32_t> candidate_indices(const FaultStructure& candidates,
                                                    std::span<const FaultEdge> chosen, const char* role) {
  std::vector<std::uint32_t> out;
  for (const auto& e : chosen) {
    const auto it = std::find(candidates.edges().begin(), candidates.edges().end(), e);
    if (it == candidates.edges().end())
      fail(ErrorCategory::contract, std::string(role) + " edge '" + e.label + "' is not a candidate fault");
    const auto idx = static_cast<std::uint32_t>(it - candidates.edges().begin());
    if (std::find(out.begin(), out.end(), idx) == out.end()) out.push_back(idx);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

/// Every size-(|V|-1) subset of the candidate faults that contains all
/// `forced` edges, avoids all `excluded` edges and is detectable, in
/// lexicographic order of candidate indices.
inline DetectableCatalog enumerate_detectable(const Topology& t, std::span<const FaultEdge> forced = {},
                                              std::span<const FaultEdge> excluded = {},
                                              const EnumerationOptions& options = {}) {
  const FaultStructure candidates = candidate_fault_edges(t);
  const auto must = detail::candidate_indices(candidates, forced, "forced");
  const auto banned = detail::candidate_indices(candidates, excluded, "excluded");
  for (const auto i : must)
    if (std::binary_search(banned.begin(), banned.end(), i))
      fail(ErrorCategory::contract, "edge '" + candidates.edges()[i].label + "' is both forced and excluded");

  const std::size_t size = t.node_count() - 1;
  if (must.size() > size) {
    fail(ErrorCategory::infeasible, std::to_string(must.size()) + " forced faults exceed the " +
                                        std::to_string(size) + " unknowns a structure can hold");
  }
  const std::size_t total = candidates.size();
  if (binomial(total, size) > options.max_subsets) {
    fail(ErrorCategory::infeasible, "enumeration would visit C(" + std::to_string(total) + "," +
                                        std::to_string(size) + ") subsets, above the cap");
  }

  DetectableCatalog cat;
  cat.fingerprint = fingerprint(t);
  cat.node_count = t.node_count();
  cat.candidates.assign(candidates.edges().begin(), candidates.edges().end());
  for (const auto i : must) cat.forced.push_back(cat.candidates[i].label);
  for (const auto i : banned) cat.excluded.push_back(cat.candidates[i].label);

  std::vector<std::uint32_t> free;
  for (std::uint32_t i = 0; i < total; ++i)
    if (!std::binary_search(must.begin(), must.end(), i) && !std::binary_search(banned.begin(), banned.end(), i))
      free.push_back(i);
  const std::size_t k = size - must.size();
  if (k > free.size()) return cat;

  std::vector<std::size_t> pick(k);
  std::iota(pick.begin(), pick.end(), 0);
  std::vector<std::uint32_t> members;
  std::vector<Edge> edges;
  while (true) {
    members = must;
    for (const auto p : pick) members.push_back(free[p]);
    std::sort(members.begin(), members.end());
    edges.clear();
    for (const auto m : members) edges.push_back(cat.candidates[m].edge());

    if (detail::label_fault_components(t.node_count(), edges).is_tree(0)) {
      auto plan = make_solve_plan(t.node_count(), edges);
      if (!plan) fail(ErrorCategory::internal, "detectable structure without a spanning-tree plan");
      cat.entries.push_back({members, std::move(*plan)});
      ++cat.detectable_count;
    } else {
      ++cat.undetectable_count;
    }

    std::size_t i = k;
    while (i > 0 && pick[i - 1] == free.size() - k + i - 1) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
  }
  return cat;
}

}  // namespace leakdet
