#pragma once

// Residual graph (sensor tree), fault edges and their incidence algebra.
//
// Nodes are consumption zones plus one reference node that merges the
// network source and the consumption sink. Residual edges are the flow
// sensors. Every fault edge leaves a non-reference node:
//   leak            node -> reference
//   sensor fault    node -> parent  (opposes the node's incoming sensor)
//   merged anomaly  node -> reference, only at nodes fed by the reference,
//                   where leak and sensor fault are parallel edges.

#include <leakdet/error.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace leakdet {

struct NodeId {
  std::uint32_t value = 0;

  constexpr std::size_t index() const { return value; }
  friend constexpr auto operator<=>(NodeId, NodeId) = default;
};

inline constexpr NodeId kReference{0};

constexpr NodeId node_at(std::size_t index) {
  return NodeId{static_cast<std::uint32_t>(index)};
}

struct Edge {
  NodeId tail;
  NodeId head;

  friend constexpr bool operator==(const Edge&, const Edge&) = default;
};

struct Sensor {
  std::string id;
  NodeId tail;
  NodeId head;

  friend bool operator==(const Sensor&, const Sensor&) = default;
};

/// Label-level description of a topology, as read from a file.
struct TopologySpec {
  struct SensorSpec {
    std::string id;
    std::string from;
    std::string to;
  };

  std::string reference;
  std::vector<std::string> nodes;  // may or may not list the reference
  std::vector<SensorSpec> sensors;
  // Constituent zones of fused nodes; nodes absent here represent themselves.
  std::map<std::string, std::vector<std::string>> zones;
};

/// A validated directed sensor tree rooted at the reference node.
///
/// Node ids are normalized on construction: the reference is 0 and the
/// remaining nodes keep their listed order. Immutable once built.
class Topology {
 public:
  static Topology create(const TopologySpec& spec);

  std::size_t node_count() const { return labels_.size(); }
  std::size_t sensor_count() const { return sensors_.size(); }
  NodeId reference() const { return kReference; }

  const std::string& label(NodeId n) const { return labels_.at(n.index()); }
  const std::vector<std::string>& zones(NodeId n) const { return zones_.at(n.index()); }
  std::span<const Sensor> sensors() const { return sensors_; }
  const Sensor& sensor(std::size_t i) const { return sensors_.at(i); }

  /// Index of the sensor feeding `n`; the reference has none.
  std::optional<std::size_t> incoming_sensor(NodeId n) const {
    const auto s = incoming_.at(n.index());
    if (s == kNone) return std::nullopt;
    return s;
  }

  NodeId parent(NodeId n) const {
    const auto s = incoming_sensor(n);
    if (!s) fail(ErrorCategory::contract, "reference node has no parent");
    return sensors_[*s].tail;
  }

  bool is_reference_adjacent(NodeId n) const {
    return n != kReference && parent(n) == kReference;
  }

  std::optional<NodeId> find_node(std::string_view label) const {
    const auto it = node_index_.find(label);
    if (it == node_index_.end()) return std::nullopt;
    return node_at(it->second);
  }

  std::optional<std::size_t> find_sensor(std::string_view id) const {
    const auto it = sensor_index_.find(id);
    if (it == sensor_index_.end()) return std::nullopt;
    return it->second;
  }

  /// Node whose constituent zones include `zone`.
  std::optional<NodeId> node_of_zone(std::string_view zone) const {
    for (std::size_t i = 0; i < zones_.size(); ++i)
      if (std::find(zones_[i].begin(), zones_[i].end(), zone) != zones_[i].end())
        return node_at(i);
    return std::nullopt;
  }

  TopologySpec to_spec() const;

  /// Hash of the normalized topology; keys cached catalogs.
  const std::string& fingerprint() const { return fingerprint_; }

  friend bool operator==(const Topology&, const Topology&) = default;

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  Topology() = default;
  void finalize();

  std::vector<std::string> labels_;
  std::vector<std::vector<std::string>> zones_;
  std::vector<Sensor> sensors_;
  std::vector<std::size_t> incoming_;
  std::map<std::string, std::size_t, std::less<>> node_index_;
  std::map<std::string, std::size_t, std::less<>> sensor_index_;
  std::string fingerprint_;

  friend Topology merge_nodes(const Topology&, std::string_view);
};

namespace detail {

// Finds one directed cycle, returned as a closed node walk.
inline std::vector<std::size_t> find_directed_cycle(
    std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  std::vector<std::vector<std::size_t>> out(n);
  for (const auto& [t, h] : edges) out[t].push_back(h);
  enum : unsigned char { white, grey, black };
  std::vector<unsigned char> color(n, white);
  std::vector<std::size_t> via(n, 0);
  for (std::size_t root = 0; root < n; ++root) {
    if (color[root] != white) continue;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
    color[root] = grey;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      if (next < out[v].size()) {
        const std::size_t w = out[v][next++];
        if (color[w] == grey) {
          std::vector<std::size_t> cycle{w};
          for (std::size_t u = v; u != w; u = via[u]) cycle.push_back(u);
          cycle.push_back(w);
          std::reverse(cycle.begin(), cycle.end());
          return cycle;
        }
        if (color[w] == white) {
          color[w] = grey;
          via[w] = v;
          stack.emplace_back(w, 0);
        }
      } else {
        color[v] = black;
        stack.pop_back();
      }
    }
  }
  return {};
}

inline std::string compute_fingerprint(const Topology& t);
inline std::string fnv1a_hex(std::string_view text);

}  // namespace detail

inline void Topology::finalize() {
  node_index_.clear();
  for (std::size_t i = 0; i < labels_.size(); ++i) node_index_.emplace(labels_[i], i);
  sensor_index_.clear();
  for (std::size_t i = 0; i < sensors_.size(); ++i) sensor_index_.emplace(sensors_[i].id, i);
  incoming_.assign(labels_.size(), kNone);
  for (std::size_t s = 0; s < sensors_.size(); ++s) incoming_[sensors_[s].head.index()] = s;
  fingerprint_ = detail::compute_fingerprint(*this);
}

inline Topology Topology::create(const TopologySpec& spec) {
  const auto structural = [](const std::string& msg) { fail(ErrorCategory::structural, msg); };

  if (spec.reference.empty()) structural("topology: reference label is empty");
  Topology t;
  t.labels_.push_back(spec.reference);
  t.node_index_.emplace(spec.reference, 0);
  for (const auto& label : spec.nodes) {
    if (label.empty()) structural("topology: empty node label");
    if (label == spec.reference) continue;
    if (!t.node_index_.emplace(label, t.labels_.size()).second)
      structural("topology: duplicate node label '" + label + "'");
    t.labels_.push_back(label);
  }
  const std::size_t n = t.labels_.size();

  t.zones_.resize(n);
  for (std::size_t i = 1; i < n; ++i) t.zones_[i] = {t.labels_[i]};
  for (const auto& [label, zones] : spec.zones) {
    const auto node = t.find_node(label);
    if (!node) structural("topology: zones given for unknown node '" + label + "'");
    t.zones_[node->index()] = zones;
  }

  std::vector<std::pair<std::size_t, std::size_t>> raw;
  for (const auto& s : spec.sensors) {
    if (s.id.empty()) structural("topology: sensor with empty id");
    if (!t.sensor_index_.emplace(s.id, t.sensors_.size()).second)
      structural("topology: duplicate sensor id '" + s.id + "'");
    const auto from = t.find_node(s.from);
    const auto to = t.find_node(s.to);
    if (!from) structural("topology: sensor '" + s.id + "' starts at unknown node '" + s.from + "'");
    if (!to) structural("topology: sensor '" + s.id + "' ends at unknown node '" + s.to + "'");
    if (*from == *to) structural("topology: sensor '" + s.id + "' is a self-loop");
    t.sensors_.push_back({s.id, *from, *to});
    raw.emplace_back(from->index(), to->index());
  }

  if (const auto cycle = detail::find_directed_cycle(n, raw); !cycle.empty()) {
    std::string msg = "topology: sensor graph has a directed cycle: ";
    for (std::size_t i = 0; i < cycle.size(); ++i) msg += (i ? " -> " : "") + t.labels_[cycle[i]];
    structural(msg);
  }
  if (t.sensors_.size() + 1 != n) {
    structural("topology: expected " + std::to_string(n - 1) + " sensors for " + std::to_string(n) +
               " nodes, got " + std::to_string(t.sensors_.size()));
  }
  std::vector<int> indegree(n, 0);
  for (const auto& s : t.sensors_) ++indegree[s.head.index()];
  if (indegree[0] != 0) structural("topology: reference node '" + spec.reference + "' has an incoming sensor");
  for (std::size_t i = 1; i < n; ++i) {
    if (indegree[i] != 1) {
      structural("topology: node '" + t.labels_[i] + "' has " + std::to_string(indegree[i]) +
                 " incoming sensors, expected exactly 1");
    }
  }
  // In-degree one everywhere below an acyclic root means every node hangs off the reference.
  t.finalize();
  return t;
}

inline TopologySpec Topology::to_spec() const {
  TopologySpec spec;
  spec.reference = labels_[0];
  spec.nodes = labels_;
  for (const auto& s : sensors_) spec.sensors.push_back({s.id, labels_[s.tail.index()], labels_[s.head.index()]});
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const bool self = i > 0 && zones_[i].size() == 1 && zones_[i][0] == labels_[i];
    if (!self && !(i == 0 && zones_[i].empty())) spec.zones[labels_[i]] = zones_[i];
  }
  return spec;
}

/// 64-bit FNV-1a as 16 hex digits.
inline std::string detail::fnv1a_hex(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = hex[h & 0xf];
  return out;
}

/// Hash of a canonical rendering of the normalized topology.
inline std::string detail::compute_fingerprint(const Topology& t) {
  std::ostringstream canon;
  canon << "ref=" << t.label(kReference) << ';';
  for (std::size_t i = 0; i < t.node_count(); ++i) {
    canon << "n" << i << '=' << t.label(node_at(i)) << '[';
    for (const auto& z : t.zones(node_at(i))) canon << z << ',';
    canon << "];";
  }
  for (const auto& s : t.sensors()) canon << "s=" << s.id << ':' << s.tail.value << '>' << s.head.value << ';';
  return fnv1a_hex(canon.str());
}

inline const std::string& fingerprint(const Topology& t) { return t.fingerprint(); }

// ---------------------------------------------------------------------------
// Fault edges

enum class FaultKind { leak, sensor_fault, merged_anomaly };

constexpr std::string_view to_string(FaultKind k) {
  switch (k) {
    case FaultKind::leak: return "leak";
    case FaultKind::sensor_fault: return "sensor_fault";
    case FaultKind::merged_anomaly: return "anomaly";
  }
  return "leak";
}

struct FaultEdge {
  FaultKind kind = FaultKind::leak;
  NodeId tail;
  NodeId head;
  std::string label;

  Edge edge() const { return {tail, head}; }
  bool is_leak_like() const { return kind != FaultKind::sensor_fault; }

  friend bool operator==(const FaultEdge&, const FaultEdge&) = default;
};

/// Builds the fault edge of `kind` at `node`. At nodes fed directly by the
/// reference, leak and sensor fault collapse into the merged anomaly.
inline FaultEdge make_fault(const Topology& t, FaultKind kind, NodeId node) {
  if (node.index() >= t.node_count()) fail(ErrorCategory::structural, "fault at unknown node id");
  if (node == kReference) fail(ErrorCategory::structural, "no fault edge can leave the reference node");
  const std::string& name = t.label(node);
  if (t.is_reference_adjacent(node)) return {FaultKind::merged_anomaly, node, kReference, "LF" + name};
  switch (kind) {
    case FaultKind::leak: return {kind, node, kReference, "L" + name};
    case FaultKind::sensor_fault: return {kind, node, t.parent(node), "D" + name};
    case FaultKind::merged_anomaly:
      fail(ErrorCategory::structural, "merged anomaly requested at node '" + name + "' which is not fed by the reference");
  }
  fail(ErrorCategory::internal, "unreachable fault kind");
}

inline std::optional<FaultKind> parse_fault_kind(std::string_view s) {
  if (s == "leak") return FaultKind::leak;
  if (s == "sensor_fault") return FaultKind::sensor_fault;
  if (s == "anomaly") return FaultKind::merged_anomaly;
  return std::nullopt;
}

/// Resolves labels such as "L3", "D4", "LF1".
inline FaultEdge parse_fault_label(const Topology& t, std::string_view label) {
  FaultKind kind;
  std::string_view node;
  if (label.starts_with("LF")) {
    kind = FaultKind::merged_anomaly;
    node = label.substr(2);
  } else if (label.starts_with("L")) {
    kind = FaultKind::leak;
    node = label.substr(1);
  } else if (label.starts_with("D")) {
    kind = FaultKind::sensor_fault;
    node = label.substr(1);
  } else {
    fail(ErrorCategory::structural, "unrecognized fault label '" + std::string(label) + "'");
  }
  const auto id = t.find_node(node);
  if (!id) fail(ErrorCategory::structural, "fault label '" + std::string(label) + "' names unknown node");
  FaultEdge e = make_fault(t, kind, *id);
  if (e.label != label) fail(ErrorCategory::structural, "fault label '" + std::string(label) + "' should be '" + e.label + "'");
  return e;
}

/// A validated set of simultaneously hypothesized fault edges.
class FaultStructure {
 public:
  FaultStructure() = default;

  static FaultStructure create(const Topology& t, std::vector<FaultEdge> edges) {
    const auto structural = [](const std::string& msg) { fail(ErrorCategory::structural, msg); };
    std::set<std::string_view> labels;
    std::set<std::pair<FaultKind, NodeId>> kinds;
    std::map<std::pair<NodeId, NodeId>, std::size_t> pairs;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const auto& e = edges[i];
      if (e.tail.index() >= t.node_count() || e.head.index() >= t.node_count())
        structural("fault '" + e.label + "' has an endpoint outside the topology");
      if (e.tail == kReference) structural("fault '" + e.label + "' leaves the reference node");
      switch (e.kind) {
        case FaultKind::leak:
          if (e.head != kReference) structural("leak '" + e.label + "' must end at the reference node");
          if (t.is_reference_adjacent(e.tail))
            structural("leak '" + e.label + "' sits at a reference-fed node; use the merged anomaly");
          break;
        case FaultKind::sensor_fault:
          if (e.head != t.parent(e.tail)) structural("sensor fault '" + e.label + "' must oppose its sensor");
          if (t.is_reference_adjacent(e.tail))
            structural("sensor fault '" + e.label + "' sits at a reference-fed node; use the merged anomaly");
          break;
        case FaultKind::merged_anomaly:
          if (!t.is_reference_adjacent(e.tail) || e.head != kReference)
            structural("merged anomaly '" + e.label + "' is only allowed at reference-fed nodes");
          break;
      }
      if (!labels.insert(e.label).second) structural("duplicate fault label '" + e.label + "'");
      if (!kinds.emplace(e.kind, e.tail).second) structural("duplicate fault '" + e.label + "'");
      if (const auto [it, fresh] = pairs.emplace(std::pair{e.tail, e.head}, i); !fresh)
        structural("parallel fault edges '" + edges[it->second].label + "' and '" + e.label + "'");
    }
    FaultStructure s;
    s.edges_ = std::move(edges);
    return s;
  }

  std::span<const FaultEdge> edges() const { return edges_; }
  std::size_t size() const { return edges_.size(); }
  bool empty() const { return edges_.empty(); }

  bool contains(std::string_view label) const {
    return std::any_of(edges_.begin(), edges_.end(), [&](const FaultEdge& e) { return e.label == label; });
  }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    for (const auto& e : edges_) out.push_back(e.label);
    return out;
  }

  friend bool operator==(const FaultStructure&, const FaultStructure&) = default;

 private:
  std::vector<FaultEdge> edges_;
};

// ---------------------------------------------------------------------------
// Plain digraphs and incidence algebra

struct Digraph {
  std::size_t node_count = 0;
  std::vector<Edge> edges;
};

/// Union of residual and fault edges over the shared node set.
struct CombinedGraph {
  std::size_t node_count = 0;
  std::vector<Edge> residual_edges;
  std::vector<FaultEdge> fault_edges;

  /// Residual edges first, then fault edges.
  Digraph digraph() const {
    Digraph g{node_count, residual_edges};
    for (const auto& f : fault_edges) g.edges.push_back(f.edge());
    return g;
  }

  Digraph fault_graph() const {
    Digraph g{node_count, {}};
    for (const auto& f : fault_edges) g.edges.push_back(f.edge());
    return g;
  }

  Digraph residual_graph() const { return {node_count, residual_edges}; }
};

inline CombinedGraph build_combined_graph(const Topology& t, const FaultStructure& faults) {
  // Re-validate: a FaultStructure built for another topology must not slip through.
  FaultStructure::create(t, std::vector<FaultEdge>(faults.edges().begin(), faults.edges().end()));
  CombinedGraph g;
  g.node_count = t.node_count();
  for (const auto& s : t.sensors()) g.residual_edges.push_back({s.tail, s.head});
  g.fault_edges.assign(faults.edges().begin(), faults.edges().end());
  return g;
}

using IncidenceMatrix = Eigen::MatrixXd;

/// +1 where the edge leaves the node, -1 where it enters.
inline IncidenceMatrix incidence_matrix(const Digraph& g) {
  if (g.node_count == 0) fail(ErrorCategory::structural, "incidence matrix of an empty graph");
  IncidenceMatrix m = IncidenceMatrix::Zero(static_cast<Eigen::Index>(g.node_count),
                                            static_cast<Eigen::Index>(g.edges.size()));
  for (std::size_t j = 0; j < g.edges.size(); ++j) {
    const auto& e = g.edges[j];
    if (e.tail.index() >= g.node_count || e.head.index() >= g.node_count)
      fail(ErrorCategory::structural, "edge endpoint outside the graph");
    if (e.tail == e.head) fail(ErrorCategory::structural, "self-loop has no incidence column");
    m(static_cast<Eigen::Index>(e.tail.index()), static_cast<Eigen::Index>(j)) = 1.0;
    m(static_cast<Eigen::Index>(e.head.index()), static_cast<Eigen::Index>(j)) = -1.0;
  }
  return m;
}

/// Nodal equations A x_F = B x_R. A keeps the fault columns of the combined
/// incidence matrix and B negates the residual columns, so each row reads
/// "fault outflow = residual inflow - residual outflow" and leaks that drain
/// water come out positive.
struct LinearSystem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  std::vector<FaultEdge> unknowns;  // column order of A
};

inline LinearSystem nodal_system(const Topology& t, const FaultStructure& faults) {
  const CombinedGraph g = build_combined_graph(t, faults);
  const IncidenceMatrix full = incidence_matrix(g.digraph());
  const auto r = static_cast<Eigen::Index>(g.residual_edges.size());
  const auto f = static_cast<Eigen::Index>(g.fault_edges.size());
  return {full.rightCols(f), -full.leftCols(r), g.fault_edges};
}

/// b = B x_R without forming B. Row order is node order, reference included.
inline std::vector<double> nodal_balance(const Topology& t, std::span<const double> residuals) {
  std::vector<double> b(t.node_count(), 0.0);
  const auto sensors = t.sensors();
  for (std::size_t s = 0; s < sensors.size(); ++s) {
    b[sensors[s].head.index()] += residuals[s];
    b[sensors[s].tail.index()] -= residuals[s];
  }
  return b;
}

struct Component {
  std::vector<NodeId> nodes;              // ascending
  std::vector<std::size_t> edge_indices;  // into the source graph, ascending
  std::vector<Edge> edges;
};

/// Components of the underlying undirected graph, ordered by smallest node.
inline std::vector<Component> weakly_connected_components(const Digraph& g) {
  std::vector<std::vector<std::size_t>> incident(g.node_count);
  for (std::size_t j = 0; j < g.edges.size(); ++j) {
    const auto& e = g.edges[j];
    if (e.tail.index() >= g.node_count || e.head.index() >= g.node_count)
      fail(ErrorCategory::structural, "edge endpoint outside the graph");
    incident[e.tail.index()].push_back(j);
    if (e.head != e.tail) incident[e.head.index()].push_back(j);
  }
  std::vector<std::size_t> label(g.node_count, static_cast<std::size_t>(-1));
  std::vector<Component> out;
  for (std::size_t root = 0; root < g.node_count; ++root) {
    if (label[root] != static_cast<std::size_t>(-1)) continue;
    const std::size_t id = out.size();
    Component c;
    std::vector<std::size_t> frontier{root};
    label[root] = id;
    while (!frontier.empty()) {
      const std::size_t v = frontier.back();
      frontier.pop_back();
      c.nodes.push_back(node_at(v));
      for (const std::size_t j : incident[v]) {
        const auto& e = g.edges[j];
        const std::size_t w = e.tail.index() == v ? e.head.index() : e.tail.index();
        if (label[w] == static_cast<std::size_t>(-1)) {
          label[w] = id;
          frontier.push_back(w);
        }
      }
    }
    std::sort(c.nodes.begin(), c.nodes.end());
    out.push_back(std::move(c));
  }
  for (std::size_t j = 0; j < g.edges.size(); ++j) {
    auto& c = out[label[g.edges[j].tail.index()]];
    c.edge_indices.push_back(j);
    c.edges.push_back(g.edges[j]);
  }
  return out;
}

/// Polytree test for a weakly connected component.
inline bool is_directed_tree(const Component& c) {
  if (c.nodes.empty()) fail(ErrorCategory::contract, "is_directed_tree: empty component");
  std::map<NodeId, std::size_t> local;
  for (const auto n : c.nodes) local.emplace(n, local.size());
  Digraph g{c.nodes.size(), {}};
  for (const auto& e : c.edges) {
    const auto t = local.find(e.tail);
    const auto h = local.find(e.head);
    if (t == local.end() || h == local.end())
      fail(ErrorCategory::contract, "is_directed_tree: edge leaves the component");
    g.edges.push_back({node_at(t->second), node_at(h->second)});
  }
  if (weakly_connected_components(g).size() != 1)
    fail(ErrorCategory::contract, "is_directed_tree: component is not weakly connected");
  return c.edges.size() + 1 == c.nodes.size();
}

// ---------------------------------------------------------------------------
// Topology edits and the candidate fault set

/// Contracts the sensor's edge, fusing its head into its tail.
inline Topology merge_nodes(const Topology& t, std::string_view sensor_id) {
  const auto s = t.find_sensor(sensor_id);
  if (!s) fail(ErrorCategory::structural, "merge: unknown sensor '" + std::string(sensor_id) + "'");
  if (t.node_count() == 2)
    fail(ErrorCategory::no_estimation, "merging sensor '" + std::string(sensor_id) +
                                           "' leaves a single node: no estimation possible");
  const NodeId keep = t.sensor(*s).tail;
  const NodeId gone = t.sensor(*s).head;
  const auto remap = [&](NodeId n) {
    if (n == gone) n = keep;
    return n.value > gone.value ? NodeId{n.value - 1} : n;
  };

  Topology m;
  for (std::size_t i = 0; i < t.node_count(); ++i) {
    if (node_at(i) == gone) continue;
    m.labels_.push_back(t.labels_[i]);
    m.zones_.push_back(t.zones_[i]);
  }
  const std::size_t fused = remap(keep).index();
  if (keep != kReference) m.labels_[fused] = t.labels_[keep.index()] + "+" + t.labels_[gone.index()];
  auto& zones = m.zones_[fused];
  zones.insert(zones.end(), t.zones_[gone.index()].begin(), t.zones_[gone.index()].end());
  for (std::size_t i = 0; i < t.sensor_count(); ++i) {
    if (i == *s) continue;
    const auto& o = t.sensor(i);
    m.sensors_.push_back({o.id, remap(o.tail), remap(o.head)});
  }
  m.finalize();
  return m;
}

/// Every node leaks and every sensor is faulty, with the leak/fault pair at
/// reference-fed nodes collapsed into one anomaly. Leak-like unknowns come
/// first in node order, then sensor faults in node order.
inline FaultStructure candidate_fault_edges(const Topology& t) {
  std::vector<FaultEdge> edges;
  for (std::size_t i = 1; i < t.node_count(); ++i) edges.push_back(make_fault(t, FaultKind::leak, node_at(i)));
  for (std::size_t i = 1; i < t.node_count(); ++i)
    if (!t.is_reference_adjacent(node_at(i))) edges.push_back(make_fault(t, FaultKind::sensor_fault, node_at(i)));
  return FaultStructure::create(t, std::move(edges));
}

}  // namespace leakdet
