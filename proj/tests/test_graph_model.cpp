#include "fixtures.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace leakdet;
using fixtures::category_of;
using fixtures::four_sensor;
using fixtures::six_sensor;
using fixtures::structure;

namespace {

oracle::IntMatrix to_int(const Eigen::MatrixXd& m) {
  oracle::IntMatrix out(static_cast<std::size_t>(m.rows()), std::vector<std::int64_t>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = static_cast<std::int64_t>(m(i, j));
  return out;
}

}  // namespace

TEST(Topology, NormalizesReferenceToZero) {
  const Topology t = Topology::create({"src", {"a", "src", "b"}, {{"y1", "src", "a"}, {"y2", "a", "b"}}, {}});
  EXPECT_EQ(t.label(kReference), "src");
  EXPECT_EQ(t.label(node_at(1)), "a");
  EXPECT_EQ(t.label(node_at(2)), "b");
  EXPECT_EQ(t.parent(node_at(2)), node_at(1));
  EXPECT_TRUE(t.is_reference_adjacent(node_at(1)));
  EXPECT_FALSE(t.is_reference_adjacent(node_at(2)));
}

TEST(Topology, RejectsInvariantViolations) {
  // Cycle among non-reference nodes.
  const auto cyclic = [] {
    Topology::create({"0", {"0", "1", "2", "3"}, {{"a", "0", "1"}, {"b", "2", "3"}, {"c", "3", "2"}}, {}});
  };
  EXPECT_EQ(category_of(cyclic), ErrorCategory::structural);
  try {
    cyclic();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("cycle"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("2 -> 3"), std::string::npos);
  }
  // Wrong edge count.
  EXPECT_EQ(category_of([] { Topology::create({"0", {"0", "1", "2"}, {{"a", "0", "1"}}, {}}); }), ErrorCategory::structural);
  // Reference with an incoming sensor.
  EXPECT_EQ(category_of([] { Topology::create({"0", {"0", "1"}, {{"a", "1", "0"}}, {}}); }), ErrorCategory::structural);
  // Duplicate sensor ids, unknown endpoints, self-loops.
  EXPECT_EQ(category_of([] { Topology::create({"0", {"0", "1", "2"}, {{"a", "0", "1"}, {"a", "1", "2"}}, {}}); }),
            ErrorCategory::structural);
  EXPECT_EQ(category_of([] { Topology::create({"0", {"0", "1"}, {{"a", "0", "9"}}, {}}); }), ErrorCategory::structural);
  EXPECT_EQ(category_of([] { Topology::create({"0", {"0", "1"}, {{"a", "1", "1"}}, {}}); }), ErrorCategory::structural);
  // Node with two incoming sensors.
  EXPECT_EQ(category_of([] {
              Topology::create({"0", {"0", "1", "2", "3"}, {{"a", "0", "1"}, {"b", "0", "2"}, {"c", "1", "2"}}, {}});
            }),
            ErrorCategory::structural);
}

TEST(Topology, FingerprintTracksStructure) {
  const Topology a = four_sensor();
  const Topology b = four_sensor();
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  EXPECT_EQ(a.fingerprint().size(), 16u);
  EXPECT_NE(a.fingerprint(), six_sensor().fingerprint());
  EXPECT_NE(a.fingerprint(), merge_nodes(a, "2").fingerprint());
}

TEST(CombinedGraph, FourSensorWithAllCandidates) {
  const Topology t = four_sensor();
  const FaultStructure all = candidate_fault_edges(t);
  const CombinedGraph g = build_combined_graph(t, all);
  EXPECT_EQ(g.node_count, 5u);
  EXPECT_EQ(g.residual_edges.size(), 4u);
  EXPECT_EQ(g.fault_edges.size(), 7u);
  EXPECT_EQ(g.digraph().edges.size(), 11u);
  EXPECT_EQ(g.fault_graph().edges.size(), 7u);
  EXPECT_EQ(g.residual_graph().edges.size(), 4u);
}

TEST(CombinedGraph, EmptyFaultsIsResidualGraph) {
  const Topology t = six_sensor();
  const CombinedGraph g = build_combined_graph(t, FaultStructure{});
  EXPECT_EQ(g.digraph().edges, g.residual_graph().edges);
  EXPECT_TRUE(g.fault_edges.empty());
}

TEST(CombinedGraph, SixSensorWorkedStructure) {
  const Topology t = six_sensor();
  const CombinedGraph g = build_combined_graph(t, structure(t, {"L3", "L5", "D3", "D4", "D5"}));
  EXPECT_EQ(g.residual_edges.size(), 6u);
  ASSERT_EQ(g.fault_edges.size(), 5u);
  EXPECT_EQ(g.fault_edges[2].edge(), (Edge{node_at(3), node_at(2)}));
}

TEST(CombinedGraph, RejectsForeignOrDuplicateFaults) {
  const Topology t = four_sensor();
  const Topology big = six_sensor();
  const FaultStructure foreign = structure(big, {"L6"});
  EXPECT_EQ(category_of([&] { build_combined_graph(t, foreign); }), ErrorCategory::structural);
  EXPECT_EQ(category_of([&] { structure(t, {"L3", "L3"}); }), ErrorCategory::structural);
  // A leak cannot sit beside the merged anomaly at a reference-fed node.
  const auto parallel = [&] {
    FaultStructure::create(t, {make_fault(t, FaultKind::merged_anomaly, node_at(1)),
                               FaultEdge{FaultKind::leak, node_at(1), kReference, "L1"}});
  };
  EXPECT_EQ(category_of(parallel), ErrorCategory::structural);
}

TEST(Incidence, SingleEdgeSignConvention) {
  const IncidenceMatrix m = incidence_matrix({2, {{node_at(0), node_at(1)}}});
  ASSERT_EQ(m.rows(), 2);
  ASSERT_EQ(m.cols(), 1);
  EXPECT_EQ(m(0, 0), 1.0);
  EXPECT_EQ(m(1, 0), -1.0);
}

TEST(Incidence, NoEdges) {
  const IncidenceMatrix m = incidence_matrix({4, {}});
  EXPECT_EQ(m.rows(), 4);
  EXPECT_EQ(m.cols(), 0);
}

TEST(Incidence, FullFourSensorGraphHasRankFour) {
  const Topology t = four_sensor();
  const IncidenceMatrix m = incidence_matrix(build_combined_graph(t, candidate_fault_edges(t)).digraph());
  EXPECT_EQ(m.rows(), 5);
  EXPECT_EQ(m.cols(), 11);
  EXPECT_EQ(oracle::rank(to_int(m)), 4u);
}

TEST(Incidence, ColumnsHaveOnePlusAndOneMinus) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 10;
    Digraph g{n, {}};
    const std::size_t m = rng() % 15;
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t a = rng() % n;
      std::size_t b = rng() % n;
      if (a == b) b = (b + 1) % n;
      g.edges.push_back({node_at(a), node_at(b)});
    }
    const IncidenceMatrix I = incidence_matrix(g);
    for (Eigen::Index j = 0; j < I.cols(); ++j) {
      EXPECT_EQ(I.col(j).sum(), 0.0);
      EXPECT_EQ((I.col(j).array() == 1.0).count(), 1);
      EXPECT_EQ((I.col(j).array() == -1.0).count(), 1);
    }
  }
}

TEST(Incidence, RankIsNodesMinusComponents) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 10;
    Digraph g{n, {}};
    const std::size_t m = rng() % 14;
    oracle::UnionFind uf(n);
    std::size_t components = n;
    for (std::size_t j = 0; j < m && n > 1; ++j) {
      const std::size_t a = rng() % n;
      std::size_t b = rng() % n;
      if (a == b) b = (b + 1) % n;
      g.edges.push_back({node_at(a), node_at(b)});
      if (uf.unite(a, b)) --components;
    }
    EXPECT_EQ(weakly_connected_components(g).size(), components);
    EXPECT_EQ(oracle::rank(to_int(incidence_matrix(g))), n - components);
  }
}

TEST(Incidence, ReducedTreeMatrixIsNonsingular) {
  // Any n-1 rows of a directed tree's incidence matrix are independent.
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng() % 11;
    Digraph g{n, {}};
    for (std::size_t i = 1; i < n; ++i) {
      const std::size_t p = rng() % i;
      if (rng() % 2) g.edges.push_back({node_at(p), node_at(i)});
      else g.edges.push_back({node_at(i), node_at(p)});
    }
    const auto I = to_int(incidence_matrix(g));
    for (std::size_t drop = 0; drop < n; ++drop) {
      oracle::IntMatrix reduced;
      for (std::size_t r = 0; r < n; ++r)
        if (r != drop) reduced.push_back(I[r]);
      EXPECT_EQ(oracle::rank(reduced), n - 1);
    }
  }
}

TEST(NodalSystem, AllLeakLeafRow) {
  const Topology t = four_sensor();
  const LinearSystem sys = nodal_system(t, structure(t, {"LF1", "L2", "L3", "L4"}));
  ASSERT_EQ(sys.A.rows(), 5);
  ASSERT_EQ(sys.A.cols(), 4);
  ASSERT_EQ(sys.B.cols(), 4);
  // Node 3: L3 = E3.
  EXPECT_EQ(sys.A.row(3), Eigen::RowVector4d(0, 0, 1, 0));
  EXPECT_EQ(sys.B.row(3), Eigen::RowVector4d(0, 0, 1, 0));
}

TEST(NodalSystem, SensorFaultRow) {
  const Topology t = four_sensor();
  const LinearSystem sys = nodal_system(t, structure(t, {"LF1", "D2", "L3", "L4"}));
  // Node 2: D2 = E2 - E3.
  EXPECT_EQ(sys.A.row(2), Eigen::RowVector4d(0, 1, 0, 0));
  EXPECT_EQ(sys.B.row(2), Eigen::RowVector4d(0, 1, -1, 0));
  // Node 1 receives the sensor-fault edge: LF1 - D2 = E1 - E2 - E4.
  EXPECT_EQ(sys.A.row(1), Eigen::RowVector4d(1, -1, 0, 0));
}

TEST(NodalSystem, EmptyFaultsIsConservation) {
  const Topology t = four_sensor();
  const LinearSystem sys = nodal_system(t, FaultStructure{});
  EXPECT_EQ(sys.A.rows(), 5);
  EXPECT_EQ(sys.A.cols(), 0);
  // Zero residuals conserve flow; a lone nonzero residual does not.
  EXPECT_TRUE((sys.B * Eigen::Vector4d::Zero()).isZero());
  EXPECT_FALSE((sys.B * Eigen::Vector4d(1, 0, 0, 0)).isZero());
  // Columns of B sum to zero.
  EXPECT_TRUE(sys.B.colwise().sum().isZero());
}

TEST(NodalSystem, MatchesCombinedIncidence) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 200; ++trial) {
    const auto tree = oracle::random_tree(2 + rng() % 7, rng);
    const Topology t = oracle::to_topology(tree, rng);
    const FaultStructure all = candidate_fault_edges(t);
    std::vector<FaultEdge> pick;
    for (const auto& e : all.edges())
      if (rng() % 2) pick.push_back(e);
    const FaultStructure s = FaultStructure::create(t, pick);
    const LinearSystem sys = nodal_system(t, s);
    const IncidenceMatrix I = incidence_matrix(build_combined_graph(t, s).digraph());
    Eigen::MatrixXd stacked(I.rows(), I.cols());
    stacked << -sys.B, sys.A;
    EXPECT_EQ(stacked, I);
    // b = B x_R agrees with the matrix product.
    std::vector<double> xr(t.sensor_count());
    for (auto& v : xr) v = std::uniform_real_distribution<double>(-5, 5)(rng);
    const auto b = nodal_balance(t, xr);
    const Eigen::VectorXd Bx = sys.B * Eigen::Map<const Eigen::VectorXd>(xr.data(), static_cast<Eigen::Index>(xr.size()));
    for (std::size_t i = 0; i < b.size(); ++i) EXPECT_NEAR(b[i], Bx(static_cast<Eigen::Index>(i)), 1e-12);
  }
}

TEST(Components, SixSensorWorkedStructure) {
  const Topology t = six_sensor();
  const auto comps = weakly_connected_components(build_combined_graph(t, structure(t, {"L3", "L5", "D3", "D4", "D5"})).fault_graph());
  ASSERT_EQ(comps.size(), 3u);
  EXPECT_EQ(fixtures::node_labels(t, comps[0].nodes), (std::vector<std::string>{"0", "2", "3", "5"}));
  EXPECT_EQ(fixtures::node_labels(t, comps[1].nodes), (std::vector<std::string>{"1", "4"}));
  EXPECT_EQ(fixtures::node_labels(t, comps[2].nodes), (std::vector<std::string>{"6"}));
  EXPECT_EQ(comps[0].edges.size(), 4u);
  EXPECT_FALSE(is_directed_tree(comps[0]));
  EXPECT_TRUE(is_directed_tree(comps[1]));
  EXPECT_TRUE(is_directed_tree(comps[2]));
}

TEST(Components, EdgelessAndFull) {
  EXPECT_EQ(weakly_connected_components({6, {}}).size(), 6u);
  const Topology t = four_sensor();
  const auto comps = weakly_connected_components(build_combined_graph(t, candidate_fault_edges(t)).fault_graph());
  ASSERT_EQ(comps.size(), 1u);
  EXPECT_EQ(comps[0].nodes.size(), 5u);
}

TEST(Components, OutputIsAPartition) {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    Digraph g{n, {}};
    for (std::size_t j = 0, m = rng() % 12; j < m && n > 1; ++j) {
      const std::size_t a = rng() % n;
      g.edges.push_back({node_at(a), node_at((a + 1 + rng() % (n - 1)) % n)});
    }
    const auto comps = weakly_connected_components(g);
    std::set<NodeId> seen;
    std::size_t edges = 0;
    for (const auto& c : comps) {
      for (const auto v : c.nodes) EXPECT_TRUE(seen.insert(v).second);
      edges += c.edges.size();
    }
    EXPECT_EQ(seen.size(), n);
    EXPECT_EQ(edges, g.edges.size());
  }
}

TEST(DirectedTree, Examples) {
  EXPECT_TRUE(is_directed_tree({{node_at(0), node_at(1), node_at(2)}, {0, 1}, {{node_at(2), node_at(0)}, {node_at(2), node_at(1)}}}));
  EXPECT_TRUE(is_directed_tree({{node_at(4)}, {}, {}}));
  const Component disconnected{{node_at(0), node_at(1), node_at(2)}, {0}, {{node_at(0), node_at(1)}}};
  EXPECT_EQ(category_of([&] { is_directed_tree(disconnected); }), ErrorCategory::contract);
}

TEST(Merge, MiddleSensor) {
  const Topology m = merge_nodes(four_sensor(), "2");
  ASSERT_EQ(m.node_count(), 4u);
  ASSERT_EQ(m.sensor_count(), 3u);
  const NodeId fused = *m.find_node("1+2");
  EXPECT_EQ(m.zones(fused), (std::vector<std::string>{"1", "2"}));
  EXPECT_EQ(m.sensor(*m.find_sensor("1")).tail, kReference);
  EXPECT_EQ(m.sensor(*m.find_sensor("1")).head, fused);
  EXPECT_EQ(m.sensor(*m.find_sensor("3")).tail, fused);
  EXPECT_EQ(m.sensor(*m.find_sensor("4")).tail, fused);
  EXPECT_EQ(m.node_of_zone("2"), fused);
}

TEST(Merge, LeafSensor) {
  const Topology m = merge_nodes(four_sensor(), "3");
  EXPECT_EQ(m.node_count(), 4u);
  EXPECT_FALSE(m.find_sensor("3"));
  const NodeId fused = *m.find_node("2+3");
  EXPECT_EQ(m.zones(fused), (std::vector<std::string>{"2", "3"}));
}

TEST(Merge, DownToOneNode) {
  Topology t = four_sensor();
  t = merge_nodes(t, "3");
  t = merge_nodes(t, "2");
  t = merge_nodes(t, "4");
  EXPECT_EQ(t.node_count(), 2u);
  EXPECT_EQ(t.zones(node_at(1)), (std::vector<std::string>{"1", "2", "3", "4"}));
  EXPECT_EQ(category_of([&] { merge_nodes(t, "1"); }), ErrorCategory::no_estimation);
  EXPECT_EQ(category_of([&] { merge_nodes(t, "9"); }), ErrorCategory::structural);
}

TEST(Merge, IntoReference) {
  const Topology m = merge_nodes(four_sensor(), "1");
  EXPECT_EQ(m.label(kReference), "0");
  EXPECT_EQ(m.zones(kReference), (std::vector<std::string>{"1"}));
  // Nodes 2 and 4 are now fed by the reference.
  EXPECT_TRUE(m.is_reference_adjacent(*m.find_node("2")));
  EXPECT_TRUE(m.is_reference_adjacent(*m.find_node("4")));
}

TEST(Merge, PreservesTreeInvariant) {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 200; ++trial) {
    Topology t = oracle::to_topology(oracle::random_tree(3 + rng() % 8, rng), rng);
    while (t.node_count() > 2) {
      const auto& s = t.sensor(rng() % t.sensor_count());
      const std::size_t zones_before = [&] {
        std::size_t z = 0;
        for (std::size_t i = 0; i < t.node_count(); ++i) z += t.zones(node_at(i)).size();
        return z;
      }();
      t = merge_nodes(t, s.id);
      EXPECT_EQ(t.sensor_count() + 1, t.node_count());
      std::size_t z = 0;
      for (std::size_t i = 0; i < t.node_count(); ++i) z += t.zones(node_at(i)).size();
      EXPECT_EQ(z, zones_before);
      // Still a valid topology when rebuilt from its own description.
      EXPECT_EQ(Topology::create(t.to_spec()), t);
    }
  }
}

TEST(Candidates, Counts) {
  EXPECT_EQ(candidate_fault_edges(four_sensor()).labels(),
            (std::vector<std::string>{"LF1", "L2", "L3", "L4", "D2", "D3", "D4"}));
  const Topology single = Topology::create({"0", {"0", "1"}, {{"1", "0", "1"}}, {}});
  const FaultStructure one = candidate_fault_edges(single);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one.edges()[0].kind, FaultKind::merged_anomaly);
  EXPECT_EQ(candidate_fault_edges(six_sensor()).size(), 11u);
}

TEST(Candidates, CountingRule) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const auto tree = oracle::random_tree(2 + rng() % 10, rng);
    const Topology t = oracle::to_topology(tree, rng);
    std::size_t adjacent = 0;
    for (std::size_t i = 1; i < t.node_count(); ++i) adjacent += t.is_reference_adjacent(node_at(i));
    EXPECT_EQ(candidate_fault_edges(t).size(), 2 * (t.node_count() - 1) - adjacent);
  }
}

TEST(FaultLabels, RoundTrip) {
  const Topology t = four_sensor();
  const FaultStructure all = candidate_fault_edges(t);
  for (const auto& e : all.edges()) EXPECT_EQ(parse_fault_label(t, e.label), e);
  EXPECT_EQ(category_of([&] { parse_fault_label(t, "L1"); }), ErrorCategory::structural);
  EXPECT_EQ(category_of([&] { parse_fault_label(t, "D9"); }), ErrorCategory::structural);
  EXPECT_EQ(category_of([&] { parse_fault_label(t, "X3"); }), ErrorCategory::structural);
  // Leak and sensor fault at a reference-fed node both normalize to the anomaly.
  EXPECT_EQ(make_fault(t, FaultKind::leak, node_at(1)).label, "LF1");
  EXPECT_EQ(make_fault(t, FaultKind::sensor_fault, node_at(1)).label, "LF1");
}
