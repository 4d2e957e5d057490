#pragma once

#include <leakdet/leakdet.hpp>

#include <optional>
#include <string>
#include <vector>

namespace fixtures {

// Four sensors: 0->1, 1->2, 2->3, 1->4.
inline leakdet::Topology four_sensor() {
  return leakdet::Topology::create(
      {"0", {"0", "1", "2", "3", "4"}, {{"1", "0", "1"}, {"2", "1", "2"}, {"3", "2", "3"}, {"4", "1", "4"}}, {}});
}

// Six sensors: the four-sensor tree plus 2->5 and 3->6.
inline leakdet::Topology six_sensor() {
  return leakdet::Topology::create({"0",
                                    {"0", "1", "2", "3", "4", "5", "6"},
                                    {{"1", "0", "1"},
                                     {"2", "1", "2"},
                                     {"3", "2", "3"},
                                     {"4", "1", "4"},
                                     {"5", "2", "5"},
                                     {"6", "3", "6"}},
                                    {}});
}

inline leakdet::FaultStructure structure(const leakdet::Topology& t, const std::vector<std::string>& labels) {
  std::vector<leakdet::FaultEdge> edges;
  for (const auto& l : labels) edges.push_back(leakdet::parse_fault_label(t, l));
  return leakdet::FaultStructure::create(t, std::move(edges));
}

inline std::vector<std::string> node_labels(const leakdet::Topology& t, const std::vector<leakdet::NodeId>& nodes) {
  std::vector<std::string> out;
  for (const auto n : nodes) out.push_back(t.label(n));
  return out;
}

// Category of the error `fn` throws, or nothing when it returns normally.
inline std::optional<leakdet::ErrorCategory> category_of(const auto& fn) {
  try {
    fn();
  } catch (const leakdet::Error& e) {
    return e.category();
  }
  return std::nullopt;
}

}  // namespace fixtures
