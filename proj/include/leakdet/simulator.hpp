#pragma once

// Synthetic sensor data with injected leaks and sensor faults.
//
// True flow through a sensor is the consumption plus leaks of its
// downstream subtree. A sensor reads true flow plus its own fault plus
// noise; the prediction is the consumption-only flow, so residuals carry
// nothing but the injected faults (and noise).

#include <leakdet/estimation.hpp>
#include <leakdet/graph_model.hpp>
#include <leakdet/time.hpp>

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace leakdet {

struct FaultInjection {
  enum class Kind {
    leak,          // extra consumption at a zone, >= 0
    sensor_fault,  // additive error on the zone's incoming sensor
    stuck,         // incoming sensor reads a constant value
    missing,       // incoming sensor reports nothing
  };

  Kind kind = Kind::leak;
  std::string node;
  double value = 0.0;
  double start_day = 0.0;  // active on [start_day, end_day)
  double end_day = std::numeric_limits<double>::infinity();

  bool active(double day) const { return day >= start_day && day < end_day; }
};

inline std::optional<FaultInjection::Kind> parse_injection_kind(std::string_view s) {
  if (s == "leak") return FaultInjection::Kind::leak;
  if (s == "sensor_fault") return FaultInjection::Kind::sensor_fault;
  if (s == "stuck") return FaultInjection::Kind::stuck;
  if (s == "missing") return FaultInjection::Kind::missing;
  return std::nullopt;
}

constexpr std::string_view to_string(FaultInjection::Kind k) {
  switch (k) {
    case FaultInjection::Kind::leak: return "leak";
    case FaultInjection::Kind::sensor_fault: return "sensor_fault";
    case FaultInjection::Kind::stuck: return "stuck";
    case FaultInjection::Kind::missing: return "missing";
  }
  return "leak";
}

struct Scenario {
  Topology topology;
  // Per-zone consumption; a profile of length k repeats every k steps.
  std::map<std::string, std::vector<double>> consumption;
  std::vector<FaultInjection> faults;
  double noise_std = 0.0;
  double prediction_error_std = 0.0;
  int cadence_minutes = 15;
  int days = 1;
  Timestamp start = 1577836800;  // 2020-01-01T00:00:00Z

  std::size_t steps() const { return static_cast<std::size_t>(days) * 1440 / static_cast<std::size_t>(cadence_minutes); }
};

struct GroundTruthStep {
  Timestamp timestamp = 0;
  std::map<std::string, double> unknowns;  // injected value per candidate unknown label
  std::vector<std::string> uninformative;  // stuck or missing sensors
};

struct SimulationResult {
  std::vector<SensorSample> samples;          // per step, sensors in topology order
  std::vector<GroundTruthStep> truth;
  std::vector<std::vector<double>> true_flows;  // per step, per sensor
};

/// Flow through each sensor given each node's total outflow (consumption + leak).
inline std::vector<double> subtree_flows(const Topology& t, std::span<const double> node_outflow) {
  // Children carry larger accumulated sums up to their parent; process
  // nodes in reverse breadth-first order from the reference.
  std::vector<std::vector<std::size_t>> children(t.node_count());
  for (std::size_t s = 0; s < t.sensor_count(); ++s) children[t.sensor(s).tail.index()].push_back(s);
  std::vector<std::size_t> order{0};
  for (std::size_t q = 0; q < order.size(); ++q)
    for (const auto s : children[order[q]]) order.push_back(t.sensor(s).head.index());
  std::vector<double> below(node_outflow.begin(), node_outflow.end());
  std::vector<double> flows(t.sensor_count(), 0.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto in = t.incoming_sensor(node_at(*it));
    if (!in) continue;
    flows[*in] = below[*it];
    below[t.sensor(*in).tail.index()] += below[*it];
  }
  return flows;
}

inline void validate(const Scenario& sc) {
  const auto bad = [](const std::string& msg) { fail(ErrorCategory::structural, "scenario: " + msg); };
  if (sc.cadence_minutes <= 0 || sc.days <= 0) bad("cadence and duration must be positive");
  if ((static_cast<long long>(sc.days) * 1440) % sc.cadence_minutes != 0) bad("cadence must divide the duration");
  if (sc.noise_std < 0.0 || sc.prediction_error_std < 0.0) bad("noise levels must be non-negative");
  for (const auto& [zone, profile] : sc.consumption) {
    const auto node = sc.topology.find_node(zone);
    if (!node || *node == kReference) bad("consumption for unknown zone '" + zone + "'");
    if (profile.empty()) bad("empty consumption profile for zone '" + zone + "'");
    for (const double c : profile)
      if (!(c >= 0.0)) bad("negative consumption in zone '" + zone + "'");
  }
  for (const auto& f : sc.faults) {
    const auto node = sc.topology.find_node(f.node);
    if (!node || *node == kReference) bad("fault at unknown zone '" + f.node + "'");
    if (f.kind == FaultInjection::Kind::leak && !(f.value >= 0.0)) bad("leak at '" + f.node + "' must be non-negative");
    if (!std::isfinite(f.value) && f.kind != FaultInjection::Kind::missing) bad("fault value must be finite");
    if (!(f.end_day > f.start_day)) bad("fault at '" + f.node + "' has an empty active interval");
  }
}

inline SimulationResult simulate_scenario(const Scenario& sc, std::uint64_t seed) {
  validate(sc);
  const Topology& t = sc.topology;
  const std::size_t n = t.node_count();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  SimulationResult out;
  const std::size_t steps = sc.steps();
  out.samples.reserve(steps * t.sensor_count());
  std::vector<double> consumption(n), outflow(n), sensor_fault(t.sensor_count());
  for (std::size_t k = 0; k < steps; ++k) {
    const Timestamp ts = sc.start + static_cast<Timestamp>(k) * sc.cadence_minutes * 60;
    const double day = static_cast<double>(k) * sc.cadence_minutes / 1440.0;

    std::fill(consumption.begin(), consumption.end(), 0.0);
    for (const auto& [zone, profile] : sc.consumption)
      consumption[t.find_node(zone)->index()] = profile[k % profile.size()];
    outflow = consumption;
    std::fill(sensor_fault.begin(), sensor_fault.end(), 0.0);

    GroundTruthStep truth{ts, {}, {}};
    std::map<std::size_t, std::pair<FaultInjection::Kind, double>> outage;
    for (const auto& f : sc.faults) {
      if (!f.active(day)) continue;
      const NodeId node = *t.find_node(f.node);
      const std::size_t in = *t.incoming_sensor(node);
      switch (f.kind) {
        case FaultInjection::Kind::leak:
          outflow[node.index()] += f.value;
          truth.unknowns[make_fault(t, FaultKind::leak, node).label] += f.value;
          break;
        case FaultInjection::Kind::sensor_fault:
          sensor_fault[in] += f.value;
          truth.unknowns[make_fault(t, FaultKind::sensor_fault, node).label] += f.value;
          break;
        case FaultInjection::Kind::stuck:
        case FaultInjection::Kind::missing:
          outage[in] = {f.kind, f.value};
          break;
      }
    }

    const auto flows = subtree_flows(t, outflow);
    const auto expected = subtree_flows(t, consumption);
    for (std::size_t s = 0; s < t.sensor_count(); ++s) {
      SensorSample sample{t.sensor(s).id, ts, 0.0, 0.0, SampleQuality::ok};
      sample.measured = flows[s] + sensor_fault[s];
      if (sc.noise_std > 0.0) sample.measured += sc.noise_std * noise(rng);
      sample.predicted = expected[s];
      if (sc.prediction_error_std > 0.0) sample.predicted += sc.prediction_error_std * noise(rng);
      if (const auto o = outage.find(s); o != outage.end()) {
        truth.uninformative.push_back(t.sensor(s).id);
        if (o->second.first == FaultInjection::Kind::stuck) {
          sample.measured = o->second.second;
        } else {
          sample.measured = kNaN;
          sample.quality = SampleQuality::missing;
        }
      }
      out.samples.push_back(std::move(sample));
    }
    out.true_flows.push_back(flows);
    out.truth.push_back(std::move(truth));
  }
  return out;
}

}  // namespace leakdet
