#pragma once

// File formats: topology / fault / scenario JSON, sensor CSV, catalog
// cache, estimation reports and per-zone plot data.

#include <leakdet/enumeration.hpp>
#include <leakdet/estimation.hpp>
#include <leakdet/graph_model.hpp>
#include <leakdet/qp_lasso.hpp>
#include <leakdet/simulator.hpp>
#include <leakdet/time.hpp>

#include <json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace leakdet::io {

using nlohmann::json;
namespace fs = std::filesystem;

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::io, "cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCategory::io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) fail(ErrorCategory::io, "failed writing '" + path.string() + "'");
}

inline json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCategory::parse, origin + ": " + e.what());
  }
}

namespace detail {

// Typed field access with the field path in the diagnostic.
template <typename T>
T field(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) fail(ErrorCategory::parse, where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCategory::parse, where + ": field '" + key + "' has the wrong type");
  }
}

template <typename T>
T field_or(const json& j, const std::string& key, T fallback, const std::string& where) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  return field<T>(j, key, where);
}

// Labels may be written as strings or integers.
inline std::string label_of(const json& j, const std::string& where) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  fail(ErrorCategory::parse, where + ": expected a string or integer label");
}

inline std::string label_field(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) fail(ErrorCategory::parse, where + ": missing field '" + key + "'");
  return label_of(j.at(key), where + "." + key);
}

// Non-finite numbers become null in JSON.
inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Topology

inline Topology topology_from_json(const json& j, const std::string& origin = "topology") {
  if (!j.is_object()) fail(ErrorCategory::parse, origin + ": expected a JSON object");
  TopologySpec spec;
  spec.reference = detail::label_field(j, "reference", origin);
  if (!j.contains("nodes") || !j["nodes"].is_array()) fail(ErrorCategory::parse, origin + ": 'nodes' must be an array");
  for (std::size_t i = 0; i < j["nodes"].size(); ++i)
    spec.nodes.push_back(detail::label_of(j["nodes"][i], origin + ".nodes[" + std::to_string(i) + "]"));
  if (!j.contains("sensors") || !j["sensors"].is_array())
    fail(ErrorCategory::parse, origin + ": 'sensors' must be an array");
  for (std::size_t i = 0; i < j["sensors"].size(); ++i) {
    const auto& s = j["sensors"][i];
    const std::string where = origin + ".sensors[" + std::to_string(i) + "]";
    spec.sensors.push_back({detail::label_field(s, "id", where), detail::label_field(s, "from", where),
                            detail::label_field(s, "to", where)});
  }
  if (j.contains("zones")) {
    if (!j["zones"].is_object()) fail(ErrorCategory::parse, origin + ": 'zones' must be an object");
    for (const auto& [node, zones] : j["zones"].items()) {
      auto& list = spec.zones[node];
      for (std::size_t i = 0; i < zones.size(); ++i)
        list.push_back(detail::label_of(zones[i], origin + ".zones." + node));
    }
  }
  try {
    return Topology::create(spec);
  } catch (const Error& e) {
    fail(e.category(), origin + ": " + e.what());
  }
}

inline json topology_to_json(const Topology& t) {
  const TopologySpec spec = t.to_spec();
  json j;
  j["reference"] = spec.reference;
  j["nodes"] = spec.nodes;
  j["sensors"] = json::array();
  for (const auto& s : spec.sensors) j["sensors"].push_back({{"id", s.id}, {"from", s.from}, {"to", s.to}});
  if (!spec.zones.empty()) j["zones"] = spec.zones;
  return j;
}

inline Topology load_topology(const fs::path& path) {
  return topology_from_json(parse_json(read_file(path), path.string()), path.string());
}

// ---------------------------------------------------------------------------
// Fault structures

inline FaultStructure faults_from_json(const Topology& t, const json& j, const std::string& origin = "faults") {
  const json& list = j.is_object() && j.contains("faults") ? j["faults"] : j;
  if (!list.is_array()) fail(ErrorCategory::parse, origin + ": expected an array of faults");
  std::vector<FaultEdge> edges;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = origin + "[" + std::to_string(i) + "]";
    const auto kind_name = detail::field<std::string>(list[i], "kind", where);
    const auto kind = parse_fault_kind(kind_name);
    if (!kind) fail(ErrorCategory::parse, where + ": unknown fault kind '" + kind_name + "'");
    const auto node_label = detail::label_field(list[i], "node", where);
    const auto node = t.find_node(node_label);
    if (!node) fail(ErrorCategory::structural, where + ": unknown node '" + node_label + "'");
    edges.push_back(make_fault(t, *kind, *node));
  }
  return FaultStructure::create(t, std::move(edges));
}

inline json faults_to_json(const Topology& t, const FaultStructure& s) {
  json list = json::array();
  for (const auto& e : s.edges())
    list.push_back({{"kind", std::string(to_string(e.kind))}, {"node", t.label(e.tail)}, {"label", e.label}});
  return {{"faults", list}};
}

inline json component_to_json(const Topology& t, const Component& c) {
  json nodes = json::array();
  for (const auto n : c.nodes) nodes.push_back(t.label(n));
  json edges = json::array();
  for (const auto& e : c.edges) edges.push_back({t.label(e.tail), t.label(e.head)});
  return {{"nodes", nodes}, {"edges", edges}};
}

// ---------------------------------------------------------------------------
// Sensor CSV

inline constexpr std::string_view kSampleHeader = "timestamp,sensor_id,measured,predicted,quality";

inline double parse_number(std::string_view s, const std::string& where) {
  if (s.empty() || s == "nan" || s == "NaN") return kNaN;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    fail(ErrorCategory::parse, where + ": bad number '" + std::string(s) + "'");
  return v;
}

inline std::vector<SensorSample> read_samples(std::istream& in, const std::string& origin = "samples") {
  std::vector<SensorSample> out;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    if (!header) {
      if (line != kSampleHeader)
        fail(ErrorCategory::parse, where + ": expected header '" + std::string(kSampleHeader) + "'");
      header = true;
      continue;
    }
    std::vector<std::string_view> cells;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      cells.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cells.size() != 5) fail(ErrorCategory::parse, where + ": expected 5 fields, got " + std::to_string(cells.size()));
    SensorSample s;
    try {
      s.timestamp = parse_iso8601(cells[0]);
    } catch (const Error& e) {
      fail(ErrorCategory::parse, where + ": " + e.what());
    }
    s.sensor_id = std::string(cells[1]);
    if (s.sensor_id.empty()) fail(ErrorCategory::parse, where + ": empty sensor_id");
    s.measured = parse_number(cells[2], where + " (measured)");
    s.predicted = parse_number(cells[3], where + " (predicted)");
    const auto q = parse_quality(cells[4]);
    if (!q) fail(ErrorCategory::parse, where + ": quality must be ok, missing or stuck");
    s.quality = *q;
    if (s.quality == SampleQuality::ok && (!std::isfinite(s.measured) || !std::isfinite(s.predicted)))
      fail(ErrorCategory::parse, where + ": quality 'ok' requires finite measured and predicted values");
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<SensorSample> load_samples(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::io, "cannot read '" + path.string() + "'");
  return read_samples(in, path.string());
}

inline std::string format_number(double v) {
  if (!std::isfinite(v)) return "nan";
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

inline std::string samples_to_csv(std::span<const SensorSample> samples) {
  std::ostringstream out;
  out << kSampleHeader << '\n';
  for (const auto& s : samples) {
    out << format_iso8601(s.timestamp) << ',' << s.sensor_id << ',' << (std::isfinite(s.measured) ? format_number(s.measured) : "")
        << ',' << (std::isfinite(s.predicted) ? format_number(s.predicted) : "") << ',' << to_string(s.quality) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Scenarios

inline Scenario scenario_from_json(const json& j, const fs::path& base_dir, const std::string& origin = "scenario") {
  if (!j.is_object()) fail(ErrorCategory::parse, origin + ": expected a JSON object");
  if (!j.contains("topology")) fail(ErrorCategory::parse, origin + ": missing field 'topology'");
  const json& tj = j["topology"];
  Topology topology = tj.is_string() ? load_topology(base_dir / tj.get<std::string>())
                                     : topology_from_json(tj, origin + ".topology");
  Scenario sc{std::move(topology), {}, {}, 0.0, 0.0, 15, 1, 1577836800};
  if (j.contains("consumption")) {
    for (const auto& [zone, value] : j["consumption"].items()) {
      std::vector<double> profile;
      if (value.is_number()) {
        profile.push_back(value.get<double>());
      } else if (value.is_array()) {
        for (const auto& v : value) {
          if (!v.is_number()) fail(ErrorCategory::parse, origin + ".consumption." + zone + ": non-numeric entry");
          profile.push_back(v.get<double>());
        }
      } else {
        fail(ErrorCategory::parse, origin + ".consumption." + zone + ": expected a number or an array");
      }
      sc.consumption[zone] = std::move(profile);
    }
  }
  if (j.contains("faults")) {
    if (!j["faults"].is_array()) fail(ErrorCategory::parse, origin + ": 'faults' must be an array");
    for (std::size_t i = 0; i < j["faults"].size(); ++i) {
      const auto& f = j["faults"][i];
      const std::string where = origin + ".faults[" + std::to_string(i) + "]";
      const auto kind_name = detail::field<std::string>(f, "kind", where);
      const auto kind = parse_injection_kind(kind_name);
      if (!kind) fail(ErrorCategory::parse, where + ": unknown fault kind '" + kind_name + "'");
      FaultInjection inj;
      inj.kind = *kind;
      inj.node = detail::label_field(f, "node", where);
      inj.value = detail::field_or<double>(f, "value", 0.0, where);
      inj.start_day = detail::field_or<double>(f, "start", 0.0, where);
      inj.end_day = detail::field_or<double>(f, "end", std::numeric_limits<double>::infinity(), where);
      sc.faults.push_back(std::move(inj));
    }
  }
  sc.noise_std = detail::field_or<double>(j, "noise_std", 0.0, origin);
  sc.prediction_error_std = detail::field_or<double>(j, "prediction_error_std", 0.0, origin);
  sc.cadence_minutes = detail::field_or<int>(j, "cadence_minutes", 15, origin);
  sc.days = detail::field_or<int>(j, "days", 1, origin);
  if (j.contains("start")) sc.start = parse_iso8601(detail::field<std::string>(j, "start", origin));
  try {
    validate(sc);
  } catch (const Error& e) {
    fail(e.category(), origin + ": " + e.what());
  }
  return sc;
}

inline Scenario load_scenario(const fs::path& path) {
  return scenario_from_json(parse_json(read_file(path), path.string()), path.parent_path(), path.string());
}

inline json ground_truth_to_json(const Scenario& sc, const SimulationResult& sim, std::uint64_t seed) {
  json injected = json::array();
  for (const auto& f : sc.faults) {
    injected.push_back({{"kind", std::string(to_string(f.kind))},
                        {"node", f.node},
                        {"value", f.value},
                        {"start", f.start_day},
                        {"end", detail::number(f.end_day)}});
  }
  json steps = json::array();
  for (const auto& s : sim.truth) {
    json unknowns = json::object();
    for (const auto& [label, v] : s.unknowns) unknowns[label] = v;
    steps.push_back({{"timestamp", format_iso8601(s.timestamp)}, {"unknowns", unknowns}, {"uninformative", s.uninformative}});
  }
  return {{"seed", seed}, {"fingerprint", sc.topology.fingerprint()}, {"injected", injected}, {"steps", steps}};
}

// ---------------------------------------------------------------------------
// Catalog cache

inline json catalog_to_json(const DetectableCatalog& c) {
  json candidates = json::array();
  for (const auto& e : c.candidates) candidates.push_back(e.label);
  json structures = json::array();
  for (const auto& e : c.entries) structures.push_back(e.members);
  return {{"format", "leakdet-catalog/1"},
          {"fingerprint", c.fingerprint},
          {"node_count", c.node_count},
          {"candidates", candidates},
          {"forced", c.forced},
          {"excluded", c.excluded},
          {"counts", {{"detectable", c.detectable_count}, {"undetectable", c.undetectable_count}}},
          {"structures", structures}};
}

/// Rebuilds a catalog for `t`; any mismatch with the topology is a stale cache.
inline DetectableCatalog catalog_from_json(const Topology& t, const json& j, const std::string& origin = "catalog") {
  const auto stale = [&](const std::string& why) { fail(ErrorCategory::stale_cache, origin + ": " + why); };
  if (detail::field<std::string>(j, "format", origin) != "leakdet-catalog/1") stale("unsupported catalog format");
  DetectableCatalog c;
  c.fingerprint = detail::field<std::string>(j, "fingerprint", origin);
  if (c.fingerprint != t.fingerprint())
    stale("catalog fingerprint " + c.fingerprint + " does not match topology " + t.fingerprint());
  c.node_count = detail::field<std::size_t>(j, "node_count", origin);
  if (c.node_count != t.node_count()) stale("node count mismatch");
  const FaultStructure candidates = candidate_fault_edges(t);
  const auto labels = detail::field<std::vector<std::string>>(j, "candidates", origin);
  if (labels != candidates.labels()) stale("candidate unknowns differ from the topology's");
  c.candidates.assign(candidates.edges().begin(), candidates.edges().end());
  c.forced = detail::field<std::vector<std::string>>(j, "forced", origin);
  c.excluded = detail::field<std::vector<std::string>>(j, "excluded", origin);
  const auto& counts = j.at("counts");
  c.detectable_count = detail::field<std::size_t>(counts, "detectable", origin + ".counts");
  c.undetectable_count = detail::field<std::size_t>(counts, "undetectable", origin + ".counts");
  for (const auto& s : detail::field<std::vector<std::vector<std::uint32_t>>>(j, "structures", origin)) {
    std::vector<Edge> edges;
    for (const auto m : s) {
      if (m >= c.candidates.size()) stale("structure references unknown candidate");
      edges.push_back(c.candidates[m].edge());
    }
    auto plan = make_solve_plan(t.node_count(), edges);
    if (!plan || !std::is_sorted(s.begin(), s.end())) stale("stored structure is not a detectable spanning structure");
    c.entries.push_back({s, std::move(*plan)});
  }
  if (c.entries.size() != c.detectable_count) stale("structure count disagrees with stored counts");
  return c;
}

/// Cache file name; constrained catalogs get a suffix so they never stand in
/// for the full one.
inline std::string catalog_filename(const std::string& fingerprint, std::span<const std::string> forced = {},
                                    std::span<const std::string> excluded = {}) {
  if (forced.empty() && excluded.empty()) return "catalog-" + fingerprint + ".json";
  std::string key;
  for (const auto& f : forced) key += "+" + f;
  for (const auto& e : excluded) key += "-" + e;
  return "catalog-" + fingerprint + "-" + leakdet::detail::fnv1a_hex(key) + ".json";
}

/// Catalogs keyed by topology fingerprint, in memory and optionally on disk.
class CatalogCache {
 public:
  explicit CatalogCache(std::optional<fs::path> dir = std::nullopt, EnumerationOptions options = {})
      : dir_(std::move(dir)), options_(options) {}

  fs::path path_for(const Topology& t) const { return *dir_ / catalog_filename(t.fingerprint()); }

  const DetectableCatalog& get(const Topology& t) {
    if (const auto it = memory_.find(t.fingerprint()); it != memory_.end()) return it->second;
    const auto t0 = std::chrono::steady_clock::now();
    DetectableCatalog c;
    if (dir_ && fs::exists(path_for(t))) {
      c = catalog_from_json(t, parse_json(read_file(path_for(t)), path_for(t).string()), path_for(t).string());
      if (!c.forced.empty() || !c.excluded.empty())
        fail(ErrorCategory::stale_cache, path_for(t).string() + ": cached catalog is constrained");
      ++loaded_;
    } else {
      c = enumerate_detectable(t, {}, {}, options_);
      ++enumerated_;
      if (dir_) write_file(path_for(t), catalog_to_json(c).dump(2) + "\n");
    }
    offline_seconds_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return memory_.emplace(t.fingerprint(), std::move(c)).first->second;
  }

  /// Pins an externally supplied catalog for its topology.
  void insert(DetectableCatalog c) { memory_.insert_or_assign(c.fingerprint, std::move(c)); }

  double offline_seconds() const { return offline_seconds_; }
  std::size_t enumerated() const { return enumerated_; }
  std::size_t loaded() const { return loaded_; }

 private:
  std::optional<fs::path> dir_;
  EnumerationOptions options_;
  std::map<std::string, DetectableCatalog> memory_;
  double offline_seconds_ = 0.0;
  std::size_t enumerated_ = 0;
  std::size_t loaded_ = 0;
};

// ---------------------------------------------------------------------------
// Reports

inline json report_to_json(const EstimationReport& r) {
  json minimal = json::array();
  for (const auto& m : r.minimal_solutions) {
    json values = json::object();
    for (std::size_t u = 0; u < r.unknowns.size(); ++u) values[r.unknowns[u].label] = m.values[u];
    minimal.push_back({{"l1_norm", m.l1_norm}, {"values", values}, {"catalog_entries", m.structures}});
  }
  json envelope = json::object();
  for (std::size_t u = 0; u < r.unknowns.size(); ++u)
    envelope[r.unknowns[u].label] = {{"min", detail::number(r.envelope[u].min)}, {"max", detail::number(r.envelope[u].max)}};
  json zones = json::object();
  for (std::size_t u = 0; u < r.unknowns.size(); ++u) zones[r.unknowns[u].label] = r.unknown_zones[u];
  return {{"window", r.window},
          {"fingerprint", r.fingerprint},
          {"minimal_solutions", minimal},
          {"envelope", envelope},
          {"unknown_zones", zones},
          {"solved", r.solved},
          {"valid", r.valid},
          {"flags",
           {{"propagated", r.flags.propagated},
            {"forced_faults", r.flags.forced_faults},
            {"unestimable", r.flags.unestimable},
            {"no_valid_solution", r.flags.no_valid_solution}}}};
}

/// `window,label,min,max,propagated`; propagated marks unknowns at fused nodes.
inline std::string reports_to_flat_csv(std::span<const EstimationReport> reports) {
  std::ostringstream out;
  out << "window,label,min,max,propagated\n";
  for (const auto& r : reports)
    for (std::size_t u = 0; u < r.unknowns.size(); ++u)
      out << r.window << ',' << r.unknowns[u].label << ',' << format_number(r.envelope[u].min) << ','
          << format_number(r.envelope[u].max) << ',' << (r.unknown_zones[u].size() > 1 ? "true" : "false") << '\n';
  return out.str();
}

struct ZoneRow {
  std::string window;
  Envelope leak{kNaN, kNaN};
  Envelope fault{kNaN, kNaN};
  bool propagated = false;
};

/// Per-zone view of one report. A zone inside a fused node shares the
/// node's leak envelope; only the node's first zone owns its sensor fault.
inline ZoneRow zone_row(const EstimationReport& r, const std::string& zone) {
  ZoneRow row{r.window, {kNaN, kNaN}, {kNaN, kNaN}, false};
  for (std::size_t u = 0; u < r.unknowns.size(); ++u) {
    const auto& zones = r.unknown_zones[u];
    const auto it = std::find(zones.begin(), zones.end(), zone);
    if (it == zones.end()) continue;
    const bool representative = it == zones.begin();
    row.propagated = !representative;
    if (r.unknowns[u].is_leak_like()) row.leak = r.envelope[u];
    else if (representative) row.fault = r.envelope[u];
  }
  return row;
}

/// One CSV per zone: `window,leak_min,leak_max,fault_min,fault_max,propagated`.
inline std::map<std::string, std::string> emit_plot_data(std::span<const EstimationReport> reports,
                                                         std::span<const std::string> zones) {
  if (reports.empty()) fail(ErrorCategory::contract, "emit_plot_data: empty report series");
  std::map<std::string, std::string> files;
  for (const auto& zone : zones) {
    std::ostringstream out;
    out << "window,leak_min,leak_max,fault_min,fault_max,propagated\n";
    for (const auto& r : reports) {
      const ZoneRow row = zone_row(r, zone);
      out << row.window << ',' << format_number(row.leak.min) << ',' << format_number(row.leak.max) << ','
          << format_number(row.fault.min) << ',' << format_number(row.fault.max) << ','
          << (row.propagated ? "true" : "false") << '\n';
    }
    files[zone] = out.str();
  }
  return files;
}

inline json qp_to_json(const QpLassoResult& q, const std::string& window, double lambda) {
  json values = json::object();
  const auto edges = q.solution.structure.edges();
  for (std::size_t u = 0; u < edges.size(); ++u) values[edges[u].label] = q.solution.values[u];
  return {{"window", window},     {"lambda", lambda},          {"values", values},
          {"l1_norm", q.solution.l1_norm}, {"valid", q.solution.valid}, {"objective", q.objective},
          {"kkt_residual", q.kkt_residual}, {"sweeps", q.sweeps}};
}

}  // namespace leakdet::io
