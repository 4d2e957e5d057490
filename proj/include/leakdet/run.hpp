#pragma once

// Subcommand dispatch behind the command-line tool.

#include <leakdet/detectability.hpp>
#include <leakdet/enumeration.hpp>
#include <leakdet/error.hpp>
#include <leakdet/estimation.hpp>
#include <leakdet/io.hpp>
#include <leakdet/qp_lasso.hpp>
#include <leakdet/simulator.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace leakdet {

inline constexpr std::string_view kVersion = "0.1.0";

struct RunConfig {
  std::string subcommand;  // detect | enumerate | estimate | simulate | baseline
  std::string topology;
  std::string faults;
  std::string data;
  std::string scenario;
  std::string window = "daily";
  double lambda = 0.05;
  std::string cache_dir;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::vector<std::string> forced;    // fault labels, e.g. "D2"
  std::vector<std::string> excluded;
  std::optional<double> eps_pos;
  std::optional<double> eps_tie;
  bool detect_stuck = true;
};

namespace detail {

namespace fs = std::filesystem;
using io::json;

inline void require_file(const std::string& path, const std::string& flag) {
  if (path.empty()) fail(ErrorCategory::usage, "missing required option " + flag);
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) fail(ErrorCategory::io, flag + ": cannot read '" + path + "'");
}

inline void validate(const RunConfig& c) {
  static const std::vector<std::string> known{"detect", "enumerate", "estimate", "simulate", "baseline"};
  if (std::find(known.begin(), known.end(), c.subcommand) == known.end())
    fail(ErrorCategory::usage, "unknown subcommand '" + c.subcommand + "'");
  if (!(c.lambda >= 0.0)) fail(ErrorCategory::usage, "--lambda must be non-negative");
  if (c.eps_pos && !(*c.eps_pos > 0.0)) fail(ErrorCategory::usage, "--eps-pos must be positive");
  if (c.eps_tie && !(*c.eps_tie >= 0.0)) fail(ErrorCategory::usage, "--eps-tie must be non-negative");
  parse_window_spec(c.window);
  if (c.subcommand == "simulate") {
    require_file(c.scenario, "--scenario");
    if (c.out_dir.empty()) fail(ErrorCategory::usage, "simulate requires --out");
    return;
  }
  require_file(c.topology, "--topology");
  if (c.subcommand == "detect") require_file(c.faults, "--faults");
  if (c.subcommand == "estimate" || c.subcommand == "baseline") require_file(c.data, "--data");
}

inline Tolerances tolerances(const RunConfig& c) {
  Tolerances tol;
  if (c.eps_pos) tol.positivity = *c.eps_pos;
  if (c.eps_tie) tol.tie = *c.eps_tie;
  return tol;
}

inline std::vector<FaultEdge> faults_from_labels(const Topology& t, std::span<const std::string> labels) {
  std::vector<FaultEdge> out;
  for (const auto& l : labels) out.push_back(parse_fault_label(t, l));
  return out;
}

class Manifest {
 public:
  explicit Manifest(const RunConfig& c) {
    j_["tool"] = "leakdet";
    j_["version"] = std::string(kVersion);
    j_["subcommand"] = c.subcommand;
    j_["inputs"] = json::object();
    j_["fingerprints"] = json::object();
    j_["timings"] = {{"offline_seconds", 0.0}, {"online_seconds", 0.0}};
  }

  void input(const std::string& role, const std::string& path) {
    if (path.empty()) return;
    j_["inputs"][role] = {{"path", path}, {"content_hash", fnv1a_hex(io::read_file(path))}};
  }
  void fingerprint(const std::string& role, const std::string& fp) { j_["fingerprints"][role] = fp; }
  void timing(const std::string& phase, double seconds) { j_["timings"][phase] = seconds; }
  json& operator[](const std::string& key) { return j_[key]; }

  void write(const RunConfig& c) const {
    if (!c.out_dir.empty()) io::write_file(fs::path(c.out_dir) / "manifest.json", j_.dump(2) + "\n");
  }

 private:
  json j_;
};

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline std::vector<std::string> labels(const Topology& t, std::span<const NodeId> nodes) {
  std::vector<std::string> out;
  for (const auto n : nodes) out.push_back(t.label(n));
  return out;
}

inline int run_detect(const RunConfig& c, std::ostream& out) {
  Manifest manifest(c);
  const auto t0 = std::chrono::steady_clock::now();
  const Topology t = io::load_topology(c.topology);
  const FaultStructure faults = io::faults_from_json(t, io::parse_json(io::read_file(c.faults), c.faults), c.faults);
  const DetectabilityVerdict v = is_detectable(t, faults);
  const ComponentPartition p = classify_components(t, faults);

  json verdict{{"detectable", v.detectable}, {"faults", faults.labels()}};
  json partition{{"unconnected", json::array()}, {"sensor_only", json::array()},
                 {"ps_component", io::component_to_json(t, p.ps_component)}};
  for (const auto& comp : p.unconnected) partition["unconnected"].push_back(io::component_to_json(t, comp));
  for (const auto& comp : p.sensor_only) partition["sensor_only"].push_back(io::component_to_json(t, comp));
  verdict["partition"] = partition;
  if (!v.detectable) {
    verdict["failing_component"] = io::component_to_json(t, *v.failing_component);
    const auto d = diagnose_undetectability(t, faults);
    verdict["culprit_nodes"] = labels(t, d.culprit_nodes);
    json alternatives = json::array();
    for (const auto& a : d.alternatives) alternatives.push_back(labels(t, a));
    verdict["culprit_alternatives"] = alternatives;
    verdict["remaining"] = d.remaining.labels();
  }
  out << verdict.dump(2) << '\n';

  manifest.input("topology", c.topology);
  manifest.input("faults", c.faults);
  manifest.fingerprint("topology", t.fingerprint());
  manifest.timing("online_seconds", seconds_since(t0));
  manifest["detectable"] = v.detectable;
  if (!c.out_dir.empty()) io::write_file(fs::path(c.out_dir) / "verdict.json", verdict.dump(2) + "\n");
  manifest.write(c);
  return v.detectable ? 0 : 2;
}

inline int run_enumerate(const RunConfig& c, std::ostream& out) {
  Manifest manifest(c);
  const Topology t = io::load_topology(c.topology);
  const auto t0 = std::chrono::steady_clock::now();
  const auto forced = faults_from_labels(t, c.forced);
  const auto excluded = faults_from_labels(t, c.excluded);
  const DetectableCatalog cat = enumerate_detectable(t, forced, excluded);
  const double offline = seconds_since(t0);

  json counts{{"candidates", cat.candidates.size()},
              {"structure_size", t.node_count() - 1},
              {"detectable", cat.detectable_count},
              {"undetectable", cat.undetectable_count}};
  json summary{{"fingerprint", cat.fingerprint}, {"counts", counts}, {"forced", cat.forced}, {"excluded", cat.excluded}};
  if (!c.cache_dir.empty()) {
    const fs::path path = fs::path(c.cache_dir) / io::catalog_filename(cat.fingerprint, cat.forced, cat.excluded);
    io::write_file(path, io::catalog_to_json(cat).dump(2) + "\n");
    summary["catalog"] = path.string();
  }
  out << summary.dump(2) << '\n';

  manifest.input("topology", c.topology);
  manifest.fingerprint("topology", t.fingerprint());
  manifest.timing("offline_seconds", offline);
  manifest["counts"] = counts;
  manifest.write(c);
  return 0;
}

struct WindowResult {
  std::string label;
  ResidualVector residuals;
};

inline std::vector<WindowResult> load_windows(const RunConfig& c, const Topology& t) {
  const auto samples = io::load_samples(c.data);
  if (samples.empty()) fail(ErrorCategory::empty_window, c.data + ": no samples");
  std::vector<WindowResult> out;
  for (auto& w : split_windows(samples, parse_window_spec(c.window)))
    out.push_back({w.label, compute_residuals(t, w.samples, w.label, {c.detect_stuck})});
  return out;
}

inline int run_estimate(const RunConfig& c, std::ostream& out) {
  Manifest manifest(c);
  const Topology t = io::load_topology(c.topology);
  const auto windows = load_windows(c, t);
  io::CatalogCache cache(c.cache_dir.empty() ? std::nullopt : std::optional<fs::path>(c.cache_dir));
  const Tolerances tol = tolerances(c);

  // Warm the full catalog first so enumeration time is booked as offline.
  cache.get(t);
  std::vector<EstimationReport> reports;
  double online = 0.0;
  for (const auto& w : windows) {
    const double offline_before = cache.offline_seconds();
    const auto t0 = std::chrono::steady_clock::now();
    reports.push_back(estimate_window(t, w.residuals, [&](const Topology& g) -> const DetectableCatalog& { return cache.get(g); }, tol));
    online += seconds_since(t0) - (cache.offline_seconds() - offline_before);
  }

  json windows_json = json::array();
  for (const auto& r : reports) windows_json.push_back(io::report_to_json(r));
  const json report{{"fingerprint", t.fingerprint()}, {"window_spec", c.window}, {"windows", windows_json}};
  if (c.out_dir.empty()) {
    out << report.dump(2) << '\n';
  } else {
    const fs::path dir(c.out_dir);
    io::write_file(dir / "report.json", report.dump(2) + "\n");
    io::write_file(dir / "report.csv", io::reports_to_flat_csv(reports));
    std::vector<std::string> zones;
    for (std::size_t i = 1; i < t.node_count(); ++i)
      for (const auto& z : t.zones(node_at(i))) zones.push_back(z);
    for (const auto& [zone, csv] : io::emit_plot_data(reports, zones)) io::write_file(dir / "plots" / ("zone_" + zone + ".csv"), csv);
    std::size_t propagated = 0;
    for (const auto& r : reports) propagated += r.flags.propagated.empty() ? 0 : 1;
    out << "estimated " << reports.size() << " window(s), " << propagated << " propagated; report in " << dir.string() << '\n';
  }

  manifest.input("topology", c.topology);
  manifest.input("data", c.data);
  manifest.fingerprint("topology", t.fingerprint());
  manifest["window_spec"] = c.window;
  manifest["windows"] = reports.size();
  manifest["catalogs"] = {{"enumerated", cache.enumerated()}, {"loaded", cache.loaded()}};
  manifest.timing("offline_seconds", cache.offline_seconds());
  manifest.timing("online_seconds", online);
  manifest.write(c);
  return 0;
}

inline int run_baseline(const RunConfig& c, std::ostream& out) {
  Manifest manifest(c);
  const Topology t = io::load_topology(c.topology);
  const auto windows = load_windows(c, t);
  const Tolerances tol = tolerances(c);

  json results = json::array();
  double online = 0.0;
  for (const auto& w : windows) {
    const auto t0 = std::chrono::steady_clock::now();
    const ResidualVector aligned = w.residuals.aligned_to(t);
    const auto bad = aligned.uninformative();
    json entry;
    if (bad.empty()) {
      entry = io::qp_to_json(qp_lasso(t, aligned, c.lambda, {}, tol), w.label, c.lambda);
    } else {
      const Propagation p = propagate_uninformative(t, bad);
      entry = io::qp_to_json(qp_lasso(p.topology, aligned.aligned_to(p.topology), c.lambda, {}, tol), w.label, c.lambda);
      entry["propagated"] = p.propagated;
      entry["forced_faults"] = p.forced_faults;
    }
    online += seconds_since(t0);
    results.push_back(std::move(entry));
  }
  const json report{{"fingerprint", t.fingerprint()}, {"lambda", c.lambda}, {"windows", results}};
  if (c.out_dir.empty()) out << report.dump(2) << '\n';
  else io::write_file(fs::path(c.out_dir) / "baseline.json", report.dump(2) + "\n");

  manifest.input("topology", c.topology);
  manifest.input("data", c.data);
  manifest.fingerprint("topology", t.fingerprint());
  manifest["lambda"] = c.lambda;
  manifest["windows"] = windows.size();
  manifest.timing("online_seconds", online);
  manifest.write(c);
  return 0;
}

inline int run_simulate(const RunConfig& c, std::ostream& out) {
  Manifest manifest(c);
  const Scenario sc = io::load_scenario(c.scenario);
  const auto t0 = std::chrono::steady_clock::now();
  const SimulationResult sim = simulate_scenario(sc, c.seed);
  const fs::path dir(c.out_dir);
  io::write_file(dir / "data.csv", io::samples_to_csv(sim.samples));
  io::write_file(dir / "ground_truth.json", io::ground_truth_to_json(sc, sim, c.seed).dump(2) + "\n");
  io::write_file(dir / "topology.json", io::topology_to_json(sc.topology).dump(2) + "\n");
  out << "simulated " << sc.steps() << " step(s) x " << sc.topology.sensor_count() << " sensor(s) into "
      << dir.string() << '\n';

  manifest.input("scenario", c.scenario);
  manifest.fingerprint("topology", sc.topology.fingerprint());
  manifest["seed"] = c.seed;
  manifest.timing("online_seconds", seconds_since(t0));
  manifest.write(c);
  return 0;
}

}  // namespace detail

/// Runs one subcommand. Returns the exit status; failures print a single
/// `error: <category>: <message>` line on `err` and return 1.
inline int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    detail::validate(config);
    if (config.subcommand == "detect") return detail::run_detect(config, out);
    if (config.subcommand == "enumerate") return detail::run_enumerate(config, out);
    if (config.subcommand == "estimate") return detail::run_estimate(config, out);
    if (config.subcommand == "baseline") return detail::run_baseline(config, out);
    return detail::run_simulate(config, out);
  } catch (const Error& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << to_string(e.category()) << ": " << msg << '\n';
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: internal: " << msg << '\n';
  }
  return 1;
}

}  // namespace leakdet
