#pragma once

// Online fault-value estimation over a detectable catalog.
//
// Each window's residual vector is pushed through every catalog structure;
// structures whose leaks come out negative are discarded and the remaining
// solutions with the smallest l1 norm form the answer, summarized as a
// per-unknown min/max envelope.

#include <leakdet/detectability.hpp>
#include <leakdet/enumeration.hpp>
#include <leakdet/graph_model.hpp>
#include <leakdet/time.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace leakdet {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Samples and residuals

enum class SampleQuality { ok, missing, stuck };

inline std::optional<SampleQuality> parse_quality(std::string_view s) {
  if (s == "ok") return SampleQuality::ok;
  if (s == "missing") return SampleQuality::missing;
  if (s == "stuck") return SampleQuality::stuck;
  return std::nullopt;
}

constexpr std::string_view to_string(SampleQuality q) {
  switch (q) {
    case SampleQuality::ok: return "ok";
    case SampleQuality::missing: return "missing";
    case SampleQuality::stuck: return "stuck";
  }
  return "ok";
}

struct SensorSample {
  std::string sensor_id;
  Timestamp timestamp = 0;
  double measured = kNaN;   // y
  double predicted = kNaN;  // model consumption M
  SampleQuality quality = SampleQuality::ok;
};

/// Residuals y - M, one per topology sensor in topology order. NaN marks an
/// uninformative sensor.
struct ResidualVector {
  std::string window;
  std::vector<std::string> sensor_ids;
  std::vector<double> values;

  static ResidualVector from_values(const Topology& t, std::vector<double> values, std::string window = {}) {
    if (values.size() != t.sensor_count())
      fail(ErrorCategory::contract, "residual vector needs one value per sensor");
    ResidualVector r{std::move(window), {}, std::move(values)};
    for (const auto& s : t.sensors()) r.sensor_ids.push_back(s.id);
    return r;
  }

  double at(std::string_view id) const {
    for (std::size_t i = 0; i < sensor_ids.size(); ++i)
      if (sensor_ids[i] == id) return values[i];
    fail(ErrorCategory::contract, "no residual for sensor '" + std::string(id) + "'");
  }

  std::vector<std::string> uninformative() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (!std::isfinite(values[i])) out.push_back(sensor_ids[i]);
    return out;
  }

  /// Same residuals reordered (and restricted) to the sensors of `t`.
  ResidualVector aligned_to(const Topology& t) const {
    ResidualVector r{window, {}, {}};
    for (const auto& s : t.sensors()) {
      r.sensor_ids.push_back(s.id);
      r.values.push_back(at(s.id));
    }
    return r;
  }

  bool matches(const Topology& t) const {
    if (sensor_ids.size() != t.sensor_count() || values.size() != t.sensor_count()) return false;
    for (std::size_t i = 0; i < sensor_ids.size(); ++i)
      if (sensor_ids[i] != t.sensor(i).id) return false;
    return true;
  }
};

struct WindowSpec {
  enum class Kind { daily, fixed, all } kind = Kind::daily;
  std::int64_t minutes = 1440;
};

/// "daily", "hourly", "all" or "<N>min".
inline WindowSpec parse_window_spec(std::string_view s) {
  if (s == "daily") return {WindowSpec::Kind::daily, 1440};
  if (s == "hourly") return {WindowSpec::Kind::fixed, 60};
  if (s == "all") return {WindowSpec::Kind::all, 0};
  if (s.ends_with("min")) {
    const std::string digits(s.substr(0, s.size() - 3));
    if (!digits.empty() && std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      const auto m = std::stoll(digits);
      if (m > 0) return {WindowSpec::Kind::fixed, m};
    }
  }
  fail(ErrorCategory::usage, "bad window spec '" + std::string(s) + "' (daily, hourly, all or <N>min)");
}

struct SampleWindow {
  std::string label;
  Timestamp start = 0;
  std::vector<SensorSample> samples;
};

/// Groups samples into windows ordered by start time.
inline std::vector<SampleWindow> split_windows(std::span<const SensorSample> samples, const WindowSpec& spec) {
  std::map<Timestamp, SampleWindow> by_start;
  for (const auto& s : samples) {
    Timestamp start = 0;
    std::string label;
    switch (spec.kind) {
      case WindowSpec::Kind::daily:
        start = day_of(s.timestamp) * 86400;
        label = format_date(start);
        break;
      case WindowSpec::Kind::fixed: {
        const Timestamp width = spec.minutes * 60;
        start = (s.timestamp >= 0 ? s.timestamp / width : -((-s.timestamp + width - 1) / width)) * width;
        label = format_iso8601(start);
        break;
      }
      case WindowSpec::Kind::all:
        label = "all";
        break;
    }
    auto& w = by_start[start];
    w.label = label;
    w.start = start;
    w.samples.push_back(s);
  }
  std::vector<SampleWindow> out;
  for (auto& [_, w] : by_start) out.push_back(std::move(w));
  return out;
}

struct ResidualOptions {
  // Flag a sensor whose measurement stays flat while the model expects
  // variation, or sits at zero while the model expects flow.
  bool detect_stuck = true;
};

/// Per-sensor mean of y - M over the window's ok samples.
inline ResidualVector compute_residuals(const Topology& t, std::span<const SensorSample> samples,
                                        std::string window = {}, const ResidualOptions& options = {}) {
  if (samples.empty()) fail(ErrorCategory::empty_window, "window '" + window + "' holds no samples");
  struct Acc {
    double sum = 0.0;
    std::size_t count = 0;
    double y_min = std::numeric_limits<double>::infinity(), y_max = -y_min;
    double m_min = y_min, m_max = -y_min;
  };
  std::vector<Acc> acc(t.sensor_count());
  for (const auto& s : samples) {
    const auto idx = t.find_sensor(s.sensor_id);
    if (!idx) fail(ErrorCategory::parse, "sample for unknown sensor '" + s.sensor_id + "'");
    if (s.quality != SampleQuality::ok || !std::isfinite(s.measured) || !std::isfinite(s.predicted)) continue;
    auto& a = acc[*idx];
    a.sum += s.measured - s.predicted;
    ++a.count;
    a.y_min = std::min(a.y_min, s.measured);
    a.y_max = std::max(a.y_max, s.measured);
    a.m_min = std::min(a.m_min, s.predicted);
    a.m_max = std::max(a.m_max, s.predicted);
  }
  std::vector<double> values(t.sensor_count(), kNaN);
  for (std::size_t i = 0; i < acc.size(); ++i) {
    const auto& a = acc[i];
    if (a.count == 0) continue;
    if (options.detect_stuck && a.count > 1 && a.y_min == a.y_max) {
      const bool model_varies = a.m_min != a.m_max;
      const bool flat_zero = a.y_max == 0.0 && (a.m_min != 0.0 || a.m_max != 0.0);
      if (model_varies || flat_zero) continue;
    }
    values[i] = a.sum / static_cast<double>(a.count);
  }
  return ResidualVector::from_values(t, std::move(values), std::move(window));
}

// ---------------------------------------------------------------------------
// Per-structure solves

struct Tolerances {
  double positivity = 1e-9;  // scaled by max(1, |x_R|_inf)
  double tie = 1e-6;         // relative

  double positivity_for(std::span<const double> residuals) const {
    double m = 1.0;
    for (const double r : residuals) m = std::max(m, std::abs(r));
    return positivity * m;
  }
};

struct StructureSolution {
  FaultStructure structure;
  std::vector<double> values;  // aligned with structure.edges()
  double l1_norm = 0.0;
  bool valid = true;

  double value(std::string_view label) const {
    const auto edges = structure.edges();
    for (std::size_t i = 0; i < edges.size(); ++i)
      if (edges[i].label == label) return values[i];
    return 0.0;
  }
};

namespace detail {

inline void finish_solution(StructureSolution& s, double eps_pos) {
  s.l1_norm = 0.0;
  s.valid = true;
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    s.l1_norm += std::abs(s.values[i]);
    if (s.structure.edges()[i].kind == FaultKind::leak && s.values[i] < -eps_pos) s.valid = false;
  }
}

inline void require_aligned(const Topology& t, const ResidualVector& r) {
  if (!r.matches(t)) fail(ErrorCategory::contract, "residual vector is not aligned to the topology's sensors");
  for (std::size_t i = 0; i < r.values.size(); ++i)
    if (!std::isfinite(r.values[i]))
      fail(ErrorCategory::contract, "sensor '" + r.sensor_ids[i] + "' is uninformative; merge it out first");
}

}  // namespace detail

/// Exact solve of the reduced square system for one residual vector.
inline StructureSolution solve_structure(const Topology& t, const FaultStructure& structure,
                                         const ResidualVector& residuals, const Tolerances& tol = {}) {
  detail::require_aligned(t, residuals);
  std::vector<Edge> edges;
  for (const auto& e : structure.edges()) edges.push_back(e.edge());
  if (!is_detectable(t, structure).detectable || edges.size() + 1 != t.node_count())
    fail(ErrorCategory::contract, "structure is not a detectable spanning structure of the topology");
  const auto plan = make_solve_plan(t.node_count(), edges);
  if (!plan) fail(ErrorCategory::internal, "detectable structure has a singular reduced system");

  StructureSolution s{structure, std::vector<double>(edges.size()), 0.0, true};
  std::vector<double> scratch(t.node_count());
  plan->solve(nodal_balance(t, residuals.values), scratch, s.values);
  detail::finish_solution(s, tol.positivity_for(residuals.values));
  return s;
}

/// Least squares over a stack of residual vectors. The reduced system is
/// square and nonsingular, so the minimizer is the solve of the mean.
inline StructureSolution solve_structure(const Topology& t, const FaultStructure& structure,
                                         std::span<const ResidualVector> stack, const Tolerances& tol = {}) {
  if (stack.empty()) fail(ErrorCategory::empty_window, "empty residual stack");
  std::vector<double> mean(t.sensor_count(), 0.0);
  for (const auto& r : stack) {
    detail::require_aligned(t, r);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += r.values[i];
  }
  for (auto& m : mean) m /= static_cast<double>(stack.size());
  return solve_structure(t, structure, ResidualVector::from_values(t, std::move(mean), stack.front().window), tol);
}

// ---------------------------------------------------------------------------
// Window estimation

struct Envelope {
  double min = 0.0;
  double max = 0.0;
};

struct MinimalSolution {
  std::vector<double> values;            // one per catalog candidate
  double l1_norm = 0.0;
  std::vector<std::size_t> structures;   // catalog entries producing these values
};

struct ReportFlags {
  std::vector<std::string> propagated;     // zones whose estimate comes from an upstream merged node
  std::vector<std::string> forced_faults;  // sensor faults detected before estimation
  std::vector<std::string> unestimable;    // zones fused into the reference
  bool no_valid_solution = false;
};

struct EstimationReport {
  std::string window;
  std::string fingerprint;
  std::vector<FaultEdge> unknowns;
  std::vector<std::vector<std::string>> unknown_zones;  // zones of each unknown's node
  std::vector<MinimalSolution> minimal_solutions;
  std::vector<Envelope> envelope;  // per unknown
  std::size_t solved = 0;
  std::size_t valid = 0;
  ReportFlags flags;

  std::optional<std::size_t> unknown_index(std::string_view label) const {
    for (std::size_t i = 0; i < unknowns.size(); ++i)
      if (unknowns[i].label == label) return i;
    return std::nullopt;
  }

  const Envelope& envelope_of(std::string_view label) const {
    const auto i = unknown_index(label);
    if (!i) fail(ErrorCategory::contract, "no unknown '" + std::string(label) + "' in report");
    return envelope[*i];
  }

  double best_l1() const { return minimal_solutions.empty() ? kNaN : minimal_solutions.front().l1_norm; }
};

/// Solves every catalog structure and keeps the valid ones of minimal l1 norm.
inline EstimationReport estimate_faults(const Topology& t, const DetectableCatalog& catalog,
                                        const ResidualVector& residuals, const Tolerances& tol = {}) {
  if (catalog.fingerprint != t.fingerprint() || catalog.node_count != t.node_count())
    fail(ErrorCategory::stale_cache, "catalog fingerprint " + catalog.fingerprint + " does not match topology " +
                                         t.fingerprint());
  if (t.node_count() < 2) fail(ErrorCategory::no_estimation, "topology has a single node: no estimation possible");
  detail::require_aligned(t, residuals);

  EstimationReport report;
  report.window = residuals.window;
  report.fingerprint = t.fingerprint();
  report.unknowns = catalog.candidates;
  for (const auto& u : report.unknowns) report.unknown_zones.push_back(t.zones(u.tail));

  const std::size_t width = t.node_count() - 1;
  const std::size_t count = catalog.entries.size();
  const auto b = nodal_balance(t, residuals.values);
  const double eps_pos = tol.positivity_for(residuals.values);

  std::vector<double> scratch(t.node_count());
  std::vector<double> x(width * count);
  std::vector<double> l1(count, 0.0);
  std::vector<char> ok(count, 1);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < count; ++j) {
    const auto& entry = catalog.entries[j];
    const std::span<double> xj(x.data() + j * width, width);
    entry.plan.solve(b, scratch, xj);
    double norm = 0.0;
    for (std::size_t k = 0; k < width; ++k) {
      norm += std::abs(xj[k]);
      if (catalog.candidates[entry.members[k]].kind == FaultKind::leak && xj[k] < -eps_pos) ok[j] = 0;
    }
    l1[j] = norm;
    if (ok[j]) {
      ++report.valid;
      best = std::min(best, norm);
    }
  }
  report.solved = count;

  const std::size_t unknown_count = catalog.candidates.size();
  if (report.valid == 0) {
    report.flags.no_valid_solution = true;
    report.envelope.assign(unknown_count, {kNaN, kNaN});
    return report;
  }

  const double cutoff = (1.0 + tol.tie) * best;
  std::vector<double> full(unknown_count);
  for (std::size_t j = 0; j < count; ++j) {
    if (!ok[j] || l1[j] > cutoff) continue;
    std::fill(full.begin(), full.end(), 0.0);
    for (std::size_t k = 0; k < width; ++k) full[catalog.entries[j].members[k]] = x[j * width + k];
    auto same = std::find_if(report.minimal_solutions.begin(), report.minimal_solutions.end(),
                             [&](const MinimalSolution& m) {
                               for (std::size_t u = 0; u < unknown_count; ++u)
                                 if (std::abs(m.values[u] - full[u]) > eps_pos) return false;
                               return true;
                             });
    if (same != report.minimal_solutions.end()) {
      same->structures.push_back(j);
    } else {
      report.minimal_solutions.push_back({full, l1[j], {j}});
    }
  }
  std::stable_sort(report.minimal_solutions.begin(), report.minimal_solutions.end(),
                   [](const MinimalSolution& a, const MinimalSolution& b) { return a.l1_norm < b.l1_norm; });

  report.envelope.assign(unknown_count, {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()});
  for (const auto& m : report.minimal_solutions) {
    for (std::size_t u = 0; u < unknown_count; ++u) {
      report.envelope[u].min = std::min(report.envelope[u].min, m.values[u]);
      report.envelope[u].max = std::max(report.envelope[u].max, m.values[u]);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Uninformative sensors

struct Propagation {
  Topology topology;
  std::vector<std::string> forced_faults;   // a-priori detected sensor faults, e.g. "D2"
  std::vector<std::string> propagated;      // zones covered by an upstream node's estimate
  std::vector<std::string> unestimable;     // zones fused into the reference
  std::map<std::string, std::vector<std::string>> provenance;  // merged node -> zones
};

/// Removes uninformative sensors by fusing their endpoints. A leak estimated
/// at a fused node bounds the leaks of each constituent zone from above.
inline Propagation propagate_uninformative(const Topology& t, std::span<const std::string> uninformative) {
  Propagation p{t, {}, {}, {}, {}};
  std::set<std::string> seen;
  for (const auto& id : uninformative) {
    if (!seen.insert(id).second) continue;
    const auto s = t.find_sensor(id);
    if (!s) fail(ErrorCategory::structural, "unknown uninformative sensor '" + id + "'");
    if (seen.size() == t.sensor_count())
      fail(ErrorCategory::no_estimation, "every sensor is uninformative: no estimation possible");
    p.forced_faults.push_back("D" + t.label(t.sensor(*s).head));
    p.topology = merge_nodes(p.topology, id);
  }
  for (std::size_t i = 0; i < p.topology.node_count(); ++i) {
    const auto& zones = p.topology.zones(node_at(i));
    if (i == 0) {
      p.unestimable = zones;
      continue;
    }
    if (zones.size() > 1) {
      p.provenance[p.topology.label(node_at(i))] = zones;
      p.propagated.insert(p.propagated.end(), zones.begin() + 1, zones.end());
    }
  }
  std::sort(p.forced_faults.begin(), p.forced_faults.end());
  return p;
}

using CatalogLookup = std::function<const DetectableCatalog&(const Topology&)>;

/// Full per-window pipeline: merge out uninformative sensors, then estimate
/// on the (possibly fused) topology.
inline EstimationReport estimate_window(const Topology& t, const ResidualVector& residuals,
                                        const CatalogLookup& catalog_for, const Tolerances& tol = {}) {
  const ResidualVector aligned = residuals.aligned_to(t);
  const auto bad = aligned.uninformative();
  if (bad.empty()) return estimate_faults(t, catalog_for(t), aligned, tol);

  const Propagation p = propagate_uninformative(t, bad);
  EstimationReport report = estimate_faults(p.topology, catalog_for(p.topology), aligned.aligned_to(p.topology), tol);
  report.flags.propagated = p.propagated;
  report.flags.forced_faults = p.forced_faults;
  report.flags.unestimable = p.unestimable;
  return report;
}

}  // namespace leakdet
