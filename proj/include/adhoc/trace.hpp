// Copyright 2026 The adhoc-cloud Authors
// SPDX-License-Identifier: Apache-2.0
//
// Host churn traces: loading, writing, generation from exponential up/down
// periods, and windowing.
//
// Text format, one event per line after a header:
//
//   #churn-trace v1
//   #window 0 3600
//   #hosts h00 h01 h02
//   12.5 h01 DOWN
//   300 h01 UP
//
// The #window and #hosts lines are optional. Other lines starting with '#'
// are comments; blank lines are ignored.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "adhoc/domain.hpp"
#include "adhoc/event_log.hpp"

namespace adhoc {

inline constexpr std::string_view kTraceHeader = "#churn-trace v1";

struct TraceEvent {
  SimTime time = 0.0;
  HostId host;
  bool up = false;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct ChurnTrace {
  std::vector<HostId> hosts;  // declared hosts, may list hosts without events
  std::vector<TraceEvent> events;
  std::optional<SimTime> window_start;
  std::optional<SimTime> window_end;

  // Every host named by the trace, declared ones first.
  std::vector<HostId> all_hosts() const {
    std::vector<HostId> out = hosts;
    std::set<HostId> seen(hosts.begin(), hosts.end());
    for (const auto& e : events) {
      if (seen.insert(e.host).second) out.push_back(e.host);
    }
    return out;
  }

  // A host is up at the start unless its first event brings it up.
  bool initially_up(const HostId& h) const {
    for (const auto& e : events) {
      if (e.host == h) return !e.up;
    }
    return true;
  }

  friend bool operator==(const ChurnTrace&, const ChurnTrace&) = default;
};

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

inline double trace_number(const std::string& s, std::size_t line) {
  auto v = parse_number(s);
  if (!v || !std::isfinite(*v)) {
    throw ValidationError("trace line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return *v;
}

}  // namespace detail

// Checks ordering, per-host alternation and the window. Throws
// ValidationError naming the first offending event, by source line when
// `lines` gives one per event.
inline void check_trace(const ChurnTrace& t, const std::vector<std::size_t>* lines = nullptr) {
  std::map<HostId, bool> state;
  std::set<HostId> declared(t.hosts.begin(), t.hosts.end());
  if (declared.size() != t.hosts.size()) throw ValidationError("trace: duplicate host declaration");
  if (t.window_start && t.window_end && *t.window_end < *t.window_start) {
    throw ValidationError("trace: window end precedes start");
  }
  SimTime prev = -INFINITY;
  for (std::size_t i = 0; i < t.events.size(); ++i) {
    const auto& e = t.events[i];
    const std::string where = lines ? "trace line " + std::to_string((*lines)[i]) + ": "
                                    : "trace event " + std::to_string(i + 1) + ": ";
    if (!std::isfinite(e.time)) throw ValidationError(where + "non-finite time");
    if (e.time < prev) throw ValidationError(where + "timestamps out of order");
    prev = e.time;
    if (!declared.empty() && !declared.contains(e.host)) {
      throw ValidationError(where + "undeclared host " + e.host.str());
    }
    if (t.window_start && e.time < *t.window_start) throw ValidationError(where + "before window");
    if (t.window_end && e.time > *t.window_end) throw ValidationError(where + "after window");
    auto it = state.find(e.host);
    if (it != state.end() && it->second == e.up) {
      throw ValidationError(where + "host " + e.host.str() + " repeats " +
                            (e.up ? "UP" : "DOWN"));
    }
    state[e.host] = e.up;
  }
}

inline ChurnTrace parse_trace(const std::string& text) {
  ChurnTrace t;
  std::istringstream is(text);
  std::string line;
  std::size_t n = 0;
  std::vector<std::size_t> lines;
  bool header = false;
  while (std::getline(is, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header) {
      if (line != kTraceHeader) {
        throw ValidationError("trace line 1: expected '" + std::string(kTraceHeader) + "'");
      }
      header = true;
      continue;
    }
    auto w = detail::split_ws(line);
    if (w.empty()) continue;
    if (w[0] == "#window") {
      if (w.size() != 3) throw ValidationError("trace line " + std::to_string(n) + ": bad #window");
      t.window_start = detail::trace_number(w[1], n);
      t.window_end = detail::trace_number(w[2], n);
      continue;
    }
    if (w[0] == "#hosts") {
      for (std::size_t i = 1; i < w.size(); ++i) t.hosts.emplace_back(w[i]);
      continue;
    }
    if (w[0][0] == '#') continue;
    if (w.size() != 3) {
      throw ValidationError("trace line " + std::to_string(n) + ": expected '<time> <host> UP|DOWN'");
    }
    TraceEvent e;
    e.time = detail::trace_number(w[0], n);
    e.host = HostId(w[1]);
    if (w[2] == "UP") {
      e.up = true;
    } else if (w[2] != "DOWN") {
      throw ValidationError("trace line " + std::to_string(n) + ": unknown state '" + w[2] + "'");
    }
    t.events.push_back(std::move(e));
    lines.push_back(n);
  }
  if (!header) throw ValidationError("trace: empty input");
  check_trace(t, &lines);
  return t;
}

inline ChurnTrace load_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open trace " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_trace(ss.str());
}

inline std::string serialize_trace(const ChurnTrace& t) {
  std::string out(kTraceHeader);
  out += '\n';
  if (t.window_start && t.window_end) {
    out += "#window " + format_number(*t.window_start) + " " + format_number(*t.window_end) + "\n";
  }
  if (!t.hosts.empty()) {
    out += "#hosts";
    for (const auto& h : t.hosts) out += " " + h.str();
    out += '\n';
  }
  for (const auto& e : t.events) {
    out += format_number(e.time) + " " + e.host.str() + (e.up ? " UP\n" : " DOWN\n");
  }
  return out;
}

inline void save_trace(const ChurnTrace& t, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write trace " + path);
  out << serialize_trace(t);
}

inline std::string host_name(std::size_t i, std::size_t n) {
  std::size_t width = 2;
  for (std::size_t m = n > 0 ? n - 1 : 0; m >= 100; m /= 10) ++width;
  std::string digits = std::to_string(i);
  return "h" + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

struct ChurnParams {
  std::size_t hosts = 30;
  SimTime horizon = 3600.0;
  SimTime mtbf = 7200.0;
  SimTime mttr = 300.0;
  std::uint64_t seed = 1;
};

// Alternating exponential up and down periods per host, every host up at 0.
// Times are rounded to milliseconds. Hosts draw from one generator in id
// order, so the result depends only on the parameters.
inline ChurnTrace generate_trace(const ChurnParams& p) {
  if (p.hosts == 0) throw ValidationError("gen-trace: host count must be positive");
  if (!(p.horizon > 0.0)) throw ValidationError("gen-trace: horizon must be positive");
  if (!(p.mtbf > 0.0) || !(p.mttr > 0.0)) {
    throw ValidationError("gen-trace: mtbf and mttr must be positive");
  }
  std::mt19937_64 rng(p.seed);
  auto draw = [&](double mean) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return -mean * std::log1p(-u);
  };
  ChurnTrace t;
  t.window_start = 0.0;
  t.window_end = p.horizon;
  for (std::size_t i = 0; i < p.hosts; ++i) {
    HostId h(host_name(i, p.hosts));
    t.hosts.push_back(h);
    SimTime now = 0.0;
    bool up = true;
    while (true) {
      const SimTime next = std::round((now + draw(up ? p.mtbf : p.mttr)) * 1000.0) / 1000.0;
      now = std::max(next, now + 0.001);
      if (now > p.horizon) break;
      up = !up;
      t.events.push_back({now, h, up});
    }
  }
  std::stable_sort(t.events.begin(), t.events.end(),
                   [](const TraceEvent& a, const TraceEvent& b) { return a.time < b.time; });
  return t;
}

// Fraction of host-time spent up over [0, horizon], from a trace whose hosts
// start in the state initially_up reports.
inline double up_fraction(const ChurnTrace& t, SimTime horizon) {
  const auto hosts = t.all_hosts();
  if (hosts.empty() || !(horizon > 0.0)) return 1.0;
  double up_time = 0.0;
  for (const auto& h : hosts) {
    bool up = t.initially_up(h);
    SimTime since = 0.0;
    for (const auto& e : t.events) {
      if (e.host != h || e.time > horizon) continue;
      if (up) up_time += e.time - since;
      up = e.up;
      since = e.time;
    }
    if (up) up_time += horizon - since;
  }
  return up_time / (horizon * static_cast<double>(hosts.size()));
}

struct TraceWindow {
  SimTime start = 0.0;
  SimTime end = 0.0;
};

// The earliest of the aligned windows [start + k*length, start + (k+1)*length)
// holding the most events.
inline TraceWindow busiest_window(const ChurnTrace& t, SimTime length) {
  if (!(length > 0.0)) throw ValidationError("busiest_window: length must be positive");
  const SimTime start = t.window_start.value_or(t.events.empty() ? 0.0 : t.events.front().time);
  const SimTime end = t.window_end.value_or(t.events.empty() ? start : t.events.back().time);
  if (end - start < length) throw ValidationError("busiest_window: trace shorter than window");
  const auto buckets = static_cast<std::size_t>(std::floor((end - start) / length));
  std::vector<std::size_t> counts(buckets, 0);
  for (const auto& e : t.events) {
    auto k = static_cast<std::size_t>(std::floor((e.time - start) / length));
    if (k < buckets) ++counts[k];
  }
  const auto best = static_cast<std::size_t>(
      std::max_element(counts.begin(), counts.end()) - counts.begin());
  return {start + static_cast<double>(best) * length,
          start + static_cast<double>(best + 1) * length};
}

// Events in [w.start, w.end), shifted to start at 0. Hosts keep the state
// they had when the window opened: a host down at w.start gets a DOWN event
// at 0 so that initially_up stays correct.
inline ChurnTrace restrict_to_window(const ChurnTrace& t, const TraceWindow& w) {
  ChurnTrace out;
  out.hosts = t.all_hosts();
  out.window_start = 0.0;
  out.window_end = w.end - w.start;
  std::map<HostId, bool> state;
  for (const auto& h : out.hosts) state[h] = t.initially_up(h);
  for (const auto& e : t.events) {
    if (e.time < w.start) state[e.host] = e.up;
  }
  for (const auto& h : out.hosts) {
    if (!state[h]) out.events.push_back({0.0, h, false});
  }
  for (const auto& e : t.events) {
    if (e.time >= w.start && e.time < w.end) {
      out.events.push_back({e.time - w.start, e.host, e.up});
    }
  }
  std::stable_sort(out.events.begin(), out.events.end(),
                   [](const TraceEvent& a, const TraceEvent& b) { return a.time < b.time; });
  return out;
}

}  // namespace adhoc
