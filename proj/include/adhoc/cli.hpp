// Copyright 2026 The adhoc-cloud Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command implementations behind the adhoc-cloud tool. Each returns the
// process exit code: 0 on success, 1 on validation errors, 2 on runtime
// errors.

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "adhoc/config.hpp"
#include "adhoc/metrics.hpp"
#include "adhoc/sim.hpp"
#include "adhoc/trace.hpp"

namespace adhoc {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitRuntime = 2 };

namespace detail {

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + p.string());
}

inline std::string parent_dir(const std::string& path) {
  auto p = std::filesystem::path(path).parent_path();
  return p.empty() ? "." : p.string();
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

// The resolved config as written next to a run's outputs. It points at the
// trace.txt saved beside it, so the directory alone reproduces the run.
inline json run_config_json(ExperimentConfig cfg) {
  cfg.trace_path = "trace.txt";
  return to_json(cfg);
}

}  // namespace detail

inline std::optional<bool> parse_on_off(const std::string& s) {
  if (s == "on") return true;
  if (s == "off") return false;
  return std::nullopt;
}

struct SimulateOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> replication;  // "on" or "off"
  std::string out = "out";
};

inline int cmd_simulate(const SimulateOptions& o, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    json doc = read_json_file(o.config);
    if (o.seed) doc["seed"] = *o.seed;
    if (o.replication) {
      auto on = parse_on_off(*o.replication);
      if (!on) throw ValidationError("--replication must be 'on' or 'off'");
      doc["replication"] = *on;
    }
    const auto cfg = parse_config(doc);
    for (const auto& w : cfg.sim.timing.warnings()) err << "warning: " << w << '\n';
    const auto trace = experiment_trace(cfg, detail::parent_dir(o.config));
    const auto result = simulate(cfg.sim, trace, cfg.seed);

    std::filesystem::create_directories(o.out);
    const std::filesystem::path dir(o.out);
    detail::write_file(dir / "events.log", result.log.str());
    detail::write_file(dir / "metrics.json", to_json(result.report).dump(2) + "\n");
    detail::write_file(dir / "metrics.txt", to_table(result.report));
    detail::write_file(dir / "config.json", detail::run_config_json(cfg).dump(2) + "\n");
    detail::write_file(dir / "trace.txt", serialize_trace(trace));
    detail::write_file(dir / "final_state.json", result.final_state + "\n");
    out << to_table(result.report);
    return static_cast<int>(kExitOk);
  });
}

// "A..B" inclusive.
inline std::vector<std::uint64_t> parse_seed_range(const std::string& s) {
  const auto dots = s.find("..");
  auto num = [&](const std::string& t) {
    if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos) {
      throw ValidationError("--seeds must look like A..B, got '" + s + "'");
    }
    return std::stoull(t);
  };
  if (dots == std::string::npos) return {num(s)};
  const auto a = num(s.substr(0, dots));
  const auto b = num(s.substr(dots + 2));
  if (b < a) throw ValidationError("--seeds range is empty: " + s);
  std::vector<std::uint64_t> out;
  for (auto v = a; v <= b; ++v) out.push_back(v);
  return out;
}

struct GridAxis {
  std::string key;
  std::vector<std::string> values;
};

// "KEY=V1,V2,..."
inline GridAxis parse_grid(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == s.size()) {
    throw ValidationError("--grid must look like KEY=V1,V2, got '" + s + "'");
  }
  GridAxis g{s.substr(0, eq), {}};
  std::stringstream vs(s.substr(eq + 1));
  for (std::string v; std::getline(vs, v, ',');) {
    if (v.empty()) throw ValidationError("--grid has an empty value: " + s);
    g.values.push_back(v);
  }
  return g;
}

// Cartesian product of the axes, first axis varying slowest.
inline std::vector<std::vector<std::pair<std::string, std::string>>> grid_points(
    const std::vector<GridAxis>& axes) {
  std::vector<std::vector<std::pair<std::string, std::string>>> out{{}};
  for (const auto& a : axes) {
    std::vector<std::vector<std::pair<std::string, std::string>>> next;
    for (const auto& p : out) {
      for (const auto& v : a.values) {
        auto q = p;
        q.emplace_back(a.key, v);
        next.push_back(std::move(q));
      }
    }
    out = std::move(next);
  }
  return out;
}

inline std::string point_label(const std::vector<std::pair<std::string, std::string>>& p) {
  if (p.empty()) return "base";
  std::string s;
  for (const auto& [k, v] : p) s += (s.empty() ? "" : ",") + k + "=" + v;
  return s;
}

inline std::string run_dir_name(const std::string& key) {
  std::string s;
  for (char c : key) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_';
    s.push_back(keep ? c : '_');
  }
  return s;
}

struct SweepOptions {
  std::string config;
  std::string seeds = "1..1";
  std::vector<std::string> grid;
  std::string out = "sweep";
};

struct SweepRow {
  std::string point;
  std::size_t runs = 0;
  double mean_completion = 0.0, min_completion = 1.0, max_completion = 0.0;
  double mean_restores = 0.0, mean_losses = 0.0, mean_overhead = 0.0;
};

inline std::vector<SweepRow> aggregate(const json& manifest,
                                       const std::vector<std::string>& points) {
  std::vector<SweepRow> rows;
  for (const auto& p : points) {
    SweepRow r;
    r.point = p;
    std::size_t with_overhead = 0;
    for (const auto& [key, run] : manifest["runs"].items()) {
      if (run["point"] != p) continue;
      const double c = run["completion_rate"];
      ++r.runs;
      r.mean_completion += c;
      r.min_completion = std::min(r.min_completion, c);
      r.max_completion = std::max(r.max_completion, c);
      r.mean_restores += run["restores"].get<double>();
      r.mean_losses += run["continuity_losses"].get<double>();
      if (!run["makespan_overhead"].is_null()) {
        r.mean_overhead += run["makespan_overhead"].get<double>();
        ++with_overhead;
      }
    }
    if (r.runs > 0) {
      r.mean_completion /= static_cast<double>(r.runs);
      r.mean_restores /= static_cast<double>(r.runs);
      r.mean_losses /= static_cast<double>(r.runs);
    } else {
      r.min_completion = 0.0;
    }
    if (with_overhead > 0) r.mean_overhead /= static_cast<double>(with_overhead);
    rows.push_back(r);
  }
  return rows;
}

inline std::string sweep_table(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(40) << "point" << std::right << std::setw(6) << "runs"
     << std::setw(10) << "mean" << std::setw(10) << "min" << std::setw(10) << "max"
     << std::setw(10) << "restores" << std::setw(10) << "losses" << std::setw(10) << "overhead"
     << '\n';
  os << std::fixed << std::setprecision(4);
  for (const auto& r : rows) {
    os << std::left << std::setw(40) << r.point << std::right << std::setw(6) << r.runs
       << std::setw(10) << r.mean_completion << std::setw(10) << r.min_completion
       << std::setw(10) << r.max_completion << std::setw(10) << r.mean_restores
       << std::setw(10) << r.mean_losses << std::setw(10) << r.mean_overhead << '\n';
  }
  return os.str();
}

// Runs every (grid point, seed) pair not already recorded in
// <out>/manifest.json, so an interrupted sweep resumes where it stopped.
inline int cmd_sweep(const SweepOptions& o, std::ostream& out = std::cout,
                     std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    const json base = read_json_file(o.config);
    const auto seeds = parse_seed_range(o.seeds);
    if (o.grid.empty()) throw ValidationError("sweep needs at least one --grid axis");
    std::vector<GridAxis> axes;
    for (const auto& g : o.grid) axes.push_back(parse_grid(g));
    const auto points = grid_points(axes);

    // Validate every point before running anything.
    std::vector<json> docs;
    std::vector<std::string> labels;
    for (const auto& p : points) {
      json doc = base;
      for (const auto& [k, v] : p) set_dotted(doc, k, parse_override_value(v));
      parse_config(doc);
      docs.push_back(doc);
      labels.push_back(point_label(p));
    }

    const std::filesystem::path dir(o.out);
    std::filesystem::create_directories(dir);
    const auto manifest_path = dir / "manifest.json";
    json manifest = {{"runs", json::object()}};
    if (std::filesystem::exists(manifest_path)) {
      manifest = read_json_file(manifest_path.string());
      if (!manifest.contains("runs")) manifest["runs"] = json::object();
    }

    const std::string base_dir = detail::parent_dir(o.config);
    for (std::size_t i = 0; i < docs.size(); ++i) {
      for (auto seed : seeds) {
        const std::string key = labels[i] + "|seed=" + std::to_string(seed);
        if (manifest["runs"].contains(key)) continue;
        json doc = docs[i];
        doc["seed"] = seed;
        const auto cfg = parse_config(doc);
        const auto trace = experiment_trace(cfg, base_dir);
        const auto result = simulate(cfg.sim, trace, seed);
        const auto& r = result.report;
        const auto run_dir = dir / "runs" / run_dir_name(key);
        std::filesystem::create_directories(run_dir);
        detail::write_file(run_dir / "events.log", result.log.str());
        detail::write_file(run_dir / "metrics.json", to_json(r).dump(2) + "\n");
        detail::write_file(run_dir / "config.json", detail::run_config_json(cfg).dump(2) + "\n");
        detail::write_file(run_dir / "trace.txt", serialize_trace(trace));
        manifest["runs"][key] = {
            {"point", labels[i]},
            {"seed", seed},
            {"completion_rate", r.completion_rate()},
            {"restores", r.restores},
            {"continuity_losses", r.continuity_losses},
            {"degraded_placements", r.degraded_placements},
            {"makespan_overhead", r.makespan_overhead ? json(*r.makespan_overhead) : json(nullptr)},
        };
        detail::write_file(manifest_path, manifest.dump(2) + "\n");
      }
    }

    json current = {{"runs", json::object()}};
    for (const auto& label : labels) {
      for (auto seed : seeds) {
        const std::string key = label + "|seed=" + std::to_string(seed);
        current["runs"][key] = manifest["runs"][key];
      }
    }
    const auto rows = aggregate(current, labels);
    const auto table = sweep_table(rows);
    detail::write_file(dir / "summary.txt", table);
    out << table;
    return static_cast<int>(kExitOk);
  });
}

struct GenTraceOptions {
  ChurnParams params;
  std::string out;
};

inline int cmd_gen_trace(const GenTraceOptions& o, std::ostream& out = std::cout,
                         std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    if (o.out.empty()) throw ValidationError("--out is required");
    const auto t = generate_trace(o.params);
    save_trace(t, o.out);
    out << "wrote " << t.events.size() << " events for " << t.hosts.size() << " hosts to "
        << o.out << " (up fraction " << std::fixed << std::setprecision(4)
        << up_fraction(t, o.params.horizon) << ")\n";
    return static_cast<int>(kExitOk);
  });
}

}  // namespace adhoc
