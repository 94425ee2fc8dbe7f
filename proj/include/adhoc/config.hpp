// Copyright 2026 The adhoc-cloud Authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration as JSON. Unknown keys are rejected so that a
// misspelt sweep key fails loudly instead of silently using a default.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "adhoc/domain.hpp"
#include "adhoc/sim.hpp"
#include "adhoc/trace.hpp"

namespace adhoc {

using nlohmann::json;

struct ExperimentConfig {
  SimConfig sim;
  std::uint64_t seed = 1;
  std::size_t host_count = 30;
  std::optional<std::string> trace_path;  // absolute, or relative to the config file
  SimTime mtbf = 7200.0;
  SimTime mttr = 300.0;
  Count jobs = 30;
  WorkUnits total_work = 1800.0;
  Bytes snapshot_size = 1'000'000'000ULL;
  SimTime submit_spacing = 0.0;
  std::optional<CloudletId> job_cloudlet;
};

namespace detail {

class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(where() + " must be an object");
  }
  // Rejects keys that no get() or with() asked for.
  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.contains(k)) throw ValidationError("unknown config key " + join(k));
    }
  }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ValidationError("");
      } else if constexpr (std::is_arithmetic_v<T>) {
        if (!it->is_number()) throw ValidationError("");
        if constexpr (std::is_unsigned_v<T>) {
          if (it->template get<double>() < 0.0) throw ValidationError("");
        }
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw ValidationError("");
      } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
        if (!it->is_array()) throw ValidationError("");
        for (const auto& v : *it) {
          if (!v.is_string()) throw ValidationError("");
        }
      }
      if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        out = static_cast<T>(it->template get<double>());
      } else {
        out = it->template get<T>();
      }
    } catch (const std::exception&) {
      throw ValidationError("config key " + join(key) + " has the wrong type");
    }
  }

  // Every member, each marked as read.
  std::vector<std::pair<std::string, const json*>> items() {
    std::vector<std::pair<std::string, const json*>> out;
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      seen_.insert(it.key());
      out.emplace_back(it.key(), &it.value());
    }
    return out;
  }

  template <class F>
  void with(const std::string& key, F&& read) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return;
    ObjectReader child(*it, join(key));
    read(child);
    child.finish();
  }

 private:
  std::string join(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
  std::string where() const { return path_.empty() ? "config" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline InUsePolicy parse_in_use(const std::string& s) {
  if (s == "exclude") return InUsePolicy::Exclude;
  if (s == "prefer_idle") return InUsePolicy::PreferIdle;
  throw ValidationError("placement.in_use must be 'exclude' or 'prefer_idle'");
}

inline std::string in_use_name(InUsePolicy p) {
  return p == InUsePolicy::Exclude ? "exclude" : "prefer_idle";
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  auto& s = c.sim;
  {
    detail::ObjectReader r(j, "");
    r.get("seed", c.seed);
    r.get("horizon", s.horizon);
    r.get("replication", s.replication);
    r.get("work_rate", s.work_rate);
    r.get("retry_budget", s.retry_budget);
    r.get("command_latency", s.command_latency);
    r.get("guest_failure_rate", s.guest_failure_rate);
    r.get("check_invariants", s.check_invariants);
    r.with("timing", [&](detail::ObjectReader& t) {
      t.get("poll_interval", s.timing.poll_interval);
      t.get("failure_timeout", s.timing.failure_timeout);
      t.get("guest_probe_interval", s.timing.guest_probe_interval);
      t.get("snapshot_interval", s.timing.snapshot_interval);
      t.get("sweep_interval", s.timing.sweep_interval);
    });
    r.with("reliability", [&](detail::ObjectReader& t) {
      t.get("optimistic_prior", s.reliability.optimistic_prior);
    });
    r.with("placement", [&](detail::ObjectReader& t) {
      t.get("threshold", s.placement.threshold);
      t.get("min_replicas", s.placement.min_replicas);
      t.get("strict_cloudlet", s.placement.strict_cloudlet);
      std::string in_use = detail::in_use_name(s.placement.in_use);
      t.get("in_use", in_use);
      s.placement.in_use = detail::parse_in_use(in_use);
    });
    r.with("resource", [&](detail::ObjectReader& t) {
      t.get("limit", s.resource.limit);
      t.get("window", s.resource.window);
    });
    r.with("load", [&](detail::ObjectReader& t) {
      t.get("busy_probability", s.load.busy_probability);
      t.get("switch_probability", s.load.switch_probability);
      t.get("busy_level", s.load.busy_level);
      t.get("idle_level", s.load.idle_level);
    });
    r.with("transfer", [&](detail::ObjectReader& t) {
      t.get("bandwidth", s.transfer.bandwidth);
      t.get("latency", s.transfer.latency);
    });
    r.with("hosts", [&](detail::ObjectReader& t) {
      t.get("count", c.host_count);
      t.get("storage", s.host_storage);
      t.get("cloudlets", s.cloudlets);
      t.with("list", [&](detail::ObjectReader& l) {
        for (const auto& [id, spec] : l.items()) {
          detail::ObjectReader h(*spec, "hosts.list." + id);
          HostSetup hs;
          hs.id = HostId(id);
          hs.storage_capacity = s.host_storage;
          std::vector<std::string> cloudlets;
          h.get("storage", hs.storage_capacity);
          h.get("cloudlets", cloudlets);
          h.get("assigned", hs.jobs_assigned);
          h.get("completed", hs.jobs_completed);
          h.get("failures", hs.failures);
          h.finish();
          if (cloudlets.empty()) cloudlets.push_back("c0");
          for (const auto& cl : cloudlets) hs.cloudlets.insert(CloudletId(cl));
          if (hs.jobs_completed > hs.jobs_assigned || hs.failures > hs.jobs_assigned) {
            throw ValidationError("hosts.list." + id + ": counters exceed jobs assigned");
          }
          s.hosts.push_back(hs);
        }
      });
    });
    r.with("churn", [&](detail::ObjectReader& t) {
      std::string path;
      t.get("trace", path);
      if (!path.empty()) c.trace_path = path;
      t.get("mtbf", c.mtbf);
      t.get("mttr", c.mttr);
    });
    r.with("workload", [&](detail::ObjectReader& t) {
      t.get("jobs", c.jobs);
      t.get("total_work", c.total_work);
      t.get("snapshot_size", c.snapshot_size);
      t.get("submit_spacing", c.submit_spacing);
      std::string cl;
      t.get("cloudlet", cl);
      if (!cl.empty()) c.job_cloudlet = CloudletId(cl);
    });
    r.finish();
  }
  if (c.host_count == 0) throw ValidationError("hosts.count must be positive");
  if (!(c.mtbf > 0.0) || !(c.mttr > 0.0)) throw ValidationError("churn mtbf and mttr must be positive");
  if (!(c.total_work > 0.0)) throw ValidationError("workload.total_work must be positive");
  if (c.submit_spacing < 0.0) throw ValidationError("workload.submit_spacing must be non-negative");
  s.jobs = uniform_workload(c.jobs, c.total_work, c.snapshot_size, c.submit_spacing, c.job_cloudlet);
  s.check();
  return c;
}

inline json to_json(const ExperimentConfig& c) {
  const auto& s = c.sim;
  json churn = {{"mtbf", c.mtbf}, {"mttr", c.mttr}};
  if (c.trace_path) churn["trace"] = *c.trace_path;
  json workload = {{"jobs", c.jobs},
                   {"total_work", c.total_work},
                   {"snapshot_size", c.snapshot_size},
                   {"submit_spacing", c.submit_spacing}};
  if (c.job_cloudlet) workload["cloudlet"] = c.job_cloudlet->str();
  json hosts = {{"count", c.host_count}, {"storage", s.host_storage}, {"cloudlets", s.cloudlets}};
  if (!s.hosts.empty()) {
    json list = json::object();
    for (const auto& h : s.hosts) {
      json cl = json::array();
      for (const auto& x : h.cloudlets) cl.push_back(x.str());
      list[h.id.str()] = {{"storage", h.storage_capacity},
                          {"cloudlets", cl},
                          {"assigned", h.jobs_assigned},
                          {"completed", h.jobs_completed},
                          {"failures", h.failures}};
    }
    hosts["list"] = list;
  }
  return {
      {"seed", c.seed},
      {"horizon", s.horizon},
      {"replication", s.replication},
      {"work_rate", s.work_rate},
      {"retry_budget", s.retry_budget},
      {"command_latency", s.command_latency},
      {"guest_failure_rate", s.guest_failure_rate},
      {"check_invariants", s.check_invariants},
      {"timing",
       {{"poll_interval", s.timing.poll_interval},
        {"failure_timeout", s.timing.failure_timeout},
        {"guest_probe_interval", s.timing.guest_probe_interval},
        {"snapshot_interval", s.timing.snapshot_interval},
        {"sweep_interval", s.timing.sweep_interval}}},
      {"reliability", {{"optimistic_prior", s.reliability.optimistic_prior}}},
      {"placement",
       {{"threshold", s.placement.threshold},
        {"min_replicas", s.placement.min_replicas},
        {"strict_cloudlet", s.placement.strict_cloudlet},
        {"in_use", detail::in_use_name(s.placement.in_use)}}},
      {"resource", {{"limit", s.resource.limit}, {"window", s.resource.window}}},
      {"load",
       {{"busy_probability", s.load.busy_probability},
        {"switch_probability", s.load.switch_probability},
        {"busy_level", s.load.busy_level},
        {"idle_level", s.load.idle_level}}},
      {"transfer", {{"bandwidth", s.transfer.bandwidth}, {"latency", s.transfer.latency}}},
      {"hosts", hosts},
      {"churn", churn},
      {"workload", workload},
  };
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

// Parses a scalar override value: JSON literals, otherwise a bare string.
inline json parse_override_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

// Sets a dotted key ("timing.snapshot_interval") in a config document.
inline void set_dotted(json& doc, const std::string& key, const json& value) {
  json* node = &doc;
  std::string::size_type start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) throw ValidationError("bad config key '" + key + "'");
    if (!node->is_object()) throw ValidationError("config key '" + key + "' crosses a value");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

// The trace an experiment replays: the configured file, or one generated
// from the churn parameters and the run seed.
inline ChurnTrace experiment_trace(const ExperimentConfig& c, const std::string& base_dir = ".") {
  if (c.trace_path) {
    std::filesystem::path p(*c.trace_path);
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    return load_trace(p.string());
  }
  if (c.sim.hosts.empty()) return generate_trace({c.host_count, c.sim.horizon, c.mtbf, c.mttr, c.seed});
  // Listed hosts take the generated hosts' churn in list order.
  auto t = generate_trace({c.sim.hosts.size(), c.sim.horizon, c.mtbf, c.mttr, c.seed});
  std::map<HostId, HostId> rename;
  for (std::size_t i = 0; i < t.hosts.size(); ++i) rename.emplace(t.hosts[i], c.sim.hosts[i].id);
  for (auto& h : t.hosts) h = rename.at(h);
  for (auto& e : t.events) e.host = rename.at(e.host);
  return t;
}

}  // namespace adhoc
