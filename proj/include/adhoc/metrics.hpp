// Copyright 2026 The adhoc-cloud Authors
// SPDX-License-Identifier: Apache-2.0
//
// Run statistics folded from the event log. The fold is a plain left fold,
// so folding a log prefix and then its suffix gives the same report as
// folding the whole log.

#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "adhoc/domain.hpp"
#include "adhoc/event_log.hpp"

namespace adhoc {

struct ReliabilitySample {
  SimTime time = 0.0;
  std::string host;
  double reliability = 0.0;

  friend bool operator==(const ReliabilitySample&, const ReliabilitySample&) = default;
};

struct MetricsReport {
  std::string workload_id;
  Count jobs_submitted = 0;
  Count jobs_completed = 0;
  Count jobs_failed_permanent = 0;
  Count restores = 0;            // RestoreSnapshot commands issued
  Count restores_completed = 0;
  Count continuity_losses = 0;   // restarts from zero
  Count placements = 0;
  Count degraded_placements = 0;
  Bytes snapshot_bytes_transferred = 0;
  Count detections = 0;
  double detection_latency_total = 0.0;
  WorkUnits progress_lost = 0.0;
  Count restore_violations = 0;  // restores that did not resume at the snapshot's progress
  SimTime makespan = 0.0;        // time of the last completion
  std::optional<double> makespan_overhead;
  std::vector<ReliabilitySample> per_host_reliability_series;

  // Fold state carried between calls.
  std::map<std::string, SimTime> down_since;
  std::map<std::string, double> snapshot_progress;
  std::map<std::string, std::string> latest_snapshot_of_job;
  std::map<std::string, double> lost_at;

  double completion_rate() const {
    return jobs_submitted == 0 ? 0.0
                               : static_cast<double>(jobs_completed) / jobs_submitted;
  }
  double mean_detection_latency() const {
    return detections == 0 ? 0.0 : detection_latency_total / detections;
  }

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

inline constexpr double kProgressTolerance = 1e-6;

inline void fold_event(MetricsReport& r, const LogRecord& e) {
  const auto& k = e.kind;
  if (k == "JobSubmitted") {
    ++r.jobs_submitted;
  } else if (k == "JobCompleted") {
    ++r.jobs_completed;
    r.makespan = std::max(r.makespan, e.time);
    r.lost_at.erase(e.text("job"));
  } else if (k == "JobFailedPermanent") {
    ++r.jobs_failed_permanent;
  } else if (k == "RestoreIssued") {
    ++r.restores;
  } else if (k == "JobRestored") {
    ++r.restores_completed;
    const auto job = e.text("job");
    const auto snap = e.text("snapshot");
    const double progress = e.number("progress");
    auto sp = r.snapshot_progress.find(snap);
    auto latest = r.latest_snapshot_of_job.find(job);
    if (sp == r.snapshot_progress.end() || latest == r.latest_snapshot_of_job.end() ||
        latest->second != snap || std::abs(sp->second - progress) > kProgressTolerance) {
      ++r.restore_violations;
    }
    if (auto lost = r.lost_at.find(job); lost != r.lost_at.end()) {
      const double delta = lost->second - progress;
      if (delta < -kProgressTolerance) ++r.restore_violations;
      r.progress_lost += std::max(0.0, delta);
      r.lost_at.erase(lost);
    }
  } else if (k == "JobRestarted") {
    ++r.continuity_losses;
    if (auto lost = r.lost_at.find(e.text("job")); lost != r.lost_at.end()) {
      r.progress_lost += lost->second;
      r.lost_at.erase(lost);
    }
  } else if (k == "Placement") {
    ++r.placements;
    if (e.text("degraded") == "1") ++r.degraded_placements;
  } else if (k == "TransferCompleted") {
    r.snapshot_bytes_transferred += static_cast<Bytes>(e.number("bytes"));
  } else if (k == "HostDown") {
    r.down_since[e.text("host")] = e.time;
  } else if (k == "HostUp") {
    r.down_since.erase(e.text("host"));
  } else if (k == "HostDeclaredFailed") {
    if (auto it = r.down_since.find(e.text("host")); it != r.down_since.end()) {
      ++r.detections;
      r.detection_latency_total += e.time - it->second;
      r.down_since.erase(it);
    }
  } else if (k == "Reliability") {
    r.per_host_reliability_series.push_back({e.time, e.text("host"), e.number("value")});
  } else if (k == "SnapshotRegistered") {
    r.snapshot_progress[e.text("snapshot")] = e.number("progress");
    r.latest_snapshot_of_job[e.text("job")] = e.text("snapshot");
  } else if (k == "GuestLost") {
    r.lost_at[e.text("job")] = e.number("progress");
  }
}

inline MetricsReport fold_log(std::span<const LogRecord> records, MetricsReport r = {}) {
  for (const auto& e : records) fold_event(r, e);
  return r;
}

inline void attach_baseline(MetricsReport& r, const MetricsReport& failure_free) {
  if (failure_free.makespan > 0.0 && r.jobs_completed == r.jobs_submitted) {
    r.makespan_overhead = r.makespan / failure_free.makespan - 1.0;
  }
}

struct MetricsDelta {
  double completion_rate = 0.0;
  double makespan_overhead = 0.0;
  long long restores = 0;
  long long continuity_losses = 0;
  double progress_lost = 0.0;
};

// a - b. Both reports must come from the same workload.
inline MetricsDelta compare(const MetricsReport& a, const MetricsReport& b) {
  if (a.workload_id != b.workload_id || a.jobs_submitted != b.jobs_submitted) {
    throw ValidationError("compare: reports come from different workloads");
  }
  MetricsDelta d;
  d.completion_rate = a.completion_rate() - b.completion_rate();
  d.makespan_overhead = a.makespan_overhead.value_or(0.0) - b.makespan_overhead.value_or(0.0);
  d.restores = static_cast<long long>(a.restores) - b.restores;
  d.continuity_losses = static_cast<long long>(a.continuity_losses) - b.continuity_losses;
  d.progress_lost = a.progress_lost - b.progress_lost;
  return d;
}

inline nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json series = nlohmann::json::array();
  for (const auto& s : r.per_host_reliability_series) {
    series.push_back({{"time", s.time}, {"host", s.host}, {"reliability", s.reliability}});
  }
  nlohmann::json j = {
      {"workload_id", r.workload_id},
      {"jobs_submitted", r.jobs_submitted},
      {"jobs_completed", r.jobs_completed},
      {"jobs_failed_permanent", r.jobs_failed_permanent},
      {"completion_rate", r.completion_rate()},
      {"restores", r.restores},
      {"restores_completed", r.restores_completed},
      {"continuity_losses", r.continuity_losses},
      {"placements", r.placements},
      {"degraded_placements", r.degraded_placements},
      {"snapshot_bytes_transferred", r.snapshot_bytes_transferred},
      {"detections", r.detections},
      {"mean_detection_latency", r.mean_detection_latency()},
      {"progress_lost", r.progress_lost},
      {"restore_violations", r.restore_violations},
      {"makespan", r.makespan},
      {"per_host_reliability_series", series},
  };
  j["makespan_overhead"] =
      r.makespan_overhead ? nlohmann::json(*r.makespan_overhead) : nlohmann::json(nullptr);
  return j;
}

inline std::string to_table(const MetricsReport& r) {
  std::ostringstream os;
  auto row = [&](const std::string& name, const std::string& value) {
    os << std::left << std::setw(28) << name << value << '\n';
  };
  auto num = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << v;
    return s.str();
  };
  row("workload", r.workload_id);
  row("jobs submitted", std::to_string(r.jobs_submitted));
  row("jobs completed", std::to_string(r.jobs_completed));
  row("jobs failed permanently", std::to_string(r.jobs_failed_permanent));
  row("completion rate", num(r.completion_rate()));
  row("restores issued", std::to_string(r.restores));
  row("restores completed", std::to_string(r.restores_completed));
  row("continuity losses", std::to_string(r.continuity_losses));
  row("placements", std::to_string(r.placements));
  row("degraded placements", std::to_string(r.degraded_placements));
  row("snapshot bytes moved", std::to_string(r.snapshot_bytes_transferred));
  row("mean detection latency s", num(r.mean_detection_latency()));
  row("progress lost", num(r.progress_lost));
  row("restore violations", std::to_string(r.restore_violations));
  row("makespan s", num(r.makespan));
  row("makespan overhead", r.makespan_overhead ? num(*r.makespan_overhead) : "n/a");
  return os.str();
}

}  // namespace adhoc
