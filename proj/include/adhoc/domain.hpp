// Copyright 2026 The adhoc-cloud Authors
// SPDX-License-Identifier: Apache-2.0
//
// Core entity records shared by the server, client and simulator. Records are
// plain values; `validate` reports invariant violations without throwing.

#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace adhoc {

using SimTime = double;    // simulated seconds
using WorkUnits = double;  // abstract job work
using Bytes = std::uint64_t;
using Count = std::uint32_t;

// Raised when a caller breaks an operation's precondition.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Raised for malformed external input (trace files, configs, workloads).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class Tag>
class Id {
 public:
  Id() = default;
  explicit Id(std::string value) : value_(std::move(value)) {}

  const std::string& str() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  friend auto operator<=>(const Id&, const Id&) = default;
  friend bool operator==(const Id&, const Id&) = default;
  friend std::ostream& operator<<(std::ostream& os, const Id& id) {
    return os << id.value_;
  }

 private:
  std::string value_;
};

using HostId = Id<struct HostTag>;
using GuestId = Id<struct GuestTag>;
using JobId = Id<struct JobTag>;
using SnapshotId = Id<struct SnapshotTag>;
using CloudletId = Id<struct CloudletTag>;

enum class Liveness { Up, Down, FailedDeclared };
enum class GuestState { Stopped, Running, Suspended, Failed };
enum class JobStatus { Submitted, Scheduled, Running, Completed, FailedPermanent };

inline std::string_view to_string(Liveness v) {
  switch (v) {
    case Liveness::Up: return "Up";
    case Liveness::Down: return "Down";
    case Liveness::FailedDeclared: return "FailedDeclared";
  }
  return "?";
}

inline std::string_view to_string(GuestState v) {
  switch (v) {
    case GuestState::Stopped: return "Stopped";
    case GuestState::Running: return "Running";
    case GuestState::Suspended: return "Suspended";
    case GuestState::Failed: return "Failed";
  }
  return "?";
}

inline std::string_view to_string(JobStatus v) {
  switch (v) {
    case JobStatus::Submitted: return "Submitted";
    case JobStatus::Scheduled: return "Scheduled";
    case JobStatus::Running: return "Running";
    case JobStatus::Completed: return "Completed";
    case JobStatus::FailedPermanent: return "FailedPermanent";
  }
  return "?";
}

struct HostRecord {
  HostId id;
  Count jobs_assigned = 0;   // CA
  Count jobs_completed = 0;  // CC
  Count failures = 0;        // NF: host and guest failures
  Liveness liveness = Liveness::Down;
  SimTime last_poll_time = 0.0;
  Bytes storage_capacity = 0;
  Bytes storage_used = 0;
  bool in_use = false;
  std::set<CloudletId> cloudlets;

  Bytes storage_headroom() const noexcept {
    return storage_used >= storage_capacity ? 0 : storage_capacity - storage_used;
  }
};

struct GuestRecord {
  GuestId id;
  HostId host;
  GuestState state = GuestState::Stopped;
  std::optional<JobId> job;
  CloudletId cloudlet;
};

struct JobRecord {
  JobId id;
  WorkUnits total_work = 0.0;
  WorkUnits progress = 0.0;
  Bytes snapshot_size = 0;
  std::optional<CloudletId> cloudlet;
  JobStatus status = JobStatus::Submitted;
  std::optional<GuestId> current_guest;
  Count restore_count = 0;
  Count restart_count = 0;
  SimTime submitted_at = 0.0;
};

struct SnapshotRecord {
  SnapshotId id;
  GuestId guest;
  JobId job;
  std::uint64_t sequence = 0;
  SimTime captured_at = 0.0;
  WorkUnits captured_progress = 0.0;
  Bytes size = 0;
  std::set<HostId> locations;
};

struct Cloudlet {
  CloudletId id;
  std::set<GuestId> members;
};

// --- invariant checks -------------------------------------------------------

inline std::vector<std::string> validate(const HostRecord& h) {
  std::vector<std::string> out;
  if (h.jobs_completed > h.jobs_assigned) out.emplace_back("CC <= CA violated");
  if (h.failures > h.jobs_assigned) out.emplace_back("NF <= CA violated");
  if (h.storage_used > h.storage_capacity) {
    out.emplace_back("storage_used <= storage_capacity violated");
  }
  return out;
}

// Checks that last_poll_time did not move backwards between two observations.
inline std::vector<std::string> validate_transition(const HostRecord& before,
                                                    const HostRecord& after) {
  auto out = validate(after);
  if (after.last_poll_time < before.last_poll_time) {
    out.emplace_back("last_poll_time decreased");
  }
  return out;
}

inline std::vector<std::string> validate(const GuestRecord& g) {
  std::vector<std::string> out;
  if ((g.state == GuestState::Running || g.state == GuestState::Suspended) &&
      !g.job) {
    out.emplace_back("active guest without job");
  }
  if (g.host.empty()) out.emplace_back("guest without host");
  return out;
}

inline std::vector<std::string> validate(const JobRecord& j) {
  std::vector<std::string> out;
  if (j.total_work <= 0.0) out.emplace_back("total_work must be positive");
  if (j.progress < 0.0 || j.progress > j.total_work) {
    out.emplace_back("progress outside [0, total_work]");
  }
  const bool done = j.progress == j.total_work;
  if ((j.status == JobStatus::Completed) != done) {
    out.emplace_back("status Completed iff progress == total_work violated");
  }
  return out;
}

inline std::vector<std::string> validate(const SnapshotRecord& s,
                                         const std::optional<HostId>& guest_host = {}) {
  std::vector<std::string> out;
  if (s.captured_progress < 0.0) out.emplace_back("negative captured_progress");
  if (guest_host && s.locations.size() == 1 && s.locations.contains(*guest_host)) {
    out.emplace_back("snapshot held only by its own guest host");
  }
  return out;
}

inline std::vector<std::string> validate(const Cloudlet& c,
                                         const std::map<GuestId, GuestRecord>& guests) {
  std::vector<std::string> out;
  for (const auto& gid : c.members) {
    auto it = guests.find(gid);
    if (it == guests.end()) {
      out.push_back("cloudlet " + c.id.str() + " references unknown guest " + gid.str());
    } else if (it->second.cloudlet != c.id) {
      out.push_back("guest " + gid.str() + " not bound to cloudlet " + c.id.str());
    }
  }
  return out;
}

}  // namespace adhoc
