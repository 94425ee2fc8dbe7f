// Copyright 2026 The adhoc-cloud Authors
// SPDX-License-Identifier: Apache-2.0
//
// Messages exchanged between the server and the per-host clients, plus the
// timing constants both sides share.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "adhoc/domain.hpp"
#include "adhoc/placement.hpp"

namespace adhoc {

struct TimingConfig {
  SimTime poll_interval = 60.0;
  SimTime failure_timeout = 120.0;
  SimTime guest_probe_interval = 10.0;
  SimTime snapshot_interval = 300.0;
  SimTime sweep_interval = 10.0;

  void check() const {
    for (double v : {poll_interval, failure_timeout, guest_probe_interval, snapshot_interval,
                     sweep_interval}) {
      if (!(v > 0.0)) throw ValidationError("timing values must be positive");
    }
  }

  std::vector<std::string> warnings() const {
    std::vector<std::string> out;
    if (failure_timeout < 2.0 * poll_interval) {
      out.emplace_back("failure_timeout is shorter than two poll intervals");
    }
    return out;
  }
};

struct StartGuest {
  GuestId guest;
  JobId job;
  WorkUnits total_work = 0.0;
  WorkUnits progress = 0.0;
  Bytes snapshot_size = 0;
};
struct SuspendGuest {
  GuestId guest;
};
struct ResumeGuest {
  GuestId guest;
};
struct RestoreSnapshot {
  SnapshotId snapshot;
  GuestId origin_guest;  // guest the snapshot was taken from
  GuestId guest;         // guest that resumes from it on the target host
  JobId job;
  WorkUnits progress = 0.0;
  WorkUnits total_work = 0.0;
  Bytes snapshot_size = 0;
};
struct DeleteSnapshot {
  SnapshotId snapshot;
};
struct TransferSnapshot {
  SnapshotId snapshot;
  std::vector<HostId> receivers;
};

using CommandKind = std::variant<StartGuest, SuspendGuest, ResumeGuest, RestoreSnapshot,
                                 DeleteSnapshot, TransferSnapshot>;

struct Command {
  std::uint64_t id = 0;
  HostId target;
  CommandKind kind;
  SimTime issued_at = 0.0;
};

inline std::string_view command_name(const CommandKind& k) {
  struct Visitor {
    std::string_view operator()(const StartGuest&) const { return "StartGuest"; }
    std::string_view operator()(const SuspendGuest&) const { return "SuspendGuest"; }
    std::string_view operator()(const ResumeGuest&) const { return "ResumeGuest"; }
    std::string_view operator()(const RestoreSnapshot&) const { return "RestoreSnapshot"; }
    std::string_view operator()(const DeleteSnapshot&) const { return "DeleteSnapshot"; }
    std::string_view operator()(const TransferSnapshot&) const { return "TransferSnapshot"; }
  };
  return std::visit(Visitor{}, k);
}

// The guest a command acts on, if any.
inline std::optional<GuestId> command_guest(const CommandKind& k) {
  if (auto* c = std::get_if<StartGuest>(&k)) return c->guest;
  if (auto* c = std::get_if<SuspendGuest>(&k)) return c->guest;
  if (auto* c = std::get_if<ResumeGuest>(&k)) return c->guest;
  if (auto* c = std::get_if<RestoreSnapshot>(&k)) return c->guest;
  return std::nullopt;
}

struct GuestReport {
  GuestId guest;
  GuestState state = GuestState::Stopped;
  std::optional<JobId> job;
  WorkUnits progress = 0.0;
};

struct PollReport {
  std::vector<GuestReport> guests;
  double resource_load = 0.0;  // carried, not used for ranking
  Bytes storage_used = 0;
  std::vector<SnapshotId> stored;
};

struct PollResponse {
  std::vector<PeerInfo> peers;
  std::vector<GuestId> discard_guests;  // guests the server no longer binds here
};

struct CommandAck {
  Command command;
  bool ok = true;
  Bytes storage_used = 0;
  std::string reason;
};

// Metadata travelling with a snapshot copy.
struct CopyMeta {
  SnapshotId snapshot;
  GuestId guest;
  JobId job;
  std::uint64_t sequence = 0;
  SimTime captured_at = 0.0;
  WorkUnits captured_progress = 0.0;
  Bytes size = 0;
};

inline CopyMeta meta_of(const SnapshotRecord& s) {
  return {s.id, s.guest, s.job, s.sequence, s.captured_at, s.captured_progress, s.size};
}

}  // namespace adhoc
