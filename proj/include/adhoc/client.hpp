// Copyright 2026 The adhoc-cloud Authors
// SPDX-License-Identifier: Apache-2.0
//
// Per-host client state machine: heartbeats, guest liveness probing, the
// resource monitor that suspends guests while the host user needs the
// machine, periodic snapshot capture with peer-to-peer distribution, and
// execution of server commands.

#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "adhoc/domain.hpp"
#include "adhoc/event_log.hpp"
#include "adhoc/placement.hpp"
#include "adhoc/protocol.hpp"

namespace adhoc {

struct ResourceConfig {
  double limit = 0.8;   // fraction of the host the guest may use
  Count window = 3;     // consecutive samples that make a breach "prolonged"
};

struct ClientConfig {
  TimingConfig timing;
  PlacementConfig placement;
  ResourceConfig resource;
  bool replication = true;
  double work_rate = 1.0;  // work units per second while Running
};

struct LocalGuest {
  GuestId id;
  GuestState state = GuestState::Stopped;
  std::optional<JobId> job;
  WorkUnits total_work = 0.0;
  Bytes snapshot_size = 0;
  WorkUnits anchor_progress = 0.0;  // progress at anchor_time
  SimTime anchor_time = 0.0;
  WorkUnits executed = 0.0;         // work executed by this guest, all segments
  std::uint64_t epoch = 0;          // bumped whenever the completion time changes
  std::uint64_t incarnation = 0;    // bumped whenever a job (re)starts here
  bool failure_reported = false;
  std::uint64_t next_sequence = 1;
  std::optional<SnapshotRecord> last_snapshot;
};

struct OutboundRound {
  SnapshotRecord snapshot;
  PlacementDecision decision;
  std::set<HostId> outstanding;
  std::set<HostId> landed;
};

// A snapshot captured by snapshot_tick together with where it should go.
struct SnapshotRound {
  SnapshotRecord snapshot;
  PlacementDecision decision;
  std::size_t candidates = 0;
};

struct RoundOutcome {
  HostId sender;
  SnapshotRecord snapshot;  // locations = receivers that now hold a copy
  PlacementDecision decision;
};

enum class ResourceAction { Suspend, Resume };

struct LostGuest {
  GuestId guest;
  JobId job;
  WorkUnits progress = 0.0;
};

struct FinishedJob {
  GuestId guest;
  JobId job;
  WorkUnits executed = 0.0;
};

struct Execution {
  CommandAck ack;
  std::optional<GuestId> started;            // guest now Running
  std::vector<std::pair<CopyMeta, HostId>> transfers;  // relays requested by the server
};

class Client {
 public:
  Client(HostId host, std::set<CloudletId> cloudlets, Bytes storage_capacity, ClientConfig cfg,
         EventLog* log = nullptr)
      : host_(std::move(host)),
        cloudlets_(std::move(cloudlets)),
        storage_capacity_(storage_capacity),
        cfg_(cfg),
        log_(log) {}

  const HostId& host() const noexcept { return host_; }
  bool up() const noexcept { return up_; }
  bool suspended() const noexcept { return suspended_; }
  const std::map<GuestId, LocalGuest>& guests() const noexcept { return guests_; }
  const std::vector<PeerInfo>& known_peers() const noexcept { return known_peers_; }
  const std::map<SnapshotId, CopyMeta>& stored() const noexcept { return store_; }
  const std::map<GuestId, OutboundRound>& rounds() const noexcept { return rounds_; }
  const std::deque<double>& recent_samples() const noexcept { return samples_; }
  Bytes storage_capacity() const noexcept { return storage_capacity_; }

  Bytes storage_used() const {
    Bytes used = 0;
    for (const auto& [id, c] : store_) used += c.size;
    return used;
  }

  WorkUnits progress(const LocalGuest& g, SimTime now) const {
    if (g.state != GuestState::Running) return g.anchor_progress;
    return std::min(g.total_work, g.anchor_progress + cfg_.work_rate * (now - g.anchor_time));
  }

  // Time at which the guest's job reaches total_work if left running.
  std::optional<SimTime> completion_time(const GuestId& gid) const {
    auto it = guests_.find(gid);
    if (it == guests_.end() || it->second.state != GuestState::Running) return std::nullopt;
    const auto& g = it->second;
    return g.anchor_time + (g.total_work - g.anchor_progress) / cfg_.work_rate;
  }

  // --- physical events -----------------------------------------------------

  void boot(SimTime now) {
    up_ = true;
    samples_.clear();
    known_peers_.clear();
    suspended_ = false;
    log(now, "HostUp", {field("host", host_)});
  }

  // Abrupt host failure: every active guest is lost with its unsaved work
  // and outbound distribution rounds are abandoned.
  std::vector<LostGuest> crash(SimTime now) {
    std::vector<LostGuest> lost;
    log(now, "HostDown", {field("host", host_)});
    for (auto& [gid, g] : guests_) {
      if (auto l = lose(g, now)) lost.push_back(*l);
    }
    rounds_.clear();
    up_ = false;
    return lost;
  }

  std::optional<LostGuest> fail_guest(const GuestId& gid, SimTime now) {
    auto it = guests_.find(gid);
    if (it == guests_.end()) return std::nullopt;
    rounds_.erase(gid);
    return lose(it->second, now);
  }

  // --- periodic behaviour --------------------------------------------------

  PollReport heartbeat(SimTime now) {
    PollReport r;
    for (auto& [gid, g] : guests_) {
      r.guests.push_back({gid, g.state, g.job, progress(g, now)});
      if (g.state == GuestState::Failed) g.failure_reported = true;
    }
    r.resource_load = samples_.empty() ? 0.0 : samples_.back();
    r.storage_used = storage_used();
    for (const auto& [id, c] : store_) r.stored.push_back(id);
    return r;
  }

  void accept(const PollResponse& resp, SimTime now) {
    known_peers_ = resp.peers;
    for (const auto& gid : resp.discard_guests) {
      if (guests_.erase(gid) > 0) {
        rounds_.erase(gid);
        log(now, "GuestDiscarded", {field("host", host_), field("guest", gid)});
      }
    }
    drop_reported_failures();
  }

  // Reports guests that have failed since the last probe, once each.
  std::vector<GuestId> guest_probe(SimTime now) {
    (void)now;
    std::vector<GuestId> out;
    for (auto& [gid, g] : guests_) {
      if (g.state == GuestState::Failed && !g.failure_reported) {
        g.failure_reported = true;
        out.push_back(gid);
      }
    }
    return out;
  }

  // Call once the failures returned by guest_probe have reached the server.
  void drop_reported_failures() {
    std::erase_if(guests_, [](const auto& kv) {
      return kv.second.state == GuestState::Failed && kv.second.failure_reported;
    });
  }

  std::optional<ResourceAction> resource_monitor(double sample, SimTime now) {
    if (!(sample >= 0.0 && sample <= 1.0)) throw ContractError("resource sample outside [0, 1]");
    samples_.push_back(sample);
    while (samples_.size() > cfg_.resource.window) samples_.pop_front();
    if (samples_.size() < cfg_.resource.window) return std::nullopt;
    const double limit = cfg_.resource.limit;
    const bool all_over = std::all_of(samples_.begin(), samples_.end(),
                                      [&](double s) { return s > limit; });
    const bool all_under = std::all_of(samples_.begin(), samples_.end(),
                                       [&](double s) { return s <= limit; });
    if (all_over && !suspended_ && has_guest_in(GuestState::Running)) {
      suspended_ = true;
      for (auto& [gid, g] : guests_) {
        if (g.state == GuestState::Running) suspend(g, now);
      }
      log(now, "ResourceSuspend", {field("host", host_), field("sample", sample)});
      return ResourceAction::Suspend;
    }
    if (all_under && suspended_) {
      suspended_ = false;
      for (auto& [gid, g] : guests_) {
        if (g.state == GuestState::Suspended) resume(g, now);
      }
      log(now, "ResourceResume", {field("host", host_), field("sample", sample)});
      return ResourceAction::Resume;
    }
    return std::nullopt;
  }

  // Captures a snapshot of every running guest with no round in flight and
  // chooses receivers from the last advertised peer list.
  std::vector<SnapshotRound> snapshot_tick(SimTime now) {
    std::vector<SnapshotRound> out;
    if (!cfg_.replication) return out;
    for (auto& [gid, g] : guests_) {
      if (g.state != GuestState::Running || !g.job) continue;
      if (rounds_.contains(gid)) continue;
      SnapshotRecord s;
      s.sequence = g.next_sequence++;
      s.id = SnapshotId(gid.str() + "#" + std::to_string(s.sequence));
      s.guest = gid;
      s.job = *g.job;
      s.captured_at = now;
      s.captured_progress = progress(g, now);
      s.size = g.snapshot_size;
      g.last_snapshot = s;

      auto ordered = filter_receivers(host_, cloudlets_, known_peers_, s.size, cfg_.placement);
      auto decision =
          select_receivers(ordered, cfg_.placement.threshold, cfg_.placement.min_replicas);
      log(now, "SnapshotCaptured",
          {field("host", host_), field("guest", gid), field("job", s.job), field("snapshot", s.id),
           field("seq", s.sequence), field("progress", s.captured_progress)});
      log(now, "Placement",
          {field("snapshot", s.id), field("candidates", static_cast<std::uint64_t>(ordered.size())),
           field("receivers", join_ids(decision.receivers)),
           field("combined", decision.combined_failure_probability),
           field("degraded", decision.degraded)});
      if (!decision.receivers.empty()) {
        OutboundRound round{s, decision, {}, {}};
        round.outstanding.insert(decision.receivers.begin(), decision.receivers.end());
        rounds_.emplace(gid, std::move(round));
      }
      out.push_back({s, decision, ordered.size()});
    }
    return out;
  }

  // --- transfers -------------------------------------------------------------

  // Stores an inbound copy if there is room. Returns whether it landed.
  bool accept_copy(const CopyMeta& copy) {
    if (!up_) return false;
    if (store_.contains(copy.snapshot)) return true;
    if (storage_used() + copy.size > storage_capacity_) return false;
    store_.emplace(copy.snapshot, copy);
    return true;
  }

  // Records the end of one outbound transfer of a round. Returns the outcome
  // once the round's last transfer has finished.
  std::optional<RoundOutcome> transfer_finished(const SnapshotId& snap, const HostId& receiver,
                                                bool landed) {
    for (auto it = rounds_.begin(); it != rounds_.end(); ++it) {
      auto& round = it->second;
      if (round.snapshot.id != snap || !round.outstanding.contains(receiver)) continue;
      round.outstanding.erase(receiver);
      if (landed) round.landed.insert(receiver);
      if (!round.outstanding.empty()) return std::nullopt;
      RoundOutcome outcome{host_, round.snapshot, round.decision};
      outcome.snapshot.locations = round.landed;
      rounds_.erase(it);
      return outcome;
    }
    return std::nullopt;
  }

  // --- commands ----------------------------------------------------------------

  Execution execute_command(const Command& cmd, SimTime now) {
    Execution ex;
    ex.ack.command = cmd;
    if (cmd.target != host_) throw ContractError("command for another host");
    auto nack = [&](std::string reason) {
      ex.ack.ok = false;
      ex.ack.reason = std::move(reason);
    };
    if (const auto* c = std::get_if<StartGuest>(&cmd.kind)) {
      auto& g = guests_[c->guest];
      if (g.id.empty()) g.id = c->guest;
      if (g.state != GuestState::Stopped) {
        nack("guest_not_stopped");
      } else {
        begin_job(g, c->job, c->total_work, c->snapshot_size, c->progress, now);
        ex.started = g.id;
      }
    } else if (const auto* c = std::get_if<SuspendGuest>(&cmd.kind)) {
      auto it = guests_.find(c->guest);
      if (it == guests_.end() || it->second.state != GuestState::Running) {
        nack("illegal_transition");
      } else {
        suspend(it->second, now);
      }
    } else if (const auto* c = std::get_if<ResumeGuest>(&cmd.kind)) {
      auto it = guests_.find(c->guest);
      if (it == guests_.end() || it->second.state != GuestState::Suspended) {
        nack("illegal_transition");
      } else {
        resume(it->second, now);
        ex.started = it->second.id;
      }
    } else if (const auto* c = std::get_if<RestoreSnapshot>(&cmd.kind)) {
      auto copy = store_.find(c->snapshot);
      if (copy == store_.end()) {
        nack("snapshot_missing");
      } else {
        auto& g = guests_[c->guest];
        if (g.id.empty()) g.id = c->guest;
        if (g.state != GuestState::Stopped) {
          nack("guest_not_stopped");
        } else {
          const WorkUnits restored = copy->second.captured_progress;
          store_.erase(copy);
          begin_job(g, c->job, c->total_work, c->snapshot_size, restored, now);
          ex.started = g.id;
        }
      }
    } else if (const auto* c = std::get_if<DeleteSnapshot>(&cmd.kind)) {
      store_.erase(c->snapshot);
    } else if (const auto* c = std::get_if<TransferSnapshot>(&cmd.kind)) {
      auto copy = store_.find(c->snapshot);
      if (copy == store_.end()) {
        nack("snapshot_missing");
      } else {
        for (const auto& r : c->receivers) ex.transfers.emplace_back(copy->second, r);
      }
    }
    ex.ack.storage_used = storage_used();
    return ex;
  }

  // Jobs whose work is done at `now`; their guests return to Stopped.
  std::vector<FinishedJob> check_progress(SimTime now) {
    std::vector<FinishedJob> out;
    for (auto& [gid, g] : guests_) {
      if (g.state != GuestState::Running || !g.job) continue;
      const WorkUnits p = progress(g, now);
      if (g.total_work - p > 1e-9 * std::max(1.0, g.total_work)) continue;
      g.executed += g.total_work - g.anchor_progress;
      out.push_back({gid, *g.job, g.executed});
      g.state = GuestState::Stopped;
      g.job.reset();
      g.anchor_progress = 0.0;
      g.executed = 0.0;
      ++g.epoch;
      rounds_.erase(gid);
    }
    return out;
  }

  bool has_guest_in(GuestState s) const {
    return std::any_of(guests_.begin(), guests_.end(),
                       [&](const auto& kv) { return kv.second.state == s; });
  }

 private:
  void log(SimTime t, std::string kind, std::initializer_list<EventLog::Field> fields) {
    if (log_) log_->append(t, std::move(kind), fields);
  }

  void begin_job(LocalGuest& g, const JobId& job, WorkUnits total, Bytes size,
                 WorkUnits progress_now, SimTime now) {
    g.job = job;
    g.total_work = total;
    g.snapshot_size = size;
    g.anchor_progress = progress_now;
    g.anchor_time = now;
    g.executed = 0.0;
    g.failure_reported = false;
    g.state = GuestState::Running;
    ++g.epoch;
    g.incarnation = ++incarnations_;
    if (suspended_) suspend(g, now);
  }

  void suspend(LocalGuest& g, SimTime now) {
    const WorkUnits p = progress(g, now);
    g.executed += p - g.anchor_progress;
    g.anchor_progress = p;
    g.anchor_time = now;
    g.state = GuestState::Suspended;
    ++g.epoch;
    log(now, "GuestSuspended", {field("host", host_), field("guest", g.id)});
  }

  void resume(LocalGuest& g, SimTime now) {
    g.anchor_time = now;
    g.state = GuestState::Running;
    ++g.epoch;
    log(now, "GuestResumed", {field("host", host_), field("guest", g.id)});
  }

  std::optional<LostGuest> lose(LocalGuest& g, SimTime now) {
    if (g.state != GuestState::Running && g.state != GuestState::Suspended) return std::nullopt;
    const WorkUnits p = progress(g, now);
    g.executed += p - g.anchor_progress;
    g.anchor_progress = p;
    g.state = GuestState::Failed;
    g.failure_reported = false;
    ++g.epoch;
    LostGuest lost{g.id, *g.job, p};
    log(now, "GuestLost", {field("host", host_), field("guest", g.id), field("job", *g.job),
                           field("progress", p), field("executed", g.executed)});
    return lost;
  }

  HostId host_;
  std::set<CloudletId> cloudlets_;
  Bytes storage_capacity_ = 0;
  ClientConfig cfg_;
  EventLog* log_ = nullptr;
  bool up_ = false;
  bool suspended_ = false;
  std::uint64_t incarnations_ = 0;
  std::map<GuestId, LocalGuest> guests_;
  std::deque<double> samples_;
  std::vector<PeerInfo> known_peers_;
  std::map<SnapshotId, CopyMeta> store_;
  std::map<GuestId, OutboundRound> rounds_;
};

}  // namespace adhoc
