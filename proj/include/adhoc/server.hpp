// Copyright 2026 The adhoc-cloud Authors
// SPDX-License-Identifier: Apache-2.0
//
// The central server as a run-to-completion state machine. It admits jobs,
// schedules them onto the most reliable ready host, tracks host liveness from
// polls, keeps the newest snapshot location set per guest and restores
// failed guests from those snapshots.
//
// Every public handler runs to completion; commands accumulate in an outbound
// queue that the driver drains and delivers.

#pragma once

#include <algorithm>
#include <cstdio>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "adhoc/domain.hpp"
#include "adhoc/event_log.hpp"
#include "adhoc/placement.hpp"
#include "adhoc/protocol.hpp"
#include "adhoc/reliability.hpp"

namespace adhoc {

struct ServerConfig {
  TimingConfig timing;
  ReliabilityOptions reliability;
  Count retry_budget = 10;  // restores + restarts before a job fails permanently
};

struct JobSpec {
  WorkUnits total_work = 0.0;
  Bytes snapshot_size = 0;
  std::optional<CloudletId> cloudlet;
};

struct HostSetup {
  HostId id;
  Bytes storage_capacity = 0;
  std::set<CloudletId> cloudlets;
  Count jobs_assigned = 0;
  Count jobs_completed = 0;
  Count failures = 0;
};

struct RestoreInFlight {
  std::uint64_t command_id = 0;
  SnapshotId snapshot;
  GuestId origin_guest;
  HostId target;
};

// Copies of a snapshot that have landed on receivers before the sender
// closed its distribution round.
struct PendingCopies {
  GuestId guest;
  JobId job;
  std::set<HostId> hosts;
};

struct ServerState {
  std::map<HostId, HostRecord> hosts;
  std::map<HostId, ReliabilityView> reliability;
  std::map<HostId, double> resource_load;
  std::map<GuestId, GuestRecord> guests;
  std::map<JobId, JobRecord> jobs;
  std::map<CloudletId, Cloudlet> cloudlets;
  SnapshotRegistry snapshot_registry;
  std::map<SnapshotId, PendingCopies> pending_copies;
  std::map<JobId, RestoreInFlight> restores;
  std::deque<JobId> pending_jobs;
  std::deque<Command> outbound_commands;
  SimTime clock = 0.0;
  ServerConfig config;
  std::uint64_t next_job = 1;
  std::uint64_t next_command = 1;
  std::map<HostId, Count> guest_serial;
  std::set<std::pair<HostId, SnapshotId>> pending_deletes;  // issued, not yet acknowledged
};

class Server {
 public:
  explicit Server(ServerConfig cfg = {}, EventLog* log = nullptr) : log_(log) {
    cfg.timing.check();
    state_.config = cfg;
  }

  const ServerState& state() const noexcept { return state_; }

  // Adds a host the server knows about. Hosts that are up at start are
  // registered immediately; others register on their first poll.
  void add_host(const HostSetup& s, bool up, SimTime now) {
    if (state_.hosts.contains(s.id)) throw ContractError("duplicate host " + s.id.str());
    HostRecord h;
    h.id = s.id;
    h.storage_capacity = s.storage_capacity;
    h.cloudlets = s.cloudlets;
    h.jobs_assigned = s.jobs_assigned;
    h.jobs_completed = s.jobs_completed;
    h.failures = s.failures;
    if (auto v = validate(h); !v.empty()) throw ContractError("host " + s.id.str() + ": " + v[0]);
    for (const auto& c : s.cloudlets) state_.cloudlets[c].id = c;
    state_.hosts.emplace(h.id, h);
    state_.reliability[h.id] = make_view(h, state_.config.reliability);
    if (up) register_host(h.id, now);
  }

  JobId submit_job(const JobSpec& spec, SimTime now) {
    advance(now);
    if (!(spec.total_work > 0.0)) throw ValidationError("submit_job: total_work must be positive");
    char buf[32];
    std::snprintf(buf, sizeof(buf), "job%04llu",
                  static_cast<unsigned long long>(state_.next_job++));
    JobRecord j;
    j.id = JobId(buf);
    j.total_work = spec.total_work;
    j.snapshot_size = spec.snapshot_size;
    j.cloudlet = spec.cloudlet;
    j.submitted_at = now;
    state_.jobs.emplace(j.id, j);
    state_.pending_jobs.push_back(j.id);
    if (spec.cloudlet) state_.cloudlets[*spec.cloudlet].id = *spec.cloudlet;
    log(now, "JobSubmitted", {field("job", j.id), field("work", j.total_work),
                              field("snapshot_size", j.snapshot_size)});
    schedule_pending(now);
    return j.id;
  }

  // Assigns pending jobs, in submission order, to the head of the ready-host
  // ranking. Returns the commands issued by this call.
  std::vector<Command> schedule_pending(SimTime now) {
    advance(now);
    const auto before = state_.outbound_commands.size();
    std::deque<JobId> still_pending;
    while (!state_.pending_jobs.empty()) {
      JobId jid = state_.pending_jobs.front();
      state_.pending_jobs.pop_front();
      auto& job = state_.jobs.at(jid);
      auto ranked = ranked_ready_hosts(job.cloudlet);
      if (ranked.empty()) {
        still_pending.push_back(jid);
        continue;
      }
      assign(job, ranked.front(), now);
    }
    state_.pending_jobs = std::move(still_pending);
    return {state_.outbound_commands.begin() + static_cast<std::ptrdiff_t>(before),
            state_.outbound_commands.end()};
  }

  std::vector<HostId> ranked_ready_hosts(const std::optional<CloudletId>& cloudlet = {}) const {
    std::vector<HostStanding> standings;
    for (const auto& [id, h] : state_.hosts) {
      if (cloudlet && !h.cloudlets.contains(*cloudlet)) continue;
      standings.push_back({h, state_.reliability.at(id), idle_guest(id).has_value()});
    }
    return rank_ready_hosts(standings);
  }

  PollResponse on_poll(const HostId& host_id, const PollReport& report, SimTime now) {
    advance(now);
    auto it = state_.hosts.find(host_id);
    if (it == state_.hosts.end()) throw ContractError("poll from unknown host " + host_id.str());
    if (now < it->second.last_poll_time) throw ContractError("poll time moved backwards");
    if (it->second.liveness != Liveness::Up) {
      register_host(host_id, now);
    }
    auto& host = state_.hosts.at(host_id);
    host.last_poll_time = now;
    host.storage_used = report.storage_used;
    state_.resource_load[host_id] = report.resource_load;

    PollResponse resp;
    for (const auto& g : report.guests) {
      auto git = state_.guests.find(g.guest);
      if (git == state_.guests.end() || git->second.host != host_id ||
          git->second.state == GuestState::Failed) {
        resp.discard_guests.push_back(g.guest);
        continue;
      }
      auto& guest = git->second;
      if (g.state == GuestState::Failed) {
        on_guest_failure_report(host_id, g.guest, now);
        resp.discard_guests.push_back(g.guest);
        continue;
      }
      if (!guest.job || g.job != guest.job) {
        if (g.state != GuestState::Stopped) resp.discard_guests.push_back(g.guest);
        continue;
      }
      auto& job = state_.jobs.at(*guest.job);
      if (g.state == GuestState::Running || g.state == GuestState::Suspended) {
        if (job.status == JobStatus::Running) {
          guest.state = g.state;
          // Reaching total_work is left to the completion report.
          if (g.progress < job.total_work) job.progress = std::max(job.progress, g.progress);
        }
      }
    }
    reconcile_storage(host_id, report.stored, now);
    ensure_idle_guest(host_id);
    schedule_pending(now);

    for (const auto& [id, h] : state_.hosts) {
      if (id == host_id || h.liveness != Liveness::Up) continue;
      if (h.storage_used >= h.storage_capacity) continue;
      const auto& view = state_.reliability.at(id);
      resp.peers.push_back({id, "addr:" + id.str(), view.reliability, view.failure_probability,
                            h.in_use, h.liveness, h.storage_headroom(), h.cloudlets});
    }
    return resp;
  }

  // Declares hosts failed once their silence exceeds the failure timeout and
  // restores the jobs they were running. Returns the newly failed hosts.
  std::vector<HostId> availability_sweep(SimTime now) {
    advance(now);
    std::vector<HostId> failed;
    for (auto& [id, h] : state_.hosts) {
      if (h.liveness != Liveness::Up) continue;
      if (now - h.last_poll_time > state_.config.timing.failure_timeout) failed.push_back(id);
    }
    // Mark every silent host first so restores never target one of them.
    for (const auto& id : failed) {
      state_.hosts.at(id).liveness = Liveness::FailedDeclared;
      forget_pending_deletes(id);
      log(now, "HostDeclaredFailed",
          {field("host", id), field("last_poll", state_.hosts.at(id).last_poll_time)});
    }
    for (const auto& id : failed) {
      for (const auto& gid : guests_on(id)) {
        auto& guest = state_.guests.at(gid);
        if (guest.state == GuestState::Failed) continue;
        const bool active = guest.job.has_value();
        guest.state = GuestState::Failed;
        if (active) {
          apply_host_event(id, HostEvent::HostFailure, now);
          orchestrate_restore(gid, now);
        }
      }
      refresh_in_use(id);
    }
    if (!failed.empty()) schedule_pending(now);
    return failed;
  }

  // Restores the job of `failed_guest` from its newest snapshot on the most
  // reliable surviving location, or requeues it from zero when no copy
  // survives. The guest must already be marked Failed.
  std::vector<Command> orchestrate_restore(const GuestId& failed_guest, SimTime now) {
    advance(now);
    const auto before = state_.outbound_commands.size();
    auto& guest = state_.guests.at(failed_guest);
    if (!guest.job) return {};
    const JobId jid = *guest.job;
    guest.job.reset();
    guest.state = GuestState::Failed;
    refresh_in_use(guest.host);
    drop_pending_copies(failed_guest, now);

    auto& job = state_.jobs.at(jid);
    if (job.status == JobStatus::Completed || job.status == JobStatus::FailedPermanent) return {};
    job.current_guest.reset();
    state_.restores.erase(jid);

    if (job.restore_count + job.restart_count >= state_.config.retry_budget) {
      job.status = JobStatus::FailedPermanent;
      log(now, "JobFailedPermanent", {field("job", jid), field("restores", job.restore_count),
                                      field("restarts", job.restart_count)});
      drop_job_snapshots(jid, now);
      return slice_from(before);
    }

    const SnapshotRecord* entry = latest_for_job(jid);
    std::optional<HostId> target;
    if (entry) {
      std::vector<ReliabilityView> candidates;
      for (const auto& h : entry->locations) {
        if (h == guest.host) continue;
        if (state_.hosts.at(h).liveness != Liveness::Up) continue;
        candidates.push_back(state_.reliability.at(h));
      }
      std::sort(candidates.begin(), candidates.end(), more_reliable);
      if (!candidates.empty()) target = candidates.front().host;
    }

    if (!target) {
      job.progress = 0.0;
      ++job.restart_count;
      job.status = JobStatus::Submitted;
      log(now, "JobRestarted", {field("job", jid), field("reason", entry ? "no_surviving_copy"
                                                                          : "no_snapshot")});
      drop_job_snapshots(jid, now);
      state_.pending_jobs.push_back(jid);
      return slice_from(before);
    }

    const GuestId origin = entry->guest;
    const GuestId fresh = provision_guest(*target);
    auto& g = state_.guests.at(fresh);
    g.job = jid;
    job.current_guest = fresh;
    job.status = JobStatus::Scheduled;
    job.progress = entry->captured_progress;
    ++job.restore_count;
    apply_host_event(*target, HostEvent::JobAssigned, now);
    refresh_in_use(*target);
    RestoreSnapshot cmd{entry->id, origin, fresh, jid, entry->captured_progress, job.total_work,
                        entry->size};
    const auto cid = issue(*target, cmd, now);
    state_.restores[jid] = {cid, entry->id, origin, *target};
    log(now, "RestoreIssued",
        {field("job", jid), field("snapshot", entry->id), field("target", *target),
         field("guest", fresh), field("progress", entry->captured_progress),
         field("locations", join_ids(entry->locations))});
    return slice_from(before);
  }

  std::vector<Command> on_guest_failure_report(const HostId& host_id, const GuestId& guest_id,
                                               SimTime now) {
    advance(now);
    const auto before = state_.outbound_commands.size();
    auto it = state_.guests.find(guest_id);
    if (it == state_.guests.end()) throw ContractError("failure report for unknown guest " + guest_id.str());
    auto& guest = it->second;
    if (guest.host != host_id || guest.state == GuestState::Failed) return {};
    log(now, "GuestFailureReported", {field("host", host_id), field("guest", guest_id)});
    if (guest.job) {
      apply_host_event(host_id, HostEvent::GuestFailure, now);
      orchestrate_restore(guest_id, now);
    } else {
      guest.state = GuestState::Failed;
    }
    refresh_in_use(host_id);
    if (state_.hosts.at(host_id).liveness == Liveness::Up) ensure_idle_guest(host_id);
    schedule_pending(now);
    return slice_from(before);
  }

  void on_command_ack(const HostId& host_id, const CommandAck& ack, SimTime now) {
    advance(now);
    update_storage(host_id, ack.storage_used);
    const auto& kind = ack.command.kind;
    if (!ack.ok) {
      log(now, "CommandNack", {field("host", host_id), field("command", ack.command.id),
                               field("kind", command_name(kind)), field("reason", ack.reason)});
      if (auto g = command_guest(kind); g && state_.guests.contains(*g)) {
        on_guest_failure_report(host_id, *g, now);
      }
      return;
    }
    if (const auto* c = std::get_if<StartGuest>(&kind)) {
      auto git = state_.guests.find(c->guest);
      if (git == state_.guests.end() || git->second.job != c->job) return;
      auto& job = state_.jobs.at(c->job);
      if (job.status != JobStatus::Scheduled) return;
      git->second.state = GuestState::Running;
      job.status = JobStatus::Running;
      log(now, "JobStarted", {field("job", c->job), field("host", host_id),
                              field("guest", c->guest), field("progress", c->progress)});
    } else if (const auto* c = std::get_if<RestoreSnapshot>(&kind)) {
      auto rit = state_.restores.find(c->job);
      if (rit == state_.restores.end() || rit->second.command_id != ack.command.id) return;
      const auto info = rit->second;
      state_.restores.erase(rit);
      auto& job = state_.jobs.at(c->job);
      auto& guest = state_.guests.at(c->guest);
      guest.state = GuestState::Running;
      job.status = JobStatus::Running;
      log(now, "JobRestored", {field("job", c->job), field("host", host_id),
                               field("guest", c->guest), field("snapshot", c->snapshot),
                               field("progress", c->progress)});
      // The target consumed its copy; every other holder deletes theirs.
      state_.snapshot_registry.drop_location(info.origin_guest, host_id);
      for (const auto& d : state_.snapshot_registry.remove(info.origin_guest)) {
        issue_delete(d.host, d.snapshot, now);
      }
    } else if (const auto* c = std::get_if<DeleteSnapshot>(&kind)) {
      state_.pending_deletes.erase({host_id, c->snapshot});
      log(now, "SnapshotDeleted", {field("host", host_id), field("snapshot", c->snapshot)});
    }
  }

  void on_job_complete(const JobId& job_id, const GuestId& guest_id, SimTime now) {
    advance(now);
    auto jit = state_.jobs.find(job_id);
    if (jit == state_.jobs.end()) throw ContractError("completion for unknown job " + job_id.str());
    auto& job = jit->second;
    if (job.status != JobStatus::Running || job.current_guest != guest_id) {
      throw ContractError("completion for job " + job_id.str() + " that is not running there");
    }
    auto& guest = state_.guests.at(guest_id);
    const HostId host = guest.host;
    job.status = JobStatus::Completed;
    job.progress = job.total_work;
    job.current_guest.reset();
    apply_host_event(host, HostEvent::JobCompleted, now);
    guest.job.reset();
    guest.state = GuestState::Stopped;
    log(now, "JobCompleted", {field("job", job_id), field("host", host), field("guest", guest_id),
                              field("latency", now - job.submitted_at)});
    drop_pending_copies(guest_id, now);
    drop_job_snapshots(job_id, now);
    // A host keeps a single idle guest; extra guests left behind by restores
    // are retired once their job ends.
    if (idle_guest(host, guest_id)) retire_guest(guest_id);
    refresh_in_use(host);
    schedule_pending(now);
  }

  void on_transfer_complete(const CopyMeta& copy, const HostId& receiver, Bytes receiver_storage,
                            SimTime now) {
    advance(now);
    update_storage(receiver, receiver_storage);
    const bool live = guest_active(copy.guest, copy.job);
    if (const auto* entry = state_.snapshot_registry.latest(copy.guest);
        live && entry && entry->id == copy.snapshot) {
      state_.snapshot_registry.add_location(copy.guest, receiver);
      return;
    }
    if (!live) {
      issue_delete(receiver, copy.snapshot, now);
      return;
    }
    auto& p = state_.pending_copies[copy.snapshot];
    p.guest = copy.guest;
    p.job = copy.job;
    p.hosts.insert(receiver);
  }

  // The sender finished distributing `snapshot`; the copies that landed
  // become the guest's registered snapshot.
  void on_snapshot_round_complete(const HostId& sender, const SnapshotRecord& snapshot,
                                  const PlacementDecision& intended, SimTime now) {
    advance(now);
    std::set<HostId> landed;
    if (auto it = state_.pending_copies.find(snapshot.id); it != state_.pending_copies.end()) {
      landed = std::move(it->second.hosts);
      state_.pending_copies.erase(it);
    }
    if (!guest_active(snapshot.guest, snapshot.job) ||
        state_.guests.at(snapshot.guest).host != sender) {
      for (const auto& h : landed) issue_delete(h, snapshot.id, now);
      return;
    }
    if (landed.empty()) {
      log(now, "SnapshotUnplaced", {field("guest", snapshot.guest), field("snapshot", snapshot.id),
                                    field("intended", join_ids(intended.receivers))});
      return;
    }
    PlacementDecision effective;
    effective.combined_failure_probability = 1.0;
    for (const auto& h : landed) {
      effective.receivers.push_back(h);
      effective.combined_failure_probability *= state_.reliability.at(h).failure_probability;
    }
    effective.degraded = intended.degraded || landed.size() < intended.receivers.size();
    for (const auto& d : state_.snapshot_registry.register_snapshot(snapshot, effective)) {
      issue_delete(d.host, d.snapshot, now);
    }
    log(now, "SnapshotRegistered",
        {field("guest", snapshot.guest), field("job", snapshot.job), field("snapshot", snapshot.id),
         field("seq", snapshot.sequence), field("progress", snapshot.captured_progress),
         field("locations", join_ids(landed)),
         field("combined", effective.combined_failure_probability)});
  }

  std::vector<Command> drain_commands() {
    std::vector<Command> out(state_.outbound_commands.begin(), state_.outbound_commands.end());
    state_.outbound_commands.clear();
    return out;
  }

  const SnapshotRecord* latest_for_job(const JobId& jid) const {
    const SnapshotRecord* best = nullptr;
    for (const auto& [gid, s] : state_.snapshot_registry.entries()) {
      if (s.job == jid && (!best || s.captured_at > best->captured_at)) best = &s;
    }
    return best;
  }

 private:
  void advance(SimTime now) {
    if (now < state_.clock) throw ContractError("server clock moved backwards");
    state_.clock = now;
  }

  void log(SimTime t, std::string kind, std::initializer_list<EventLog::Field> fields) {
    if (log_) log_->append(t, std::move(kind), fields);
  }

  std::vector<Command> slice_from(std::size_t before) const {
    return {state_.outbound_commands.begin() + static_cast<std::ptrdiff_t>(before),
            state_.outbound_commands.end()};
  }

  void register_host(const HostId& id, SimTime now) {
    auto& h = state_.hosts.at(id);
    const bool rejoin = h.liveness == Liveness::FailedDeclared;
    h.liveness = Liveness::Up;
    forget_pending_deletes(id);
    h.last_poll_time = std::max(h.last_poll_time, now);
    log(now, "HostRegistered", {field("host", id), field("rejoin", rejoin)});
    ensure_idle_guest(id);
  }

  std::vector<GuestId> guests_on(const HostId& host) const {
    std::vector<GuestId> out;
    for (const auto& [gid, g] : state_.guests) {
      if (g.host == host) out.push_back(gid);
    }
    return out;
  }

  std::optional<GuestId> idle_guest(const HostId& host,
                                    const std::optional<GuestId>& except = {}) const {
    for (const auto& [gid, g] : state_.guests) {
      if (g.host == host && g.state == GuestState::Stopped && !g.job && gid != except) return gid;
    }
    return std::nullopt;
  }

  bool guest_active(const GuestId& gid, const JobId& jid) const {
    auto it = state_.guests.find(gid);
    return it != state_.guests.end() && it->second.state != GuestState::Failed &&
           it->second.job == jid;
  }

  GuestId provision_guest(const HostId& host) {
    const auto& h = state_.hosts.at(host);
    const Count serial = ++state_.guest_serial[host];
    GuestId gid(host.str() + "/vm" + std::to_string(serial));
    GuestRecord g;
    g.id = gid;
    g.host = host;
    g.cloudlet = h.cloudlets.empty() ? CloudletId("default") : *h.cloudlets.begin();
    auto& c = state_.cloudlets[g.cloudlet];
    c.id = g.cloudlet;
    c.members.insert(gid);
    state_.guests.emplace(gid, g);
    state_.snapshot_registry.add_guest(gid);
    return gid;
  }

  void ensure_idle_guest(const HostId& host) {
    if (!idle_guest(host)) {
      auto gid = provision_guest(host);
      log(state_.clock, "GuestProvisioned", {field("host", host), field("guest", gid)});
    }
  }

  void retire_guest(const GuestId& gid) {
    auto it = state_.guests.find(gid);
    if (it == state_.guests.end()) return;
    state_.cloudlets[it->second.cloudlet].members.erase(gid);
    state_.guests.erase(it);
  }

  void refresh_in_use(const HostId& host) {
    bool busy = false;
    for (const auto& [gid, g] : state_.guests) {
      if (g.host == host && g.job && g.state != GuestState::Failed) busy = true;
    }
    state_.hosts.at(host).in_use = busy;
  }

  void update_storage(const HostId& host, Bytes used) {
    auto& h = state_.hosts.at(host);
    h.storage_used = std::min(used, h.storage_capacity);
  }

  void apply_host_event(const HostId& id, HostEvent e, SimTime now) {
    auto outcome = record_event(state_.hosts.at(id), e, state_.config.reliability);
    state_.hosts.at(id) = outcome.host;
    if (outcome.view) {
      state_.reliability[id] = *outcome.view;
      log(now, "Reliability", {field("host", id), field("event", to_string(e)),
                               field("value", outcome.view->reliability),
                               field("fp", outcome.view->failure_probability)});
    }
  }

  void assign(JobRecord& job, const HostId& host, SimTime now) {
    const GuestId gid = *idle_guest(host);
    auto& guest = state_.guests.at(gid);
    guest.job = job.id;
    job.status = JobStatus::Scheduled;
    job.current_guest = gid;
    apply_host_event(host, HostEvent::JobAssigned, now);
    refresh_in_use(host);
    log(now, "JobScheduled", {field("job", job.id), field("host", host), field("guest", gid),
                              field("reliability", state_.reliability.at(host).reliability)});
    issue(host, StartGuest{gid, job.id, job.total_work, job.progress, job.snapshot_size}, now);
  }

  std::uint64_t issue(const HostId& target, CommandKind kind, SimTime now) {
    Command c{state_.next_command++, target, std::move(kind), now};
    log(now, "Command", {field("id", c.id), field("kind", command_name(c.kind)),
                         field("target", target)});
    state_.outbound_commands.push_back(std::move(c));
    return state_.outbound_commands.back().id;
  }

  // Deletions only go to hosts that are up; copies left on other hosts are
  // reconciled when they poll again.
  void issue_delete(const HostId& host, const SnapshotId& snap, SimTime now) {
    if (state_.hosts.at(host).liveness != Liveness::Up) return;
    if (!state_.pending_deletes.emplace(host, snap).second) return;
    issue(host, DeleteSnapshot{snap}, now);
  }

  void forget_pending_deletes(const HostId& host) {
    std::erase_if(state_.pending_deletes, [&](const auto& d) { return d.first == host; });
  }

  void drop_pending_copies(const GuestId& gid, SimTime now) {
    for (auto it = state_.pending_copies.begin(); it != state_.pending_copies.end();) {
      if (it->second.guest == gid) {
        for (const auto& h : it->second.hosts) issue_delete(h, it->first, now);
        it = state_.pending_copies.erase(it);
      } else {
        ++it;
      }
    }
  }

  void drop_job_snapshots(const JobId& jid, SimTime now) {
    std::vector<GuestId> owners;
    for (const auto& [gid, s] : state_.snapshot_registry.entries()) {
      if (s.job == jid) owners.push_back(gid);
    }
    for (const auto& gid : owners) {
      for (const auto& d : state_.snapshot_registry.remove(gid)) issue_delete(d.host, d.snapshot, now);
    }
  }

  bool referenced_copy(const HostId& host, const SnapshotId& snap) const {
    for (const auto& [gid, s] : state_.snapshot_registry.entries()) {
      if (s.id == snap) return s.locations.contains(host);
    }
    auto it = state_.pending_copies.find(snap);
    return it != state_.pending_copies.end() && it->second.hosts.contains(host);
  }

  void reconcile_storage(const HostId& host, const std::vector<SnapshotId>& stored, SimTime now) {
    for (const auto& snap : stored) {
      if (!referenced_copy(host, snap)) issue_delete(host, snap, now);
    }
  }

  ServerState state_;
  EventLog* log_ = nullptr;
};

// --- serialization ----------------------------------------------------------

inline nlohmann::ordered_json to_json(const ServerState& s) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["clock"] = s.clock;
  auto& hosts = j["hosts"] = ordered_json::array();
  for (const auto& [id, h] : s.hosts) {
    const auto& v = s.reliability.at(id);
    ordered_json cl = ordered_json::array();
    for (const auto& c : h.cloudlets) cl.push_back(c.str());
    hosts.push_back({{"id", id.str()},
                     {"CA", h.jobs_assigned},
                     {"CC", h.jobs_completed},
                     {"NF", h.failures},
                     {"liveness", std::string(to_string(h.liveness))},
                     {"last_poll", h.last_poll_time},
                     {"storage_capacity", h.storage_capacity},
                     {"storage_used", h.storage_used},
                     {"in_use", h.in_use},
                     {"cloudlets", cl},
                     {"reliability", v.reliability},
                     {"failure_probability", v.failure_probability}});
  }
  auto& guests = j["guests"] = ordered_json::array();
  for (const auto& [id, g] : s.guests) {
    guests.push_back({{"id", id.str()},
                      {"host", g.host.str()},
                      {"state", std::string(to_string(g.state))},
                      {"job", g.job ? g.job->str() : ""},
                      {"cloudlet", g.cloudlet.str()}});
  }
  auto& jobs = j["jobs"] = ordered_json::array();
  for (const auto& [id, job] : s.jobs) {
    jobs.push_back({{"id", id.str()},
                    {"status", std::string(to_string(job.status))},
                    {"progress", job.progress},
                    {"total_work", job.total_work},
                    {"guest", job.current_guest ? job.current_guest->str() : ""},
                    {"restores", job.restore_count},
                    {"restarts", job.restart_count}});
  }
  auto& snaps = j["snapshots"] = ordered_json::array();
  for (const auto& [gid, snap] : s.snapshot_registry.entries()) {
    ordered_json locs = ordered_json::array();
    for (const auto& h : snap.locations) locs.push_back(h.str());
    snaps.push_back({{"guest", gid.str()},
                     {"id", snap.id.str()},
                     {"job", snap.job.str()},
                     {"seq", snap.sequence},
                     {"progress", snap.captured_progress},
                     {"locations", locs}});
  }
  ordered_json pending = ordered_json::array();
  for (const auto& jid : s.pending_jobs) pending.push_back(jid.str());
  j["pending_jobs"] = pending;
  return j;
}

inline std::string dump_state(const ServerState& s) { return to_json(s).dump(1); }

// Referential integrity across the server's records.
inline std::vector<std::string> validate(const ServerState& s) {
  std::vector<std::string> out;
  auto add = [&](std::vector<std::string> v) { out.insert(out.end(), v.begin(), v.end()); };
  for (const auto& [id, h] : s.hosts) add(validate(h));
  std::map<JobId, int> running_guests;
  for (const auto& [id, g] : s.guests) {
    add(validate(g));
    if (!s.hosts.contains(g.host)) out.push_back("guest " + id.str() + " on unknown host");
    if (g.job) {
      if (!s.jobs.contains(*g.job)) out.push_back("guest " + id.str() + " has unknown job");
      if (g.state == GuestState::Running) ++running_guests[*g.job];
    }
  }
  for (const auto& [id, j] : s.jobs) {
    add(validate(j));
    if (j.current_guest) {
      auto it = s.guests.find(*j.current_guest);
      if (it == s.guests.end()) {
        out.push_back("job " + id.str() + " bound to unknown guest");
      } else if (it->second.job != id) {
        out.push_back("job " + id.str() + " and guest disagree on binding");
      }
    }
    const int n = running_guests.contains(id) ? running_guests.at(id) : 0;
    if (n > 1) out.push_back("job " + id.str() + " has several running guests");
    if (j.status == JobStatus::Running && n == 0) {
      auto it = j.current_guest ? s.guests.find(*j.current_guest) : s.guests.end();
      if (it == s.guests.end() || it->second.state != GuestState::Suspended) {
        out.push_back("running job " + id.str() + " without an active guest");
      }
    }
  }
  for (const auto& [gid, snap] : s.snapshot_registry.entries()) {
    if (!s.jobs.contains(snap.job)) out.push_back("snapshot for unknown job");
    for (const auto& h : snap.locations) {
      if (!s.hosts.contains(h)) out.push_back("snapshot stored on unknown host");
    }
    std::optional<HostId> gh;
    if (auto it = s.guests.find(gid); it != s.guests.end()) gh = it->second.host;
    add(validate(snap, gh));
  }
  for (const auto& [cid, c] : s.cloudlets) add(validate(c, s.guests));
  return out;
}

}  // namespace adhoc
