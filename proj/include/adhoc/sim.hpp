// Copyright 2026 The adhoc-cloud Authors
// SPDX-License-Identifier: Apache-2.0
//
// Discrete-event driver. Replays a churn trace against one Server and a
// Client per host, delivering heartbeats, probes, snapshot rounds, transfers
// and commands in (time, insertion order) order. Nothing here reads the wall
// clock; a run is a function of its config, trace and seed.

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "adhoc/client.hpp"
#include "adhoc/domain.hpp"
#include "adhoc/event_log.hpp"
#include "adhoc/metrics.hpp"
#include "adhoc/protocol.hpp"
#include "adhoc/server.hpp"
#include "adhoc/trace.hpp"

namespace adhoc {

enum class EventKind {
  HostUp,
  HostDown,
  HeartbeatTick,
  GuestProbeTick,
  SnapshotTick,
  SweepTick,
  TransferComplete,
  JobProgressCheck,
  CommandDelivery,
  JobSubmit,
  GuestCrash,
};

struct Event {
  SimTime time = 0.0;
  std::uint64_t sequence = 0;
  EventKind kind = EventKind::SweepTick;
  HostId host;
  GuestId guest;
  std::uint64_t ref = 0;  // transfer id, job index, epoch or incarnation
  bool recurring = false;
  std::optional<Command> command;
};

class EventQueue {
 public:
  std::uint64_t push(Event e) {
    e.sequence = next_++;
    heap_.push(std::move(e));
    return next_ - 1;
  }
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  const Event& top() const { return heap_.top(); }
  Event pop() {
    Event e = heap_.top();
    heap_.pop();
    return e;
  }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.sequence > b.sequence;
    }
  };
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::uint64_t next_ = 0;
};

// A sender's uplink is shared equally by its concurrent outbound copies.
struct TransferModel {
  double bandwidth = 125e6;  // bytes per second
  SimTime latency = 0.5;

  SimTime duration(Bytes size, std::size_t sharing) const {
    const double share = bandwidth / static_cast<double>(std::max<std::size_t>(sharing, 1));
    return latency + static_cast<double>(size) / share;
  }
};

// Two-state host-user load, sampled at every guest probe. busy_probability
// is the stationary share of busy samples.
struct LoadModel {
  double busy_probability = 0.0;
  double switch_probability = 0.1;
  double busy_level = 0.95;
  double idle_level = 0.2;
};

struct JobSubmission {
  SimTime at = 0.0;
  JobSpec spec;
};

inline std::vector<JobSubmission> uniform_workload(Count jobs, WorkUnits work, Bytes snapshot_size,
                                                   SimTime spacing = 0.0,
                                                   std::optional<CloudletId> cloudlet = {}) {
  std::vector<JobSubmission> out;
  for (Count i = 0; i < jobs; ++i) {
    out.push_back({spacing * i, JobSpec{work, snapshot_size, cloudlet}});
  }
  return out;
}

struct SimConfig {
  TimingConfig timing;
  ReliabilityOptions reliability;
  Count retry_budget = 10;
  PlacementConfig placement;
  ResourceConfig resource;
  bool replication = true;
  double work_rate = 1.0;
  TransferModel transfer;
  LoadModel load;
  SimTime command_latency = 0.0;
  double guest_failure_rate = 0.0;  // per second per running guest
  SimTime horizon = 3600.0;
  std::vector<HostSetup> hosts;     // empty: one host per trace host
  Bytes host_storage = 10'000'000'000ULL;
  Count cloudlets = 1;
  std::vector<JobSubmission> jobs;
  bool check_invariants = false;
  bool stop_when_done = true;

  ServerConfig server_config() const { return {timing, reliability, retry_budget}; }
  ClientConfig client_config() const { return {timing, placement, resource, replication, work_rate}; }

  void check() const {
    timing.check();
    if (!(placement.threshold > 0.0 && placement.threshold < 1.0)) {
      throw ValidationError("placement.threshold must lie in (0, 1)");
    }
    if (!(work_rate > 0.0)) throw ValidationError("work_rate must be positive");
    if (!(transfer.bandwidth > 0.0) || transfer.latency < 0.0) {
      throw ValidationError("transfer bandwidth must be positive and latency non-negative");
    }
    if (command_latency < 0.0 || guest_failure_rate < 0.0) {
      throw ValidationError("command_latency and guest_failure_rate must be non-negative");
    }
    if (!(load.busy_probability >= 0.0 && load.busy_probability <= 1.0) ||
        !(load.switch_probability >= 0.0 && load.switch_probability <= 1.0)) {
      throw ValidationError("load probabilities must lie in [0, 1]");
    }
    if (!(resource.limit >= 0.0 && resource.limit <= 1.0) || resource.window == 0) {
      throw ValidationError("resource.limit must lie in [0, 1] and window be positive");
    }
    if (!(horizon > 0.0)) throw ValidationError("horizon must be positive");
    if (cloudlets == 0) throw ValidationError("cloudlets must be positive");
    for (const auto& j : jobs) {
      if (!(j.spec.total_work > 0.0)) throw ValidationError("job total_work must be positive");
      if (j.at < 0.0) throw ValidationError("job submit time must be non-negative");
    }
  }
};

inline std::string workload_id(const std::vector<JobSubmission>& jobs) {
  double work = 0.0;
  Bytes bytes = 0;
  for (const auto& j : jobs) {
    work += j.spec.total_work;
    bytes += j.spec.snapshot_size;
  }
  return "jobs=" + std::to_string(jobs.size()) + ",work=" + format_number(work) +
         ",bytes=" + std::to_string(bytes);
}

// Independent generator seeds derived from one run seed.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + stream * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class Engine {
 public:
  Engine(SimConfig cfg, ChurnTrace trace, std::uint64_t seed)
      : cfg_(std::move(cfg)),
        trace_(std::move(trace)),
        server_(cfg_.server_config(), &log_),
        load_rng_(stream_seed(seed, 1)),
        crash_rng_(stream_seed(seed, 2)) {
    cfg_.check();
    check_trace(trace_);
    setup_hosts();
  }

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  const EventLog& log() const noexcept { return log_; }
  const Server& server() const noexcept { return server_; }
  const Client& client(const HostId& h) const { return clients_.at(h); }
  const std::map<HostId, Client>& clients() const noexcept { return clients_; }
  SimTime now() const noexcept { return now_; }
  const SimConfig& config() const noexcept { return cfg_; }

  // One extra snapshot round on `host` at `time`, besides the periodic ones.
  void schedule_snapshot(const HostId& host, SimTime time) {
    Event e;
    e.time = time;
    e.kind = EventKind::SnapshotTick;
    e.host = host;
    queue_.push(e);
  }

  void run() {
    if (!started_) start();
    while (!queue_.empty()) {
      if (queue_.top().time > cfg_.horizon) break;
      Event e = queue_.pop();
      now_ = e.time;
      dispatch(e);
      deliver_commands();
      if (cfg_.check_invariants) check_invariants();
      if (cfg_.stop_when_done && all_jobs_resolved()) break;
    }
  }

  // Problems with the combined server and client state; empty when sound.
  std::vector<std::string> invariant_violations() const {
    auto out = validate(server_.state());
    std::map<JobId, int> executing;
    for (const auto& [h, c] : clients_) {
      if (c.storage_used() > c.storage_capacity()) {
        out.push_back("host " + h.str() + " stores more than its capacity");
      }
      for (const auto& [gid, g] : c.guests()) {
        if (g.job && (g.state == GuestState::Running || g.state == GuestState::Suspended)) {
          ++executing[*g.job];
        }
      }
    }
    for (const auto& [job, n] : executing) {
      if (n > 1) out.push_back("job " + job.str() + " executes on " + std::to_string(n) + " guests");
    }
    return out;
  }

 private:
  struct Transfer {
    CopyMeta copy;
    HostId from;
    HostId to;
    bool round = false;
  };

  void setup_hosts() {
    std::vector<HostSetup> setups = cfg_.hosts;
    const auto traced = trace_.all_hosts();
    if (setups.empty()) {
      for (std::size_t i = 0; i < traced.size(); ++i) {
        HostSetup s;
        s.id = traced[i];
        s.storage_capacity = cfg_.host_storage;
        s.cloudlets = {CloudletId("c" + std::to_string(i % cfg_.cloudlets))};
        setups.push_back(s);
      }
    } else {
      std::set<HostId> known;
      for (const auto& s : setups) known.insert(s.id);
      for (const auto& h : traced) {
        if (!known.contains(h)) throw ValidationError("trace names unconfigured host " + h.str());
      }
    }
    if (setups.empty()) throw ValidationError("no hosts configured");
    const auto ccfg = cfg_.client_config();
    for (const auto& s : setups) {
      clients_.emplace(std::piecewise_construct, std::forward_as_tuple(s.id),
                       std::forward_as_tuple(s.id, s.cloudlets, s.storage_capacity, ccfg, &log_));
      busy_[s.id] = false;
    }
    setups_ = std::move(setups);
  }

  void start() {
    started_ = true;
    for (const auto& s : setups_) {
      const bool up = trace_.initially_up(s.id);
      server_.add_host(s, up, 0.0);
      if (up) clients_.at(s.id).boot(0.0);
    }
    for (const auto& e : trace_.events) {
      if (e.time > cfg_.horizon) break;
      Event ev;
      ev.time = e.time;
      ev.kind = e.up ? EventKind::HostUp : EventKind::HostDown;
      ev.host = e.host;
      queue_.push(ev);
    }
    for (std::size_t i = 0; i < cfg_.jobs.size(); ++i) {
      Event ev;
      ev.time = cfg_.jobs[i].at;
      ev.kind = EventKind::JobSubmit;
      ev.ref = i;
      queue_.push(ev);
    }
    recur(EventKind::HeartbeatTick, cfg_.timing.poll_interval);
    recur(EventKind::GuestProbeTick, cfg_.timing.guest_probe_interval);
    recur(EventKind::SnapshotTick, cfg_.timing.snapshot_interval);
    recur(EventKind::SweepTick, cfg_.timing.sweep_interval);
    deliver_commands();
  }

  void recur(EventKind kind, SimTime at) {
    if (at > cfg_.horizon) return;
    Event e;
    e.time = at;
    e.kind = kind;
    e.recurring = true;
    queue_.push(e);
  }

  void reschedule(const Event& e, SimTime interval) {
    // Multiples of the interval, not accumulated sums, keep tick times exact.
    const double k = std::round(e.time / interval) + 1.0;
    recur(e.kind, k * interval);
  }

  void dispatch(const Event& e) {
    switch (e.kind) {
      case EventKind::HostUp: on_host_up(e.host); break;
      case EventKind::HostDown: on_host_down(e.host); break;
      case EventKind::HeartbeatTick:
        on_heartbeat();
        reschedule(e, cfg_.timing.poll_interval);
        break;
      case EventKind::GuestProbeTick:
        on_probe();
        reschedule(e, cfg_.timing.guest_probe_interval);
        break;
      case EventKind::SnapshotTick:
        if (e.recurring) {
          for (auto& [h, c] : clients_) snapshot_round(c);
          reschedule(e, cfg_.timing.snapshot_interval);
        } else if (auto it = clients_.find(e.host); it != clients_.end()) {
          snapshot_round(it->second);
        }
        break;
      case EventKind::SweepTick:
        server_.availability_sweep(now_);
        reschedule(e, cfg_.timing.sweep_interval);
        break;
      case EventKind::TransferComplete: on_transfer_complete(e.ref); break;
      case EventKind::JobProgressCheck: on_progress_check(e); break;
      case EventKind::CommandDelivery: on_command(*e.command); break;
      case EventKind::JobSubmit: {
        server_.submit_job(cfg_.jobs[e.ref].spec, now_);
        ++submitted_;
        break;
      }
      case EventKind::GuestCrash: on_guest_crash(e); break;
    }
  }

  void on_host_up(const HostId& h) {
    auto& c = clients_.at(h);
    if (c.up()) return;
    c.boot(now_);
    busy_[h] = false;
  }

  void on_host_down(const HostId& h) {
    auto& c = clients_.at(h);
    if (!c.up()) return;
    c.crash(now_);
    std::vector<std::uint64_t> voided;
    for (const auto& [id, t] : transfers_) {
      if (t.from == h || t.to == h) voided.push_back(id);
    }
    for (auto id : voided) {
      const Transfer t = transfers_.at(id);
      transfers_.erase(id);
      log_.append(now_, "TransferAborted",
                  {field("snapshot", t.copy.snapshot), field("from", t.from), field("to", t.to)});
      if (t.round && t.from != h) finish_round_transfer(t, false);
    }
  }

  void on_heartbeat() {
    for (auto& [h, c] : clients_) {
      if (!c.up()) continue;
      auto report = c.heartbeat(now_);
      auto resp = server_.on_poll(h, report, now_);
      c.accept(resp, now_);
    }
  }

  void on_probe() {
    for (auto& [h, c] : clients_) {
      if (!c.up()) continue;
      for (const auto& gid : c.guest_probe(now_)) {
        if (server_.state().guests.contains(gid)) server_.on_guest_failure_report(h, gid, now_);
      }
      c.drop_reported_failures();
      sample_load(h, c);
    }
  }

  void sample_load(const HostId& h, Client& c) {
    if (cfg_.load.busy_probability <= 0.0) return;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    bool& busy = busy_[h];
    const double flip = busy ? cfg_.load.switch_probability * (1.0 - cfg_.load.busy_probability)
                             : cfg_.load.switch_probability * cfg_.load.busy_probability;
    if (u(load_rng_) < flip) busy = !busy;
    const auto action = c.resource_monitor(busy ? cfg_.load.busy_level : cfg_.load.idle_level, now_);
    if (action == ResourceAction::Resume) {
      for (const auto& [gid, g] : c.guests()) {
        if (g.state == GuestState::Running) schedule_progress_check(h, gid);
      }
    }
  }

  void snapshot_round(Client& c) {
    if (!c.up()) return;
    for (const auto& round : c.snapshot_tick(now_)) {
      const auto& receivers = round.decision.receivers;
      if (receivers.empty()) continue;
      const auto copy = meta_of(round.snapshot);
      // Copies of one round start together and share the uplink equally.
      const std::size_t sharing = outbound(c.host()) + receivers.size();
      for (const auto& r : receivers) start_transfer(copy, c.host(), r, true, sharing);
    }
  }

  std::size_t outbound(const HostId& h) const {
    std::size_t n = 0;
    for (const auto& [id, t] : transfers_) n += t.from == h ? 1 : 0;
    return n;
  }

  // The uplink share is fixed when the copy starts.
  void start_transfer(const CopyMeta& copy, const HostId& from, const HostId& to, bool round,
                      std::size_t sharing) {
    const std::uint64_t id = next_transfer_++;
    const SimTime d = cfg_.transfer.duration(copy.size, sharing);
    transfers_.emplace(id, Transfer{copy, from, to, round});
    log_.append(now_, "TransferStarted",
                {field("snapshot", copy.snapshot), field("from", from), field("to", to),
                 field("bytes", copy.size), field("eta", now_ + d)});
    Event e;
    e.time = now_ + d;
    e.kind = EventKind::TransferComplete;
    e.ref = id;
    queue_.push(e);
  }

  void on_transfer_complete(std::uint64_t id) {
    auto it = transfers_.find(id);
    if (it == transfers_.end()) return;  // aborted by a host failure
    const Transfer t = it->second;
    transfers_.erase(it);
    auto& receiver = clients_.at(t.to);
    const bool landed = receiver.accept_copy(t.copy);
    if (landed) {
      log_.append(now_, "TransferCompleted", {field("snapshot", t.copy.snapshot),
                                              field("from", t.from), field("to", t.to),
                                              field("bytes", t.copy.size)});
      server_.on_transfer_complete(t.copy, t.to, receiver.storage_used(), now_);
    } else {
      log_.append(now_, "TransferRejected", {field("snapshot", t.copy.snapshot),
                                             field("from", t.from), field("to", t.to)});
    }
    if (t.round) finish_round_transfer(t, landed);
  }

  void finish_round_transfer(const Transfer& t, bool landed) {
    auto& sender = clients_.at(t.from);
    if (!sender.up()) return;
    if (auto outcome = sender.transfer_finished(t.copy.snapshot, t.to, landed)) {
      server_.on_snapshot_round_complete(outcome->sender, outcome->snapshot, outcome->decision,
                                         now_);
    }
  }

  void schedule_progress_check(const HostId& h, const GuestId& gid) {
    const auto& c = clients_.at(h);
    auto when = c.completion_time(gid);
    if (!when) return;
    Event e;
    e.time = std::max(*when, now_);
    e.kind = EventKind::JobProgressCheck;
    e.host = h;
    e.guest = gid;
    e.ref = c.guests().at(gid).epoch;
    queue_.push(e);
  }

  void schedule_crash(const HostId& h, const GuestId& gid) {
    if (cfg_.guest_failure_rate <= 0.0) return;
    std::exponential_distribution<double> life(cfg_.guest_failure_rate);
    Event e;
    e.time = now_ + life(crash_rng_);
    e.kind = EventKind::GuestCrash;
    e.host = h;
    e.guest = gid;
    e.ref = clients_.at(h).guests().at(gid).incarnation;
    queue_.push(e);
  }

  void on_progress_check(const Event& e) {
    auto& c = clients_.at(e.host);
    if (!c.up()) return;
    auto git = c.guests().find(e.guest);
    if (git == c.guests().end() || git->second.epoch != e.ref) return;
    for (const auto& done : c.check_progress(now_)) {
      log_.append(now_, "GuestFinished", {field("host", e.host), field("guest", done.guest),
                                          field("job", done.job),
                                          field("executed", done.executed)});
      const auto& jobs = server_.state().jobs;
      auto jit = jobs.find(done.job);
      if (jit != jobs.end() && jit->second.status == JobStatus::Running &&
          jit->second.current_guest == done.guest) {
        server_.on_job_complete(done.job, done.guest, now_);
      } else {
        log_.append(now_, "OrphanFinished", {field("job", done.job), field("guest", done.guest)});
      }
    }
  }

  void on_guest_crash(const Event& e) {
    auto& c = clients_.at(e.host);
    if (!c.up()) return;
    auto git = c.guests().find(e.guest);
    if (git == c.guests().end() || git->second.incarnation != e.ref) return;
    c.fail_guest(e.guest, now_);
  }

  void on_command(const Command& cmd) {
    auto& c = clients_.at(cmd.target);
    if (!c.up()) {
      log_.append(now_, "CommandLost", {field("id", cmd.id), field("target", cmd.target),
                                        field("kind", command_name(cmd.kind))});
      return;
    }
    const bool fresh = std::holds_alternative<StartGuest>(cmd.kind) ||
                       std::holds_alternative<RestoreSnapshot>(cmd.kind);
    auto ex = c.execute_command(cmd, now_);
    server_.on_command_ack(cmd.target, ex.ack, now_);
    if (ex.started) {
      schedule_progress_check(cmd.target, *ex.started);
      if (fresh) schedule_crash(cmd.target, *ex.started);
    }
    for (const auto& [copy, to] : ex.transfers) {
      if (clients_.contains(to)) start_transfer(copy, cmd.target, to, false, outbound(cmd.target) + 1);
    }
  }

  void deliver_commands() {
    for (auto& cmd : server_.drain_commands()) {
      Event e;
      e.time = now_ + cfg_.command_latency;
      e.kind = EventKind::CommandDelivery;
      e.host = cmd.target;
      e.command = std::move(cmd);
      queue_.push(std::move(e));
    }
  }

  bool all_jobs_resolved() const {
    if (submitted_ < cfg_.jobs.size()) return false;
    for (const auto& [id, j] : server_.state().jobs) {
      if (j.status != JobStatus::Completed && j.status != JobStatus::FailedPermanent) return false;
    }
    return true;
  }

  void check_invariants() const {
    auto v = invariant_violations();
    if (!v.empty()) {
      throw std::logic_error("invariant violated at t=" + format_number(now_) + ": " + v.front());
    }
  }

  SimConfig cfg_;
  ChurnTrace trace_;
  EventLog log_;
  Server server_;
  std::map<HostId, Client> clients_;
  std::vector<HostSetup> setups_;
  std::map<HostId, bool> busy_;
  std::map<std::uint64_t, Transfer> transfers_;
  EventQueue queue_;
  std::mt19937_64 load_rng_;
  std::mt19937_64 crash_rng_;
  SimTime now_ = 0.0;
  std::uint64_t next_transfer_ = 1;
  std::size_t submitted_ = 0;
  bool started_ = false;
};

struct RunResult {
  EventLog log;
  MetricsReport report;
  std::string final_state;
};

// The same hosts and workload with no churn and no guest crashes.
inline SimConfig failure_free(SimConfig cfg) {
  cfg.guest_failure_rate = 0.0;
  return cfg;
}

inline ChurnTrace without_events(const ChurnTrace& t) {
  ChurnTrace out;
  out.hosts = t.all_hosts();
  out.window_start = t.window_start;
  out.window_end = t.window_end;
  return out;
}

inline RunResult simulate(const SimConfig& cfg, const ChurnTrace& trace, std::uint64_t seed,
                          bool with_baseline = true) {
  Engine engine(cfg, trace, seed);
  engine.run();
  RunResult r;
  r.log = engine.log();
  r.report = fold_log(r.log.records());
  r.report.workload_id = workload_id(cfg.jobs);
  r.final_state = dump_state(engine.server().state());
  if (with_baseline) {
    Engine base(failure_free(cfg), without_events(trace), seed);
    base.run();
    attach_baseline(r.report, fold_log(base.log().records()));
  }
  return r;
}

}  // namespace adhoc
