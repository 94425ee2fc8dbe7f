// Copyright 2026 The adhoc-cloud Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "adhoc/sim.hpp"
#include "adhoc/trace.hpp"

namespace adhoc {
namespace {

SimConfig small_config(Count jobs = 8, WorkUnits work = 900) {
  SimConfig cfg;
  cfg.jobs = uniform_workload(jobs, work, 1'000'000'000);
  cfg.horizon = 3600;
  cfg.check_invariants = true;
  return cfg;
}

ChurnTrace churn(std::uint64_t seed, std::size_t hosts = 12, double mtbf = 3600) {
  return generate_trace({hosts, 3600, mtbf, 300, seed});
}

std::vector<LogRecord> of_kind(const EventLog& log, std::string_view kind) {
  std::vector<LogRecord> out;
  for (const auto& r : log.records()) {
    if (r.kind == kind) out.push_back(r);
  }
  return out;
}

TEST(EventQueue, OrdersByTimeThenInsertion) {
  EventQueue q;
  for (double t : {5.0, 1.0, 5.0, 3.0}) {
    Event e;
    e.time = t;
    q.push(e);
  }
  std::vector<std::pair<double, std::uint64_t>> seen;
  while (!q.empty()) {
    const auto e = q.pop();
    seen.emplace_back(e.time, e.sequence);
  }
  ASSERT_EQ(seen.size(), 4u);
  EXPECT_EQ(seen[0].first, 1.0);
  EXPECT_EQ(seen[1].first, 3.0);
  EXPECT_EQ(seen[2].first, 5.0);
  EXPECT_LT(seen[2].second, seen[3].second);
}

TEST(TransferModel, SharesBandwidth) {
  TransferModel m{100.0, 0.5};
  EXPECT_DOUBLE_EQ(m.duration(1000, 1), 10.5);
  EXPECT_DOUBLE_EQ(m.duration(1000, 4), 40.5);
  EXPECT_DOUBLE_EQ(m.duration(1000, 0), 10.5);
}

TEST(Sim, SameSeedSameBytes) {
  auto cfg = small_config();
  cfg.load.busy_probability = 0.3;
  cfg.guest_failure_rate = 1e-4;
  const auto t = churn(3);
  const auto a = simulate(cfg, t, 7);
  const auto b = simulate(cfg, t, 7);
  EXPECT_EQ(a.log.str(), b.log.str());
  EXPECT_EQ(a.final_state, b.final_state);
  EXPECT_EQ(a.report, b.report);
}

TEST(Sim, InvariantsHoldAcrossSeeds) {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    auto cfg = small_config();
    cfg.load.busy_probability = seed % 3 == 0 ? 0.4 : 0.0;
    cfg.guest_failure_rate = seed % 2 ? 2e-4 : 0.0;
    cfg.replication = seed % 4 != 0;
    RunResult r;
    ASSERT_NO_THROW(r = simulate(cfg, churn(seed, 12, 1800), seed, false)) << seed;
    EXPECT_EQ(r.report.restore_violations, 0u) << seed;
    EXPECT_EQ(r.report.jobs_submitted, 8u);
    EXPECT_LE(r.report.jobs_completed + r.report.jobs_failed_permanent, 8u);
  }
}

// The guest that finishes a job executes exactly the work left after its
// start or restore point.
TEST(Sim, FinishingGuestExecutesRemainingWork) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    auto cfg = small_config(8, 1200);
    cfg.load.busy_probability = 0.2;
    const auto r = simulate(cfg, churn(seed, 12, 2400), seed, false);
    std::map<std::string, double> start_at;
    std::map<std::string, std::string> guest_of;
    for (const auto& rec : r.log.records()) {
      if (rec.kind == "JobStarted" || rec.kind == "JobRestored") {
        start_at[rec.text("job")] = rec.number("progress");
        guest_of[rec.text("job")] = rec.text("guest");
      } else if (rec.kind == "GuestFinished" && guest_of[rec.text("job")] == rec.text("guest")) {
        EXPECT_NEAR(rec.number("executed"), 1200 - start_at[rec.text("job")], 1e-6);
      }
    }
  }
}

TEST(Sim, HeartbeatsFollowPollInterval) {
  auto cfg = small_config(0);
  cfg.stop_when_done = false;
  cfg.horizon = 200;
  ChurnTrace t;
  t.hosts = {HostId("a"), HostId("b")};
  t.events = {{75, HostId("b"), true}};
  Engine e(cfg, t, 1);
  e.run();
  EXPECT_EQ(e.server().state().hosts.at(HostId("a")).last_poll_time, 180.0);
  const auto regs = of_kind(e.log(), "HostRegistered");
  ASSERT_EQ(regs.size(), 2u);
  EXPECT_EQ(regs[0].time, 0.0);
  EXPECT_EQ(regs[1].time, 120.0);
  EXPECT_EQ(regs[1].text("host"), "b");
}

TEST(Sim, EmptyWorkloadRuns) {
  auto cfg = small_config(0);
  const auto r = simulate(cfg, churn(1), 1);
  EXPECT_EQ(r.report.jobs_submitted, 0u);
  EXPECT_EQ(r.report.completion_rate(), 0.0);
  EXPECT_FALSE(r.report.makespan_overhead);
}

TEST(Sim, SingleJobWithoutChurnFinishesOnTime) {
  auto cfg = small_config(1, 500);
  ChurnTrace t;
  t.hosts = {HostId("a"), HostId("b"), HostId("c")};
  const auto r = simulate(cfg, t, 1);
  EXPECT_EQ(r.report.jobs_completed, 1u);
  EXPECT_DOUBLE_EQ(r.report.makespan, 500.0);
  ASSERT_TRUE(r.report.makespan_overhead);
  EXPECT_DOUBLE_EQ(*r.report.makespan_overhead, 0.0);
  EXPECT_EQ(r.report.restores, 0u);
}

TEST(Sim, SnapshotsArriveEveryInterval) {
  auto cfg = small_config(1, 1000);
  ChurnTrace t;
  t.hosts = {HostId("a"), HostId("b"), HostId("c")};
  const auto r = simulate(cfg, t, 1, false);
  std::vector<double> times;
  for (const auto& rec : of_kind(r.log, "SnapshotCaptured")) times.push_back(rec.time);
  EXPECT_EQ(times, (std::vector<double>{300, 600, 900}));
}

TEST(Sim, ReplicationOffOnlyRestarts) {
  auto cfg = small_config();
  cfg.replication = false;
  const auto r = simulate(cfg, churn(5, 12, 1800), 5, false);
  EXPECT_EQ(r.report.restores, 0u);
  EXPECT_EQ(r.report.placements, 0u);
}

TEST(Sim, TraceHostMustBeConfigured) {
  auto cfg = small_config();
  HostSetup h;
  h.id = HostId("a");
  h.storage_capacity = 1;
  cfg.hosts = {h};
  ChurnTrace t;
  t.events = {{5, HostId("zz"), false}};
  EXPECT_THROW(Engine(cfg, t, 1), ValidationError);
}

TEST(Sim, BadConfigIsRejected) {
  auto cfg = small_config();
  cfg.work_rate = 0;
  EXPECT_THROW(simulate(cfg, churn(1), 1), ValidationError);
  cfg = small_config();
  cfg.placement.threshold = 1.5;
  EXPECT_THROW(simulate(cfg, churn(1), 1), ValidationError);
}

TEST(Sim, StreamSeedsDiffer) {
  EXPECT_NE(stream_seed(1, 1), stream_seed(1, 2));
  EXPECT_NE(stream_seed(1, 1), stream_seed(2, 1));
  EXPECT_EQ(stream_seed(9, 3), stream_seed(9, 3));
}

}  // namespace
}  // namespace adhoc
