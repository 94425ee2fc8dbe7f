// Copyright 2026 The adhoc-cloud Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "adhoc/metrics.hpp"
#include "adhoc/sim.hpp"
#include "adhoc/trace.hpp"

namespace adhoc {
namespace {

LogRecord rec(double t, std::string kind, std::vector<std::pair<std::string, std::string>> f = {}) {
  return {t, std::move(kind), std::move(f)};
}

RunResult churn_run(std::uint64_t seed, bool replication) {
  SimConfig cfg;
  cfg.jobs = uniform_workload(10, 1500, 1'000'000'000);
  cfg.replication = replication;
  return simulate(cfg, generate_trace({12, 3600, 1800, 300, seed}), seed);
}

TEST(Metrics, EmptyLogIsZero) {
  const auto r = fold_log({});
  EXPECT_EQ(r, MetricsReport{});
  EXPECT_EQ(r.completion_rate(), 0.0);
  EXPECT_EQ(r.mean_detection_latency(), 0.0);
}

TEST(Metrics, CountsSingleEvents) {
  MetricsReport r;
  fold_event(r, rec(5, "JobSubmitted", {{"job", "j"}}));
  fold_event(r, rec(6, "RestoreIssued", {{"job", "j"}}));
  EXPECT_EQ(r.restores, 1u);
  fold_event(r, rec(9, "JobCompleted", {{"job", "j"}}));
  EXPECT_EQ(r.jobs_completed, 1u);
  EXPECT_EQ(r.makespan, 9.0);
  EXPECT_EQ(r.completion_rate(), 1.0);
}

TEST(Metrics, DetectionLatencyFromDownToDeclared) {
  const std::vector<LogRecord> log{
      rec(12, "HostDown", {{"host", "a"}}),
      rec(140, "HostDeclaredFailed", {{"host", "a"}}),
      rec(200, "HostDeclaredFailed", {{"host", "b"}}),
  };
  const auto r = fold_log(log);
  EXPECT_EQ(r.detections, 1u);
  EXPECT_EQ(r.mean_detection_latency(), 128.0);
}

TEST(Metrics, RestoreChecksAgainstRegisteredSnapshot) {
  std::vector<LogRecord> log{
      rec(300, "SnapshotRegistered", {{"job", "j"}, {"snapshot", "g#1"}, {"progress", "300"}}),
      rec(400, "GuestLost", {{"job", "j"}, {"progress", "400"}}),
      rec(520, "JobRestored", {{"job", "j"}, {"snapshot", "g#1"}, {"progress", "300"}}),
  };
  auto r = fold_log(log);
  EXPECT_EQ(r.restore_violations, 0u);
  EXPECT_EQ(r.progress_lost, 100.0);
  log[2].fields[2].second = "310";
  EXPECT_EQ(fold_log(log).restore_violations, 1u);
  log[2].fields[2].second = "300";
  log[2].fields[1].second = "g#0";
  EXPECT_EQ(fold_log(log).restore_violations, 1u);
}

TEST(Metrics, RestartLosesEverything) {
  const std::vector<LogRecord> log{
      rec(0, "JobSubmitted", {{"job", "j"}}),
      rec(250, "GuestLost", {{"job", "j"}, {"progress", "250"}}),
      rec(380, "JobRestarted", {{"job", "j"}}),
  };
  const auto r = fold_log(log);
  EXPECT_EQ(r.continuity_losses, 1u);
  EXPECT_EQ(r.progress_lost, 250.0);
}

TEST(Metrics, PrefixThenSuffixEqualsWhole) {
  const auto run = churn_run(4, true);
  const auto& records = run.log.records();
  const std::span<const LogRecord> all(records);
  const auto whole = fold_log(all);
  for (std::size_t cut : {std::size_t{0}, records.size() / 3, records.size() / 2, records.size()}) {
    const auto prefix = fold_log(all.first(cut));
    EXPECT_EQ(fold_log(all.subspan(cut), prefix), whole) << cut;
  }
  EXPECT_GE(whole.completion_rate(), 0.0);
  EXPECT_LE(whole.completion_rate(), 1.0);
}

TEST(MetricsCompare, IdenticalRunsGiveZeroDelta) {
  const auto a = churn_run(2, true).report;
  const auto d = compare(a, a);
  EXPECT_EQ(d.completion_rate, 0.0);
  EXPECT_EQ(d.makespan_overhead, 0.0);
  EXPECT_EQ(d.restores, 0);
  EXPECT_EQ(d.continuity_losses, 0);
}

TEST(MetricsCompare, ReplicationBeatsRestartUnderChurn) {
  double delta = 0.0;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    delta += compare(churn_run(seed, true).report, churn_run(seed, false).report).completion_rate;
  }
  EXPECT_GT(delta, 0.0);
}

TEST(MetricsCompare, MismatchedWorkloadsAreRejected) {
  MetricsReport a, b;
  a.workload_id = "jobs=1";
  b.workload_id = "jobs=2";
  EXPECT_THROW(compare(a, b), ValidationError);
  b.workload_id = a.workload_id;
  b.jobs_submitted = 3;
  EXPECT_THROW(compare(a, b), ValidationError);
}

TEST(MetricsBaseline, OverheadOnlyWhenEverythingFinished) {
  MetricsReport base;
  base.makespan = 100;
  MetricsReport r;
  r.jobs_submitted = 2;
  r.jobs_completed = 2;
  r.makespan = 125;
  attach_baseline(r, base);
  ASSERT_TRUE(r.makespan_overhead);
  EXPECT_DOUBLE_EQ(*r.makespan_overhead, 0.25);
  MetricsReport partial = r;
  partial.makespan_overhead.reset();
  partial.jobs_completed = 1;
  attach_baseline(partial, base);
  EXPECT_FALSE(partial.makespan_overhead);
}

TEST(MetricsOutput, JsonKeysAreSortedAndTableIsComplete) {
  const auto r = churn_run(1, true).report;
  const auto j = to_json(r);
  std::string prev;
  for (const auto& [k, v] : j.items()) {
    EXPECT_LT(prev, k);
    prev = k;
  }
  EXPECT_EQ(j["jobs_submitted"], 10);
  const auto table = to_table(r);
  EXPECT_NE(table.find("completion rate"), std::string::npos);
  EXPECT_NE(table.find("makespan overhead"), std::string::npos);
}

}  // namespace
}  // namespace adhoc
