// Copyright 2026 The adhoc-cloud Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "adhoc/reliability.hpp"

namespace adhoc {
namespace {

HostRecord counters(Count ca, Count cc, Count nf) {
  HostRecord h;
  h.id = HostId("h");
  h.jobs_assigned = ca;
  h.jobs_completed = cc;
  h.failures = nf;
  return h;
}

TEST(Reliability, AllAssignedFailedScoresZero) { EXPECT_EQ(host_reliability(5, 0, 5), 0.0); }

TEST(Reliability, NoFailuresScoresHundred) { EXPECT_EQ(host_reliability(7, 7, 0), 100.0); }

TEST(Reliability, GeneralCaseIsCompletedFraction) { EXPECT_EQ(host_reliability(4, 3, 1), 75.0); }

TEST(Reliability, NewHostScoresHundredUnlessPriorIsSet) {
  EXPECT_EQ(host_reliability(0, 0, 0), 100.0);
  EXPECT_EQ(host_reliability(0, 0, 0, {.optimistic_prior = true}), 50.0);
  // The prior only affects hosts that have never had a job.
  EXPECT_EQ(host_reliability(4, 3, 1, {.optimistic_prior = true}), 75.0);
}

TEST(Reliability, CounterViolationsAreContractErrors) {
  EXPECT_THROW(host_reliability(2, 3, 0), ContractError);
  EXPECT_THROW(host_reliability(2, 0, 3), ContractError);
}

TEST(Reliability, FailureProbabilityIsClampedComplement) {
  EXPECT_DOUBLE_EQ(failure_probability(100), 0.01);
  EXPECT_DOUBLE_EQ(failure_probability(75), 0.25);
  EXPECT_DOUBLE_EQ(failure_probability(0), 0.99);
  EXPECT_THROW(failure_probability(-0.1), ContractError);
  EXPECT_THROW(failure_probability(100.1), ContractError);
}

// Integer sweep; the oracle is the clamp written out by hand.
TEST(Reliability, FailureProbabilitySweepIsMonotoneAndBounded) {
  double prev = 1.0;
  for (int r = 0; r <= 100; ++r) {
    const double p = failure_probability(r);
    const double expect = r >= 99 ? 0.01 : (r <= 1 ? 0.99 : (100 - r) / 100.0);
    EXPECT_NEAR(p, expect, 1e-15) << r;
    EXPECT_LE(p, prev);
    EXPECT_GE(p, 0.01);
    EXPECT_LE(p, 0.99);
    prev = p;
  }
}

TEST(Reliability, RankingFiltersAndOrders) {
  std::vector<HostStanding> s;
  auto add = [&](const char* id, double r, Liveness l, bool ready = true, bool in_use = false) {
    HostRecord h;
    h.id = HostId(id);
    h.liveness = l;
    h.in_use = in_use;
    s.push_back({h, {h.id, r, failure_probability(r)}, ready});
  };
  add("A", 90, Liveness::Up);
  add("B", 95, Liveness::Up);
  add("C", 99, Liveness::Down);
  EXPECT_EQ(rank_ready_hosts(s), (std::vector<HostId>{HostId("B"), HostId("A")}));

  s.clear();
  add("B", 80, Liveness::Up);
  add("A", 80, Liveness::Up);
  EXPECT_EQ(rank_ready_hosts(s), (std::vector<HostId>{HostId("A"), HostId("B")}));

  s.clear();
  EXPECT_TRUE(rank_ready_hosts(s).empty());

  add("A", 99, Liveness::Up, false);
  add("B", 98, Liveness::Up, true, true);
  add("C", 97, Liveness::FailedDeclared);
  add("D", 10, Liveness::Up);
  EXPECT_EQ(rank_ready_hosts(s), std::vector<HostId>{HostId("D")});
}

TEST(Reliability, RankingIgnoresInputOrder) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> rel(0, 10);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<HostStanding> s;
    for (int i = 0; i < 8; ++i) {
      HostRecord h;
      h.id = HostId("h" + std::to_string(i));
      h.liveness = rng() % 4 == 0 ? Liveness::Down : Liveness::Up;
      const double r = rel(rng) * 10.0;
      s.push_back({h, {h.id, r, failure_probability(r)}, rng() % 5 != 0});
    }
    const auto base = rank_ready_hosts(s);
    std::shuffle(s.begin(), s.end(), rng);
    EXPECT_EQ(rank_ready_hosts(s), base);
  }
}

TEST(Reliability, RecordEventExamples) {
  auto done = record_event(counters(1, 0, 0), HostEvent::JobCompleted);
  EXPECT_EQ(done.host.jobs_completed, 1u);
  ASSERT_TRUE(done.view);
  EXPECT_EQ(done.view->reliability, 100.0);

  auto crash = record_event(counters(1, 0, 0), HostEvent::HostFailure);
  EXPECT_EQ(crash.host.failures, 1u);
  EXPECT_EQ(crash.view->reliability, 0.0);

  auto guest = record_event(counters(2, 1, 0), HostEvent::GuestFailure);
  EXPECT_EQ(guest.host.failures, 1u);
  EXPECT_EQ(guest.view->reliability, 50.0);
}

TEST(Reliability, AssignmentDoesNotRecompute) {
  auto out = record_event(counters(3, 1, 1), HostEvent::JobAssigned);
  EXPECT_EQ(out.host.jobs_assigned, 4u);
  EXPECT_FALSE(out.view);
}

TEST(Reliability, IdleFailureDoesNotCount) {
  auto out = record_event(counters(2, 2, 0), HostEvent::HostFailure);
  EXPECT_EQ(out.host.failures, 0u);
  ASSERT_TRUE(out.view);
  EXPECT_EQ(out.view->reliability, 100.0);
  EXPECT_EQ(record_event(counters(0, 0, 0), HostEvent::GuestFailure).host.failures, 0u);
}

TEST(Reliability, CompletionBeyondAssignedIsRejected) {
  EXPECT_THROW(record_event(counters(1, 1, 0), HostEvent::JobCompleted), ContractError);
  EXPECT_THROW(record_event(counters(1, 2, 0), HostEvent::JobAssigned), ContractError);
}

// Random event streams never break CC <= CA or NF <= CA.
TEST(Reliability, RecordEventKeepsCountersConsistent) {
  std::mt19937_64 rng(5);
  for (int run = 0; run < 200; ++run) {
    HostRecord h = counters(0, 0, 0);
    for (int step = 0; step < 200; ++step) {
      const auto e = static_cast<HostEvent>(rng() % 4);
      const bool can_complete = h.jobs_completed + h.failures < h.jobs_assigned;
      if (e == HostEvent::JobCompleted && !can_complete) continue;
      h = record_event(h, e).host;
      ASSERT_LE(h.jobs_completed, h.jobs_assigned);
      ASSERT_LE(h.failures, h.jobs_assigned);
      ASSERT_TRUE(validate(h).empty());
    }
  }
}

}  // namespace
}  // namespace adhoc
