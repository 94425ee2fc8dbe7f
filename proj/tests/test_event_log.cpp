// Copyright 2026 The adhoc-cloud Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "adhoc/event_log.hpp"

namespace adhoc {
namespace {

TEST(EventLog, FormatsFieldsInInsertionOrder) {
  EventLog log;
  log.append(12.5, "HostDown", {field("host", "A"), field("zeta", 1.0), field("alpha", true)});
  EXPECT_EQ(log.str(), "12.5 HostDown host=A zeta=1 alpha=1\n");
}

TEST(EventLog, RoundTripsThroughText) {
  EventLog log;
  log.append(0, "JobSubmitted", {field("job", "j1"), field("work", 1800.0)});
  log.append(0.1 + 0.2, "Reliability", {field("host", "A"), field("value", 98.01980198019803)});
  log.append(7, "Empty", {});
  const auto parsed = parse_log(log.str());
  ASSERT_EQ(parsed.size(), 3u);
  EXPECT_EQ(parsed[1].time, 0.1 + 0.2);
  EXPECT_EQ(parsed[1].number("value"), 98.01980198019803);
  EXPECT_EQ(parsed[0].text("job"), "j1");
  EXPECT_TRUE(parsed[2].fields.empty());
  std::string again;
  for (const auto& r : parsed) again += format_record(r) + "\n";
  EXPECT_EQ(again, log.str());
}

TEST(EventLog, NumbersRoundTripExactly) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1e9, 1e9);
  for (int i = 0; i < 10000; ++i) {
    const double v = u(rng);
    EXPECT_EQ(parse_number(format_number(v)), v);
  }
}

TEST(EventLog, MalformedLinesThrow) {
  EXPECT_THROW(parse_record("abc Kind"), ValidationError);
  EXPECT_THROW(parse_record("1 Kind novalue"), ValidationError);
}

}  // namespace
}  // namespace adhoc
