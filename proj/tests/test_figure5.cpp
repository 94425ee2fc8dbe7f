// Copyright 2026 The adhoc-cloud Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "adhoc/config.hpp"
#include "adhoc/sim.hpp"

namespace adhoc {
namespace {

const std::filesystem::path kRoot(ADHOC_SOURCE_DIR);

RunResult figure5() {
  const auto cfg = parse_config(read_json_file((kRoot / "configs/figure5.json").string()));
  return simulate(cfg.sim, experiment_trace(cfg, (kRoot / "configs").string()), cfg.seed);
}

TEST(Figure5, MatchesGoldenLog) {
  std::ifstream in(kRoot / "tests/golden/figure5.log", std::ios::binary);
  ASSERT_TRUE(in);
  std::ostringstream golden;
  golden << in.rdbuf();
  EXPECT_EQ(figure5().log.str(), golden.str());
}

TEST(Figure5, RestoreLandsOnDAndOthersDelete) {
  const auto r = figure5();
  std::vector<std::string> deleted;
  std::string placement, restored;
  for (const auto& rec : r.log.records()) {
    if (rec.kind == "Placement") placement = rec.text("receivers");
    if (rec.kind == "JobRestored") restored = rec.text("host");
    if (rec.kind == "SnapshotDeleted") deleted.push_back(rec.text("host"));
  }
  EXPECT_EQ(placement, "D,B,E");
  EXPECT_EQ(restored, "D");
  EXPECT_EQ(deleted, (std::vector<std::string>{"B", "E"}));
  EXPECT_EQ(r.report.restore_violations, 0u);
}

}  // namespace
}  // namespace adhoc
