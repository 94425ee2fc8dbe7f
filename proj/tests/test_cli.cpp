// Copyright 2026 The adhoc-cloud Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "adhoc/cli.hpp"

namespace adhoc {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config_path(const char* name) {
  return (fs::path(ADHOC_SOURCE_DIR) / "configs" / name).string();
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("adhoc_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  std::string operator/(const std::string& s) const { return (path_ / s).string(); }

 private:
  fs::path path_;
};

// A small experiment so that CLI round trips stay fast.
json small_doc() {
  json doc = read_json_file(config_path("default.json"));
  doc["horizon"] = 1800;
  doc["hosts"]["count"] = 10;
  doc["workload"]["jobs"] = 6;
  doc["workload"]["total_work"] = 900;
  doc["churn"]["mtbf"] = 1800;
  return doc;
}

std::string write_doc(const TempDir& dir, const json& doc, const char* name = "cfg.json") {
  const auto p = dir / name;
  std::ofstream(p) << doc.dump(2);
  return p;
}

TEST(Config, DefaultsMatchTheDocumentedValues) {
  const auto c = parse_config(read_json_file(config_path("default.json")));
  EXPECT_EQ(c.sim.timing.poll_interval, 60);
  EXPECT_EQ(c.sim.timing.failure_timeout, 120);
  EXPECT_EQ(c.sim.timing.guest_probe_interval, 10);
  EXPECT_EQ(c.sim.timing.snapshot_interval, 300);
  EXPECT_EQ(c.sim.placement.threshold, 0.05);
  EXPECT_EQ(c.host_count, 30u);
  EXPECT_EQ(c.sim.jobs.size(), 30u);
  EXPECT_EQ(c.mtbf, 7200);
  EXPECT_EQ(parse_config(json::object()).sim.timing.poll_interval, 60);
}

TEST(Config, UnknownKeysAreRejectedByPath) {
  auto expect_error = [](json doc, const std::string& fragment) {
    try {
      parse_config(doc);
      ADD_FAILURE() << "accepted " << doc.dump();
    } catch (const ValidationError& e) {
      EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    }
  };
  expect_error({{"colour", 1}}, "colour");
  expect_error({{"timing", {{"poll", 60}}}}, "timing.poll");
  expect_error({{"hosts", {{"list", {{"A", {{"cpu", 2}}}}}}}}, "hosts.list.A.cpu");
  expect_error({{"timing", {{"poll_interval", "60"}}}}, "timing.poll_interval");
  expect_error({{"placement", {{"in_use", "sometimes"}}}}, "in_use");
  expect_error({{"churn", {{"mtbf", 0}}}}, "mtbf");
  expect_error({{"retry_budget", -1}}, "retry_budget");
}

TEST(Config, JsonRoundTrip) {
  const auto a = parse_config(read_json_file(config_path("figure5.json")));
  const auto b = parse_config(to_json(a));
  EXPECT_EQ(to_json(a), to_json(b));
  ASSERT_EQ(b.sim.hosts.size(), 7u);
  EXPECT_EQ(b.sim.hosts[0].jobs_assigned, 100u);
}

TEST(Config, SetDotted) {
  json doc = json::object();
  set_dotted(doc, "timing.snapshot_interval", 150);
  set_dotted(doc, "seed", 3);
  EXPECT_EQ(doc["timing"]["snapshot_interval"], 150);
  EXPECT_EQ(parse_config(doc).sim.timing.snapshot_interval, 150);
  EXPECT_THROW(set_dotted(doc, "seed.x", 1), ValidationError);
  EXPECT_THROW(set_dotted(doc, "timing..x", 1), ValidationError);
  EXPECT_EQ(parse_override_value("off"), json("off"));
  EXPECT_EQ(parse_override_value("false"), json(false));
  EXPECT_EQ(parse_override_value("2.5"), json(2.5));
}

TEST(Config, ListedHostsTakeGeneratedChurn) {
  json doc = small_doc();
  doc["hosts"]["list"] = {{"x", json::object()}, {"y", json::object()}};
  const auto c = parse_config(doc);
  const auto t = experiment_trace(c);
  EXPECT_EQ(t.hosts, (std::vector<HostId>{HostId("x"), HostId("y")}));
}

TEST(CliSimulate, SameSeedGivesIdenticalFiles) {
  TempDir dir;
  const auto cfg = write_doc(dir, small_doc());
  std::ostringstream out, err;
  ASSERT_EQ(cmd_simulate({cfg, 4, {}, dir / "a"}, out, err), 0) << err.str();
  ASSERT_EQ(cmd_simulate({cfg, 4, {}, dir / "b"}, out, err), 0) << err.str();
  for (auto f : {"events.log", "metrics.json", "metrics.txt", "config.json", "trace.txt",
                 "final_state.json"}) {
    const auto a = slurp(dir.path() / "a" / f);
    EXPECT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, slurp(dir.path() / "b" / f)) << f;
  }
}

TEST(CliSimulate, RunDirectoryReproducesTheRun) {
  TempDir dir;
  const auto cfg = write_doc(dir, small_doc());
  std::ostringstream out, err;
  ASSERT_EQ(cmd_simulate({cfg, 9, {}, dir / "a"}, out, err), 0) << err.str();
  ASSERT_EQ(cmd_simulate({dir / "a/config.json", {}, {}, dir / "b"}, out, err), 0) << err.str();
  EXPECT_EQ(slurp(dir.path() / "a/events.log"), slurp(dir.path() / "b/events.log"));
}

TEST(CliSimulate, ReplicationOffRunsRestartOnly) {
  TempDir dir;
  const auto cfg = write_doc(dir, small_doc());
  std::ostringstream out, err;
  ASSERT_EQ(cmd_simulate({cfg, 2, "off", dir / "o"}, out, err), 0) << err.str();
  const auto m = read_json_file(dir / "o/metrics.json");
  EXPECT_EQ(m["restores"], 0);
  EXPECT_EQ(m["placements"], 0);
  EXPECT_EQ(cmd_simulate({cfg, 2, "maybe", dir / "o"}, out, err), kExitValidation);
}

TEST(CliSimulate, MissingTraceNamesThePath) {
  TempDir dir;
  json doc = small_doc();
  doc["churn"]["trace"] = "no_such.trace";
  const auto cfg = write_doc(dir, doc);
  std::ostringstream out, err;
  EXPECT_EQ(cmd_simulate({cfg, {}, {}, dir / "o"}, out, err), kExitValidation);
  EXPECT_NE(err.str().find("no_such.trace"), std::string::npos) << err.str();
}

TEST(CliSimulate, InvalidConfigExitsWithOne) {
  TempDir dir;
  std::ostringstream out, err;
  EXPECT_EQ(cmd_simulate({dir / "missing.json", {}, {}, dir / "o"}, out, err), kExitValidation);
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_EQ(cmd_simulate({dir / "bad.json", {}, {}, dir / "o"}, out, err), kExitValidation);
}

TEST(CliGenTrace, ByteIdenticalAndValid) {
  TempDir dir;
  std::ostringstream out, err;
  const ChurnParams p{30, 3600, 7200, 300, 7};
  ASSERT_EQ(cmd_gen_trace({p, dir / "a.trace"}, out, err), 0);
  ASSERT_EQ(cmd_gen_trace({p, dir / "b.trace"}, out, err), 0);
  EXPECT_EQ(slurp(dir / "a.trace"), slurp(dir / "b.trace"));
  EXPECT_NO_THROW(load_trace(dir / "a.trace"));
}

TEST(CliGenTrace, ZeroMtbfIsRejected) {
  TempDir dir;
  std::ostringstream out, err;
  EXPECT_EQ(cmd_gen_trace({{30, 3600, 0, 300, 7}, dir / "a.trace"}, out, err), kExitValidation);
  EXPECT_FALSE(fs::exists(dir / "a.trace"));
}

TEST(CliSweepParsing, SeedsAndGrid) {
  EXPECT_EQ(parse_seed_range("3..5"), (std::vector<std::uint64_t>{3, 4, 5}));
  EXPECT_EQ(parse_seed_range("9"), std::vector<std::uint64_t>{9});
  EXPECT_THROW(parse_seed_range("5..3"), ValidationError);
  EXPECT_THROW(parse_seed_range("a..b"), ValidationError);
  const auto g = parse_grid("timing.snapshot_interval=150,300,600");
  EXPECT_EQ(g.key, "timing.snapshot_interval");
  EXPECT_EQ(g.values.size(), 3u);
  EXPECT_THROW(parse_grid("novalues="), ValidationError);
  EXPECT_THROW(parse_grid("x=1,,2"), ValidationError);
  const auto pts = grid_points({parse_grid("a=1,2"), parse_grid("b=x,y,z")});
  ASSERT_EQ(pts.size(), 6u);
  EXPECT_EQ(point_label(pts[1]), "a=1,b=y");
}

std::size_t data_rows(const std::string& table) {
  return static_cast<std::size_t>(std::count(table.begin(), table.end(), '\n')) - 1;
}

TEST(CliSweep, SeedsTimesPolicies) {
  TempDir dir;
  const auto cfg = write_doc(dir, small_doc());
  std::ostringstream out, err;
  ASSERT_EQ(cmd_sweep({cfg, "1..3", {"replication=true,false"}, dir / "s"}, out, err), 0)
      << err.str();
  EXPECT_EQ(data_rows(out.str()), 2u);
  const auto manifest = read_json_file(dir / "s/manifest.json");
  EXPECT_EQ(manifest["runs"].size(), 6u);
  std::size_t dirs = 0;
  for (const auto& e : fs::directory_iterator(dir.path() / "s/runs")) dirs += e.is_directory();
  EXPECT_EQ(dirs, 6u);
  EXPECT_EQ(slurp(dir.path() / "s/summary.txt"), out.str());
}

TEST(CliSweep, OneRowPerGridValue) {
  TempDir dir;
  const auto cfg = write_doc(dir, small_doc());
  std::ostringstream out, err;
  ASSERT_EQ(cmd_sweep({cfg, "1..1", {"timing.snapshot_interval=150,300,600"}, dir / "s"}, out, err),
            0)
      << err.str();
  EXPECT_EQ(data_rows(out.str()), 3u);
  EXPECT_NE(out.str().find("timing.snapshot_interval=600"), std::string::npos);
}

TEST(CliSweep, ResumesFromManifest) {
  TempDir dir;
  const auto cfg = write_doc(dir, small_doc());
  std::ostringstream out, err;
  ASSERT_EQ(cmd_sweep({cfg, "1..2", {"replication=true"}, dir / "s"}, out, err), 0);
  // Tag a finished run; a resumed sweep must reuse it instead of rerunning.
  auto manifest = read_json_file(dir / "s/manifest.json");
  manifest["runs"]["replication=true|seed=1"]["completion_rate"] = 0.125;
  std::ofstream(dir / "s/manifest.json") << manifest.dump(2);
  std::ostringstream again;
  ASSERT_EQ(cmd_sweep({cfg, "1..3", {"replication=true"}, dir / "s"}, again, err), 0);
  const auto after = read_json_file(dir / "s/manifest.json");
  EXPECT_EQ(after["runs"].size(), 3u);
  EXPECT_EQ(after["runs"]["replication=true|seed=1"]["completion_rate"], 0.125);
  EXPECT_NE(again.str().find("0.1250"), std::string::npos) << again.str();
}

TEST(CliSweep, BadGridIsRejectedBeforeAnyRun) {
  TempDir dir;
  const auto cfg = write_doc(dir, small_doc());
  std::ostringstream out, err;
  EXPECT_EQ(cmd_sweep({cfg, "1..2", {}, dir / "s"}, out, err), kExitValidation);
  EXPECT_EQ(cmd_sweep({cfg, "1..2", {"replication=true", "timing.bogus=1"}, dir / "s"}, out, err),
            kExitValidation);
  EXPECT_FALSE(fs::exists(dir / "s"));
}

}  // namespace
}  // namespace adhoc
