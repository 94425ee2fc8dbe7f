// Copyright 2026 The adhoc-cloud Authors
// SPDX-License-Identifier: Apache-2.0
//
// adhoc-cloud: simulate, sweep and gen-trace.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "adhoc/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Ad hoc cloud control-plane simulator"};
  app.require_subcommand(1);

  adhoc::SimulateOptions sim;
  std::uint64_t seed = 0;
  std::string replication;
  auto* simulate = app.add_subcommand("simulate", "Run one simulation");
  simulate->add_option("--config", sim.config, "Experiment config (JSON)")->required();
  auto* seed_opt = simulate->add_option("--seed", seed, "Override the config seed");
  auto* repl_opt = simulate->add_option("--replication", replication, "on or off");
  simulate->add_option("--out", sim.out, "Output directory")->capture_default_str();

  adhoc::SweepOptions sweep;
  auto* sw = app.add_subcommand("sweep", "Run a seed range over a parameter grid");
  sw->add_option("--config", sweep.config, "Base experiment config (JSON)")->required();
  sw->add_option("--seeds", sweep.seeds, "Seed range A..B")->required();
  sw->add_option("--grid", sweep.grid, "KEY=V1,V2 (repeatable)")->required();
  sw->add_option("--out", sweep.out, "Output directory")->capture_default_str();

  adhoc::GenTraceOptions gen;
  auto* gt = app.add_subcommand("gen-trace", "Generate a churn trace");
  gt->add_option("--hosts", gen.params.hosts, "Host count")->required();
  gt->add_option("--horizon", gen.params.horizon, "Trace length in seconds")->required();
  gt->add_option("--mtbf", gen.params.mtbf, "Mean up period in seconds")->required();
  gt->add_option("--mttr", gen.params.mttr, "Mean down period in seconds")->required();
  gt->add_option("--seed", gen.params.seed, "Generator seed")->required();
  gt->add_option("--out", gen.out, "Output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? adhoc::kExitOk : adhoc::kExitValidation;
  }

  if (*simulate) {
    if (*seed_opt) sim.seed = seed;
    if (*repl_opt) sim.replication = replication;
    return adhoc::cmd_simulate(sim);
  }
  if (*sw) return adhoc::cmd_sweep(sweep);
  return adhoc::cmd_gen_trace(gen);
}
