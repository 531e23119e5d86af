#pragma once

// Subcommands behind the command-line tool. Each returns the full report
// text and whether every check it ran passed.
//
// Report format: first line `conv-commsynth-report v1`, then one record per
// line. Text records are `<prefix> key=value ...` with a fixed key order per
// prefix; csv records are `<prefix>,<key>,<value>`. Checks are reported as
// `check <name> PASS|FAIL lhs=<x> rhs=<y>`.

#include <string>
#include <vector>

#include "commsynth/config.hpp"
#include "commsynth/simulator.hpp"

namespace commsynth {

inline constexpr const char* kReportHeader = "conv-commsynth-report v1";

enum class OutputFormat { kText, kCsv };
enum class SweepAxis { kM, kP };

struct CommandResult {
  std::string output;
  bool ok = true;
};

/// Closed form, integer plan, grid and predicted costs.
CommandResult cmd_plan(const RunConfig& cfg, OutputFormat fmt);
/// Exhaustive oracle against the closed form and the integer plan.
CommandResult cmd_verify(const RunConfig& cfg, OutputFormat fmt);
/// Synthesizes, simulates and checks the measured volumes against the model.
CommandResult cmd_simulate(const RunConfig& cfg, OutputFormat fmt,
                           SimMode mode = SimMode::kFullCompute);
/// One row per value: capacity, fired table row, case and costs.
CommandResult cmd_sweep(const RunConfig& cfg, SweepAxis axis, const std::vector<Count>& values,
                        OutputFormat fmt);
/// plan, verify and simulate in a single report.
CommandResult cmd_report(const RunConfig& cfg, OutputFormat fmt,
                         SimMode mode = SimMode::kFullCompute);

}  // namespace commsynth
