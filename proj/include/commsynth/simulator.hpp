#pragma once

// Deterministic lockstep execution of the partitioned-memory algorithm on P
// simulated processors. Every element that enters a processor is counted;
// tile buffers are filled only by schedule broadcasts and are consumed by
// the step's compute, so a missing broadcast surfaces as DataMissing.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "commsynth/comm_scheduler.hpp"
#include "commsynth/grid_planner.hpp"
#include "commsynth/optimizer.hpp"
#include "commsynth/tensor.hpp"

namespace commsynth {

enum class SimMode { kCountOnly, kFullCompute };

struct SimConfig {
  ConvProblem problem;
  MachineSpec machine;
  IntegerPlan plan;
  ProcGrid grid;
  DistributionPlan distribution;
  CommSchedule schedule;
  std::uint64_t seed = 42;
  SimMode mode = SimMode::kFullCompute;
  /// Operands for full_compute; drawn from `seed` when unset.
  std::optional<ConvInputs> inputs;

  /// Throws simulator.InconsistentConfig when grid, distribution and
  /// schedule were not derived from the same plan, simulator.ShapeMismatch
  /// for operands of the wrong extents.
  void validate() const;
};

struct ProcessorReport {
  Count elements_received_in = 0;
  Count elements_received_ker = 0;
  Count initial_footprint = 0;
  Count peak_memory = 0;
  Count reduction_volume = 0;
  /// Elements this processor originated as root that it did not own
  /// (halo or neighbouring runs); they are pulled from their owners.
  Count sourced_off_line = 0;

  friend bool operator==(const ProcessorReport&, const ProcessorReport&) = default;
};

struct SimReport {
  std::vector<ProcessorReport> processors;
  Count cost_i = 0;
  Count cost_c = 0;
  Count cost_d = 0;
  Count peak_memory = 0;
  Count steps = 0;
  /// Set in full_compute mode.
  std::optional<bool> correct;
  Count mismatches = 0;
  /// Out gathered from the c = 0 processors (full_compute only).
  std::optional<Tensor4<std::int64_t>> output;

  friend bool operator==(const SimReport&, const SimReport&) = default;
};

class MemoryOverflow : public Error {
 public:
  MemoryOverflow(Count processor, std::string step, Count live, Count capacity);
  Count processor() const { return processor_; }
  const std::string& step() const { return step_; }

 private:
  Count processor_;
  std::string step_;
};

class DataMissing : public Error {
 public:
  DataMissing(Count processor, std::string step, TensorId tensor, Index4 element);
  Count processor() const { return processor_; }
  const std::string& step() const { return step_; }
  TensorId tensor() const { return tensor_; }
  const Index4& element() const { return element_; }

 private:
  Count processor_;
  std::string step_;
  TensorId tensor_;
  Index4 element_;
};

/// Runs every (sweep, step) round: broadcasts, then each processor's tile,
/// then a final Out reduction along c-lines when p_c > 1.
/// Throws MemoryOverflow or DataMissing.
SimReport run(const SimConfig& cfg);

struct IdentityResult {
  std::string identity;
  bool pass = false;
  double lhs = 0;
  double rhs = 0;
};

/// Checks the report against the analytical model:
///   cost_c        measured cost_c == cost_C
///   offset        measured cost_d - cost_global.total == (size(In) + size(Ker)) / P
///   memory        peak <= g_D <= M_D
///   reduction     c-line roots received (p_c - 1) * Out block
///   correctness   distributed Out equals the reference (full_compute only)
std::vector<IdentityResult> verify_identities(const SimReport& report, const ConvProblem& prob,
                                              const MachineSpec& machine, const IntegerPlan& plan);

/// Formats the report in the line-oriented text format used by the CLI.
std::string format_report(const SimReport& report);
/// Per-processor comma-separated table with a header row.
std::string format_report_csv(const SimReport& report);

}  // namespace commsynth
