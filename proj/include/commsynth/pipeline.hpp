#pragma once

// End-to-end synthesis: capacity adjustment, closed form, integer plan,
// processor grid, initial distribution and broadcast schedule.

#include <cstdint>
#include <string>
#include <vector>

#include "commsynth/comm_scheduler.hpp"
#include "commsynth/grid_planner.hpp"
#include "commsynth/optimizer.hpp"
#include "commsynth/simulator.hpp"

namespace commsynth {

struct SynthesisOptions {
  PermutationScope scope = PermutationScope::kCInnermost;
  CapacityMode capacity = CapacityMode::kAdjusted;
};

struct Synthesis {
  ConvProblem problem;
  MachineSpec machine;
  SynthesisOptions options;

  double m_l = 0;
  ClosedFormSolution solution;
  /// Best integer plan without the scheduling constraint.
  IntegerPlan unconstrained;
  /// The plan actually scheduled (p_k | w_c and p_b p_h p_w | w_c).
  IntegerPlan plan;
  /// plan.achieved_cost - unconstrained.achieved_cost
  Count schedulability_penalty = 0;

  ProcGrid grid;
  DistributionPlan distribution;
  CommSchedule schedule;
  DistributedCost distributed_cost;
  Count g_d = 0;
  std::vector<std::string> warnings;
};

/// Throws the first module error encountered (optimizer.*, grid_planner.*,
/// comm_scheduler.*).
Synthesis synthesize(const ConvProblem& prob, const MachineSpec& machine,
                     const SynthesisOptions& options = {});

/// Simulator input for a synthesized plan.
SimConfig make_sim_config(const Synthesis& syn, std::uint64_t seed, SimMode mode);

/// Builds grid, distribution and schedule for an arbitrary schedulable plan.
SimConfig make_sim_config(const ConvProblem& prob, const MachineSpec& machine,
                          const IntegerPlan& plan, std::uint64_t seed, SimMode mode);

}  // namespace commsynth
