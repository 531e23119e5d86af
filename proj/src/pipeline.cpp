#include "commsynth/pipeline.hpp"

namespace commsynth {

Synthesis synthesize(const ConvProblem& prob, const MachineSpec& machine,
                     const SynthesisOptions& options) {
  prob.validate();
  machine.validate(prob);

  Synthesis syn;
  syn.problem = prob;
  syn.machine = machine;
  syn.options = options;
  syn.warnings = prob.warnings();
  syn.m_l = effective_capacity(machine.m, prob, options.capacity);
  syn.solution = solve_closed_form(prob, machine.p, syn.m_l, options.scope);
  if (syn.solution.other_permutation_cheaper) {
    syn.warnings.push_back("a tile-loop permutation other than c-innermost predicts lower cost; "
                           "the c-innermost plan is scheduled");
  }

  syn.unconstrained = integerize(syn.solution, prob, machine);
  if (distribution_feasible(syn.unconstrained.plan, prob)) {
    syn.plan = syn.unconstrained;
  } else {
    syn.plan = integerize(syn.solution, prob, machine, [&prob](const PartitionPlan& pp) {
      return distribution_feasible(pp, prob);
    });
  }
  syn.schedulability_penalty = syn.plan.achieved_cost - syn.unconstrained.achieved_cost;

  syn.grid = derive_grid(syn.plan, syn.solution.case_label, prob, machine);
  syn.distribution = plan_distribution(syn.grid, syn.plan.plan, prob);
  syn.schedule = build_schedule(syn.grid, syn.plan.plan, syn.distribution, prob);
  syn.distributed_cost = cost_distributed(syn.plan.plan, prob, machine);
  syn.g_d = memory_distributed(syn.plan.plan, prob, machine.p);
  if (syn.g_d > machine.m_d) {
    syn.warnings.push_back("g_D=" + std::to_string(syn.g_d) + " exceeds M_D=" +
                           std::to_string(machine.m_d));
  }
  return syn;
}

SimConfig make_sim_config(const Synthesis& syn, std::uint64_t seed, SimMode mode) {
  SimConfig cfg;
  cfg.problem = syn.problem;
  cfg.machine = syn.machine;
  cfg.plan = syn.plan;
  cfg.grid = syn.grid;
  cfg.distribution = syn.distribution;
  cfg.schedule = syn.schedule;
  cfg.seed = seed;
  cfg.mode = mode;
  return cfg;
}

SimConfig make_sim_config(const ConvProblem& prob, const MachineSpec& machine,
                          const IntegerPlan& plan, std::uint64_t seed, SimMode mode) {
  SimConfig cfg;
  cfg.problem = prob;
  cfg.machine = machine;
  cfg.plan = plan;
  cfg.grid = derive_grid(plan, CaseLabel::kCase1a, prob, machine);
  cfg.distribution = plan_distribution(cfg.grid, plan.plan, prob);
  cfg.schedule = build_schedule(cfg.grid, plan.plan, cfg.distribution, prob);
  cfg.seed = seed;
  cfg.mode = mode;
  return cfg;
}

}  // namespace commsynth
