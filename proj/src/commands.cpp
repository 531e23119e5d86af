#include "commsynth/commands.hpp"

#include <sstream>
#include <utility>

#include "commsynth/pipeline.hpp"

namespace commsynth {

namespace {

using Field = std::pair<std::string, std::string>;

std::string num(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}
std::string num(Count v) { return std::to_string(v); }
std::string yes_no(bool v) { return v ? "yes" : "no"; }

class Report {
 public:
  explicit Report(OutputFormat fmt) : fmt_(fmt) { os_ << kReportHeader << '\n'; }

  void record(const std::string& prefix, const std::vector<Field>& fields) {
    if (fmt_ == OutputFormat::kText) {
      os_ << prefix;
      for (const auto& [k, v] : fields) os_ << ' ' << k << '=' << v;
      os_ << '\n';
    } else {
      for (const auto& [k, v] : fields) os_ << prefix << ',' << k << ',' << v << '\n';
    }
  }

  void check(const std::string& name, bool pass, const std::string& lhs, const std::string& rhs) {
    ok_ = ok_ && pass;
    if (fmt_ == OutputFormat::kText) {
      os_ << "check " << name << ' ' << (pass ? "PASS" : "FAIL") << " lhs=" << lhs
          << " rhs=" << rhs << '\n';
    } else {
      os_ << "check," << name << ',' << (pass ? "PASS" : "FAIL") << ',' << lhs << ',' << rhs
          << '\n';
    }
  }

  void raw(const std::string& text) { os_ << text; }
  OutputFormat format() const { return fmt_; }

  CommandResult finish() {
    record("status", {{"result", ok_ ? "ok" : "failed"}});
    return {os_.str(), ok_};
  }

 private:
  OutputFormat fmt_;
  std::ostringstream os_;
  bool ok_ = true;
};

SynthesisOptions options_of(const RunConfig& cfg) {
  return {cfg.scope, cfg.lower_bound ? CapacityMode::kLowerBound : CapacityMode::kAdjusted};
}

void write_config(Report& rep, const RunConfig& cfg) {
  const ConvProblem& p = cfg.problem;
  rep.record("problem", {{"Nb", num(p.n_b)},
                         {"Nk", num(p.n_k)},
                         {"Nc", num(p.n_c)},
                         {"Nh", num(p.n_h)},
                         {"Nw", num(p.n_w)},
                         {"Nr", num(p.n_r)},
                         {"Ns", num(p.n_s)},
                         {"sigma_w", num(p.sigma_w)},
                         {"sigma_h", num(p.sigma_h)}});
  rep.record("machine", {{"P", num(cfg.machine.p)},
                         {"M", num(cfg.machine.m)},
                         {"MD", num(cfg.machine.m_d)}});
  rep.record("mode", {{"scope", to_string(cfg.scope)},
                      {"strict", yes_no(cfg.strict)},
                      {"lower_bound", yes_no(cfg.lower_bound)},
                      {"element_width", num(cfg.element_width)}});
}

std::vector<Field> plan_fields(const PartitionPlan& pp) {
  return {{"w_b", num(pp.w_b)},           {"w_k", num(pp.w_k)},           {"w_c", num(pp.w_c)},
          {"w_h", num(pp.w_h)},           {"w_w", num(pp.w_w)},           {"t_b", num(pp.tile.t_b)},
          {"t_k", num(pp.tile.t_k)},      {"t_c", num(pp.tile.t_c)},      {"t_h", num(pp.tile.t_h)},
          {"t_w", num(pp.tile.t_w)}};
}

void write_synthesis(Report& rep, const RunConfig& cfg, const Synthesis& syn) {
  const ClosedFormSolution& s = syn.solution;
  rep.record("capacity", {{"mode", cfg.lower_bound ? "lower-bound" : "adjusted"},
                          {"M", num(cfg.machine.m)},
                          {"M_L", num(syn.m_l)}});
  rep.record("closed_form", {{"row", std::to_string(s.table_row)},
                             {"case", to_string(s.case_label)},
                             {"scope", to_string(s.scope)},
                             {"t_k", num(s.t_k)},
                             {"t_bhw", num(s.t_bhw)},
                             {"w_k", num(s.w_k)},
                             {"w_bhw", num(s.w_bhw)},
                             {"w_c", num(s.w_c)},
                             {"predicted", num(s.predicted_cost)},
                             {"clamped_cost", num(s.clamped_cost)},
                             {"clamped", yes_no(s.clamped)}});
  if (s.case_label == CaseLabel::kCase1a || s.case_label == CaseLabel::kCase1b) {
    rep.record("closed_form_printed",
               {{"w_k", num(s.printed_w_k)}, {"w_bhw", num(s.printed_w_bhw)}});
  }
  if (s.scope == PermutationScope::kAll) {
    rep.record("permutation", {{"c_innermost_cost", num(s.c_innermost_cost)},
                               {"other_cheaper", yes_no(s.other_permutation_cheaper)}});
  }
  auto fields = plan_fields(syn.plan.plan);
  fields.emplace_back("cost", num(syn.plan.achieved_cost));
  fields.emplace_back("gap", num(syn.plan.gap_vs_closed_form));
  rep.record("integer", fields);
  rep.record("schedulable", {{"unconstrained_cost", num(syn.unconstrained.achieved_cost)},
                             {"penalty", num(syn.schedulability_penalty)}});
  const ProcGrid& g = syn.grid;
  rep.record("grid", {{"p_b", num(g.p_b)},
                      {"p_k", num(g.p_k)},
                      {"p_c", num(g.p_c)},
                      {"p_h", num(g.p_h)},
                      {"p_w", num(g.p_w)}});
  const CostBreakdown global = partition_cost(syn.plan.plan, syn.problem);
  rep.record("cost_global", {{"out", num(global.out_term)},
                             {"ker", num(global.ker_term)},
                             {"in", num(global.in_term)},
                             {"total", num(global.total)}});
  if (cfg.strict) {
    const CostBreakdown printed =
        partition_cost(syn.plan.plan, syn.problem, KerTermFormula::kPrinted);
    rep.record("cost_global_printed", {{"out", num(printed.out_term)},
                                       {"ker", num(printed.ker_term)},
                                       {"in", num(printed.in_term)},
                                       {"total", num(printed.total)}});
  }
  const DistributedCost& d = syn.distributed_cost;
  rep.record("cost_distributed",
             {{"cost_i", num(d.cost_i)}, {"cost_c", num(d.cost_c)}, {"cost_d", num(d.cost_d)}});
  rep.record("memory", {{"tile", num(tile_memory(syn.plan.plan.tile, syn.problem))},
                        {"M", num(cfg.machine.m)},
                        {"g_D", num(syn.g_d)},
                        {"MD", num(cfg.machine.m_d)}});
  rep.record("bytes", {{"cost_global", num(global.total * cfg.element_width)},
                       {"cost_d", num(d.cost_d * cfg.element_width)}});
  rep.record("schedule", {{"sweeps", num(syn.schedule.sweeps)},
                          {"steps", num(syn.schedule.steps)},
                          {"records", num(static_cast<Count>(syn.schedule.records.size()))}});
  for (const auto& w : syn.warnings) rep.record("warning", {{"text", '"' + w + '"'}});
}

void write_verify(Report& rep, const RunConfig& cfg, const Synthesis& syn) {
  const ConvProblem& prob = cfg.problem;
  OracleLimits limits;
  limits.max_points = cfg.oracle_max_points;
  const IntegerPlan oracle = brute_force_oracle(prob, cfg.machine, limits);
  const ClosedFormSolution bound =
      solve_closed_form(prob, cfg.machine.p, static_cast<double>(cfg.machine.m), cfg.scope);

  auto fields = plan_fields(oracle.plan);
  fields.emplace_back("cost", num(oracle.achieved_cost));
  fields.emplace_back("points", num(oracle_search_space(prob, cfg.machine.p)));
  rep.record("oracle", fields);
  rep.record("verify", {{"closed_form_at_M", num(bound.predicted_cost)},
                        {"closed_form_case", to_string(bound.case_label)},
                        {"integer_cost", num(syn.unconstrained.achieved_cost)},
                        {"oracle_cost", num(oracle.achieved_cost)},
                        {"ratio", num(static_cast<double>(syn.unconstrained.achieved_cost) /
                                      static_cast<double>(oracle.achieved_cost))}});
  rep.check("closed_form_lower_bound", bound.predicted_cost <= oracle.achieved_cost + 1.0,
            num(bound.predicted_cost), num(oracle.achieved_cost + 1));
  rep.check("integer_within_15pct",
            static_cast<double>(syn.unconstrained.achieved_cost) <=
                1.15 * static_cast<double>(oracle.achieved_cost),
            num(syn.unconstrained.achieved_cost), num(1.15 * oracle.achieved_cost));
  const Count tile = tile_memory(syn.plan.plan.tile, prob);
  rep.check("tile_memory_le_M", tile <= cfg.machine.m, num(tile), num(cfg.machine.m));
}

void write_simulation(Report& rep, const RunConfig& cfg, const Synthesis& syn, SimMode mode) {
  SimReport sim;
  try {
    sim = run(make_sim_config(syn, cfg.seed, mode));
  } catch (const MemoryOverflow& e) {
    rep.record("sim_error", {{"code", e.code()},
                             {"processor", num(e.processor())},
                             {"step", e.step()}});
    const Count g_d = memory_distributed(syn.plan.plan, cfg.problem, cfg.machine.p);
    rep.check("gd_le_md", g_d <= cfg.machine.m_d, num(g_d), num(cfg.machine.m_d));
    rep.check("simulation_completed", false, e.code(), "-");
    return;
  }
  rep.record("sim", {{"mode", mode == SimMode::kFullCompute ? "full-compute" : "count-only"},
                     {"seed", std::to_string(cfg.seed)},
                     {"steps", num(sim.steps)},
                     {"cost_i", num(sim.cost_i)},
                     {"cost_c", num(sim.cost_c)},
                     {"cost_d", num(sim.cost_d)},
                     {"peak_memory", num(sim.peak_memory)},
                     {"correct", sim.correct ? yes_no(*sim.correct) : "n/a"},
                     {"mismatches", num(sim.mismatches)}});
  for (std::size_t r = 0; r < sim.processors.size(); ++r) {
    const ProcessorReport& s = sim.processors[r];
    rep.record("proc", {{"rank", std::to_string(r)},
                        {"coord", to_string(coord_of(syn.grid, static_cast<Count>(r)))},
                        {"received_in", num(s.elements_received_in)},
                        {"received_ker", num(s.elements_received_ker)},
                        {"initial", num(s.initial_footprint)},
                        {"peak", num(s.peak_memory)},
                        {"reduction", num(s.reduction_volume)},
                        {"sourced_off_line", num(s.sourced_off_line)}});
  }
  if (cfg.strict) {
    const CostBreakdown printed =
        partition_cost(syn.plan.plan, syn.problem, KerTermFormula::kPrinted);
    rep.record("sim_printed_formula", {{"cost_global", num(printed.total)},
                                       {"cost_d_minus_printed", num(sim.cost_d - printed.total)}});
  }
  for (const IdentityResult& id :
       verify_identities(sim, cfg.problem, cfg.machine, syn.plan)) {
    rep.check(id.identity, id.pass, num(id.lhs), num(id.rhs));
  }
}

}  // namespace

CommandResult cmd_plan(const RunConfig& cfg, OutputFormat fmt) {
  Report rep(fmt);
  rep.record("command", {{"name", "plan"}});
  write_config(rep, cfg);
  write_synthesis(rep, cfg, synthesize(cfg.problem, cfg.machine, options_of(cfg)));
  return rep.finish();
}

CommandResult cmd_verify(const RunConfig& cfg, OutputFormat fmt) {
  Report rep(fmt);
  rep.record("command", {{"name", "verify"}});
  write_config(rep, cfg);
  const Synthesis syn = synthesize(cfg.problem, cfg.machine, options_of(cfg));
  write_synthesis(rep, cfg, syn);
  write_verify(rep, cfg, syn);
  return rep.finish();
}

CommandResult cmd_simulate(const RunConfig& cfg, OutputFormat fmt, SimMode mode) {
  Report rep(fmt);
  rep.record("command", {{"name", "simulate"}});
  write_config(rep, cfg);
  const Synthesis syn = synthesize(cfg.problem, cfg.machine, options_of(cfg));
  write_synthesis(rep, cfg, syn);
  write_simulation(rep, cfg, syn, mode);
  return rep.finish();
}

CommandResult cmd_report(const RunConfig& cfg, OutputFormat fmt, SimMode mode) {
  Report rep(fmt);
  rep.record("command", {{"name", "report"}});
  write_config(rep, cfg);
  const Synthesis syn = synthesize(cfg.problem, cfg.machine, options_of(cfg));
  write_synthesis(rep, cfg, syn);
  write_verify(rep, cfg, syn);
  write_simulation(rep, cfg, syn, mode);
  return rep.finish();
}

CommandResult cmd_sweep(const RunConfig& cfg, SweepAxis axis, const std::vector<Count>& values,
                        OutputFormat fmt) {
  Report rep(fmt);
  rep.record("command", {{"name", "sweep"}});
  write_config(rep, cfg);
  const std::string axis_name = axis == SweepAxis::kM ? "M" : "P";
  const CapacityMode mode = cfg.lower_bound ? CapacityMode::kLowerBound : CapacityMode::kAdjusted;
  if (fmt == OutputFormat::kCsv) {
    rep.raw("axis,value,m_l,row,case,predicted,integer_cost,error\n");
  }
  for (Count v : values) {
    MachineSpec machine = cfg.machine;
    if (axis == SweepAxis::kM) {
      machine.m = v;
      machine.m_d = std::max(machine.m_d, v);
    } else {
      machine.p = v;
    }
    std::string m_l = "-", row = "-", label = "-", predicted = "-", integer = "-", error = "-";
    try {
      const double cap = effective_capacity(machine.m, cfg.problem, mode);
      m_l = num(cap);
      const ClosedFormSolution sol = solve_closed_form(cfg.problem, machine.p, cap, cfg.scope);
      row = std::to_string(sol.table_row);
      label = to_string(sol.case_label);
      predicted = num(sol.predicted_cost);
      integer = num(integerize(sol, cfg.problem, machine).achieved_cost);
    } catch (const Error& e) {
      error = e.code();
    }
    if (fmt == OutputFormat::kText) {
      rep.record("sweep", {{"axis", axis_name},
                           {"value", num(v)},
                           {"M_L", m_l},
                           {"row", row},
                           {"case", label},
                           {"predicted", predicted},
                           {"integer_cost", integer},
                           {"error", error}});
    } else {
      rep.raw(axis_name + ',' + num(v) + ',' + m_l + ',' + row + ',' + label + ',' + predicted +
              ',' + integer + ',' + error + '\n');
    }
  }
  return rep.finish();
}

}  // namespace commsynth
