// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 iff all pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "commsynth/pipeline.hpp"

using namespace commsynth;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
  std::vector<std::string> failures;

  void fail(const std::string& why) {
    pass = false;
    if (failures.size() < 5) failures.push_back(why);
  }
};

bool report(int id, const std::string& title, Outcome out, double elapsed, double limit_s) {
  if (limit_s > 0 && elapsed > limit_s) {
    out.fail("runtime " + std::to_string(elapsed) + " s exceeds " + std::to_string(limit_s) + " s");
  }
  std::printf("AC%d %s %s: %s (%.2f s)\n", id, out.pass ? "PASS" : "FAIL", title.c_str(),
              out.detail.c_str(), elapsed);
  for (const auto& f : out.failures) std::printf("    %s\n", f.c_str());
  std::fflush(stdout);
  return out.pass;
}

struct GridCase {
  ConvProblem prob;
  MachineSpec machine;
};

std::string describe(const GridCase& c) {
  return to_string(c.prob) + " P=" + std::to_string(c.machine.p) +
         " M=" + std::to_string(c.machine.m);
}

template <class T>
T pick(std::mt19937_64& gen, const std::vector<T>& v) {
  return v[static_cast<std::size_t>(gen() % v.size())];
}

// Fixed problem grid: extents in 4..32, filters 1 or 3, strides 1 or 2,
// P in {1,2,4,8}, M in 64..4096. Cases whose exhaustive search exceeds the
// oracle budget are redrawn.
std::vector<GridCase> problem_grid(int count) {
  std::mt19937_64 gen(20240901);
  const std::vector<Count> ext{4, 6, 8, 12, 16, 24, 32};
  const std::vector<Count> mem{64, 96, 128, 256, 512, 1024, 2048, 4096};
  std::vector<GridCase> grid;
  while (static_cast<int>(grid.size()) < count) {
    GridCase c;
    c.prob.n_b = pick(gen, std::vector<Count>{4, 8});
    c.prob.n_k = pick(gen, ext);
    c.prob.n_c = pick(gen, ext);
    c.prob.n_h = pick(gen, ext);
    c.prob.n_w = pick(gen, ext);
    c.prob.n_r = pick(gen, std::vector<Count>{1, 3});
    c.prob.n_s = pick(gen, std::vector<Count>{1, 3});
    c.prob.sigma_w = pick(gen, std::vector<Count>{1, 2});
    c.prob.sigma_h = pick(gen, std::vector<Count>{1, 2});
    c.machine.p = pick(gen, std::vector<Count>{1, 2, 4, 8});
    c.machine.m = pick(gen, mem);
    c.machine.m_d = Count{1} << 24;
    if (oracle_search_space(c.prob, c.machine.p) > 5'000'000) continue;
    try {
      c.prob.validate();
      c.machine.validate(c.prob);
      effective_capacity(c.machine.m, c.prob);
    } catch (const Error&) {
      continue;
    }
    grid.push_back(c);
  }
  return grid;
}

// AC1 + AC2 share the oracle runs.
struct OracleRun {
  GridCase c;
  Count oracle_cost = 0;
  double predicted = 0;
  Count integer_cost = 0;
  Count tile = 0;
  std::string error;
};

std::vector<OracleRun> oracle_runs(const std::vector<GridCase>& grid, double& ac1_seconds,
                                   double& ac2_seconds) {
  std::vector<OracleRun> runs;
  ac1_seconds = ac2_seconds = 0;
  for (const GridCase& c : grid) {
    OracleRun r{c, 0, 0, 0, 0, {}};
    try {
      auto t0 = Clock::now();
      r.oracle_cost = brute_force_oracle(c.prob, c.machine).achieved_cost;
      r.predicted = solve_closed_form(c.prob, c.machine.p, static_cast<double>(c.machine.m))
                        .predicted_cost;
      ac1_seconds += seconds_since(t0);
      t0 = Clock::now();
      const double m_l = effective_capacity(c.machine.m, c.prob);
      const IntegerPlan plan =
          integerize(solve_closed_form(c.prob, c.machine.p, m_l), c.prob, c.machine);
      r.integer_cost = cost_global(plan.plan, c.prob, c.machine).total;
      r.tile = tile_memory(plan.plan.tile, c.prob);
      ac2_seconds += seconds_since(t0);
    } catch (const Error& e) {
      r.error = e.what();
    }
    runs.push_back(r);
  }
  return runs;
}

Outcome check_soundness(const std::vector<OracleRun>& runs) {
  Outcome out;
  double worst = -1e300;
  for (const auto& r : runs) {
    if (!r.error.empty()) {
      out.fail(describe(r.c) + ": " + r.error);
      continue;
    }
    const double excess = r.predicted - static_cast<double>(r.oracle_cost);
    worst = std::max(worst, excess);
    if (excess > 1.0) {
      out.fail(describe(r.c) + ": predicted " + std::to_string(r.predicted) + " > oracle " +
               std::to_string(r.oracle_cost) + " + 1");
    }
  }
  std::ostringstream os;
  os << runs.size() << " problems, predicted <= oracle + 1, max(predicted - oracle) = " << worst;
  out.detail = os.str();
  return out;
}

Outcome check_integer_quality(const std::vector<OracleRun>& runs) {
  Outcome out;
  double worst = 0;
  for (const auto& r : runs) {
    if (!r.error.empty()) {
      out.fail(describe(r.c) + ": " + r.error);
      continue;
    }
    const double ratio = static_cast<double>(r.integer_cost) / static_cast<double>(r.oracle_cost);
    worst = std::max(worst, ratio);
    if (ratio > 1.15) {
      out.fail(describe(r.c) + ": integer " + std::to_string(r.integer_cost) + " vs oracle " +
               std::to_string(r.oracle_cost));
    }
    if (r.tile > r.c.machine.m) {
      out.fail(describe(r.c) + ": tile memory " + std::to_string(r.tile) + " > M");
    }
  }
  std::ostringstream os;
  os << runs.size() << " problems, integer/oracle <= 1.15 and tile_memory <= M, worst ratio = "
     << worst;
  out.detail = os.str();
  return out;
}

struct SimRecord {
  std::string what;
  Count peak = 0;
  Count g_d = 0;
  Count m_d = 0;
  SimConfig cfg;
};

// Exhaustive: is there any work partition whose grid meets the sub-slice
// divisibility p_k | w_c and p_b p_h p_w | w_c?
bool schedulable_partition_exists(const ConvProblem& prob, Count p) {
  const Count total = prob.n_b * prob.n_k * prob.n_c * prob.n_h * prob.n_w;
  for (Count wb : divisors(prob.n_b))
    for (Count wk : divisors(prob.n_k))
      for (Count wc : divisors(prob.n_c))
        for (Count wh : divisors(prob.n_h))
          for (Count ww : divisors(prob.n_w)) {
            if (p * wb * wk * wc * wh * ww != total) continue;
            const Count pk = prob.n_k / wk;
            const Count pbhw = (prob.n_b / wb) * (prob.n_h / wh) * (prob.n_w / ww);
            if (wc % pk == 0 && wc % pbhw == 0) return true;
          }
  return false;
}

// AC3: synthesized plans for every grid problem with exact divisibility.
Outcome check_volume_identity(const std::vector<GridCase>& grid, std::vector<SimRecord>& sims) {
  Outcome out;
  int simulated = 0;
  int indivisible = 0;
  for (const GridCase& c : grid) {
    if (c.prob.size_in() % c.machine.p != 0 || c.prob.size_ker() % c.machine.p != 0 ||
        !schedulable_partition_exists(c.prob, c.machine.p)) {
      ++indivisible;
      continue;
    }
    try {
      const Synthesis syn = synthesize(c.prob, c.machine);
      const SimConfig cfg = make_sim_config(syn, 42, SimMode::kCountOnly);
      const SimReport rep = run(cfg);
      const DistributedCost model = cost_distributed(syn.plan.plan, c.prob, c.machine);
      const CostBreakdown global = cost_global(syn.plan.plan, c.prob, c.machine);
      const Count share = (c.prob.size_in() + c.prob.size_ker()) / c.machine.p;
      ++simulated;
      for (std::size_t i = 0; i < rep.processors.size(); ++i) {
        const auto& s = rep.processors[i];
        if (s.elements_received_in + s.elements_received_ker != model.cost_c) {
          out.fail(describe(c) + ": processor " + std::to_string(i) + " received " +
                   std::to_string(s.elements_received_in + s.elements_received_ker) +
                   " != cost_C " + std::to_string(model.cost_c));
        }
      }
      if (rep.cost_d - global.total != share) {
        out.fail(describe(c) + ": cost_D - cost = " + std::to_string(rep.cost_d - global.total) +
                 " != " + std::to_string(share));
      }
      sims.push_back({"grid " + describe(c), rep.peak_memory, syn.g_d, c.machine.m_d, cfg});
    } catch (const Error& e) {
      out.fail(describe(c) + ": " + e.what());
    }
  }
  out.detail = std::to_string(simulated) +
               " simulated runs, received volume == cost_C and cost_D - cost == (In+Ker)/P (" +
               std::to_string(indivisible) + " grid problems admit no divisible plan)";
  if (simulated < 50) out.fail("fewer than 50 simulated runs");
  return out;
}

// AC4: Problem A plus randomized configurations, including c-split grids.
Outcome check_correctness(std::vector<SimRecord>& sims) {
  Outcome out;
  int runs = 0;
  int with_reduction = 0;
  auto simulate = [&](const std::string& what, const SimConfig& cfg, Count g_d) {
    const SimReport rep = run(cfg);
    ++runs;
    if (cfg.grid.p_c > 1) ++with_reduction;
    if (rep.correct != true) {
      out.fail(what + ": " + std::to_string(rep.mismatches) + " mismatching Out elements");
    }
    sims.push_back({what, rep.peak_memory, g_d, cfg.machine.m_d, cfg});
  };

  try {
    const ConvProblem a{2, 8, 8, 8, 8, 3, 3, 1, 1};
    const MachineSpec ma{4, 256, 4096};
    const Synthesis syn = synthesize(a, ma);
    simulate("Problem A", make_sim_config(syn, 42, SimMode::kFullCompute), syn.g_d);
  } catch (const Error& e) {
    out.fail(std::string("Problem A: ") + e.what());
  }

  std::mt19937_64 gen(777);
  const std::vector<Count> ext{1, 2, 3, 4, 6, 8};
  int random_runs = 0;
  while (random_runs < 24) {
    ConvProblem p;
    p.n_b = pick(gen, std::vector<Count>{1, 2});
    p.n_k = pick(gen, ext);
    p.n_c = pick(gen, ext);
    p.n_h = pick(gen, ext);
    p.n_w = pick(gen, ext);
    p.n_r = pick(gen, std::vector<Count>{1, 3});
    p.n_s = pick(gen, std::vector<Count>{1, 3});
    p.sigma_w = pick(gen, std::vector<Count>{1, 2});
    p.sigma_h = pick(gen, std::vector<Count>{1, 2});
    auto divs = [](Count n) { return divisors(n); };
    PartitionPlan pp;
    pp.w_b = pick(gen, divs(p.n_b));
    pp.w_k = pick(gen, divs(p.n_k));
    pp.w_c = pick(gen, divs(p.n_c));
    pp.w_h = pick(gen, divs(p.n_h));
    pp.w_w = pick(gen, divs(p.n_w));
    // Every fourth configuration forces a c split.
    if (random_runs % 4 == 0 && p.n_c > 1) pp.w_c = divs(p.n_c)[divs(p.n_c).size() - 2];
    pp.tile.t_b = pick(gen, divs(pp.w_b));
    pp.tile.t_k = pick(gen, divs(pp.w_k));
    pp.tile.t_h = pick(gen, divs(pp.w_h));
    pp.tile.t_w = pick(gen, divs(pp.w_w));
    const Count procs = (p.n_b / pp.w_b) * (p.n_k / pp.w_k) * (p.n_c / pp.w_c) *
                        (p.n_h / pp.w_h) * (p.n_w / pp.w_w);
    if (procs > 16 || !distribution_feasible(pp, p)) continue;
    const MachineSpec machine{procs, tile_memory(pp.tile, p), Count{1} << 24};
    ++random_runs;
    try {
      simulate("random " + to_string(p) + " | " + to_string(pp),
               make_sim_config(p, machine, IntegerPlan{pp, 0, 0.0}, gen(), SimMode::kFullCompute),
               memory_distributed(pp, p, procs));
    } catch (const Error& e) {
      out.fail(to_string(p) + " | " + to_string(pp) + ": " + e.what());
    }
  }
  if (with_reduction == 0) out.fail("no configuration exercised the Out reduction");
  out.detail = std::to_string(runs) + " full-compute runs (" + std::to_string(with_reduction) +
               " with p_c > 1) equal to the reference convolution";
  return out;
}

// AC5: 16x16x16 matrix product on 8 processors.
Outcome check_matmul() {
  Outcome out;
  const ConvProblem mm{1, 16, 16, 4, 4, 1, 1, 1, 1};
  const MachineSpec machine{8, 96, 4096};
  const double expected = 3.0 * std::pow(16.0 * 16.0 * 16.0 / 8.0, 2.0 / 3.0);
  try {
    const Synthesis syn = synthesize(mm, machine);
    if (syn.solution.case_label != CaseLabel::kCase2a) {
      out.fail("case " + to_string(syn.solution.case_label) + ", expected Case2a");
    }
    if (std::abs(syn.solution.predicted_cost - expected) > 1e-9 || std::abs(expected - 192) > 1e-9) {
      out.fail("predicted " + std::to_string(syn.solution.predicted_cost) + " != 192");
    }
    const IntegerPlan oracle = brute_force_oracle(mm, machine);
    if (oracle.achieved_cost != 192 || syn.plan.achieved_cost != 192) {
      out.fail("integer " + std::to_string(syn.plan.achieved_cost) + ", oracle " +
               std::to_string(oracle.achieved_cost) + ", expected 192");
    }
    const ProcGrid& g = syn.grid;
    if (g.p_k != 2 || g.p_bhw() != 2 || g.p_c != 2) {
      out.fail("grid p_k=" + std::to_string(g.p_k) + " p_bhw=" + std::to_string(g.p_bhw()) +
               " p_c=" + std::to_string(g.p_c));
    }
    std::ostringstream os;
    os << to_string(syn.solution.case_label) << " predicted " << syn.solution.predicted_cost
       << ", integer " << syn.plan.achieved_cost << ", oracle " << oracle.achieved_cost
       << ", grid (k, bhw, c) = " << g.p_k << "x" << g.p_bhw() << "x" << g.p_c;
    out.detail = os.str();
  } catch (const Error& e) {
    out.fail(e.what());
  }
  return out;
}

// AC6: rows along an M sweep of Problem A against analytically derived thresholds.
Outcome check_regimes() {
  Outcome out;
  const ConvProblem a{2, 8, 8, 8, 8, 3, 3, 1, 1};
  const Count p = 4;
  const double nbhw = 2.0 * 8 * 8;
  const double row1_limit = 8.0 * nbhw / p;                                   // 256
  const double row2_limit = std::pow(8.0 * 8.0 * nbhw / p, 2.0 / 3.0) * std::cbrt(9.0);
  const double k = 3.0;  // sqrt(sigma_w sigma_h n_r n_s)
  // Capacity adjustment inverted: M_L = tau at M = tau + 3K sqrt(tau).
  auto m_for = [k](double tau) { return tau + 3.0 * k * std::sqrt(tau); };

  std::ostringstream detail;
  for (CapacityMode mode : {CapacityMode::kLowerBound, CapacityMode::kAdjusted}) {
    const bool lb = mode == CapacityMode::kLowerBound;
    const double t13 = lb ? row1_limit : m_for(row1_limit);
    const double t32 = lb ? row2_limit : m_for(row2_limit);
    std::vector<int> rows;
    std::vector<Count> ms;
    for (Count m = 64; m <= 8192; ++m) {
      ms.push_back(m);
      rows.push_back(solve_closed_form(a, p, effective_capacity(m, a, mode)).table_row);
    }
    // Collapse into runs.
    std::vector<int> sequence;
    Count first3 = -1, first2 = -1;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (sequence.empty() || sequence.back() != rows[i]) sequence.push_back(rows[i]);
      if (rows[i] == 3 && first3 < 0) first3 = ms[i];
      if (rows[i] == 2 && first2 < 0) first2 = ms[i];
    }
    const std::string name = lb ? "lower-bound" : "adjusted";
    if (sequence != std::vector<int>{1, 3, 2}) {
      std::string seq;
      for (int r : sequence) seq += std::to_string(r) + " ";
      out.fail(name + ": row sequence " + seq);
    }
    if (std::abs(static_cast<double>(first3) - t13) > 1.0) {
      out.fail(name + ": row 3 from M=" + std::to_string(first3) + ", threshold " +
               std::to_string(t13));
    }
    if (std::abs(static_cast<double>(first2) - t32) > 1.0) {
      out.fail(name + ": row 2 from M=" + std::to_string(first2) + ", threshold " +
               std::to_string(t32));
    }
    detail << name << " rows 1->3 at M=" << first3 << " (" << t13 << "), 3->2 at M=" << first2
           << " (" << t32 << "); ";
  }
  out.detail = detail.str();
  return out;
}

// AC7: every run above stays within g_D <= M_D; a tight M_D = g_D still runs,
// one element less than the observed peak overflows.
Outcome check_memory(const std::vector<SimRecord>& sims) {
  Outcome out;
  int tightened = 0;
  for (const SimRecord& s : sims) {
    if (s.peak > s.g_d) out.fail(s.what + ": peak " + std::to_string(s.peak) + " > g_D");
    if (s.g_d > s.m_d) out.fail(s.what + ": g_D " + std::to_string(s.g_d) + " > M_D");
    SimConfig cfg = s.cfg;
    cfg.mode = SimMode::kCountOnly;
    cfg.machine.m_d = s.g_d;
    try {
      run(cfg);
    } catch (const Error& e) {
      out.fail(s.what + ": M_D = g_D failed: " + e.what());
    }
    cfg.machine.m_d = s.peak - 1;
    try {
      run(cfg);
      out.fail(s.what + ": M_D = peak - 1 did not overflow");
    } catch (const MemoryOverflow& e) {
      if (e.step().empty() || e.processor() < 0 || e.processor() >= cfg.grid.size()) {
        out.fail(s.what + ": overflow without processor/step");
      }
      ++tightened;
    } catch (const Error& e) {
      out.fail(s.what + ": unexpected " + e.what());
    }
  }
  std::string example;
  try {
    const ConvProblem a{2, 8, 8, 8, 8, 3, 3, 1, 1};
    const Synthesis syn = synthesize(a, MachineSpec{4, 256, 4096});
    SimConfig cfg = make_sim_config(syn, 42, SimMode::kFullCompute);
    cfg.machine.m_d = 850;
    run(cfg);
    out.fail("Problem A with M_D = 850 did not overflow");
  } catch (const MemoryOverflow& e) {
    example = std::string(e.what());
  } catch (const Error& e) {
    out.fail(std::string("Problem A with M_D = 850: ") + e.what());
  }
  out.detail = std::to_string(sims.size()) + " runs with peak <= g_D <= M_D, " +
               std::to_string(tightened) + " overflow at peak - 1; undersized Problem A: " +
               example;
  return out;
}

}  // namespace

int main() {
  bool all = true;
  const std::vector<GridCase> grid = problem_grid(60);

  double ac1_s = 0, ac2_s = 0;
  const auto runs = oracle_runs(grid, ac1_s, ac2_s);
  all &= report(1, "closed-form soundness", check_soundness(runs), ac1_s, 120);
  all &= report(2, "integerization quality", check_integer_quality(runs), ac2_s, 0);

  std::vector<SimRecord> sims;
  auto t0 = Clock::now();
  Outcome ac3 = check_volume_identity(grid, sims);
  all &= report(3, "volume identity", ac3, seconds_since(t0), 60);

  t0 = Clock::now();
  Outcome ac4 = check_correctness(sims);
  all &= report(4, "functional correctness", ac4, seconds_since(t0), 30);

  t0 = Clock::now();
  all &= report(5, "matmul degeneration", check_matmul(), seconds_since(t0), 0);

  t0 = Clock::now();
  all &= report(6, "regime transitions", check_regimes(), seconds_since(t0), 0);

  t0 = Clock::now();
  all &= report(7, "memory safety", check_memory(sims), seconds_since(t0), 0);

  std::printf("acceptance %s\n", all ? "PASS" : "FAIL");
  return all ? 0 : 1;
}
