#include "commsynth/optimizer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <tuple>

namespace commsynth {

namespace {

using Real = long double;

constexpr Real kRelTol = 1e-12L;

bool leq(Real a, Real b) { return a <= b + kRelTol * std::max(std::fabs(a), std::fabs(b)); }
bool lt(Real a, Real b) { return !leq(b, a); }

/// cbrt that returns exact integers for perfect cubes.
Real exact_cbrt(Real x) {
  const Real r = std::cbrt(x);
  const Real n = std::nearbyint(r);
  if (n * n * n == x) return n;
  return r;
}

Real exact_sqrt(Real x) {
  const Real r = std::sqrt(x);
  const Real n = std::nearbyint(r);
  if (n * n == x) return n;
  return r;
}

/// Problem-derived constants of the simplified model.
struct Terms {
  Real stencil;   // n_r n_s
  Real stride;    // sigma_w sigma_h
  Real k2;        // n_r n_s sigma_w sigma_h
  Real out_area;  // n_k n_bhw / P
  Real work;      // n_k n_c n_bhw / P
  Real cube;      // work^(2/3) k2^(1/3)

  Terms(const ConvProblem& prob, Count p) {
    stencil = static_cast<Real>(prob.n_r * prob.n_s);
    stride = static_cast<Real>(prob.sigma_w * prob.sigma_h);
    k2 = stencil * stride;
    out_area = static_cast<Real>(prob.n_k) * static_cast<Real>(prob.n_bhw()) / p;
    work = static_cast<Real>(prob.n_k) * static_cast<Real>(prob.n_c) *
           static_cast<Real>(prob.n_bhw()) / p;
    cube = exact_cbrt(work * work * k2);
  }
};

struct Raw {
  Real t_k, t_bhw, w_k, w_bhw, w_c, cost;
};

Raw raw_case(CaseLabel label, const ConvProblem& prob, const Terms& tm, Real m_l) {
  Raw r{};
  switch (label) {
    case CaseLabel::kCase1a:
    case CaseLabel::kCase1b: {
      const Real cap = label == CaseLabel::kCase1a ? m_l : tm.out_area;
      r.t_k = exact_sqrt(cap * tm.stride / tm.stencil);
      r.t_bhw = exact_sqrt(cap * tm.stencil / tm.stride);
      r.w_k = exact_sqrt(tm.out_area * tm.stride / tm.stencil);
      r.w_bhw = exact_sqrt(tm.out_area * tm.stencil / tm.stride);
      r.w_c = static_cast<Real>(prob.n_c);
      r.cost = tm.out_area + 2 * tm.work * exact_sqrt(tm.k2 / cap);
      break;
    }
    case CaseLabel::kCase2a:
      r.t_k = exact_cbrt(tm.work * tm.stride * tm.stride / tm.stencil);
      r.t_bhw = exact_cbrt(tm.work * tm.stencil * tm.stencil / tm.stride);
      r.w_k = r.t_k;
      r.w_bhw = r.t_bhw;
      r.w_c = tm.work / (r.t_k * r.t_bhw);
      r.cost = 3 * tm.cube;
      break;
    case CaseLabel::kCase2b:
      r.t_k = exact_sqrt(m_l * tm.stride / tm.stencil);
      r.t_bhw = exact_sqrt(m_l * tm.stencil / tm.stride);
      r.w_k = r.t_k;
      r.w_bhw = r.t_bhw;
      r.w_c = tm.work / m_l;
      r.cost = m_l + 2 * tm.work * exact_sqrt(tm.k2) / exact_sqrt(m_l);
      break;
  }
  return r;
}

bool is_case2(CaseLabel label) {
  return label == CaseLabel::kCase2a || label == CaseLabel::kCase2b;
}

/// Enforces 1 <= t <= w <= n, re-solving the free variable of the active
/// product after each clamp. Returns true if anything moved.
bool clamp_point(Raw& r, CaseLabel label, const ConvProblem& prob, const Terms& tm, Real m_l) {
  const Raw before = r;
  const Real n_k = static_cast<Real>(prob.n_k);
  const Real n_c = static_cast<Real>(prob.n_c);
  const Real n_bhw = static_cast<Real>(prob.n_bhw());
  const Real work = tm.work;  // w_k w_bhw w_c

  // t against w.
  if (!is_case2(label)) {
    if (r.t_k > r.w_k) {
      r.t_k = r.w_k;
      r.t_bhw = std::min(r.w_bhw, m_l / r.t_k);
    }
    if (r.t_bhw > r.w_bhw) {
      r.t_bhw = r.w_bhw;
      r.t_k = std::min(r.w_k, m_l / r.t_bhw);
    }
  }

  // w against n, w_c first; keep the k/bhw ratio while re-solving their product.
  if (r.w_c > n_c || r.w_c < 1) {
    r.w_c = std::clamp(r.w_c, Real{1}, n_c);
    const Real scale = std::sqrt(work / (r.w_c * r.w_k * r.w_bhw));
    r.w_k *= scale;
    r.w_bhw *= scale;
  }
  if (r.w_bhw > n_bhw) {
    r.w_bhw = n_bhw;
    r.w_k = work / (r.w_c * r.w_bhw);
  }
  if (r.w_k > n_k) {
    r.w_k = n_k;
    r.w_bhw = work / (r.w_c * r.w_k);
    if (r.w_bhw > n_bhw) {
      r.w_bhw = n_bhw;
      r.w_c = work / (r.w_k * r.w_bhw);
    }
  }
  if (r.w_k < 1) {
    r.w_k = 1;
    r.w_bhw = std::min(n_bhw, work / r.w_c);
    r.w_c = work / (r.w_k * r.w_bhw);
  }
  if (r.w_bhw < 1) {
    r.w_bhw = 1;
    r.w_k = std::min(n_k, work / r.w_c);
    r.w_c = work / (r.w_k * r.w_bhw);
  }

  if (is_case2(label)) {
    r.t_k = r.w_k;
    r.t_bhw = r.w_bhw;
  } else {
    r.t_k = std::clamp(r.t_k, Real{1}, r.w_k);
    r.t_bhw = std::clamp(std::min(r.t_bhw, m_l / r.t_k), Real{1}, r.w_bhw);
    r.t_k = std::max(Real{1}, std::min(r.t_k, m_l / r.t_bhw));
  }

  auto moved = [](Real a, Real b) { return std::fabs(a - b) > kRelTol * std::max(Real{1}, std::fabs(a)); };
  return moved(before.t_k, r.t_k) || moved(before.t_bhw, r.t_bhw) || moved(before.w_k, r.w_k) ||
         moved(before.w_bhw, r.w_bhw) || moved(before.w_c, r.w_c);
}

ClosedFormSolution finish(CaseLabel label, int row, PermutationScope scope,
                          const ConvProblem& prob, Count p, Real m_l) {
  const Terms tm(prob, p);
  Raw r = raw_case(label, prob, tm, m_l);
  ClosedFormSolution sol;
  sol.case_label = label;
  sol.table_row = row;
  sol.scope = scope;
  sol.predicted_cost = static_cast<double>(r.cost);
  sol.c_innermost_cost = sol.predicted_cost;
  sol.m_l_used = static_cast<double>(m_l);
  sol.clamped = clamp_point(r, label, prob, tm, m_l);
  sol.t_k = static_cast<double>(r.t_k);
  sol.t_bhw = static_cast<double>(r.t_bhw);
  sol.w_k = static_cast<double>(r.w_k);
  sol.w_bhw = static_cast<double>(r.w_bhw);
  sol.w_c = static_cast<double>(r.w_c);
  sol.clamped_cost = cost_simplified_unchecked(sol.point(), prob, p);
  const Real nk_nbhw = static_cast<Real>(prob.n_k) * static_cast<Real>(prob.n_bhw());
  sol.printed_w_k = static_cast<double>(std::sqrt(nk_nbhw * tm.stride / tm.stencil));
  sol.printed_w_bhw = static_cast<double>(std::sqrt(nk_nbhw * tm.stencil / tm.stride));
  return sol;
}

std::size_t nearest_index(const std::vector<Count>& values, double target) {
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  const double lt = std::log(std::max(target, 1e-300));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = std::fabs(std::log(static_cast<double>(values[i])) - lt);
    if (d < best_dist - 1e-12) {
      best_dist = d;
      best = i;
    }
  }
  return best;
}

std::vector<Count> window(const std::vector<Count>& values, double center, int radius) {
  const auto i = static_cast<long>(nearest_index(values, center));
  const long lo = std::max(0L, i - radius);
  const long hi = std::min(static_cast<long>(values.size()) - 1, i + radius);
  return {values.begin() + lo, values.begin() + hi + 1};
}

using PlanKey = std::array<Count, 9>;

PlanKey key_of(const PartitionPlan& pp) {
  return {pp.w_b, pp.w_k, pp.w_c, pp.w_h, pp.w_w, pp.tile.t_b, pp.tile.t_k, pp.tile.t_h, pp.tile.t_w};
}

struct Incumbent {
  bool found = false;
  Count cost = 0;
  PartitionPlan plan;

  void offer(const PartitionPlan& pp, Count c) {
    if (!found || c < cost || (c == cost && key_of(pp) < key_of(plan))) {
      found = true;
      cost = c;
      plan = pp;
    }
  }
};

/// One neighbourhood sweep around `center`.
void search_around(const PartitionPlan& center, int radius, const ConvProblem& prob,
                   const MachineSpec& machine, const PartitionFilter& accept, Incumbent& best) {
  const Count space = prob.n_b * prob.n_k * prob.n_c * prob.n_h * prob.n_w;
  const auto wb = window(divisors(prob.n_b), static_cast<double>(center.w_b), radius);
  const auto wk = window(divisors(prob.n_k), static_cast<double>(center.w_k), radius);
  const auto wc = window(divisors(prob.n_c), static_cast<double>(center.w_c), radius);
  const auto wh = window(divisors(prob.n_h), static_cast<double>(center.w_h), radius);
  const auto ww = window(divisors(prob.n_w), static_cast<double>(center.w_w), radius);

  for (Count b : wb)
    for (Count k : wk)
      for (Count c : wc)
        for (Count h : wh)
          for (Count w : ww) {
            if (machine.p * b * k * c * h * w != space) continue;
            PartitionPlan pp{b, k, c, h, w, {}};
            if (accept && !accept(pp)) continue;
            const auto tb = window(divisors(b), static_cast<double>(center.tile.t_b), radius);
            const auto tk = window(divisors(k), static_cast<double>(center.tile.t_k), radius);
            const auto th = window(divisors(h), static_cast<double>(center.tile.t_h), radius);
            const auto tw = window(divisors(w), static_cast<double>(center.tile.t_w), radius);
            for (Count xb : tb)
              for (Count xk : tk)
                for (Count xh : th)
                  for (Count xw : tw) {
                    pp.tile = TilePlan{xb, xk, 1, xh, xw};
                    if (tile_memory(pp.tile, prob) > machine.m) continue;
                    best.offer(pp, partition_cost(pp, prob).total);
                  }
          }
}

}  // namespace

std::string to_string(CaseLabel label) {
  switch (label) {
    case CaseLabel::kCase1a: return "Case1a";
    case CaseLabel::kCase1b: return "Case1b";
    case CaseLabel::kCase2a: return "Case2a";
    case CaseLabel::kCase2b: return "Case2b";
  }
  return "?";
}

std::string to_string(PermutationScope scope) {
  return scope == PermutationScope::kCInnermost ? "c-innermost" : "all";
}

double effective_capacity(Count m, const ConvProblem& prob, CapacityMode mode) {
  if (mode == CapacityMode::kLowerBound) return static_cast<double>(m);
  const Real k = std::sqrt(static_cast<Real>(prob.stencil_weight()));
  const Real mm = static_cast<Real>(m);
  const Real m_l = mm - Real{0.5} * (3 * k * (std::sqrt(9 * k * k + 4 * mm) - 3 * k));
  if (m_l < 1) {
    throw Error("optimizer.CapacityTooSmall",
                "effective capacity " + std::to_string(static_cast<double>(m_l)) + " < 1 for M=" +
                    std::to_string(m));
  }
  return static_cast<double>(m_l);
}

ClosedFormSolution evaluate_case(CaseLabel label, const ConvProblem& prob, Count p, double m_l) {
  const int row = label == CaseLabel::kCase1a ? 1 : label == CaseLabel::kCase2a ? 2 : label == CaseLabel::kCase2b ? 3 : 0;
  return finish(label, row, PermutationScope::kCInnermost, prob, p, m_l);
}

ClosedFormSolution solve_closed_form(const ConvProblem& prob, Count p, double m_l,
                                     PermutationScope scope) {
  prob.validate();
  if (p < 1) throw Error("optimizer.Infeasible", "P must be >= 1");
  if (m_l < 1) {
    throw Error("optimizer.Infeasible", "M_L=" + std::to_string(m_l) + " cannot hold a 1x1 tile");
  }
  const Terms tm(prob, p);
  const Real ml = m_l;

  // Regime rows: out-area bound first (ties go to Case 1), then the cube threshold.
  CaseLabel label;
  int row;
  if (leq(ml, tm.out_area)) {
    label = CaseLabel::kCase1a;
    row = 1;
  } else if (leq(tm.cube, ml)) {
    label = CaseLabel::kCase2a;
    row = 2;
  } else {
    label = CaseLabel::kCase2b;
    row = 3;
  }
  ClosedFormSolution sol = finish(label, row, scope, prob, p, ml);
  if (scope == PermutationScope::kCInnermost) return sol;

  // Permutation-aware table: the first row needs all three slab products >= M_L
  // and its stationary-tensor term is the cheapest of the three.
  const Real ker_slab = tm.stencil * prob.n_k * prob.n_c / p;
  const Real in_slab = tm.stride * prob.n_c * static_cast<Real>(prob.n_bhw()) / p;
  if (label == CaseLabel::kCase1a && leq(ml, ker_slab) && leq(ml, in_slab)) {
    const Real resident = std::min({tm.out_area, static_cast<Real>(prob.n_k * prob.n_c) / p,
                                    static_cast<Real>(prob.n_c) * prob.n_bhw() / p});
    const Real cost = resident + 2 * tm.work * exact_sqrt(tm.k2 / ml);
    sol.predicted_cost = static_cast<double>(cost);
    sol.other_permutation_cheaper = lt(cost, static_cast<Real>(sol.c_innermost_cost));
  } else if (label == CaseLabel::kCase1a) {
    // Some slab is smaller than M_L: the permutation-aware table moves to its Case 2 rows.
    sol = finish(leq(tm.cube, ml) ? CaseLabel::kCase2a : CaseLabel::kCase2b,
                 leq(tm.cube, ml) ? 2 : 3, scope, prob, p, ml);
    const ClosedFormSolution inner = finish(label, row, PermutationScope::kCInnermost, prob, p, ml);
    sol.c_innermost_cost = inner.predicted_cost;
    sol.other_permutation_cheaper = lt(static_cast<Real>(sol.predicted_cost),
                                       static_cast<Real>(inner.predicted_cost));
  }
  return sol;
}

std::vector<Count> divisors(Count n) {
  std::vector<Count> small, large;
  for (Count d = 1; d * d <= n; ++d) {
    if (n % d == 0) {
      small.push_back(d);
      if (d * d != n) large.push_back(n / d);
    }
  }
  small.insert(small.end(), large.rbegin(), large.rend());
  return small;
}

BhwSplit split_bhw(double target, Count n_b, Count n_h, Count n_w) {
  BhwSplit best;
  double best_dist = std::numeric_limits<double>::infinity();
  const double lt = std::log(std::max(target, 1e-300));
  // Ascending w, then h, so the first of equally close candidates keeps the
  // smallest w extent (widest spatial grid), then the smallest h extent.
  for (Count w : divisors(n_w))
    for (Count h : divisors(n_h))
      for (Count b : divisors(n_b)) {
        const double d = std::fabs(std::log(static_cast<double>(b * h * w)) - lt);
        if (d < best_dist - 1e-12) {
          best_dist = d;
          best = {b, h, w};
        }
      }
  return best;
}

IntegerPlan integerize(const ClosedFormSolution& sol, const ConvProblem& prob,
                       const MachineSpec& machine, const PartitionFilter& accept) {
  prob.validate();
  PartitionPlan seed;
  const BhwSplit wsplit = split_bhw(sol.w_bhw, prob.n_b, prob.n_h, prob.n_w);
  const auto snap = [](Count n, double target) {
    const auto d = divisors(n);
    return d[nearest_index(d, target)];
  };
  seed.w_b = wsplit.b;
  seed.w_h = wsplit.h;
  seed.w_w = wsplit.w;
  seed.w_k = snap(prob.n_k, sol.w_k);
  seed.w_c = snap(prob.n_c, sol.w_c);
  const BhwSplit tsplit = split_bhw(sol.t_bhw, seed.w_b, seed.w_h, seed.w_w);
  seed.tile = TilePlan{tsplit.b, snap(seed.w_k, sol.t_k), 1, tsplit.h, tsplit.w};

  constexpr int kRadius = 2;
  constexpr int kMaxRounds = 8;
  Incumbent best;
  int radius = kRadius;
  const int widest = static_cast<int>(
      std::max({divisors(prob.n_b).size(), divisors(prob.n_k).size(), divisors(prob.n_c).size(),
                divisors(prob.n_h).size(), divisors(prob.n_w).size()}));
  // Widen only when the +-2 window holds no feasible partition at all.
  while (!best.found) {
    search_around(seed, radius, prob, machine, accept, best);
    if (best.found || radius >= widest) break;
    ++radius;
  }
  if (!best.found) {
    throw Error("optimizer.NoFeasibleInteger",
                "no partition with P*prod(W)=prod(N) and tile_memory <= M near the closed form");
  }
  for (int round = 1; round < kMaxRounds; ++round) {
    const PartitionPlan center = best.plan;
    search_around(center, radius, prob, machine, accept, best);
    if (best.plan == center) break;
  }

  IntegerPlan out;
  out.plan = best.plan;
  out.achieved_cost = best.cost;
  out.gap_vs_closed_form =
      sol.predicted_cost > 0
          ? std::max(0.0, static_cast<double>(best.cost) / sol.predicted_cost - 1.0)
          : 0.0;
  return out;
}

std::int64_t oracle_search_space(const ConvProblem& prob, Count p) {
  const Count space = prob.n_b * prob.n_k * prob.n_c * prob.n_h * prob.n_w;
  std::int64_t points = 0;
  for (Count b : divisors(prob.n_b))
    for (Count k : divisors(prob.n_k))
      for (Count c : divisors(prob.n_c))
        for (Count h : divisors(prob.n_h))
          for (Count w : divisors(prob.n_w)) {
            if (p * b * k * c * h * w != space) continue;
            points += static_cast<std::int64_t>(divisors(b).size() * divisors(k).size() *
                                                divisors(h).size() * divisors(w).size());
          }
  return points;
}

IntegerPlan brute_force_oracle(const ConvProblem& prob, const MachineSpec& machine,
                               const OracleLimits& limits) {
  prob.validate();
  const std::int64_t points = oracle_search_space(prob, machine.p);
  if (points > limits.max_points) {
    throw Error("optimizer.SearchSpaceTooLarge",
                std::to_string(points) + " candidates exceed the limit of " +
                    std::to_string(limits.max_points));
  }
  const Count space = prob.n_b * prob.n_k * prob.n_c * prob.n_h * prob.n_w;
  Incumbent best;
  for (Count b : divisors(prob.n_b))
    for (Count k : divisors(prob.n_k))
      for (Count c : divisors(prob.n_c))
        for (Count h : divisors(prob.n_h))
          for (Count w : divisors(prob.n_w)) {
            if (machine.p * b * k * c * h * w != space) continue;
            PartitionPlan pp{b, k, c, h, w, {}};
            for (Count xb : divisors(b))
              for (Count xk : divisors(k))
                for (Count xh : divisors(h))
                  for (Count xw : divisors(w)) {
                    pp.tile = TilePlan{xb, xk, 1, xh, xw};
                    if (tile_memory(pp.tile, prob) > machine.m) continue;
                    const Count cost = partition_cost(pp, prob).total;
                    // Strict improvement in lexicographic enumeration order
                    // keeps the smallest key among equal costs.
                    if (!best.found || cost < best.cost) {
                      best.found = true;
                      best.cost = cost;
                      best.plan = pp;
                    }
                  }
          }
  if (!best.found) {
    throw Error("optimizer.NoFeasibleInteger", "no divisor partition satisfies the constraints");
  }
  return IntegerPlan{best.plan, best.cost, 0.0};
}

}  // namespace commsynth
