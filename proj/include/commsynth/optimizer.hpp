#pragma once

// Tile-size / work-partition optimisation: closed-form solutions of the
// simplified real-valued problem, the capacity adjustment that makes them
// valid for the exact footprint constraint, integer refinement, and an
// exhaustive search used as the validation oracle.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "commsynth/core_model.hpp"

namespace commsynth {

enum class CaseLabel { kCase1a, kCase1b, kCase2a, kCase2b };

enum class PermutationScope {
  kCInnermost,  ///< c is the innermost tile loop (the schedulable permutation)
  kAll,         ///< best over all tile-loop permutations
};

enum class CapacityMode {
  kAdjusted,    ///< M_L from the footprint-correcting formula
  kLowerBound,  ///< M_L = M; Table costs become lower bounds
};

std::string to_string(CaseLabel label);
std::string to_string(PermutationScope scope);

struct ClosedFormSolution {
  CaseLabel case_label = CaseLabel::kCase1a;
  PermutationScope scope = PermutationScope::kCInnermost;
  /// 1-based row of the summary table whose condition fired.
  int table_row = 1;

  double t_k = 1;
  double t_bhw = 1;
  double w_k = 1;
  double w_bhw = 1;
  double w_c = 1;

  /// Optimum of the relaxed problem as given by the table row. Unaffected by
  /// clamping, so it stays a lower bound when m_l_used == M.
  double predicted_cost = 0;
  /// cost_simplified at the clamped point returned above.
  double clamped_cost = 0;
  double m_l_used = 1;
  bool clamped = false;

  /// Scope kAll only: true when the permutation-aware row predicts a cost
  /// below the c-innermost row (a permutation we do not schedule is better).
  bool other_permutation_cheaper = false;
  double c_innermost_cost = 0;

  /// Case 1 partition extents exactly as printed (no 1/P factor); reported
  /// for inspection, never used for planning.
  double printed_w_k = 0;
  double printed_w_bhw = 0;

  SimplifiedPoint point() const { return {w_k, w_bhw, t_k, t_bhw, w_c}; }
};

/// Effective capacity for the simplified model:
///   kAdjusted:   M - (3K/2)(sqrt(9K^2 + 4M) - 3K),  K = sqrt(sigma_w sigma_h n_r n_s)
///   kLowerBound: M
/// Throws optimizer.CapacityTooSmall if the result is below 1.
double effective_capacity(Count m, const ConvProblem& prob,
                          CapacityMode mode = CapacityMode::kAdjusted);

/// Evaluates the summary-table condition rows in order and returns the
/// matching solution. Throws optimizer.Infeasible when m_l < 1.
ClosedFormSolution solve_closed_form(const ConvProblem& prob, Count p, double m_l,
                                     PermutationScope scope = PermutationScope::kCInnermost);

/// The stationary point of one case irrespective of which row would fire.
ClosedFormSolution evaluate_case(CaseLabel label, const ConvProblem& prob, Count p, double m_l);

struct IntegerPlan {
  PartitionPlan plan;
  Count achieved_cost = 0;
  /// max(0, achieved / predicted - 1) against the closed form it came from.
  double gap_vs_closed_form = 0;
};

/// Optional filter on work partitions (tiles are not consulted).
using PartitionFilter = std::function<bool(const PartitionPlan&)>;

/// Rounds a closed-form solution to a feasible integer plan (t_i | w_i | n_i,
/// exact work product, tile_memory <= M) by divisor snapping and a bounded
/// neighbourhood search over cost_global. Throws optimizer.NoFeasibleInteger.
IntegerPlan integerize(const ClosedFormSolution& sol, const ConvProblem& prob,
                       const MachineSpec& machine, const PartitionFilter& accept = {});

struct OracleLimits {
  std::int64_t max_points = 10'000'000;
};

/// Number of (w, t) candidates brute_force_oracle would evaluate.
std::int64_t oracle_search_space(const ConvProblem& prob, Count p);

/// Exhaustive search over divisor partitions and divisor tiles with t_c = 1.
/// Ties resolve to the lexicographically smallest
/// (w_b, w_k, w_c, w_h, w_w, t_b, t_k, t_h, t_w).
/// Throws optimizer.SearchSpaceTooLarge or optimizer.NoFeasibleInteger.
IntegerPlan brute_force_oracle(const ConvProblem& prob, const MachineSpec& machine,
                               const OracleLimits& limits = {});

// Helpers shared with the planner -------------------------------------------

/// Sorted divisors of n.
std::vector<Count> divisors(Count n);

/// Chooses (x_b, x_h, x_w) with x_i a divisor of the matching extent whose
/// product is closest to `target` in log scale. Ties prefer the smaller
/// x_w, then smaller x_h (i.e. more processors / tiles along w, then h).
struct BhwSplit {
  Count b = 1;
  Count h = 1;
  Count w = 1;
};
BhwSplit split_bhw(double target, Count n_b, Count n_h, Count n_w);

}  // namespace commsynth
