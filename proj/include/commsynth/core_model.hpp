#pragma once

// Domain types for one forward-convolution layer and the data-movement cost
// and footprint formulas used throughout planning.
//
// Index conventions (used everywhere in the library):
//   In  [b, c, x, y]  x = sigma_w * w + r,  y = sigma_h * h + s
//   Ker [k, c, r, s]
//   Out [b, k, w, h]
// All counts are tensor elements, never bytes.

#include <cstdint>
#include <string>
#include <vector>

#include "commsynth/error.hpp"

namespace commsynth {

using Count = std::int64_t;

/// ceil(a / b) for positive operands.
constexpr Count ceil_div(Count a, Count b) { return (a + b - 1) / b; }

struct ConvProblem {
  Count n_b = 1;
  Count n_k = 1;
  Count n_c = 1;
  Count n_h = 1;
  Count n_w = 1;
  Count n_r = 1;
  Count n_s = 1;
  Count sigma_w = 1;
  Count sigma_h = 1;

  /// Extent of In along x (pairs with w and r).
  Count in_width() const { return sigma_w * n_w + n_r - 1; }
  /// Extent of In along y (pairs with h and s).
  Count in_height() const { return sigma_h * n_h + n_s - 1; }

  Count n_bhw() const { return n_b * n_h * n_w; }
  Count size_in() const { return n_b * n_c * in_width() * in_height(); }
  Count size_ker() const { return n_k * n_c * n_r * n_s; }
  Count size_out() const { return n_b * n_k * n_w * n_h; }
  /// sigma_w * sigma_h * n_r * n_s, the K^2 that recurs in the closed forms.
  Count stencil_weight() const { return sigma_w * sigma_h * n_r * n_s; }

  /// Throws core_model.ValidationError when any field is < 1.
  void validate() const;
  /// Non-fatal findings (stencil wider than the output extent).
  std::vector<std::string> warnings() const;

  friend bool operator==(const ConvProblem&, const ConvProblem&) = default;
};

struct MachineSpec {
  Count p = 1;    ///< processor count
  Count m = 1;    ///< per-processor tile memory (global virtual memory model)
  Count m_d = 1;  ///< per-processor memory in the partitioned model

  /// Checks p >= 1, m_d >= m and that the all-ones tile fits in m.
  void validate(const ConvProblem& prob) const;

  friend bool operator==(const MachineSpec&, const MachineSpec&) = default;
};

struct TilePlan {
  Count t_b = 1;
  Count t_k = 1;
  Count t_c = 1;
  Count t_h = 1;
  Count t_w = 1;

  Count t_bhw() const { return t_b * t_h * t_w; }

  friend bool operator==(const TilePlan&, const TilePlan&) = default;
};

struct PartitionPlan {
  Count w_b = 1;
  Count w_k = 1;
  Count w_c = 1;
  Count w_h = 1;
  Count w_w = 1;
  TilePlan tile;

  Count w_bhw() const { return w_b * w_h * w_w; }
  Count volume() const { return w_b * w_k * w_c * w_h * w_w; }
  /// Out block held by one processor: w_b w_k w_w w_h.
  Count out_block() const { return w_b * w_k * w_w * w_h; }

  /// The whole iteration space as one partition (P = 1).
  static PartitionPlan whole(const ConvProblem& prob, const TilePlan& tile);

  friend bool operator==(const PartitionPlan&, const PartitionPlan&) = default;
};

struct CostBreakdown {
  Count out_term = 0;
  Count ker_term = 0;
  Count in_term = 0;
  Count total = 0;

  friend bool operator==(const CostBreakdown&, const CostBreakdown&) = default;
};

/// Selects how the Ker term of the per-processor cost is evaluated.
enum class KerTermFormula {
  kPartition,  ///< W_c in the Ker term (consistent with the simplified model)
  kPrinted,    ///< N_c in the Ker term, as the cost expression is printed
};

// Tile footprints -----------------------------------------------------------

/// t_b t_c (sigma_w t_w + n_r - 1)(sigma_h t_h + n_s - 1), halo included.
Count footprint_in(const TilePlan& plan, const ConvProblem& prob);
/// n_r n_s t_k t_c
Count footprint_ker(const TilePlan& plan, const ConvProblem& prob);
/// t_w t_h t_b t_k
Count footprint_out(const TilePlan& plan);
/// Sum of the three footprints; the per-tile memory requirement g.
Count tile_memory(const TilePlan& plan, const ConvProblem& prob);

/// Number of tiles a partition is executed as; ceiling per dimension.
Count tile_count(const PartitionPlan& pp);

// Costs ---------------------------------------------------------------------

/// Sequential single-level tiled execution over the whole problem with fast
/// memory `capacity`. Throws core_model.MemoryExceeded if the tile does not fit.
CostBreakdown cost_sequential(const TilePlan& plan, const ConvProblem& prob, Count capacity);

/// Throws core_model.PartitionInvalid unless 1 <= t_i <= w_i <= n_i and
/// p * prod(w_i) == prod(n_i).
void validate_partition(const PartitionPlan& pp, const ConvProblem& prob, Count p);

/// Per-processor data movement under the global virtual memory model.
/// Throws PartitionInvalid or MemoryExceeded (tile_memory > machine.m).
CostBreakdown cost_global(const PartitionPlan& pp, const ConvProblem& prob,
                          const MachineSpec& machine,
                          KerTermFormula ker = KerTermFormula::kPartition);

/// The same expression with no validation; used by search loops that have
/// already checked the constraints.
CostBreakdown partition_cost(const PartitionPlan& pp, const ConvProblem& prob,
                             KerTermFormula ker = KerTermFormula::kPartition);

/// A point of the simplified real-valued problem (composite bhw, t_c = 1).
struct SimplifiedPoint {
  double w_k = 1;
  double w_bhw = 1;
  double t_k = 1;
  double t_bhw = 1;
  double w_c = 1;
};

/// w_k w_bhw + (n_k n_c n_bhw / p)(n_r n_s / t_bhw + sigma_w sigma_h / t_k).
/// Throws core_model.ConstraintViolated if t_bhw t_k > m_l or the work
/// product p w_bhw w_k w_c differs from n_bhw n_k n_c (relative 1e-9).
double cost_simplified(const SimplifiedPoint& pt, const ConvProblem& prob, Count p, double m_l);
/// Same expression, constraints unchecked.
double cost_simplified_unchecked(const SimplifiedPoint& pt, const ConvProblem& prob, Count p);

struct DistributedCost {
  Count cost_i = 0;  ///< initial distribution footprint (Out block + In/P + Ker/P)
  Count cost_c = 0;  ///< broadcast volume into tile buffers
  Count cost_d = 0;  ///< cost_i + cost_c

  friend bool operator==(const DistributedCost&, const DistributedCost&) = default;
};

/// Costs of the partitioned-memory algorithm. The In/P and Ker/P shares use
/// ceiling division; they are exact whenever P divides the tensor sizes.
/// Throws PartitionInvalid.
DistributedCost cost_distributed(const PartitionPlan& pp, const ConvProblem& prob,
                                 const MachineSpec& machine);

/// Local memory requirement g_D of the partitioned-memory algorithm.
Count memory_distributed(const PartitionPlan& pp, const ConvProblem& prob, Count p);

/// ceil(size(In) / p) + ceil(size(Ker) / p)
Count distributed_tensor_share(const ConvProblem& prob, Count p);

std::string to_string(const ConvProblem& prob);
std::string to_string(const PartitionPlan& pp);

}  // namespace commsynth
