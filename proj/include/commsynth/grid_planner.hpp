#pragma once

// Logical processor grid and initial data distribution for the
// partitioned-memory algorithm.
//
// Grid ranks are row-major over (b, h, w, c, k), k fastest. Lines used by the
// broadcast schedule:
//   k-line   : processors sharing (b, h, w, c); they read the same In slice.
//   bhw-line : processors sharing (c, k); they read the same Ker slice.
// Position along a bhw-line is (b * p_h + h) * p_w + w.

#include <array>
#include <string>
#include <vector>

#include "commsynth/core_model.hpp"
#include "commsynth/optimizer.hpp"

namespace commsynth {

struct ProcGrid {
  Count p_b = 1;
  Count p_k = 1;
  Count p_c = 1;
  Count p_h = 1;
  Count p_w = 1;

  Count size() const { return p_b * p_k * p_c * p_h * p_w; }
  Count p_bhw() const { return p_b * p_h * p_w; }

  friend bool operator==(const ProcGrid&, const ProcGrid&) = default;
};

struct GridCoord {
  Count b = 0;
  Count k = 0;
  Count c = 0;
  Count h = 0;
  Count w = 0;

  friend bool operator==(const GridCoord&, const GridCoord&) = default;
};

Count rank_of(const ProcGrid& grid, const GridCoord& at);
GridCoord coord_of(const ProcGrid& grid, Count rank);
/// Position of a processor along its bhw-line.
Count bhw_index(const ProcGrid& grid, const GridCoord& at);
/// "(b,h,w,c,k)" in grid order.
std::string to_string(const GridCoord& at);

enum class TensorId { kIn, kKer, kOut };
std::string to_string(TensorId t);

using Index4 = std::array<Count, 4>;

/// Half-open box [lo, hi) over the four tensor dimensions:
///   In (b, c, x, y)   Ker (k, c, r, s)   Out (b, k, w, h)
struct Box {
  Index4 lo{};
  Index4 hi{};

  Count volume() const;
  bool empty() const { return volume() == 0; }
  bool contains(const Index4& idx) const;
  bool contains(const Box& other) const;
  Box intersect(const Box& other) const;

  friend bool operator==(const Box&, const Box&) = default;
};

/// Splits the flat row-major range [first, last) of `outer` into boxes.
std::vector<Box> boxes_of_flat_range(const Box& outer, Count first, Count last);

struct OwnershipRecord {
  TensorId tensor = TensorId::kIn;
  Count owner = 0;  ///< grid rank
  Box range;
};

struct DistributionPlan {
  ConvProblem problem;
  PartitionPlan plan;
  ProcGrid grid;
  /// Ordered by tensor (In, Ker, Out), then owner rank.
  std::vector<OwnershipRecord> records;
  /// Ranks along each c-line (length p_c) when p_c > 1; Out blocks are
  /// replicated over each group and reduced onto its first member.
  std::vector<std::vector<Count>> out_replication_groups;

  /// Initial owner of an In or Ker element.
  Count owner_of(TensorId tensor, const Index4& idx) const;
  /// Elements initially held by `rank` (In + Ker + Out).
  Count initial_footprint(Count rank) const;
  std::vector<OwnershipRecord> records_of(Count rank) const;

  /// In elements a processor reads: its b/c block with the full halo window.
  Box in_slice(const GridCoord& at) const;
  /// Ker elements a processor reads: its (c, k) slice.
  Box ker_slice(const GridCoord& at) const;
  /// The processor's Out block.
  Box out_block(const GridCoord& at) const;
};

/// p_i = n_i / w_i. Throws grid_planner.NonDividingPartition when some
/// w_i does not divide n_i, grid_planner.GridProductMismatch when the
/// product differs from P.
ProcGrid derive_grid(const IntegerPlan& plan, CaseLabel sol_case, const ConvProblem& prob,
                     const MachineSpec& machine);

/// True when plan_distribution / build_schedule accept the plan:
/// p_k | w_c and p_b p_h p_w | w_c, with p_i = n_i / w_i.
bool distribution_feasible(const PartitionPlan& plan, const ConvProblem& prob);

/// Initial ownership of In, Ker and Out.
///   Ker: each (c,k) slice is cut along c into p_b p_h p_w sub-slices, the
///        j-th owned by position j of the slice's bhw-line.
///   In : each (b,c) block is cut along c into p_k groups, group g owned by
///        the k = g plane; inside a group the flat (b,c,x,y) range is cut
///        into p_h p_w near-equal runs in (w,h) order.
///   Out: each processor holds its block; replicated over c-lines.
/// Throws grid_planner.SubSliceIndivisible naming the failing divisibility.
DistributionPlan plan_distribution(const ProcGrid& grid, const PartitionPlan& plan,
                                   const ConvProblem& prob);

/// One record per line: `<tensor> <owner_coord> lo..hi lo..hi lo..hi lo..hi`
/// with half-open ranges in the tensor's own dimension order.
std::string serialize(const DistributionPlan& dist);

}  // namespace commsynth
