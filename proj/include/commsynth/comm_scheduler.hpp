#pragma once

// Rotating broadcast schedule that fills every processor's In and Ker tile
// buffers. Processors run the c-innermost tile loop (k, b, w, h outer tiles;
// one c per step) in lockstep: the outer tiles form `sweeps`, each made of
// w_c steps. At every step each k-line receives one In tile and each bhw-line
// one Ker tile. The In root moves along k every w_c / p_k steps, the Ker root
// along the bhw-line every w_c / (p_b p_h p_w) steps.

#include <string>
#include <vector>

#include "commsynth/grid_planner.hpp"

namespace commsynth {

enum class LineAxis { kK, kBhw };

struct BroadcastRecord {
  Count sweep = 0;
  Count step = 0;  ///< c offset inside the work partition, 0 .. w_c-1
  TensorId tensor = TensorId::kIn;
  Count root = 0;  ///< rank of the rotating originator
  LineAxis axis = LineAxis::kK;
  /// Any member of the line; the coordinates along `axis` are irrelevant.
  GridCoord anchor;
  Count payload = 0;
  Box range;
  /// The line has a single member: the processor fills its own buffer and no
  /// message is sent. Still counted as received volume.
  bool local = false;
};

struct TileBuffers {
  Count in_buffer_capacity = 0;   ///< t_b (sigma_w t_w + n_r - 1)(sigma_h t_h + n_s - 1)
  Count ker_buffer_capacity = 0;  ///< t_k n_r n_s
};

struct CommSchedule {
  ProcGrid grid;
  Count sweeps = 0;
  Count steps = 0;
  TileBuffers buffers;
  /// Ordered by (sweep, step), In records before Ker records, lines by rank.
  std::vector<BroadcastRecord> records;

  std::vector<Count> line_members(const BroadcastRecord& rec) const;
  Count rounds() const { return sweeps * steps; }
  /// Records that are actual messages (line of two or more processors).
  Count broadcast_count() const;
};

/// The elements one processor's tile touches at (sweep, step), clipped to its
/// work partition.
struct TileWindow {
  Box in;   ///< In read window including the halo
  Box ker;  ///< Ker rows for the tile's k range at this c
  Box out;  ///< Out elements updated
};

/// Number of outer tiles (sweeps) per processor: ceil(w_k/t_k) ceil(w_b/t_b) ceil(w_w/t_w) ceil(w_h/t_h).
Count sweep_count(const PartitionPlan& plan);
TileWindow tile_window(const PartitionPlan& plan, const ConvProblem& prob, const GridCoord& at,
                       Count sweep, Count step);

/// Throws comm_scheduler.GroupIndivisible unless p_k | w_c and p_b p_h p_w | w_c.
CommSchedule build_schedule(const ProcGrid& grid, const PartitionPlan& plan,
                            const DistributionPlan& dist, const ConvProblem& prob);

struct ScheduleVolume {
  std::vector<Count> in;
  std::vector<Count> ker;
  std::vector<Count> total;
  Count max_total = 0;
};

/// Elements each processor receives into its tile buffers; the root's own
/// copy counts.
ScheduleVolume schedule_volume(const CommSchedule& sched, const ProcGrid& grid);

/// One record per line: `<sweep>.<step> <tensor> <root_coord> <line> <payload> lo..hi x4`
/// where <line> is `k:(b,h,w,c,*)`, `bhw:(*,*,*,c,k)` or `local`.
std::string serialize(const CommSchedule& sched);

}  // namespace commsynth
