#include "commsynth/comm_scheduler.hpp"

#include <algorithm>
#include <sstream>

namespace commsynth {

namespace {

struct SweepPos {
  Count kt, bt, wt, ht;
};

SweepPos decode_sweep(const PartitionPlan& plan, Count sweep) {
  const TilePlan& t = plan.tile;
  const Count nh = ceil_div(plan.w_h, t.t_h);
  const Count nw = ceil_div(plan.w_w, t.t_w);
  const Count nb = ceil_div(plan.w_b, t.t_b);
  SweepPos s;
  s.ht = sweep % nh;
  sweep /= nh;
  s.wt = sweep % nw;
  sweep /= nw;
  s.bt = sweep % nb;
  s.kt = sweep / nb;
  return s;
}

}  // namespace

Count sweep_count(const PartitionPlan& plan) {
  const TilePlan& t = plan.tile;
  return ceil_div(plan.w_k, t.t_k) * ceil_div(plan.w_b, t.t_b) * ceil_div(plan.w_w, t.t_w) *
         ceil_div(plan.w_h, t.t_h);
}

TileWindow tile_window(const PartitionPlan& plan, const ConvProblem& prob, const GridCoord& at,
                       Count sweep, Count step) {
  const TilePlan& t = plan.tile;
  const SweepPos s = decode_sweep(plan, sweep);
  const Count k0 = s.kt * t.t_k;
  const Count b0 = s.bt * t.t_b;
  const Count w0 = s.wt * t.t_w;
  const Count h0 = s.ht * t.t_h;
  const Count tk = std::min(t.t_k, plan.w_k - k0);
  const Count tb = std::min(t.t_b, plan.w_b - b0);
  const Count tw = std::min(t.t_w, plan.w_w - w0);
  const Count th = std::min(t.t_h, plan.w_h - h0);
  const Count gk = at.k * plan.w_k + k0;
  const Count gb = at.b * plan.w_b + b0;
  const Count gw = at.w * plan.w_w + w0;
  const Count gh = at.h * plan.w_h + h0;
  const Count gc = at.c * plan.w_c + step;

  TileWindow win;
  win.in.lo = {gb, gc, prob.sigma_w * gw, prob.sigma_h * gh};
  win.in.hi = {gb + tb, gc + 1, prob.sigma_w * (gw + tw) + prob.n_r - 1,
               prob.sigma_h * (gh + th) + prob.n_s - 1};
  win.ker.lo = {gk, gc, 0, 0};
  win.ker.hi = {gk + tk, gc + 1, prob.n_r, prob.n_s};
  win.out.lo = {gb, gk, gw, gh};
  win.out.hi = {gb + tb, gk + tk, gw + tw, gh + th};
  return win;
}

CommSchedule build_schedule(const ProcGrid& grid, const PartitionPlan& plan,
                            const DistributionPlan& /*dist*/, const ConvProblem& prob) {
  if (plan.w_c % grid.p_k != 0) {
    throw Error("comm_scheduler.GroupIndivisible",
                "W_c=" + std::to_string(plan.w_c) + " steps cannot form p_k=" +
                    std::to_string(grid.p_k) + " In groups");
  }
  if (plan.w_c % grid.p_bhw() != 0) {
    throw Error("comm_scheduler.GroupIndivisible",
                "W_c=" + std::to_string(plan.w_c) + " steps cannot form p_b*p_h*p_w=" +
                    std::to_string(grid.p_bhw()) + " Ker groups");
  }

  CommSchedule sched;
  sched.grid = grid;
  sched.sweeps = sweep_count(plan);
  sched.steps = plan.w_c;
  sched.buffers.in_buffer_capacity = footprint_in(TilePlan{plan.tile.t_b, 1, 1, plan.tile.t_h, plan.tile.t_w}, prob);
  sched.buffers.ker_buffer_capacity = footprint_ker(TilePlan{1, plan.tile.t_k, 1, 1, 1}, prob);

  const Count in_group = plan.w_c / grid.p_k;
  const Count ker_group = plan.w_c / grid.p_bhw();

  // Line anchors: k = 0 members for In, bhw position 0 for Ker, in rank order.
  std::vector<GridCoord> k_lines;
  std::vector<GridCoord> bhw_lines;
  for (Count r = 0; r < grid.size(); ++r) {
    const GridCoord at = coord_of(grid, r);
    if (at.k == 0) k_lines.push_back(at);
    if (bhw_index(grid, at) == 0) bhw_lines.push_back(at);
  }

  sched.records.reserve(static_cast<std::size_t>(sched.rounds()) *
                        (k_lines.size() + bhw_lines.size()));
  for (Count sweep = 0; sweep < sched.sweeps; ++sweep) {
    for (Count step = 0; step < sched.steps; ++step) {
      for (const GridCoord& anchor : k_lines) {
        GridCoord root = anchor;
        root.k = step / in_group;
        const TileWindow win = tile_window(plan, prob, anchor, sweep, step);
        sched.records.push_back({sweep, step, TensorId::kIn, rank_of(grid, root), LineAxis::kK,
                                 anchor, win.in.volume(), win.in, grid.p_k == 1});
      }
      for (const GridCoord& anchor : bhw_lines) {
        const Count j = step / ker_group;
        GridCoord root = anchor;
        root.b = j / (grid.p_h * grid.p_w);
        root.h = (j / grid.p_w) % grid.p_h;
        root.w = j % grid.p_w;
        const TileWindow win = tile_window(plan, prob, anchor, sweep, step);
        sched.records.push_back({sweep, step, TensorId::kKer, rank_of(grid, root),
                                 LineAxis::kBhw, anchor, win.ker.volume(), win.ker,
                                 grid.p_bhw() == 1});
      }
    }
  }
  return sched;
}

std::vector<Count> CommSchedule::line_members(const BroadcastRecord& rec) const {
  std::vector<Count> members;
  GridCoord at = rec.anchor;
  if (rec.axis == LineAxis::kK) {
    for (Count k = 0; k < grid.p_k; ++k) {
      at.k = k;
      members.push_back(rank_of(grid, at));
    }
  } else {
    for (Count b = 0; b < grid.p_b; ++b)
      for (Count h = 0; h < grid.p_h; ++h)
        for (Count w = 0; w < grid.p_w; ++w) {
          at.b = b;
          at.h = h;
          at.w = w;
          members.push_back(rank_of(grid, at));
        }
  }
  return members;
}

Count CommSchedule::broadcast_count() const {
  return static_cast<Count>(
      std::count_if(records.begin(), records.end(), [](const auto& r) { return !r.local; }));
}

ScheduleVolume schedule_volume(const CommSchedule& sched, const ProcGrid& grid) {
  ScheduleVolume vol;
  const auto p = static_cast<std::size_t>(grid.size());
  vol.in.assign(p, 0);
  vol.ker.assign(p, 0);
  vol.total.assign(p, 0);
  for (const auto& rec : sched.records) {
    auto& bucket = rec.tensor == TensorId::kIn ? vol.in : vol.ker;
    for (Count m : sched.line_members(rec)) bucket[static_cast<std::size_t>(m)] += rec.payload;
  }
  for (std::size_t i = 0; i < p; ++i) {
    vol.total[i] = vol.in[i] + vol.ker[i];
    vol.max_total = std::max(vol.max_total, vol.total[i]);
  }
  return vol;
}

std::string serialize(const CommSchedule& sched) {
  std::ostringstream os;
  os << "# schedule sweeps=" << sched.sweeps << " steps=" << sched.steps
     << " in_buffer=" << sched.buffers.in_buffer_capacity
     << " ker_buffer=" << sched.buffers.ker_buffer_capacity
     << " records=" << sched.records.size() << '\n';
  for (const auto& rec : sched.records) {
    const GridCoord& a = rec.anchor;
    os << rec.sweep << '.' << rec.step << ' ' << to_string(rec.tensor) << ' '
       << to_string(coord_of(sched.grid, rec.root)) << ' ';
    if (rec.local) {
      os << "local";
    } else if (rec.axis == LineAxis::kK) {
      os << "k:(" << a.b << ',' << a.h << ',' << a.w << ',' << a.c << ",*)";
    } else {
      os << "bhw:(*,*,*," << a.c << ',' << a.k << ')';
    }
    os << ' ' << rec.payload;
    for (int d = 0; d < 4; ++d) os << ' ' << rec.range.lo[d] << ".." << rec.range.hi[d];
    os << '\n';
  }
  return os.str();
}

}  // namespace commsynth
