#include "commsynth/grid_planner.hpp"

#include <algorithm>
#include <sstream>

namespace commsynth {

namespace {

/// Shape of the flat-run split used for In ownership.
struct InChunking {
  Count group_c = 1;  // c extent of one k-group (w_c / p_k)
  Count length = 0;   // elements in one (b-block, k-group) sub-slab
  Count parts = 1;    // p_h * p_w
  Count base = 0;     // length / parts
  Count extra = 0;    // length % parts; the first `extra` runs are one longer

  Count run_start(Count j) const { return j * base + std::min(j, extra); }
  Count run_of(Count f) const {
    const Count split = extra * (base + 1);
    return f < split ? f / (base + 1) : extra + (f - split) / base;
  }
};

InChunking in_chunking(const ProcGrid& grid, const PartitionPlan& plan, const ConvProblem& prob) {
  InChunking ch;
  ch.group_c = plan.w_c / grid.p_k;
  ch.length = plan.w_b * ch.group_c * prob.in_width() * prob.in_height();
  ch.parts = grid.p_h * grid.p_w;
  ch.base = ch.length / ch.parts;
  ch.extra = ch.length % ch.parts;
  return ch;
}

void flat_boxes(const Box& outer, int dim, Count first, Count last, Box prefix,
                std::vector<Box>& out) {
  if (first >= last) return;
  Count stride = 1;
  for (int d = dim + 1; d < 4; ++d) stride *= outer.hi[d] - outer.lo[d];
  const Count lo_row = first / stride;
  const Count hi_row = last / stride;
  auto with_rows = [&](Count r0, Count r1) {
    Box b = prefix;
    b.lo[dim] = outer.lo[dim] + r0;
    b.hi[dim] = outer.lo[dim] + r1;
    return b;
  };
  if (dim == 3) {
    out.push_back(with_rows(first, last));
    return;
  }
  if (lo_row == hi_row) {
    flat_boxes(outer, dim + 1, first - lo_row * stride, last - lo_row * stride,
               with_rows(lo_row, lo_row + 1), out);
    return;
  }
  Count full_lo = lo_row;
  if (first % stride != 0) {
    flat_boxes(outer, dim + 1, first % stride, stride, with_rows(lo_row, lo_row + 1), out);
    full_lo = lo_row + 1;
  }
  if (hi_row > full_lo) {
    Box b = with_rows(full_lo, hi_row);
    for (int d = dim + 1; d < 4; ++d) {
      b.lo[d] = outer.lo[d];
      b.hi[d] = outer.hi[d];
    }
    out.push_back(b);
  }
  if (last % stride != 0) {
    flat_boxes(outer, dim + 1, 0, last % stride, with_rows(hi_row, hi_row + 1), out);
  }
}

}  // namespace

Count rank_of(const ProcGrid& g, const GridCoord& at) {
  return (((at.b * g.p_h + at.h) * g.p_w + at.w) * g.p_c + at.c) * g.p_k + at.k;
}

GridCoord coord_of(const ProcGrid& g, Count rank) {
  GridCoord at;
  at.k = rank % g.p_k;
  rank /= g.p_k;
  at.c = rank % g.p_c;
  rank /= g.p_c;
  at.w = rank % g.p_w;
  rank /= g.p_w;
  at.h = rank % g.p_h;
  at.b = rank / g.p_h;
  return at;
}

Count bhw_index(const ProcGrid& g, const GridCoord& at) {
  return (at.b * g.p_h + at.h) * g.p_w + at.w;
}

std::string to_string(const GridCoord& at) {
  std::ostringstream os;
  os << '(' << at.b << ',' << at.h << ',' << at.w << ',' << at.c << ',' << at.k << ')';
  return os.str();
}

std::string to_string(TensorId t) {
  switch (t) {
    case TensorId::kIn: return "In";
    case TensorId::kKer: return "Ker";
    case TensorId::kOut: return "Out";
  }
  return "?";
}

Count Box::volume() const {
  Count v = 1;
  for (int d = 0; d < 4; ++d) v *= std::max<Count>(0, hi[d] - lo[d]);
  return v;
}

bool Box::contains(const Index4& idx) const {
  for (int d = 0; d < 4; ++d) {
    if (idx[d] < lo[d] || idx[d] >= hi[d]) return false;
  }
  return true;
}

bool Box::contains(const Box& other) const {
  if (other.empty()) return true;
  for (int d = 0; d < 4; ++d) {
    if (other.lo[d] < lo[d] || other.hi[d] > hi[d]) return false;
  }
  return true;
}

Box Box::intersect(const Box& other) const {
  Box r;
  for (int d = 0; d < 4; ++d) {
    r.lo[d] = std::max(lo[d], other.lo[d]);
    r.hi[d] = std::max(r.lo[d], std::min(hi[d], other.hi[d]));
  }
  return r;
}

std::vector<Box> boxes_of_flat_range(const Box& outer, Count first, Count last) {
  std::vector<Box> out;
  flat_boxes(outer, 0, first, last, outer, out);
  return out;
}

ProcGrid derive_grid(const IntegerPlan& iplan, CaseLabel /*sol_case*/, const ConvProblem& prob,
                     const MachineSpec& machine) {
  const PartitionPlan& w = iplan.plan;
  auto ratio = [](Count n, Count part, const char* dim) {
    if (part < 1 || n % part != 0) {
      throw Error("grid_planner.NonDividingPartition",
                  std::string("W_") + dim + "=" + std::to_string(part) + " does not divide N_" +
                      dim + "=" + std::to_string(n));
    }
    return n / part;
  };
  ProcGrid grid;
  grid.p_b = ratio(prob.n_b, w.w_b, "b");
  grid.p_k = ratio(prob.n_k, w.w_k, "k");
  grid.p_c = ratio(prob.n_c, w.w_c, "c");
  grid.p_h = ratio(prob.n_h, w.w_h, "h");
  grid.p_w = ratio(prob.n_w, w.w_w, "w");
  if (grid.size() != machine.p) {
    throw Error("grid_planner.GridProductMismatch",
                "grid has " + std::to_string(grid.size()) + " processors, P=" +
                    std::to_string(machine.p));
  }
  return grid;
}

bool distribution_feasible(const PartitionPlan& plan, const ConvProblem& prob) {
  if (prob.n_b % plan.w_b || prob.n_k % plan.w_k || prob.n_c % plan.w_c ||
      prob.n_h % plan.w_h || prob.n_w % plan.w_w) {
    return false;
  }
  const Count p_k = prob.n_k / plan.w_k;
  const Count p_bhw = (prob.n_b / plan.w_b) * (prob.n_h / plan.w_h) * (prob.n_w / plan.w_w);
  return plan.w_c % p_k == 0 && plan.w_c % p_bhw == 0;
}

DistributionPlan plan_distribution(const ProcGrid& grid, const PartitionPlan& plan,
                                   const ConvProblem& prob) {
  if (plan.w_c % grid.p_k != 0) {
    throw Error("grid_planner.SubSliceIndivisible",
                "p_k=" + std::to_string(grid.p_k) + " does not divide W_c=" +
                    std::to_string(plan.w_c) + " (In sub-slices along c)");
  }
  if (plan.w_c % grid.p_bhw() != 0) {
    throw Error("grid_planner.SubSliceIndivisible",
                "p_b*p_h*p_w=" + std::to_string(grid.p_bhw()) + " does not divide W_c=" +
                    std::to_string(plan.w_c) + " (Ker sub-slices along c)");
  }

  DistributionPlan dist;
  dist.problem = prob;
  dist.plan = plan;
  dist.grid = grid;
  const Count p = grid.size();
  const Count in_w = prob.in_width();
  const Count in_h = prob.in_height();

  std::vector<OwnershipRecord> in_records;
  std::vector<OwnershipRecord> ker_records;
  std::vector<OwnershipRecord> out_records;

  // In: one sub-slab per (b-block, c-block, k-group), cut into p_h p_w runs.
  const InChunking ch = in_chunking(grid, plan, prob);
  for (Count bb = 0; bb < grid.p_b; ++bb)
    for (Count cc = 0; cc < grid.p_c; ++cc)
      for (Count g = 0; g < grid.p_k; ++g) {
        Box slab;
        slab.lo = {bb * plan.w_b, cc * plan.w_c + g * ch.group_c, 0, 0};
        slab.hi = {(bb + 1) * plan.w_b, cc * plan.w_c + (g + 1) * ch.group_c, in_w, in_h};
        for (Count j = 0; j < ch.parts; ++j) {
          const GridCoord owner{bb, g, cc, j % grid.p_h, j / grid.p_h};
          for (const Box& box : boxes_of_flat_range(slab, ch.run_start(j), ch.run_start(j + 1))) {
            in_records.push_back({TensorId::kIn, rank_of(grid, owner), box});
          }
        }
      }

  // Ker: (c, k) slices cut along c over the bhw-line.
  const Count ker_sub = plan.w_c / grid.p_bhw();
  for (Count cc = 0; cc < grid.p_c; ++cc)
    for (Count kk = 0; kk < grid.p_k; ++kk)
      for (Count j = 0; j < grid.p_bhw(); ++j) {
        const GridCoord owner{j / (grid.p_h * grid.p_w), kk, cc, (j / grid.p_w) % grid.p_h,
                              j % grid.p_w};
        Box box;
        box.lo = {kk * plan.w_k, cc * plan.w_c + j * ker_sub, 0, 0};
        box.hi = {(kk + 1) * plan.w_k, cc * plan.w_c + (j + 1) * ker_sub, prob.n_r, prob.n_s};
        ker_records.push_back({TensorId::kKer, rank_of(grid, owner), box});
      }

  for (Count r = 0; r < p; ++r) {
    out_records.push_back({TensorId::kOut, r, dist.out_block(coord_of(grid, r))});
  }

  auto by_owner = [](const OwnershipRecord& a, const OwnershipRecord& b) {
    return a.owner < b.owner;
  };
  std::stable_sort(in_records.begin(), in_records.end(), by_owner);
  std::stable_sort(ker_records.begin(), ker_records.end(), by_owner);
  dist.records = std::move(in_records);
  dist.records.insert(dist.records.end(), ker_records.begin(), ker_records.end());
  dist.records.insert(dist.records.end(), out_records.begin(), out_records.end());

  if (grid.p_c > 1) {
    for (Count r = 0; r < p; ++r) {
      GridCoord at = coord_of(grid, r);
      if (at.c != 0) continue;
      std::vector<Count> group;
      for (Count cc = 0; cc < grid.p_c; ++cc) {
        at.c = cc;
        group.push_back(rank_of(grid, at));
      }
      dist.out_replication_groups.push_back(std::move(group));
    }
  }
  return dist;
}

Count DistributionPlan::owner_of(TensorId tensor, const Index4& idx) const {
  if (tensor == TensorId::kKer) {
    const Count kk = idx[0] / plan.w_k;
    const Count cc = idx[1] / plan.w_c;
    const Count j = (idx[1] % plan.w_c) / (plan.w_c / grid.p_bhw());
    const GridCoord owner{j / (grid.p_h * grid.p_w), kk, cc, (j / grid.p_w) % grid.p_h,
                          j % grid.p_w};
    return rank_of(grid, owner);
  }
  if (tensor == TensorId::kIn) {
    const InChunking ch = in_chunking(grid, plan, problem);
    const Count bb = idx[0] / plan.w_b;
    const Count cc = idx[1] / plan.w_c;
    const Count g = (idx[1] % plan.w_c) / ch.group_c;
    const Count c_in_group = idx[1] - cc * plan.w_c - g * ch.group_c;
    const Count f = (((idx[0] - bb * plan.w_b) * ch.group_c + c_in_group) * problem.in_width() +
                     idx[2]) * problem.in_height() + idx[3];
    const Count j = ch.run_of(f);
    return rank_of(grid, GridCoord{bb, g, cc, j % grid.p_h, j / grid.p_h});
  }
  throw Error("grid_planner.NoSingleOwner", "Out blocks are replicated, not owned");
}

Count DistributionPlan::initial_footprint(Count rank) const {
  Count total = 0;
  for (const auto& rec : records) {
    if (rec.owner == rank) total += rec.range.volume();
  }
  return total;
}

std::vector<OwnershipRecord> DistributionPlan::records_of(Count rank) const {
  std::vector<OwnershipRecord> out;
  for (const auto& rec : records) {
    if (rec.owner == rank) out.push_back(rec);
  }
  return out;
}

Box DistributionPlan::in_slice(const GridCoord& at) const {
  Box box;
  box.lo = {at.b * plan.w_b, at.c * plan.w_c, problem.sigma_w * at.w * plan.w_w,
            problem.sigma_h * at.h * plan.w_h};
  box.hi = {(at.b + 1) * plan.w_b, (at.c + 1) * plan.w_c,
            problem.sigma_w * (at.w + 1) * plan.w_w + problem.n_r - 1,
            problem.sigma_h * (at.h + 1) * plan.w_h + problem.n_s - 1};
  return box;
}

Box DistributionPlan::ker_slice(const GridCoord& at) const {
  Box box;
  box.lo = {at.k * plan.w_k, at.c * plan.w_c, 0, 0};
  box.hi = {(at.k + 1) * plan.w_k, (at.c + 1) * plan.w_c, problem.n_r, problem.n_s};
  return box;
}

Box DistributionPlan::out_block(const GridCoord& at) const {
  Box box;
  box.lo = {at.b * plan.w_b, at.k * plan.w_k, at.w * plan.w_w, at.h * plan.w_h};
  box.hi = {(at.b + 1) * plan.w_b, (at.k + 1) * plan.w_k, (at.w + 1) * plan.w_w,
            (at.h + 1) * plan.w_h};
  return box;
}

std::string serialize(const DistributionPlan& dist) {
  std::ostringstream os;
  os << "# distribution p_b=" << dist.grid.p_b << " p_h=" << dist.grid.p_h
     << " p_w=" << dist.grid.p_w << " p_c=" << dist.grid.p_c << " p_k=" << dist.grid.p_k
     << " records=" << dist.records.size() << '\n';
  for (const auto& rec : dist.records) {
    os << to_string(rec.tensor) << ' ' << to_string(coord_of(dist.grid, rec.owner));
    for (int d = 0; d < 4; ++d) os << ' ' << rec.range.lo[d] << ".." << rec.range.hi[d];
    os << '\n';
  }
  return os.str();
}

}  // namespace commsynth
