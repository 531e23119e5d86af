#include "commsynth/simulator.hpp"

#include <algorithm>
#include <sstream>

namespace commsynth {

namespace {

using Value = std::int64_t;

std::string format_index(const Index4& idx) {
  std::ostringstream os;
  os << '[' << idx[0] << ',' << idx[1] << ',' << idx[2] << ',' << idx[3] << ']';
  return os.str();
}

std::string round_label(Count sweep, Count step) {
  return std::to_string(sweep) + "." + std::to_string(step);
}

template <class Fn>
void for_each_index(const Box& box, Fn&& fn) {
  Index4 idx;
  for (idx[0] = box.lo[0]; idx[0] < box.hi[0]; ++idx[0])
    for (idx[1] = box.lo[1]; idx[1] < box.hi[1]; ++idx[1])
      for (idx[2] = box.lo[2]; idx[2] < box.hi[2]; ++idx[2])
        for (idx[3] = box.lo[3]; idx[3] < box.hi[3]; ++idx[3]) fn(idx);
}

/// A box of elements together with their values (values empty in count-only mode).
struct Chunk {
  Box range;
  std::vector<Value> data;

  const Value* find(const Index4& idx) const {
    if (!range.contains(idx) || data.empty()) return nullptr;
    const Count w1 = range.hi[1] - range.lo[1];
    const Count w2 = range.hi[2] - range.lo[2];
    const Count w3 = range.hi[3] - range.lo[3];
    const Count off = (((idx[0] - range.lo[0]) * w1 + (idx[1] - range.lo[1])) * w2 +
                       (idx[2] - range.lo[2])) * w3 + (idx[3] - range.lo[3]);
    return &data[static_cast<std::size_t>(off)];
  }
};

struct Buffer {
  std::vector<Chunk> chunks;

  Count volume() const {
    Count v = 0;
    for (const auto& c : chunks) v += c.range.volume();
    return v;
  }
  bool covers(const Index4& idx) const {
    return std::any_of(chunks.begin(), chunks.end(),
                       [&](const Chunk& c) { return c.range.contains(idx); });
  }
  const Value* find(const Index4& idx) const {
    for (const auto& c : chunks) {
      if (const Value* v = c.find(idx)) return v;
    }
    return nullptr;
  }
};

struct Processor {
  GridCoord at;
  std::vector<Chunk> owned_in;
  std::vector<Chunk> owned_ker;
  Box out_box;
  std::vector<Value> out;
  Count owned = 0;
  Buffer in_buf;
  Buffer ker_buf;
  ProcessorReport stats;
};

const Value* find_owned(const Processor& proc, TensorId tensor, const Index4& idx) {
  const auto& chunks = tensor == TensorId::kIn ? proc.owned_in : proc.owned_ker;
  for (const auto& c : chunks) {
    if (const Value* v = c.find(idx)) return v;
  }
  return nullptr;
}

Chunk make_chunk(const Box& range, const Tensor4<Value>* source) {
  Chunk chunk{range, {}};
  if (source != nullptr) {
    chunk.data.reserve(static_cast<std::size_t>(range.volume()));
    for_each_index(range, [&](const Index4& idx) { chunk.data.push_back((*source)[idx]); });
  }
  return chunk;
}

/// First element of `need` that no buffer chunk covers, if any.
std::optional<Index4> first_missing(const Buffer& buf, const Box& need) {
  for (const auto& c : buf.chunks) {
    if (c.range.contains(need)) return std::nullopt;
  }
  std::optional<Index4> missing;
  for_each_index(need, [&](const Index4& idx) {
    if (!missing && !buf.covers(idx)) missing = idx;
  });
  return missing;
}

}  // namespace

MemoryOverflow::MemoryOverflow(Count processor, std::string step, Count live, Count capacity)
    : Error("simulator.MemoryOverflow",
            "processor " + std::to_string(processor) + " at step " + step + " holds " +
                std::to_string(live) + " elements, M_D=" + std::to_string(capacity)),
      processor_(processor),
      step_(std::move(step)) {}

DataMissing::DataMissing(Count processor, std::string step, TensorId tensor, Index4 element)
    : Error("simulator.DataMissing",
            "processor " + std::to_string(processor) + " at step " + step + " lacks " +
                to_string(tensor) + format_index(element)),
      processor_(processor),
      step_(std::move(step)),
      tensor_(tensor),
      element_(element) {}

void SimConfig::validate() const {
  const PartitionPlan& pp = plan.plan;
  auto fail = [](const std::string& what) {
    throw Error("simulator.InconsistentConfig", what);
  };
  validate_partition(pp, problem, machine.p);
  if (grid.size() != machine.p) fail("grid size differs from P");
  if (grid.p_b * pp.w_b != problem.n_b || grid.p_k * pp.w_k != problem.n_k ||
      grid.p_c * pp.w_c != problem.n_c || grid.p_h * pp.w_h != problem.n_h ||
      grid.p_w * pp.w_w != problem.n_w) {
    fail("grid does not match the work partition");
  }
  if (!(distribution.grid == grid) || !(distribution.plan == pp) ||
      !(distribution.problem == problem)) {
    fail("distribution was planned for a different grid or plan");
  }
  if (inputs && (inputs->in.extents() != in_extents(problem) ||
                 inputs->ker.extents() != ker_extents(problem))) {
    throw Error("simulator.ShapeMismatch", "supplied operands do not match the problem");
  }
  if (!(schedule.grid == grid) || schedule.steps != pp.w_c ||
      schedule.sweeps != sweep_count(pp)) {
    fail("schedule was built for a different grid or plan");
  }
}

SimReport run(const SimConfig& cfg) {
  cfg.validate();
  const ConvProblem& prob = cfg.problem;
  const PartitionPlan& pp = cfg.plan.plan;
  const ProcGrid& grid = cfg.grid;
  const bool compute = cfg.mode == SimMode::kFullCompute;

  std::optional<ConvInputs> inputs;
  if (compute) inputs = cfg.inputs ? *cfg.inputs : generate_inputs(prob, cfg.seed);

  std::vector<Processor> procs(static_cast<std::size_t>(grid.size()));
  for (Count r = 0; r < grid.size(); ++r) {
    Processor& proc = procs[static_cast<std::size_t>(r)];
    proc.at = coord_of(grid, r);
    proc.out_box = cfg.distribution.out_block(proc.at);
  }
  for (const auto& rec : cfg.distribution.records) {
    Processor& proc = procs.at(static_cast<std::size_t>(rec.owner));
    proc.owned += rec.range.volume();
    if (rec.tensor == TensorId::kIn) {
      proc.owned_in.push_back(make_chunk(rec.range, compute ? &inputs->in : nullptr));
    } else if (rec.tensor == TensorId::kKer) {
      proc.owned_ker.push_back(make_chunk(rec.range, compute ? &inputs->ker : nullptr));
    } else if (compute) {
      proc.out.assign(static_cast<std::size_t>(rec.range.volume()), 0);
    }
  }
  for (Count r = 0; r < grid.size(); ++r) {
    Processor& proc = procs[static_cast<std::size_t>(r)];
    proc.stats.initial_footprint = proc.owned;
    proc.stats.peak_memory = proc.owned;
    if (proc.owned > cfg.machine.m_d) {
      throw MemoryOverflow(r, "init", proc.owned, cfg.machine.m_d);
    }
  }

  // Owner records per tensor, for source verification.
  std::vector<const OwnershipRecord*> in_owners;
  std::vector<const OwnershipRecord*> ker_owners;
  for (const auto& rec : cfg.distribution.records) {
    if (rec.tensor == TensorId::kIn) in_owners.push_back(&rec);
    if (rec.tensor == TensorId::kKer) ker_owners.push_back(&rec);
  }

  const auto& records = cfg.schedule.records;
  std::size_t next = 0;
  for (Count sweep = 0; sweep < cfg.schedule.sweeps; ++sweep) {
    for (Count step = 0; step < cfg.schedule.steps; ++step) {
      const std::string label = round_label(sweep, step);

      // Broadcasts of this round.
      for (; next < records.size() && records[next].sweep == sweep && records[next].step == step;
           ++next) {
        const BroadcastRecord& rec = records[next];
        Processor& root = procs.at(static_cast<std::size_t>(rec.root));
        const auto& owners = rec.tensor == TensorId::kIn ? in_owners : ker_owners;
        Count covered = 0;
        Count own = 0;
        for (const OwnershipRecord* o : owners) {
          const Count v = o->range.intersect(rec.range).volume();
          covered += v;
          if (o->owner == rec.root) own += v;
        }
        if (covered != rec.range.volume()) {
          std::optional<Index4> missing;
          for_each_index(rec.range, [&](const Index4& idx) {
            if (missing) return;
            const bool held = std::any_of(owners.begin(), owners.end(), [&](const auto* o) {
              return o->range.contains(idx);
            });
            if (!held) missing = idx;
          });
          throw DataMissing(rec.root, label, rec.tensor, missing.value_or(rec.range.lo));
        }
        root.stats.sourced_off_line += rec.range.volume() - own;

        Chunk payload{rec.range, {}};
        if (compute) {
          payload.data.reserve(static_cast<std::size_t>(rec.range.volume()));
          for_each_index(rec.range, [&](const Index4& idx) {
            const Count owner = cfg.distribution.owner_of(rec.tensor, idx);
            const Value* v = find_owned(procs[static_cast<std::size_t>(owner)], rec.tensor, idx);
            if (v == nullptr) throw DataMissing(owner, label, rec.tensor, idx);
            payload.data.push_back(*v);
          });
        }
        for (Count m : cfg.schedule.line_members(rec)) {
          Processor& dst = procs.at(static_cast<std::size_t>(m));
          if (rec.tensor == TensorId::kIn) {
            dst.in_buf.chunks.push_back(payload);
            dst.stats.elements_received_in += rec.range.volume();
          } else {
            dst.ker_buf.chunks.push_back(payload);
            dst.stats.elements_received_ker += rec.range.volume();
          }
        }
      }

      for (Count r = 0; r < grid.size(); ++r) {
        Processor& proc = procs[static_cast<std::size_t>(r)];
        const Count live = proc.owned + proc.in_buf.volume() + proc.ker_buf.volume();
        proc.stats.peak_memory = std::max(proc.stats.peak_memory, live);
        if (live > cfg.machine.m_d) throw MemoryOverflow(r, label, live, cfg.machine.m_d);
      }

      // Compute: every processor performs its tile at channel c = c0 + step.
      for (Count r = 0; r < grid.size(); ++r) {
        Processor& proc = procs[static_cast<std::size_t>(r)];
        const TileWindow win = tile_window(pp, prob, proc.at, sweep, step);
        const Box& o = win.out;
        const Count c = proc.at.c * pp.w_c + step;
        Box need_in;
        need_in.lo = {o.lo[0], c, prob.sigma_w * o.lo[2], prob.sigma_h * o.lo[3]};
        need_in.hi = {o.hi[0], c + 1, prob.sigma_w * (o.hi[2] - 1) + prob.n_r,
                      prob.sigma_h * (o.hi[3] - 1) + prob.n_s};
        Box need_ker;
        need_ker.lo = {o.lo[1], c, 0, 0};
        need_ker.hi = {o.hi[1], c + 1, prob.n_r, prob.n_s};
        if (auto miss = first_missing(proc.in_buf, need_in)) {
          throw DataMissing(r, label, TensorId::kIn, *miss);
        }
        if (auto miss = first_missing(proc.ker_buf, need_ker)) {
          throw DataMissing(r, label, TensorId::kKer, *miss);
        }
        if (compute) {
          const Count ob = proc.out_box.hi[1] - proc.out_box.lo[1];
          const Count ow = proc.out_box.hi[2] - proc.out_box.lo[2];
          const Count oh = proc.out_box.hi[3] - proc.out_box.lo[3];
          for_each_index(o, [&](const Index4& idx) {
            const Count b = idx[0], k = idx[1], w = idx[2], h = idx[3];
            Value acc = 0;
            for (Count rr = 0; rr < prob.n_r; ++rr)
              for (Count s = 0; s < prob.n_s; ++s) {
                acc += *proc.in_buf.find({b, c, prob.sigma_w * w + rr, prob.sigma_h * h + s}) *
                       *proc.ker_buf.find({k, c, rr, s});
              }
            const Count off = (((b - proc.out_box.lo[0]) * ob + (k - proc.out_box.lo[1])) * ow +
                               (w - proc.out_box.lo[2])) * oh + (h - proc.out_box.lo[3]);
            proc.out[static_cast<std::size_t>(off)] += acc;
          });
        }
        proc.in_buf.chunks.clear();
        proc.ker_buf.chunks.clear();
      }
    }
  }
  if (next != records.size()) {
    throw Error("simulator.InconsistentConfig", "schedule records outside the round range");
  }

  // Partial Out blocks along each c-line are reduced onto its first member.
  for (const auto& group : cfg.distribution.out_replication_groups) {
    Processor& root = procs.at(static_cast<std::size_t>(group.front()));
    for (std::size_t i = 1; i < group.size(); ++i) {
      const Processor& part = procs.at(static_cast<std::size_t>(group[i]));
      root.stats.reduction_volume += part.out_box.volume();
      if (compute) {
        for (std::size_t e = 0; e < root.out.size(); ++e) root.out[e] += part.out[e];
      }
    }
  }

  SimReport report;
  report.steps = cfg.schedule.rounds();
  for (const auto& proc : procs) {
    report.processors.push_back(proc.stats);
    const auto& s = proc.stats;
    report.cost_i = std::max(report.cost_i, s.initial_footprint);
    report.cost_c = std::max(report.cost_c, s.elements_received_in + s.elements_received_ker);
    report.peak_memory = std::max(report.peak_memory, s.peak_memory);
  }
  report.cost_d = report.cost_i + report.cost_c;

  if (compute) {
    const Tensor4<Value> expected = reference_convolution(prob, inputs->in, inputs->ker);
    Tensor4<Value> gathered(out_extents(prob));
    for (const auto& proc : procs) {
      if (proc.at.c != 0) continue;
      std::size_t e = 0;
      for_each_index(proc.out_box, [&](const Index4& idx) {
        gathered[idx] = proc.out[e];
        if (proc.out[e++] != expected[idx]) ++report.mismatches;
      });
    }
    report.output = std::move(gathered);
    report.correct = report.mismatches == 0;
  }
  return report;
}

std::vector<IdentityResult> verify_identities(const SimReport& report, const ConvProblem& prob,
                                              const MachineSpec& machine,
                                              const IntegerPlan& plan) {
  const PartitionPlan& pp = plan.plan;
  const DistributedCost model = cost_distributed(pp, prob, machine);
  const CostBreakdown global = partition_cost(pp, prob);
  const Count share = distributed_tensor_share(prob, machine.p);
  const Count g_d = memory_distributed(pp, prob, machine.p);
  const Count p_c = prob.n_c / pp.w_c;

  Count reduction = 0;
  for (const auto& s : report.processors) reduction = std::max(reduction, s.reduction_volume);

  auto d = [](Count v) { return static_cast<double>(v); };
  std::vector<IdentityResult> out;
  out.push_back({"cost_c", report.cost_c == model.cost_c, d(report.cost_c), d(model.cost_c)});
  out.push_back({"offset", report.cost_d - global.total == share, d(report.cost_d - global.total),
                 d(share)});
  out.push_back({"peak_le_gd", report.peak_memory <= g_d, d(report.peak_memory), d(g_d)});
  out.push_back({"gd_le_md", g_d <= machine.m_d, d(g_d), d(machine.m_d)});
  out.push_back({"reduction", reduction == (p_c - 1) * pp.out_block(), d(reduction),
                 d((p_c - 1) * pp.out_block())});
  if (report.correct) {
    out.push_back({"correctness", *report.correct, d(report.mismatches), 0.0});
  }
  return out;
}

std::string format_report(const SimReport& report) {
  std::ostringstream os;
  os << "sim steps " << report.steps << '\n';
  os << "sim cost_i " << report.cost_i << '\n';
  os << "sim cost_c " << report.cost_c << '\n';
  os << "sim cost_d " << report.cost_d << '\n';
  os << "sim peak_memory " << report.peak_memory << '\n';
  os << "sim correct "
     << (report.correct ? (*report.correct ? "yes" : "no") : "n/a") << '\n';
  os << "sim mismatches " << report.mismatches << '\n';
  for (std::size_t r = 0; r < report.processors.size(); ++r) {
    const auto& s = report.processors[r];
    os << "proc " << r << " received_in " << s.elements_received_in << " received_ker "
       << s.elements_received_ker << " initial " << s.initial_footprint << " peak "
       << s.peak_memory << " reduction " << s.reduction_volume << " sourced_off_line "
       << s.sourced_off_line << '\n';
  }
  return os.str();
}

std::string format_report_csv(const SimReport& report) {
  std::ostringstream os;
  os << "rank,received_in,received_ker,initial_footprint,peak_memory,reduction_volume,"
        "sourced_off_line\n";
  for (std::size_t r = 0; r < report.processors.size(); ++r) {
    const auto& s = report.processors[r];
    os << r << ',' << s.elements_received_in << ',' << s.elements_received_ker << ','
       << s.initial_footprint << ',' << s.peak_memory << ',' << s.reduction_volume << ','
       << s.sourced_off_line << '\n';
  }
  return os.str();
}

}  // namespace commsynth
