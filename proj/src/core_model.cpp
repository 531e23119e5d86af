#include "commsynth/core_model.hpp"

#include <cmath>
#include <sstream>

namespace commsynth {

namespace {

void require_positive(Count value, const char* field) {
  if (value < 1) {
    throw Error("core_model.ValidationError",
                std::string(field) + " must be >= 1, got " + std::to_string(value));
  }
}

}  // namespace

void ConvProblem::validate() const {
  require_positive(n_b, "Nb");
  require_positive(n_k, "Nk");
  require_positive(n_c, "Nc");
  require_positive(n_h, "Nh");
  require_positive(n_w, "Nw");
  require_positive(n_r, "Nr");
  require_positive(n_s, "Ns");
  require_positive(sigma_w, "sigma_w");
  require_positive(sigma_h, "sigma_h");
}

std::vector<std::string> ConvProblem::warnings() const {
  std::vector<std::string> out;
  if (n_r > n_h) out.push_back("Nr exceeds Nh; stencil is large relative to the pixel extent");
  if (n_s > n_w) out.push_back("Ns exceeds Nw; stencil is large relative to the pixel extent");
  return out;
}

void MachineSpec::validate(const ConvProblem& prob) const {
  if (p < 1) throw Error("core_model.ValidationError", "P must be >= 1");
  const Count smallest = tile_memory(TilePlan{}, prob);
  if (m < smallest) {
    throw Error("core_model.ValidationError",
                "M=" + std::to_string(m) + " cannot hold the all-ones tile (" +
                    std::to_string(smallest) + " elements)");
  }
  if (m_d < m) {
    throw Error("core_model.ValidationError", "MD must be >= M");
  }
}

PartitionPlan PartitionPlan::whole(const ConvProblem& prob, const TilePlan& tile) {
  return PartitionPlan{prob.n_b, prob.n_k, prob.n_c, prob.n_h, prob.n_w, tile};
}

Count footprint_in(const TilePlan& plan, const ConvProblem& prob) {
  return plan.t_b * plan.t_c * (prob.sigma_w * plan.t_w + prob.n_r - 1) *
         (prob.sigma_h * plan.t_h + prob.n_s - 1);
}

Count footprint_ker(const TilePlan& plan, const ConvProblem& prob) {
  return prob.n_r * prob.n_s * plan.t_k * plan.t_c;
}

Count footprint_out(const TilePlan& plan) { return plan.t_w * plan.t_h * plan.t_b * plan.t_k; }

Count tile_memory(const TilePlan& plan, const ConvProblem& prob) {
  return footprint_in(plan, prob) + footprint_out(plan) + footprint_ker(plan, prob);
}

Count tile_count(const PartitionPlan& pp) {
  const TilePlan& t = pp.tile;
  return ceil_div(pp.w_k, t.t_k) * ceil_div(pp.w_b, t.t_b) * ceil_div(pp.w_w, t.t_w) *
         ceil_div(pp.w_h, t.t_h) * ceil_div(pp.w_c, t.t_c);
}

CostBreakdown partition_cost(const PartitionPlan& pp, const ConvProblem& prob,
                             KerTermFormula ker) {
  const TilePlan& t = pp.tile;
  const Count tiles = tile_count(pp);
  CostBreakdown cost;
  cost.out_term = pp.out_block();
  if (ker == KerTermFormula::kPartition) {
    cost.ker_term = tiles * footprint_ker(t, prob);
  } else {
    // W_k N_c N_r N_s W_w W_h W_b / (T_w T_h T_b): no k or c tiling factor.
    cost.ker_term = pp.w_k * prob.n_c * prob.n_r * prob.n_s * ceil_div(pp.w_b, t.t_b) *
                    ceil_div(pp.w_w, t.t_w) * ceil_div(pp.w_h, t.t_h);
  }
  cost.in_term = tiles * footprint_in(t, prob);
  cost.total = cost.out_term + cost.ker_term + cost.in_term;
  return cost;
}

CostBreakdown cost_sequential(const TilePlan& plan, const ConvProblem& prob, Count capacity) {
  const Count g = tile_memory(plan, prob);
  if (g > capacity) {
    throw Error("core_model.MemoryExceeded", "tile needs " + std::to_string(g) +
                                                 " elements, capacity is " +
                                                 std::to_string(capacity));
  }
  return partition_cost(PartitionPlan::whole(prob, plan), prob);
}

void validate_partition(const PartitionPlan& pp, const ConvProblem& prob, Count p) {
  auto check = [](Count t, Count w, Count n, const char* dim) {
    if (t < 1 || t > w || w > n) {
      throw Error("core_model.PartitionInvalid",
                  std::string("need 1 <= t <= w <= n along ") + dim + " (t=" + std::to_string(t) +
                      ", w=" + std::to_string(w) + ", n=" + std::to_string(n) + ")");
    }
  };
  check(pp.tile.t_b, pp.w_b, prob.n_b, "b");
  check(pp.tile.t_k, pp.w_k, prob.n_k, "k");
  check(pp.tile.t_c, pp.w_c, prob.n_c, "c");
  check(pp.tile.t_h, pp.w_h, prob.n_h, "h");
  check(pp.tile.t_w, pp.w_w, prob.n_w, "w");
  const Count space = prob.n_b * prob.n_k * prob.n_c * prob.n_h * prob.n_w;
  if (p * pp.volume() != space) {
    throw Error("core_model.PartitionInvalid",
                "P * prod(W) = " + std::to_string(p * pp.volume()) +
                    " but prod(N) = " + std::to_string(space));
  }
}

CostBreakdown cost_global(const PartitionPlan& pp, const ConvProblem& prob,
                          const MachineSpec& machine, KerTermFormula ker) {
  validate_partition(pp, prob, machine.p);
  const Count g = tile_memory(pp.tile, prob);
  if (g > machine.m) {
    throw Error("core_model.MemoryExceeded", "tile needs " + std::to_string(g) +
                                                 " elements, M is " + std::to_string(machine.m));
  }
  return partition_cost(pp, prob, ker);
}

double cost_simplified_unchecked(const SimplifiedPoint& pt, const ConvProblem& prob, Count p) {
  const double work = static_cast<double>(prob.n_k) * static_cast<double>(prob.n_c) *
                      static_cast<double>(prob.n_bhw()) / static_cast<double>(p);
  return pt.w_k * pt.w_bhw +
         work * (static_cast<double>(prob.n_r * prob.n_s) / pt.t_bhw +
                 static_cast<double>(prob.sigma_w * prob.sigma_h) / pt.t_k);
}

double cost_simplified(const SimplifiedPoint& pt, const ConvProblem& prob, Count p, double m_l) {
  if (pt.t_bhw * pt.t_k > m_l * (1.0 + 1e-12)) {
    throw Error("core_model.ConstraintViolated", "t_bhw * t_k exceeds M_L");
  }
  const double lhs = static_cast<double>(p) * pt.w_bhw * pt.w_k * pt.w_c;
  const double rhs = static_cast<double>(prob.n_bhw()) * static_cast<double>(prob.n_k) *
                     static_cast<double>(prob.n_c);
  if (std::abs(lhs - rhs) > 1e-9 * rhs) {
    throw Error("core_model.ConstraintViolated", "P * W_bhw * W_k * W_c != N_bhw * N_k * N_c");
  }
  return cost_simplified_unchecked(pt, prob, p);
}

Count distributed_tensor_share(const ConvProblem& prob, Count p) {
  return ceil_div(prob.size_in(), p) + ceil_div(prob.size_ker(), p);
}

DistributedCost cost_distributed(const PartitionPlan& pp, const ConvProblem& prob,
                                 const MachineSpec& machine) {
  validate_partition(pp, prob, machine.p);
  const CostBreakdown moved = partition_cost(pp, prob);
  DistributedCost cost;
  cost.cost_i = pp.out_block() + distributed_tensor_share(prob, machine.p);
  cost.cost_c = moved.ker_term + moved.in_term;
  cost.cost_d = cost.cost_i + cost.cost_c;
  return cost;
}

Count memory_distributed(const PartitionPlan& pp, const ConvProblem& prob, Count p) {
  return footprint_in(pp.tile, prob) + footprint_ker(pp.tile, prob) + pp.out_block() +
         distributed_tensor_share(prob, p);
}

std::string to_string(const ConvProblem& prob) {
  std::ostringstream os;
  os << "Nb=" << prob.n_b << " Nk=" << prob.n_k << " Nc=" << prob.n_c << " Nh=" << prob.n_h
     << " Nw=" << prob.n_w << " Nr=" << prob.n_r << " Ns=" << prob.n_s
     << " sigma_w=" << prob.sigma_w << " sigma_h=" << prob.sigma_h;
  return os.str();
}

std::string to_string(const PartitionPlan& pp) {
  std::ostringstream os;
  os << "w_b=" << pp.w_b << " w_k=" << pp.w_k << " w_c=" << pp.w_c << " w_h=" << pp.w_h
     << " w_w=" << pp.w_w << " t_b=" << pp.tile.t_b << " t_k=" << pp.tile.t_k
     << " t_c=" << pp.tile.t_c << " t_h=" << pp.tile.t_h << " t_w=" << pp.tile.t_w;
  return os.str();
}

}  // namespace commsynth
