#include <catch_amalgamated.hpp>

#include <random>

#include "commsynth/core_model.hpp"
#include "test_support.hpp"

using namespace commsynth;
using commsynth::testing::literal_tile_loads;
using commsynth::testing::problem_a;

namespace {

ConvProblem small_problem() { return ConvProblem{1, 2, 2, 4, 4, 3, 3, 1, 1}; }

std::string code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

}  // namespace

TEST_CASE("footprints match hand arithmetic") {
  const ConvProblem unit{};
  CHECK(footprint_in(TilePlan{}, unit) == 1);

  const ConvProblem k3{1, 1, 1, 8, 8, 3, 3, 1, 1};
  CHECK(footprint_in(TilePlan{1, 1, 1, 4, 4}, k3) == 36);

  const ConvProblem strided{2, 1, 1, 8, 8, 3, 3, 2, 2};
  CHECK(footprint_in(TilePlan{2, 1, 1, 3, 3}, strided) == 128);

  CHECK(footprint_ker(TilePlan{1, 1, 1, 1, 1}, k3) == 9);
  CHECK(footprint_out(TilePlan{2, 4, 1, 4, 4}) == 128);
  CHECK(footprint_ker(TilePlan{1, 8, 1, 1, 1}, ConvProblem{}) == 8);
}

TEST_CASE("tile_memory sums the three footprints") {
  CHECK(tile_memory(TilePlan{}, ConvProblem{}) == 3);
  const ConvProblem k3{1, 2, 1, 4, 4, 3, 3, 1, 1};
  CHECK(tile_memory(TilePlan{1, 2, 1, 4, 4}, k3) == 36 + 32 + 18);
}

TEST_CASE("cost_sequential single tile collapses to whole tensors") {
  const ConvProblem p = small_problem();
  const TilePlan whole{1, 2, 2, 4, 4};
  const CostBreakdown c = cost_sequential(whole, p, 1000);
  CHECK(c.out_term == 32);
  CHECK(c.ker_term == 36);
  CHECK(c.in_term == 72);
  CHECK(c.total == 140);

  const CostBreakdown unit = cost_sequential(TilePlan{}, ConvProblem{}, 3);
  CHECK(unit.total == 3);
}

TEST_CASE("cost_sequential on Problem A agrees with a literal tile walk") {
  const ConvProblem p = problem_a();
  const TilePlan t{1, 4, 1, 4, 4};
  const CostBreakdown model = cost_sequential(t, p, 256);
  const CostBreakdown literal = literal_tile_loads(p, PartitionPlan::whole(p, t));
  CHECK(model == literal);
  CHECK(model.out_term == 1024);
  CHECK(model.ker_term == 4608);
  CHECK(model.in_term == 4608);
  CHECK(model.total == 10240);
  CHECK(tile_memory(t, p) == 136);
}

TEST_CASE("cost_sequential rejects tiles that do not fit") {
  CHECK(code_of([] { cost_sequential(TilePlan{1, 4, 1, 4, 4}, problem_a(), 135); }) ==
        "core_model.MemoryExceeded");
}

TEST_CASE("cost_global with P=1 and W=N equals the sequential single tile") {
  const ConvProblem p = small_problem();
  const PartitionPlan pp = PartitionPlan::whole(p, TilePlan{1, 2, 2, 4, 4});
  CHECK(cost_global(pp, p, MachineSpec{1, 1000, 1000}).total == 140);
  CHECK(cost_global(PartitionPlan::whole(ConvProblem{}, TilePlan{}), ConvProblem{},
                    MachineSpec{1, 3, 3})
            .total == 3);
}

TEST_CASE("cost_global validates the partition") {
  const ConvProblem p = problem_a();
  PartitionPlan bad{1, 4, 8, 8, 8, TilePlan{1, 4, 1, 4, 8}};
  CHECK(code_of([&] { cost_global(bad, p, MachineSpec{3, 256, 4096}); }) ==
        "core_model.PartitionInvalid");
  bad.tile.t_k = 8;
  CHECK(code_of([&] { cost_global(bad, p, MachineSpec{4, 256, 4096}); }) ==
        "core_model.PartitionInvalid");
  const PartitionPlan big{1, 4, 8, 8, 8, TilePlan{1, 4, 1, 8, 8}};
  CHECK(code_of([&] { cost_global(big, p, MachineSpec{4, 256, 4096}); }) ==
        "core_model.MemoryExceeded");
}

TEST_CASE("cost_global agrees with the literal tile walk for random plans") {
  std::mt19937_64 gen(7);
  for (int i = 0; i < 60; ++i) {
    const ConvProblem p = testing::random_problem(gen, {1, 2, 3, 4, 6}, false);
    const PartitionPlan pp = testing::random_partition(gen, p);
    INFO(to_string(p) << " | " << to_string(pp));
    CHECK(partition_cost(pp, p) == literal_tile_loads(p, pp));
  }
}

TEST_CASE("printed Ker term uses N_c and coincides when W_c = N_c") {
  const ConvProblem p = problem_a();
  const PartitionPlan split{2, 8, 2, 8, 8, TilePlan{1, 4, 1, 4, 4}};
  const CostBreakdown ours = partition_cost(split, p);
  const CostBreakdown printed = partition_cost(split, p, KerTermFormula::kPrinted);
  CHECK(ours.ker_term == 8 * 2 * 9 * (2 * 2 * 2));
  CHECK(printed.ker_term == 8 * 8 * 9 * (2 * 2 * 2));
  CHECK(ours.in_term == printed.in_term);

  const PartitionPlan full_c{1, 4, 8, 8, 8, TilePlan{1, 4, 1, 4, 8}};
  CHECK(partition_cost(full_c, p) == partition_cost(full_c, p, KerTermFormula::kPrinted));
}

TEST_CASE("ceiling tile counts") {
  const PartitionPlan pp{1, 5, 1, 5, 5, TilePlan{1, 2, 1, 2, 5}};
  CHECK(tile_count(pp) == 3 * 3);
}

TEST_CASE("cost_simplified evaluates the relaxed objective") {
  const ConvProblem mm{1, 16, 16, 4, 4, 1, 1, 1, 1};
  // AM-GM symmetric point: t_k = t_bhw = sqrt(m_l).
  const double m_l = 16;
  const SimplifiedPoint pt{8, 8, 4, 4, 8};
  const double volume = 16.0 * 16 * 16 / 8;
  CHECK(cost_simplified(pt, mm, 8, m_l) == Catch::Approx(64 + 2 * volume / 4));

  // Case 2a point of the 16^3 product on 8 processors.
  const SimplifiedPoint c2a{8, 8, 8, 8, 8};
  CHECK(cost_simplified(c2a, mm, 8, 64) == Catch::Approx(192));

  CHECK(code_of([&] { cost_simplified(c2a, mm, 8, 63); }) == "core_model.ConstraintViolated");
  const SimplifiedPoint off{8, 8, 8, 8, 7};
  CHECK(code_of([&] { cost_simplified(off, mm, 8, 64); }) == "core_model.ConstraintViolated");
}

TEST_CASE("cost_distributed and memory_distributed on hand examples") {
  const ConvProblem p = small_problem();
  const PartitionPlan whole = PartitionPlan::whole(p, TilePlan{1, 2, 2, 4, 4});
  const DistributedCost d = cost_distributed(whole, p, MachineSpec{1, 1000, 1000});
  CHECK(d.cost_i == 32 + 72 + 36);
  CHECK(d.cost_c == 36 + 72);
  CHECK(d.cost_d == d.cost_i + d.cost_c);
  const PartitionPlan whole_c1 = PartitionPlan::whole(p, TilePlan{1, 2, 1, 4, 4});
  CHECK(memory_distributed(whole_c1, p, 1) == 36 + 18 + 32 + 36 + 72);
  CHECK(memory_distributed(PartitionPlan::whole(ConvProblem{}, TilePlan{}), ConvProblem{}, 1) ==
        5);
}

TEST_CASE("Problem A distributed costs") {
  const ConvProblem p = problem_a();
  const PartitionPlan pp{1, 4, 8, 8, 8, TilePlan{1, 4, 1, 4, 8}};
  const DistributedCost d = cost_distributed(pp, p, MachineSpec{4, 256, 4096});
  // In is 2*8*10*10 = 1600 elements, Ker 8*8*9 = 576.
  CHECK(d.cost_i == 256 + 1600 / 4 + 576 / 4);
  CHECK(d.cost_c == 576 + 960);
  CHECK(d.cost_d - cost_global(pp, p, MachineSpec{4, 256, 4096}).total == (1600 + 576) / 4);
}

TEST_CASE("validation") {
  ConvProblem p = problem_a();
  p.sigma_w = 0;
  CHECK(code_of([&] { p.validate(); }) == "core_model.ValidationError");
  CHECK(code_of([] { MachineSpec{4, 2, 4096}.validate(problem_a()); }) ==
        "core_model.ValidationError");
  CHECK(code_of([] { MachineSpec{4, 256, 100}.validate(problem_a()); }) ==
        "core_model.ValidationError");
  CHECK(code_of([] { MachineSpec{0, 256, 4096}.validate(problem_a()); }) ==
        "core_model.ValidationError");

  const ConvProblem wide{1, 1, 1, 2, 2, 3, 3, 1, 1};
  CHECK(wide.warnings().size() == 2);
  CHECK(problem_a().warnings().empty());
}

// Properties over random plans --------------------------------------------

TEST_CASE("property: work product closure and constant offsets") {
  std::mt19937_64 gen(11);
  for (int i = 0; i < 300; ++i) {
    const ConvProblem p = testing::random_problem(gen, {1, 2, 4, 6, 8, 12});
    const PartitionPlan pp = testing::random_partition(gen, p);
    const Count procs = testing::processors_of(p, pp);
    INFO(to_string(p) << " | " << to_string(pp));
    REQUIRE(procs * pp.volume() == p.n_b * p.n_k * p.n_c * p.n_h * p.n_w);
    const MachineSpec m{procs, tile_memory(pp.tile, p), 1'000'000'000};
    const CostBreakdown g = cost_global(pp, p, m);
    CHECK(g.total == g.out_term + g.ker_term + g.in_term);
    const DistributedCost d = cost_distributed(pp, p, m);
    CHECK(d.cost_d - g.total == distributed_tensor_share(p, procs));
    // g_D holds no Out tile, so the Out footprint drops out of the difference.
    CHECK(memory_distributed(pp, p, procs) - tile_memory(pp.tile, p) ==
          pp.out_block() - footprint_out(pp.tile) + distributed_tensor_share(p, procs));
    if (p.size_in() % procs == 0 && p.size_ker() % procs == 0) {
      CHECK(distributed_tensor_share(p, procs) == (p.size_in() + p.size_ker()) / procs);
    }
  }
}

TEST_CASE("property: enlarging a tile never increases traffic nor shrinks memory") {
  std::mt19937_64 gen(12);
  for (int i = 0; i < 300; ++i) {
    const ConvProblem p = testing::random_problem(gen, {2, 4, 6, 8, 12});
    const PartitionPlan pp = testing::random_partition(gen, p);
    const CostBreakdown base = partition_cost(pp, p);
    for (int dim = 0; dim < 4; ++dim) {
      PartitionPlan bigger = pp;
      Count* t = dim == 0 ? &bigger.tile.t_b
                          : dim == 1 ? &bigger.tile.t_k
                                     : dim == 2 ? &bigger.tile.t_h : &bigger.tile.t_w;
      const Count limit = dim == 0 ? pp.w_b : dim == 1 ? pp.w_k : dim == 2 ? pp.w_h : pp.w_w;
      // Next divisor of the partition extent.
      Count next = *t + 1;
      while (next <= limit && limit % next != 0) ++next;
      if (next > limit) continue;
      *t = next;
      INFO(to_string(p) << " | " << to_string(pp) << " dim " << dim);
      const CostBreakdown grown = partition_cost(bigger, p);
      CHECK(grown.ker_term + grown.in_term <= base.ker_term + base.in_term);
      CHECK(tile_memory(bigger.tile, p) >= tile_memory(pp.tile, p));
    }
  }
}

TEST_CASE("property: 1x1 stencil reduces to three-index products") {
  std::mt19937_64 gen(13);
  for (int i = 0; i < 100; ++i) {
    ConvProblem p = testing::random_problem(gen, {1, 2, 4, 8});
    p.n_r = p.n_s = p.sigma_w = p.sigma_h = 1;
    const PartitionPlan pp = testing::random_partition(gen, p);
    const TilePlan& t = pp.tile;
    CHECK(footprint_in(t, p) == t.t_b * t.t_c * t.t_w * t.t_h);
    const CostBreakdown c = partition_cost(pp, p);
    CHECK(c.ker_term == pp.w_k * pp.w_c * pp.w_bhw() / t.t_bhw());
    CHECK(c.in_term == pp.w_bhw() * pp.w_c * pp.w_k / t.t_k);
  }
}

TEST_CASE("cost functions are pure") {
  const ConvProblem p = problem_a();
  const PartitionPlan pp{1, 4, 8, 8, 8, TilePlan{1, 4, 1, 4, 8}};
  CHECK(partition_cost(pp, p) == partition_cost(pp, p));
  const SimplifiedPoint pt{4, 128, 4, 32, 8};
  CHECK(cost_simplified_unchecked(pt, p, 4) == cost_simplified_unchecked(pt, p, 4));
}
