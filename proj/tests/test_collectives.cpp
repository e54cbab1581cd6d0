#include <doctest.h>

#include <algorithm>

#include "hiersim/collectives.hpp"

using namespace hiersim;

namespace {

constexpr long long MiB = 1 << 20;

TopologySpec topo(const std::string& text) {
  int dims = 1 + static_cast<int>(std::count(text.begin(), text.end(), '_'));
  return parse_topology(text, std::vector<long long>(dims, 100LL << 30));
}

std::vector<int> full_scope(const TopologySpec& spec) {
  std::vector<int> scope;
  for (int d = 1; d <= spec.dim_count(); ++d) scope.push_back(d);
  return scope;
}

Rational slot_total(const std::vector<PatternStep>& steps, int slot) {
  Rational total(0);
  for (const auto& step : steps)
    for (const auto& s : step.sends)
      if (s.src == slot) total += s.bytes;
  return total;
}

}  // namespace

TEST_SUITE_BEGIN("collectives");

TEST_CASE("block to algorithm mapping") {
  CHECK(algorithm_for_block(BlockKind::Ring) == PhaseAlgorithm::Ring);
  CHECK(algorithm_for_block(BlockKind::FullyConnected) == PhaseAlgorithm::Direct);
  CHECK(algorithm_for_block(BlockKind::Switch) == PhaseAlgorithm::HalvingDoubling);
}

TEST_CASE("ring pattern: k=4, 8 MiB") {
  auto steps = basic_phases(CollectiveKind::ReduceScatter, BlockKind::Ring, 4, Rational(8 * MiB));
  REQUIRE(steps.size() == 3);
  for (const auto& step : steps) {
    REQUIRE(step.sends.size() == 4);
    for (const auto& s : step.sends) {
      CHECK(s.bytes == Rational(2 * MiB));
      CHECK(s.dst == (s.src + 1) % 4);
    }
  }
  for (int slot = 0; slot < 4; ++slot) CHECK(slot_total(steps, slot) == Rational(6 * MiB));
}

TEST_CASE("halving-doubling pattern: k=4, 8 MiB") {
  auto steps =
      basic_phases(CollectiveKind::ReduceScatter, BlockKind::Switch, 4, Rational(8 * MiB));
  REQUIRE(steps.size() == 2);
  CHECK(steps[0].sends[0].bytes == Rational(4 * MiB));
  CHECK(steps[1].sends[0].bytes == Rational(2 * MiB));
  for (int slot = 0; slot < 4; ++slot) CHECK(slot_total(steps, slot) == Rational(6 * MiB));

  // Partner distances: 1 then 2 for the reduce pass, reversed for the gather.
  CHECK((steps[0].sends[0].src ^ steps[0].sends[0].dst) == 1);
  CHECK((steps[1].sends[0].src ^ steps[1].sends[0].dst) == 2);
  auto ag = basic_phases(CollectiveKind::AllGather, BlockKind::Switch, 4, Rational(8 * MiB));
  CHECK((ag[0].sends[0].src ^ ag[0].sends[0].dst) == 2);
  CHECK((ag[1].sends[0].src ^ ag[1].sends[0].dst) == 1);
}

TEST_CASE("direct pattern: k=2 pairwise exchange") {
  auto steps =
      basic_phases(CollectiveKind::ReduceScatter, BlockKind::FullyConnected, 2, Rational(64));
  REQUIRE(steps.size() == 1);
  REQUIRE(steps[0].sends.size() == 2);
  CHECK(steps[0].sends[0].bytes == Rational(32));
}

TEST_CASE("basic algorithm equivalence: total traffic is entering*(k-1)/k") {
  for (int k : {2, 4, 8}) {
    Rational entering(3 * MiB);
    Rational expected = entering * Rational(k - 1, k);
    for (BlockKind block :
         {BlockKind::Ring, BlockKind::FullyConnected, BlockKind::Switch}) {
      for (auto kind : {CollectiveKind::ReduceScatter, CollectiveKind::AllGather}) {
        auto steps = basic_phases(kind, block, k, entering);
        for (int slot = 0; slot < k; ++slot) CHECK(slot_total(steps, slot) == expected);
      }
    }
  }
}

TEST_CASE("basic_phases errors") {
  CHECK_THROWS_AS(basic_phases(CollectiveKind::AllReduce, BlockKind::Ring, 4, Rational(64)),
                  ValidationError);
  CHECK_THROWS_AS(basic_phases(CollectiveKind::AllToAll, BlockKind::Ring, 4, Rational(64)),
                  ValidationError);
  CHECK_THROWS_AS(
      basic_phases(CollectiveKind::ReduceScatter, BlockKind::Ring, 1, Rational(64)),
      ValidationError);
  CHECK_THROWS_AS(
      basic_phases(CollectiveKind::ReduceScatter, BlockKind::Switch, 6, Rational(64)),
      ValidationError);
}

TEST_CASE("per-dimension traffic reproduces the scale-up table") {
  const Rational total(1024 * MiB);
  struct Row {
    const char* shape;
    double mb[4];
  };
  const Row rows[] = {
      {"Ring(2)_FC(8)_Ring(8)_Switch(4)", {1024, 896, 112, 12}},
      {"Ring(2)_FC(8)_Ring(8)_Switch(8)", {1024, 896, 112, 14}},
      {"Ring(2)_FC(8)_Ring(8)_Switch(16)", {1024, 896, 112, 15}},
      {"Ring(2)_FC(8)_Ring(8)_Switch(32)", {1024, 896, 112, 15.5}},
      {"Ring(4)_FC(8)_Ring(8)_Switch(4)", {1536, 448, 56, 6}},
      {"Ring(8)_FC(8)_Ring(8)_Switch(4)", {1792, 224, 28, 3}},
      {"Ring(16)_FC(8)_Ring(8)_Switch(4)", {1920, 112, 14, 1.5}},
  };
  for (const auto& row : rows) {
    CAPTURE(row.shape);
    auto spec = topo(row.shape);
    auto traffic = per_dim_traffic(CollectiveKind::AllReduce, total, spec, full_scope(spec));
    REQUIRE(traffic.size() == 4);
    for (int d = 0; d < 4; ++d) {
      // Table values are exact in halves of a MB; compare as rationals.
      Rational expected = Rational(static_cast<long long>(row.mb[d] * 2), 2) * MiB;
      CHECK(traffic[d] == expected);
    }
  }
}

TEST_CASE("two-rank scope traffic") {
  auto spec = topo("Ring(2)");
  const long long D = 64 * MiB;
  CHECK(per_dim_traffic(CollectiveKind::AllReduce, Rational(D), spec, {1})[0] == Rational(D));
  CHECK(per_dim_traffic(CollectiveKind::ReduceScatter, Rational(D), spec, {1})[0] ==
        Rational(D / 2));
  CHECK(per_dim_traffic(CollectiveKind::AllGather, Rational(D), spec, {1})[0] ==
        Rational(D / 2));
  CHECK(per_dim_traffic(CollectiveKind::AllToAll, Rational(D), spec, {1})[0] ==
        Rational(D / 2));
}

TEST_CASE("alltoall traffic is size-invariant per dimension") {
  auto spec = topo("Ring(4)_FC(2)_Switch(2)");
  auto traffic =
      per_dim_traffic(CollectiveKind::AllToAll, Rational(16 * MiB), spec, full_scope(spec));
  CHECK(traffic[0] == Rational(16 * MiB) * Rational(3, 4));
  CHECK(traffic[1] == Rational(16 * MiB) * Rational(1, 2));
  CHECK(traffic[2] == Rational(16 * MiB) * Rational(1, 2));
}

TEST_CASE("per_dim_traffic errors") {
  auto spec = topo("Ring(4)_Ring(2)");
  CHECK_THROWS_AS(per_dim_traffic(CollectiveKind::AllReduce, Rational(64), spec, {}),
                  ValidationError);
  CHECK_THROWS_AS(per_dim_traffic(CollectiveKind::AllReduce, Rational(0), spec, {1}),
                  ValidationError);
  CHECK_THROWS_AS(per_dim_traffic(CollectiveKind::AllReduce, Rational(64), spec, {3}),
                  ValidationError);
}

TEST_CASE("allreduce plan phase order on Ring(4)_Ring(2)") {
  auto spec = topo("Ring(4)_Ring(2)");
  auto plan =
      plan_collective(CollectiveKind::AllReduce, Rational(8 * MiB), spec, full_scope(spec), 1);
  auto phases = plan.phases();
  REQUIRE(phases.size() == 8);  // 3 + 1 + 1 + 3
  int expected_dim[] = {1, 1, 1, 2, 2, 1, 1, 1};
  for (int i = 0; i < 8; ++i) CHECK(phases[i].dim_index == expected_dim[i]);
  // Sends in a phase stay within one group of that dimension.
  for (const auto& phase : phases)
    for (const auto& s : phase.sends) {
      auto group = dim_group(s.src, phase.dim_index, spec);
      CHECK(std::find(group.begin(), group.end(), s.dst) != group.end());
    }
}

TEST_CASE("single-dimension scope touches only that dimension") {
  auto spec = topo("Ring(4)_Switch(2)");
  auto plan = plan_collective(CollectiveKind::AllGather, Rational(4 * MiB), spec, {2}, 1);
  for (const auto& phase : plan.phases()) CHECK(phase.dim_index == 2);
  CHECK(plan.schedule.group_size == 2);
}

TEST_CASE("direct allreduce on FC(4)") {
  auto spec = topo("FC(4)");
  auto plan = plan_collective(CollectiveKind::AllReduce, Rational(4 * MiB), spec, {1}, 1);
  auto phases = plan.phases();
  REQUIRE(phases.size() == 2);  // one reduce phase, one gather phase
  for (const auto& phase : phases) {
    REQUIRE(phase.sends.size() == 12);  // 4 NPUs x 3 peers
    for (const auto& s : phase.sends) CHECK(s.bytes == Rational(1 * MiB));
  }
}

TEST_CASE("allreduce plan is reduce-scatter plan followed by all-gather plan") {
  auto spec = topo("Ring(3)_Switch(4)");
  const Rational bytes(12 * MiB);
  auto ar = plan_collective(CollectiveKind::AllReduce, bytes, spec, full_scope(spec), 1);
  auto rs = plan_collective(CollectiveKind::ReduceScatter, bytes, spec, full_scope(spec), 1);
  auto ag = plan_collective(CollectiveKind::AllGather, bytes, spec, full_scope(spec), 1);
  auto pa = ar.phases();
  auto pr = rs.phases();
  auto pg = ag.phases();
  REQUIRE(pa.size() == pr.size() + pg.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const Phase& expect = i < pr.size() ? pr[i] : pg[i - pr.size()];
    CHECK(pa[i].dim_index == expect.dim_index);
    CHECK(pa[i].step == expect.step);
    REQUIRE(pa[i].sends.size() == expect.sends.size());
    for (std::size_t s = 0; s < pa[i].sends.size(); ++s) {
      CHECK(pa[i].sends[s].src == expect.sends[s].src);
      CHECK(pa[i].sends[s].dst == expect.sends[s].dst);
      CHECK(pa[i].sends[s].bytes == expect.sends[s].bytes);
    }
  }
}

TEST_CASE("plan traffic matches the closed form per slot") {
  for (const char* shape : {"Ring(4)_Ring(2)", "Ring(3)_FC(2)_Switch(2)", "Switch(8)",
                            "FC(5)"}) {
    auto spec = topo(shape);
    for (auto kind : {CollectiveKind::ReduceScatter, CollectiveKind::AllGather,
                      CollectiveKind::AllReduce, CollectiveKind::AllToAll}) {
      CAPTURE(shape);
      CAPTURE(collective_name(kind));
      auto plan = plan_collective(kind, Rational(30 * MiB), spec, full_scope(spec), 4);
      auto expected = per_dim_traffic(kind, Rational(30 * MiB), spec, full_scope(spec));
      auto per_slot = plan.per_slot_dim_traffic(spec.dim_count());
      for (const auto& row : per_slot)
        for (int d = 0; d < spec.dim_count(); ++d) REQUIRE(row[d] == expected[d]);
      for (const auto& stage : plan.schedule.stages)
        for (const auto& step : stage.steps)
          for (const auto& s : step.sends) REQUIRE(s.bytes > Rational(0));
    }
  }
}

TEST_CASE("verify_plan accepts correct plans") {
  auto spec = topo("Ring(4)");
  auto plan =
      plan_collective(CollectiveKind::AllReduce, Rational(8 * MiB), spec, full_scope(spec), 1);
  auto verdict = verify_plan(plan, spec);
  CHECK(verdict.ok);

  auto spec2 = topo("FC(2)");
  auto rs = plan_collective(CollectiveKind::ReduceScatter, Rational(64), spec2, {1}, 1);
  CHECK(verify_plan(rs, spec2).ok);
}

TEST_CASE("label state starts with the right holdings") {
  // RS/AR: every slot holds all shards with itself as the only contributor.
  auto rs = ChunkLabelState::initial(CollectiveKind::ReduceScatter, 4);
  for (std::size_t g = 0; g < 4; ++g) {
    CHECK(rs.holdings[g].size() == 4);
    for (const auto& [id, mask] : rs.holdings[g]) CHECK(mask == (1ULL << g));
  }
  // AG: just its own shard. A2A: one fragment per destination.
  auto ag = ChunkLabelState::initial(CollectiveKind::AllGather, 4);
  for (std::size_t g = 0; g < 4; ++g) CHECK(ag.holdings[g].size() == 1);
  auto a2a = ChunkLabelState::initial(CollectiveKind::AllToAll, 4);
  for (std::size_t g = 0; g < 4; ++g) CHECK(a2a.holdings[g].size() == 4);
}

TEST_CASE("verify_plan rejects a corrupted gather order") {
  auto spec = topo("Ring(4)_Switch(2)");
  auto plan =
      plan_collective(CollectiveKind::AllReduce, Rational(8 * MiB), spec, full_scope(spec), 1);
  REQUIRE(verify_plan(plan, spec).ok);

  // Flip the two all-gather stages so the pass ascends instead of descending.
  auto broken = plan;
  auto& stages = broken.schedule.stages;
  REQUIRE(stages.size() == 4);
  std::swap(stages[2], stages[3]);
  auto verdict = verify_plan(broken, spec);
  CHECK_FALSE(verdict.ok);
  CHECK(verdict.first_bad_npu >= 0);
  CHECK_FALSE(verdict.message.empty());

  // Retargeting a send outside its dimension group is also caught.
  auto misrouted = plan;
  auto& send = misrouted.schedule.stages[0].steps[0].sends[0];
  send.dst = static_cast<int>(misrouted.schedule.group_size) - 1 - send.src;
  auto v2 = verify_plan(misrouted, spec);
  CHECK_FALSE(v2.ok);
  CHECK(v2.message.find("group") != std::string::npos);
}

TEST_CASE("verify_plan exhaustive small sweep") {
  // All 1-2 dimension shapes over the three blocks with tiny sizes.
  const char* shapes[] = {"Ring(2)",          "Ring(3)",         "FC(2)",
                          "FC(4)",            "Switch(2)",       "Switch(4)",
                          "Ring(2)_FC(3)",    "FC(2)_Switch(4)", "Switch(2)_Ring(4)",
                          "Ring(3)_Switch(2)"};
  for (const char* shape : shapes) {
    auto spec = topo(shape);
    for (auto kind : {CollectiveKind::ReduceScatter, CollectiveKind::AllGather,
                      CollectiveKind::AllReduce, CollectiveKind::AllToAll}) {
      CAPTURE(shape);
      CAPTURE(collective_name(kind));
      auto plan = plan_collective(kind, Rational(spec.npu_count() * 840), spec,
                                  full_scope(spec), 1);
      auto verdict = verify_plan(plan, spec);
      CHECK_MESSAGE(verdict.ok, verdict.message);
    }
  }
}

TEST_CASE("plan errors") {
  auto spec = topo("Ring(4)");
  CHECK_THROWS_AS(plan_collective(CollectiveKind::AllReduce, Rational(64), spec, {1}, 0),
                  ValidationError);
  CHECK_THROWS_AS(plan_collective(CollectiveKind::AllReduce, Rational(0), spec, {1}, 1),
                  ValidationError);
  CHECK_THROWS_AS(plan_collective(CollectiveKind::AllReduce, Rational(64), spec, {}, 1),
                  ValidationError);
  CHECK_THROWS_AS(plan_collective(CollectiveKind::AllReduce, Rational(64), spec, {1, 1}, 1),
                  ValidationError);
}

TEST_SUITE_END();
