#include <doctest.h>

#include <algorithm>
#include <random>

#include "hiersim/config.hpp"
#include "hiersim/engine.hpp"
#include "hiersim/generators.hpp"

using namespace hiersim;

namespace {

constexpr long long GBps = 1LL << 30;
constexpr long long MiB = 1 << 20;
constexpr long long GiB = 1LL << 30;

TopologySpec topo(const std::string& text, long long bw = 1 * GBps) {
  int dims = 1 + static_cast<int>(std::count(text.begin(), text.end(), '_'));
  return parse_topology(text, std::vector<long long>(dims, bw));
}

NpuSpec default_npu() {
  NpuSpec npu;
  npu.peak_flops = 1'000'000'000'000LL;  // 1 TFLOPS: 1 flop per ps
  npu.local_mem.bandwidth = 1 * GBps;
  npu.local_mem.access_latency_ns = 0;
  return npu;
}

TraceNode compute_node(Rank npu, long long id, long long flops,
                       std::vector<long long> deps = {}) {
  TraceNode n;
  n.npu = npu;
  n.id = id;
  n.kind = NodeKind::Compute;
  n.flops = flops;
  n.deps = std::move(deps);
  return n;
}

TraceNode coll_node(Rank npu, long long id, CollectiveKind kind, long long bytes,
                    std::vector<int> scope, long long tag, std::vector<long long> deps = {}) {
  TraceNode n;
  n.npu = npu;
  n.id = id;
  n.kind = NodeKind::CollectiveComm;
  n.coll = kind;
  n.comm_bytes = bytes;
  n.scope_dims = std::move(scope);
  n.tag = tag;
  n.deps = std::move(deps);
  return n;
}

ScenarioConfig make_config(TopologySpec spec, TraceFile trace, int chunks = 1) {
  ScenarioConfig cfg;
  cfg.topology = std::move(spec);
  cfg.npu = default_npu();
  cfg.trace = std::move(trace);
  cfg.chunk_count = chunks;
  return cfg;
}

}  // namespace

TEST_SUITE_BEGIN("engine");

TEST_CASE("roofline time") {
  NpuSpec a100;
  a100.peak_flops = 234'000'000'000'000LL;
  a100.local_mem.bandwidth = 4096 * GBps;
  CHECK(roofline_time_ns(0, 0, a100) == 0);
  CHECK(roofline_time_ns(234'000'000'000'000LL, 0, a100) == 1'000'000'000);  // one second

  NpuSpec big;
  big.peak_flops = 2048'000'000'000'000LL;
  big.local_mem.bandwidth = 4096 * GBps;
  // 1e12 flops: 488281.25 ns compute arm; 4 GiB: 976562.5 ns memory arm.
  CHECK(roofline_time_ns(1'000'000'000'000LL, 0, big) == 488'282);
  CHECK(roofline_time_ns(1'000'000'000'000LL, 4 * GiB, big) == 976'563);  // memory-bound
}

TEST_CASE("ready relation") {
  NpuGraph graph;
  SUBCASE("empty graph") {
    graph.finalize();
    CHECK(graph.ready().empty());
    CHECK(graph.all_complete());
  }

  SUBCASE("diamond") {
    auto a = compute_node(0, 0, 1);
    auto b = compute_node(0, 1, 1, {0});
    auto c = compute_node(0, 2, 1, {0});
    auto d = compute_node(0, 3, 1, {1, 2});
    for (const auto* n : {&a, &b, &c, &d}) graph.add(n);
    graph.finalize();
    CHECK(graph.ready() == std::vector<long long>{0});
    graph.mark_issued(0);
    CHECK(graph.mark_complete(0) == std::vector<long long>{1, 2});
    CHECK(graph.ready() == std::vector<long long>{1, 2});
    graph.mark_issued(1);
    graph.mark_issued(2);
    CHECK(graph.mark_complete(1).empty());
    CHECK(graph.mark_complete(2) == std::vector<long long>{3});
    graph.mark_issued(3);
    graph.mark_complete(3);
    CHECK(graph.all_complete());
  }

  SUBCASE("chain exposes only the head") {
    auto a = compute_node(0, 0, 1);
    auto b = compute_node(0, 1, 1, {0});
    auto c = compute_node(0, 2, 1, {1});
    for (const auto* n : {&a, &b, &c}) graph.add(n);
    graph.finalize();
    CHECK(graph.ready() == std::vector<long long>{0});
  }
}

TEST_CASE("compute-only trace") {
  TraceFile trace;
  trace.npu_count = 2;
  for (Rank npu = 0; npu < 2; ++npu)
    trace.nodes.push_back(compute_node(npu, 0, 1'000'000'000));
  auto report = run_simulation(make_config(topo("Ring(2)"), trace));
  CHECK(report.makespan_ns == 1'000'000);  // 1e6 flops at 1 TFLOPS
  for (const auto& b : report.per_npu) {
    CHECK(b.compute == 1'000'000);
    CHECK(b.comm == 0);
    CHECK(b.idle == 0);
  }
}

TEST_CASE("empty trace has zero makespan") {
  TraceFile trace;
  trace.npu_count = 2;
  auto report = run_simulation(make_config(topo("Ring(2)"), trace));
  CHECK(report.makespan_ns == 0);
}

TEST_CASE("ring allreduce matches the phase-sum closed form") {
  // 8 MiB over Ring(4) at 1 GB/s, one chunk: six steps of 2 MiB.
  TraceFile trace = gen_microbench(CollectiveKind::AllReduce, 8 * MiB, topo("Ring(4)"));
  auto report = run_simulation(make_config(topo("Ring(4)"), trace));
  CHECK(report.makespan_ns == 11'718'750);
  // Exactly 2 * D * (k-1)/k / BW.
  CHECK(Rational(report.makespan_ns) ==
        Rational(2 * 8 * MiB) * Rational(3, 4) / Rational(1 * GBps) * Rational(1'000'000'000));
  REQUIRE(report.collectives.size() == 1);
  CHECK(report.collectives[0].kind == CollectiveKind::AllReduce);
  CHECK(report.collectives[0].bytes == 8 * MiB);
  CHECK(report.collectives[0].start == 0);
  CHECK(report.collectives[0].end == report.makespan_ns);
  // Per-step round-up at 100 GB/s: 6 * ceil(19531.25).
  TraceFile t2 = gen_microbench(CollectiveKind::AllReduce, 8 * MiB, topo("Ring(4)"));
  auto r2 = run_simulation(make_config(topo("Ring(4)", 100 * GBps), t2));
  CHECK(r2.makespan_ns == 6 * 19'532);
}

TEST_CASE("doubling every bandwidth halves a pure collective time") {
  auto trace = gen_microbench(CollectiveKind::AllReduce, 64 * MiB, topo("Ring(4)_Switch(2)"));
  auto slow = run_simulation(make_config(topo("Ring(4)_Switch(2)", 1 * GBps), trace, 4));
  auto fast = run_simulation(make_config(topo("Ring(4)_Switch(2)", 2 * GBps), trace, 4));
  CHECK(slow.makespan_ns == 2 * fast.makespan_ns);
}

TEST_CASE("engine traffic equals the closed form and the event log") {
  auto spec = topo("Ring(2)_FC(4)");
  auto trace = gen_microbench(CollectiveKind::AllReduce, 16 * MiB, spec);
  std::vector<SendLogEntry> log;
  auto report = run_simulation(make_config(spec, trace, 2),
                               [&log](const SendLogEntry& e) { log.push_back(e); });
  auto expected = per_dim_traffic(CollectiveKind::AllReduce, Rational(16 * MiB), spec, {1, 2});
  for (const auto& row : report.per_npu_dim_traffic) {
    CHECK(row[0] == expected[0]);
    CHECK(row[1] == expected[1]);
  }
  std::vector<Rational> from_log(2, Rational(0));
  for (const auto& e : log)
    if (e.src == 0) from_log[e.dim - 1] += e.bytes;
  CHECK(from_log[0] == expected[0]);
  CHECK(from_log[1] == expected[1]);
}

TEST_CASE("collective hidden under compute exposes no comm") {
  auto spec = topo("Ring(2)");
  // Collective: 4 MiB AllReduce at 1 GB/s = 3,906,250 ns. Compute: twice that.
  TraceFile trace;
  trace.npu_count = 2;
  for (Rank npu = 0; npu < 2; ++npu) {
    trace.nodes.push_back(compute_node(npu, 0, 7'812'500'000LL));
    trace.nodes.push_back(coll_node(npu, 1, CollectiveKind::AllReduce, 4 * MiB, {1}, 0));
  }
  auto report = run_simulation(make_config(spec, trace));
  CHECK(report.makespan_ns == 7'812'500);
  for (const auto& b : report.per_npu) {
    CHECK(b.compute == 7'812'500);
    CHECK(b.comm == 0);
    CHECK(b.idle == 0);
  }

  // The same collective alone is fully exposed.
  TraceFile alone;
  alone.npu_count = 2;
  for (Rank npu = 0; npu < 2; ++npu)
    alone.nodes.push_back(coll_node(npu, 0, CollectiveKind::AllReduce, 4 * MiB, {1}, 0));
  auto exposed = run_simulation(make_config(spec, alone));
  CHECK(exposed.makespan_ns == 3'906'250);
  for (const auto& b : exposed.per_npu) CHECK(b.comm == 3'906'250);
}

TEST_CASE("breakdown components sum to the makespan") {
  auto spec = topo("Ring(2)_Ring(2)");
  auto model = ModelShape::uniform(3, 2'000'000'000, 8 * MiB, 2 * MiB);
  auto trace = gen_hybrid_trace(model, spec, {1}, {2});
  auto cfg = make_config(spec, trace, 2);
  auto report = run_simulation(cfg);
  CHECK(report.makespan_ns > 0);
  for (const auto& b : report.per_npu) CHECK(b.total() == report.makespan_ns);
}

TEST_CASE("memory nodes use the pool and the breakdown classes") {
  auto spec = topo("Ring(2)");
  MemoryPoolSpec pool;
  pool.num_nodes = 1;
  pool.gpus_per_node = 2;
  pool.num_out_switches = 1;
  pool.num_remote_groups = 2;
  pool.chunk_size = 1 * MiB;
  pool.in_node_fabric_bw = 2 * GBps;
  pool.gpu_side_out_fabric_bw = 2 * GBps;
  pool.mem_side_out_fabric_bw = 1 * GBps;
  pool.remote_group_bw = 1 * GBps;

  TraceFile trace;
  trace.npu_count = 2;
  for (Rank npu = 0; npu < 2; ++npu) {
    TraceNode local;
    local.npu = npu;
    local.id = 0;
    local.kind = NodeKind::MemoryAccess;
    local.location = MemLocation::Local;
    local.direction = MemDirection::Load;
    local.tensor_bytes = 2 * MiB;
    TraceNode remote;
    remote.npu = npu;
    remote.id = 1;
    remote.kind = NodeKind::MemoryAccess;
    remote.location = MemLocation::Remote;
    remote.direction = MemDirection::Store;
    remote.tensor_bytes = 8 * MiB;
    remote.deps = {0};
    trace.nodes.push_back(local);
    trace.nodes.push_back(remote);
  }

  auto cfg = make_config(spec, trace);
  cfg.pool = pool;
  auto report = run_simulation(cfg);
  long long local_ns = local_access_time_ns(2 * MiB, cfg.npu.local_mem);
  long long remote_ns = remote_access_time_ns(8 * MiB, pool, MemDirection::Store);
  CHECK(report.makespan_ns == local_ns + remote_ns);
  for (const auto& b : report.per_npu) {
    CHECK(b.local_mem == local_ns);
    CHECK(b.remote_mem == remote_ns);
    CHECK(b.total() == report.makespan_ns);
  }

  // The in-switch flag switches the remote path to the gather equations.
  auto insw_trace = trace;
  for (auto& n : insw_trace.nodes)
    if (n.kind == NodeKind::MemoryAccess && n.location == MemLocation::Remote)
      n.in_switch = true;
  auto insw_cfg = make_config(spec, insw_trace);
  insw_cfg.pool = pool;
  auto insw_report = run_simulation(insw_cfg);
  CHECK(insw_report.makespan_ns ==
        local_ns + in_switch_collective_time_ns(8 * MiB, pool, CollectiveKind::ReduceScatter));

  // A per-GPU-channel pool times remote nodes over the private channel.
  auto chan_cfg = make_config(spec, trace);
  auto chan_pool = pool;
  chan_pool.style = MemoryPoolSpec::Style::PerGpuChannel;
  chan_pool.access_latency_ns = 300;
  chan_cfg.pool = chan_pool;
  auto chan_report = run_simulation(chan_cfg);
  CHECK(chan_report.makespan_ns ==
        local_ns + zero_infinity_access_time_ns(8 * MiB, chan_pool.remote_group_bw, 300));

  // In-switch against a per-GPU channel pool and remote traffic without any
  // pool are configuration errors.
  auto bad_style = insw_cfg;
  bad_style.pool = chan_pool;
  CHECK_THROWS_AS(run_simulation(bad_style), ValidationError);
  auto bad = make_config(topo("Ring(2)"), trace);
  CHECK_THROWS_AS(run_simulation(bad), ValidationError);
}

TEST_CASE("scoped communication stays inside its dimensions") {
  auto spec = topo("Ring(2)_Ring(2)");
  auto model = ModelShape::uniform(2, 1'000'000, 4 * MiB, 1 * MiB);
  auto trace = gen_dp_trace(model, spec, {1});
  std::vector<int> dims_seen;
  run_simulation(make_config(spec, trace, 2),
                 [&dims_seen](const SendLogEntry& e) { dims_seen.push_back(e.dim); });
  REQUIRE_FALSE(dims_seen.empty());
  for (int d : dims_seen) CHECK(d == 1);

  // Scope {1,2} on a 3D topology leaves dimension 3 silent.
  auto spec3 = topo("Ring(2)_Switch(2)_Ring(3)");
  auto trace3 = gen_dp_trace(model, spec3, {1, 2});
  dims_seen.clear();
  run_simulation(make_config(spec3, trace3, 2),
                 [&dims_seen](const SendLogEntry& e) { dims_seen.push_back(e.dim); });
  REQUIRE_FALSE(dims_seen.empty());
  for (int d : dims_seen) CHECK(d != 3);
}

TEST_CASE("identical configs produce byte-identical reports and event logs") {
  auto spec = topo("Ring(2)_Switch(2)");
  auto model = ModelShape::uniform(2, 3'000'000'000, 8 * MiB, 4 * MiB);
  auto trace = gen_hybrid_trace(model, spec, {1}, {2});
  auto cfg = make_config(spec, trace, 4);
  auto log_of = [&cfg] {
    std::string log;
    auto report = run_simulation(cfg, [&log](const SendLogEntry& e) {
      log += std::to_string(e.time) + " " + std::to_string(e.src) + ">" +
             std::to_string(e.dst) + " d" + std::to_string(e.dim) + " " +
             e.bytes.to_string() + "\n";
    });
    return std::pair{report_to_json(report, "x"), log};
  };
  auto [ra, la] = log_of();
  auto [rb, lb] = log_of();
  CHECK(ra == rb);
  CHECK(la == lb);
  CHECK_FALSE(la.empty());
}

TEST_CASE("zero-byte collectives synchronize at no cost") {
  auto spec = topo("Ring(2)");
  TraceFile trace;
  trace.npu_count = 2;
  for (Rank npu = 0; npu < 2; ++npu) {
    trace.nodes.push_back(compute_node(npu, 0, 1'000'000'000));
    trace.nodes.push_back(coll_node(npu, 1, CollectiveKind::AllReduce, 0, {1}, 0, {0}));
    trace.nodes.push_back(compute_node(npu, 2, 2'000'000'000, {1}));
  }
  auto report = run_simulation(make_config(spec, trace));
  // Communication vanished: the makespan is the compute critical path.
  CHECK(report.makespan_ns == 3'000'000);
  for (const auto& b : report.per_npu) CHECK(b.comm == 0);
}

TEST_CASE("removing any dependency edge never increases the makespan (random DAGs)") {
  // Fixed-seed random compute/memory DAGs; drop each edge in turn.
  std::mt19937_64 rng(20240811);
  auto spec = topo("Ring(2)");
  for (int trial = 0; trial < 12; ++trial) {
    const int n = 6 + static_cast<int>(rng() % 5);
    std::vector<long long> flops(n);
    std::vector<std::vector<long long>> deps(n);
    for (int i = 0; i < n; ++i) {
      flops[i] = 500'000'000 + static_cast<long long>(rng() % 4'000'000'000ULL);
      for (int j = 0; j < i; ++j)
        if (rng() % 3 == 0) deps[i].push_back(j);
    }
    auto build = [&](int skip_node, std::size_t skip_edge) {
      TraceFile trace;
      trace.npu_count = 2;
      for (Rank npu = 0; npu < 2; ++npu)
        for (int i = 0; i < n; ++i) {
          auto d = deps[i];
          if (i == skip_node && skip_edge < d.size())
            d.erase(d.begin() + static_cast<long long>(skip_edge));
          trace.nodes.push_back(compute_node(npu, i, flops[i], std::move(d)));
        }
      return trace;
    };
    auto baseline = run_simulation(make_config(spec, build(-1, 0))).makespan_ns;
    for (int i = 0; i < n; ++i)
      for (std::size_t e = 0; e < deps[i].size(); ++e) {
        CAPTURE(trial);
        CAPTURE(i);
        CAPTURE(e);
        auto pruned = run_simulation(make_config(spec, build(i, e))).makespan_ns;
        REQUIRE(pruned <= baseline);
      }
  }
}

TEST_CASE("removing a dependency edge never increases the makespan") {
  auto spec = topo("Ring(2)");
  // Mixed-duration DAG: a -> b -> d, a -> c -> d.
  auto build = [&](bool with_bc_edge) {
    TraceFile trace;
    trace.npu_count = 2;
    for (Rank npu = 0; npu < 2; ++npu) {
      trace.nodes.push_back(compute_node(npu, 0, 5'000'000));
      trace.nodes.push_back(compute_node(npu, 1, 2'000'000, {0}));
      trace.nodes.push_back(
          compute_node(npu, 2, 9'000'000, with_bc_edge ? std::vector<long long>{0, 1}
                                                       : std::vector<long long>{0}));
      trace.nodes.push_back(compute_node(npu, 3, 1'000'000, {1, 2}));
    }
    return trace;
  };
  auto with_edge = run_simulation(make_config(spec, build(true)));
  auto without = run_simulation(make_config(spec, build(false)));
  CHECK(without.makespan_ns <= with_edge.makespan_ns);

  // Freeing a collective from its compute dependency can only help.
  auto coll_build = [&](bool dep) {
    TraceFile trace;
    trace.npu_count = 2;
    for (Rank npu = 0; npu < 2; ++npu) {
      trace.nodes.push_back(compute_node(npu, 0, 2'000'000));
      trace.nodes.push_back(coll_node(npu, 1, CollectiveKind::AllReduce, 4 * MiB, {1}, 0,
                                      dep ? std::vector<long long>{0}
                                          : std::vector<long long>{}));
    }
    return trace;
  };
  auto gated = run_simulation(make_config(spec, coll_build(true)));
  auto free_run = run_simulation(make_config(spec, coll_build(false)));
  CHECK(free_run.makespan_ns <= gated.makespan_ns);
}

TEST_CASE("staggered group arrival delays the transfer, not the peers' posts") {
  // NPU0 reaches the collective after 1 ms of compute; NPU1 posts at t=0 and
  // waits. The transfers begin at the rendezvous.
  auto spec = topo("Ring(2)");
  TraceFile trace;
  trace.npu_count = 2;
  trace.nodes.push_back(compute_node(0, 0, 1'000'000'000));
  trace.nodes.push_back(coll_node(0, 1, CollectiveKind::AllReduce, 4 * MiB, {1}, 0, {0}));
  trace.nodes.push_back(coll_node(1, 0, CollectiveKind::AllReduce, 4 * MiB, {1}, 0));
  auto report = run_simulation(make_config(spec, trace));
  CHECK(report.makespan_ns == 1'000'000 + 3'906'250);
  CHECK(report.per_npu[0].comm == 3'906'250);       // hidden behind nothing, runs after compute
  CHECK(report.per_npu[1].comm == 4'906'250);       // includes the wait for the straggler
  REQUIRE(report.collectives.size() == 1);
  CHECK(report.collectives[0].start == 0);          // first arrival
  CHECK(report.collectives[0].end == report.makespan_ns);
}

TEST_CASE("concurrent collectives serialize on the shared port") {
  auto spec = topo("Ring(2)");
  TraceFile trace;
  trace.npu_count = 2;
  for (Rank npu = 0; npu < 2; ++npu) {
    trace.nodes.push_back(coll_node(npu, 0, CollectiveKind::AllReduce, 4 * MiB, {1}, 1));
    trace.nodes.push_back(coll_node(npu, 1, CollectiveKind::AllReduce, 4 * MiB, {1}, 2));
  }
  auto report = run_simulation(make_config(spec, trace));
  // Each costs 3,906,250 ns of dimension-1 port time; they cannot overlap.
  CHECK(report.makespan_ns == 2 * 3'906'250);
  for (const auto& b : report.per_npu) CHECK(b.comm == report.makespan_ns);
}

TEST_CASE("pipeline schedule: fill plus steady state") {
  // Two stages with equal fwd/bwd times T and zero-byte boundary traffic.
  // Forward side drains at (M + 1) * T; the backward wave mirrors it, and the
  // first stage finishes its last backward at (2M + 2) * T.
  auto spec = topo("Ring(2)");
  auto model = ModelShape::uniform(2, 1'000'000'000, 0, 0, 1'000'000'000);
  const int microbatches = 3;
  auto trace = gen_pipeline_trace(model, spec, 2, microbatches);
  auto report = run_simulation(make_config(spec, trace));
  const TimeNs T = 1'000'000;
  CHECK(report.makespan_ns == (2 * microbatches + 2) * T);
}

TEST_CASE("peer communication follows the network contract") {
  auto spec = topo("Ring(4)");
  TraceFile trace;
  trace.npu_count = 4;
  TraceNode send;
  send.npu = 0;
  send.id = 0;
  send.kind = NodeKind::PeerComm;
  send.peer_dir = PeerDirection::Send;
  send.peer = 1;
  send.comm_bytes = 2 * MiB;
  send.tag = 7;
  TraceNode recv;
  recv.npu = 1;
  recv.id = 0;
  recv.kind = NodeKind::PeerComm;
  recv.peer_dir = PeerDirection::Recv;
  recv.peer = 0;
  recv.comm_bytes = 2 * MiB;
  recv.tag = 7;
  trace.nodes.push_back(send);
  trace.nodes.push_back(recv);
  auto report = run_simulation(make_config(spec, trace));
  CHECK(report.makespan_ns == 1'953'125);  // 2 MiB at 1 GB/s

  // Without the matching recv the run deadlocks and names the pair.
  TraceFile broken;
  broken.npu_count = 4;
  broken.nodes.push_back(send);
  try {
    run_simulation(make_config(spec, broken));
    FAIL("expected DeadlockError");
  } catch (const DeadlockError& e) {
    REQUIRE_FALSE(e.parked().empty());
    CHECK(e.parked()[0].find("0 -> 1") != std::string::npos);
  }
}

TEST_CASE("collective group mismatch aborts with a diagnostic") {
  auto spec = topo("Ring(2)");
  TraceFile trace;
  trace.npu_count = 2;
  trace.nodes.push_back(coll_node(0, 0, CollectiveKind::AllReduce, 4 * MiB, {1}, 3));
  trace.nodes.push_back(coll_node(1, 0, CollectiveKind::AllReduce, 8 * MiB, {1}, 3));
  CHECK_THROWS_WITH_AS(run_simulation(make_config(spec, trace)),
                       doctest::Contains("disagree"), ValidationError);

  // A member posting the same tag twice concurrently is rejected.
  TraceFile dup;
  dup.npu_count = 2;
  dup.nodes.push_back(coll_node(0, 0, CollectiveKind::AllReduce, 4 * MiB, {1}, 3));
  dup.nodes.push_back(coll_node(0, 1, CollectiveKind::AllReduce, 4 * MiB, {1}, 3));
  dup.nodes.push_back(coll_node(1, 0, CollectiveKind::AllReduce, 4 * MiB, {1}, 3));
  CHECK_THROWS_WITH_AS(run_simulation(make_config(spec, dup)),
                       doctest::Contains("twice"), ValidationError);
}

TEST_CASE("missing group members deadlock with the tag named") {
  auto spec = topo("Ring(2)_Ring(2)");
  TraceFile trace;
  trace.npu_count = 4;
  // Only half the group posts the barrier.
  trace.nodes.push_back(coll_node(0, 0, CollectiveKind::AllReduce, 0, {1, 2}, 11));
  trace.nodes.push_back(coll_node(1, 0, CollectiveKind::AllReduce, 0, {1, 2}, 11));
  try {
    run_simulation(make_config(spec, trace));
    FAIL("expected DeadlockError");
  } catch (const DeadlockError& e) {
    bool named = false;
    for (const auto& p : e.parked())
      if (p.find("tag 11") != std::string::npos) named = true;
    CHECK(named);
  }
}

TEST_CASE("scenario validation") {
  auto spec = topo("Ring(2)");
  TraceFile trace;
  trace.npu_count = 4;  // mismatch
  auto cfg = make_config(spec, trace);
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("topology has 2"), ValidationError);

  trace.npu_count = 2;
  auto cfg2 = make_config(spec, trace);
  cfg2.scheduler = "greedy";
  CHECK_THROWS_AS(cfg2.validate(), ValidationError);
  cfg2.scheduler = "fifo";
  cfg2.chunk_count = 0;
  CHECK_THROWS_AS(cfg2.validate(), ValidationError);
}

TEST_SUITE_END();
