#include "hiersim/engine.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <memory>
#include <sstream>
#include <tuple>

#include "hiersim/collectives.hpp"

namespace hiersim {

void NpuSpec::validate() const {
  if (peak_flops <= 0) throw ValidationError("npu: peak_flops must be positive");
  if (local_mem.bandwidth <= 0)
    throw ValidationError("npu: local memory bandwidth must be positive");
  if (local_mem.access_latency_ns < 0)
    throw ValidationError("npu: local memory latency must be non-negative");
}

long long roofline_time_ns(long long flops, long long tensor_bytes, const NpuSpec& npu) {
  if (flops < 0 || tensor_bytes < 0) throw ValidationError("roofline: negative operands");
  auto ceil_div = [](__int128 num, __int128 den) {
    return static_cast<long long>((num + den - 1) / den);
  };
  long long compute_ns =
      flops == 0 ? 0 : ceil_div(static_cast<__int128>(flops) * 1'000'000'000, npu.peak_flops);
  long long mem_ns = tensor_bytes == 0
                         ? 0
                         : ceil_div(static_cast<__int128>(tensor_bytes) * 1'000'000'000,
                                    npu.local_mem.bandwidth);
  return std::max(compute_ns, mem_ns);
}

void NpuGraph::add(const TraceNode* node) {
  if (finalized_) throw std::logic_error("NpuGraph: add after finalize");
  by_id_.emplace(node->id, entries_.size());
  entries_.push_back(Entry{node, static_cast<int>(node->deps.size()), false, false});
}

void NpuGraph::finalize() {
  children_.assign(entries_.size(), {});
  for (std::size_t i = 0; i < entries_.size(); ++i)
    for (long long dep : entries_[i].node->deps) children_[by_id_.at(dep)].push_back(i);
  finalized_ = true;
}

std::size_t NpuGraph::index_of(long long id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end())
    throw ValidationError("unknown node id " + std::to_string(id));
  return it->second;
}

std::vector<long long> NpuGraph::ready() const {
  std::vector<long long> out;
  for (const auto& e : entries_)
    if (!e.issued && e.pending == 0) out.push_back(e.node->id);
  return out;
}

void NpuGraph::mark_issued(long long id) {
  auto& e = entries_[index_of(id)];
  if (e.issued) throw std::logic_error("node issued twice");
  if (e.pending != 0) throw std::logic_error("node issued before its deps completed");
  e.issued = true;
}

std::vector<long long> NpuGraph::mark_complete(long long id) {
  std::size_t idx = index_of(id);
  auto& e = entries_[idx];
  if (!e.issued || e.done) throw std::logic_error("bad completion order");
  e.done = true;
  ++completed_;
  std::vector<long long> newly;
  for (std::size_t child : children_[idx])
    if (--entries_[child].pending == 0) newly.push_back(entries_[child].node->id);
  return newly;
}

bool NpuGraph::all_complete() const { return completed_ == entries_.size(); }

const TraceNode* NpuGraph::node(long long id) const { return entries_[index_of(id)].node; }

void ScenarioConfig::validate() const {
  topology.validate();
  npu.validate();
  trace.validate();
  if (chunk_count < 1) throw ValidationError("chunk_count must be >= 1");
  if (scheduler != "fifo")
    throw ValidationError("unknown scheduler policy '" + scheduler +
                          "' (only fifo is implemented)");
  if (trace.npu_count != topology.npu_count())
    throw ValidationError("trace has " + std::to_string(trace.npu_count) +
                          " NPUs but topology has " + std::to_string(topology.npu_count()));
  if (trace.max_scope_dim() > topology.dim_count())
    throw ValidationError("trace references dimension " +
                          std::to_string(trace.max_scope_dim()) + " but topology has " +
                          std::to_string(topology.dim_count()));
  bool wants_remote = false, wants_in_switch = false;
  for (const auto& n : trace.nodes)
    if (n.kind == NodeKind::MemoryAccess && n.location == MemLocation::Remote) {
      wants_remote = true;
      wants_in_switch |= n.in_switch;
    }
  if (wants_remote) {
    if (!pool) throw ValidationError("trace uses remote memory but no pool is configured");
    pool->validate();
    if (wants_in_switch && pool->style != MemoryPoolSpec::Style::Hierarchical)
      throw ValidationError("in-switch collectives require the hierarchical pool");
  }
}

namespace {

enum class ActClass : std::uint8_t { Compute = 0, LocalMem = 1, RemoteMem = 2, Comm = 3 };

struct Interval {
  TimeNs start;
  TimeNs end;
  ActClass cls;
};

struct ExecXfer {
  std::uint32_t src;
  std::uint32_t dst;
  Rational bytes;  // per chunk
};

struct ExecStep {
  std::vector<ExecXfer> xfers;         // sorted by src
  std::vector<std::uint32_t> out_off;  // size G+1
  std::vector<std::uint32_t> in_idx;   // xfer indices sorted by dst
  std::vector<std::uint32_t> in_off;   // size G+1
};

struct ExecStage {
  int dim = 0;
  std::vector<ExecStep> steps;
};

struct ExecSchedule {
  std::size_t group_size = 0;
  int chunk_count = 1;
  std::vector<ExecStage> stages;
  std::vector<std::vector<Rational>> slot_dim_traffic;  // totals across chunks
};

std::shared_ptr<ExecSchedule> build_exec_schedule(const CollectivePlan& plan, int dim_count) {
  auto exec = std::make_shared<ExecSchedule>();
  const std::size_t G = plan.schedule.group_size;
  exec->group_size = G;
  exec->chunk_count = plan.chunk_count;
  exec->slot_dim_traffic = plan.per_slot_dim_traffic(dim_count);

  for (const auto& stage : plan.schedule.stages) {
    ExecStage es;
    es.dim = stage.dim_index;
    for (const auto& step : stage.steps) {
      ExecStep e;
      e.xfers.reserve(step.sends.size());
      for (const auto& s : step.sends)
        e.xfers.push_back(ExecXfer{static_cast<std::uint32_t>(s.src),
                                   static_cast<std::uint32_t>(s.dst),
                                   s.bytes / plan.chunk_count});
      e.out_off.assign(G + 1, 0);
      for (const auto& x : e.xfers) ++e.out_off[x.src + 1];
      for (std::size_t i = 1; i <= G; ++i) e.out_off[i] += e.out_off[i - 1];

      e.in_idx.resize(e.xfers.size());
      e.in_off.assign(G + 1, 0);
      for (const auto& x : e.xfers) ++e.in_off[x.dst + 1];
      for (std::size_t i = 1; i <= G; ++i) e.in_off[i] += e.in_off[i - 1];
      std::vector<std::uint32_t> cursor(e.in_off.begin(), e.in_off.end() - 1);
      for (std::uint32_t i = 0; i < e.xfers.size(); ++i)
        e.in_idx[cursor[e.xfers[i].dst]++] = i;

      es.steps.push_back(std::move(e));
    }
    exec->stages.push_back(std::move(es));
  }
  return exec;
}

struct StageProgress {
  std::uint32_t chunks_done = 0;
  std::uint32_t chunk = 0;
  std::uint32_t step = 0;
  std::uint32_t pending = 0;
  bool active = false;
};

struct GroupOp {
  std::shared_ptr<ExecSchedule> sched;
  std::vector<Rank> members;
  std::vector<long long> ticket_of_slot;  // -1 until the member posts
  std::vector<StageProgress> progress;    // [slot * stages + stage]
  CollectiveKind kind = CollectiveKind::AllReduce;
  long long bytes = 0;
  long long tag = 0;
  Rank base = 0;
  std::vector<int> scope;
  std::size_t arrived = 0;
  std::size_t finished = 0;
  TimeNs first_arrival = 0;
};

constexpr std::uint64_t kInternalTagBit = 1ULL << 63;

std::uint64_t make_tag(std::uint64_t inst, std::uint32_t stage, std::uint32_t step,
                       std::uint32_t chunk) {
  return kInternalTagBit | (inst << 36) | (static_cast<std::uint64_t>(stage) << 32) |
         (static_cast<std::uint64_t>(step) << 20) | chunk;
}

// The packed tag layout above bounds what one plan may contain.
void check_tag_capacity(const ExecSchedule& sched) {
  if (sched.stages.size() >= 16)
    throw ValidationError("collective plan exceeds 15 stages");
  for (const auto& stage : sched.stages)
    if (stage.steps.size() >= 4096)
      throw ValidationError("collective stage exceeds 4095 steps");
  if (sched.chunk_count >= (1 << 20))
    throw ValidationError("chunk count exceeds the 2^20 tag capacity");
}

class Simulation {
 public:
  Simulation(const ScenarioConfig& config, SendLogSink log)
      : cfg_(config), net_(config.topology, queue_) {
    if (log) net_.set_send_log(std::move(log));
  }

  RunReport run();

 private:
  struct Ticket {
    const TraceNode* node;
    Rank npu;
    TimeNs start;
  };

  void issue(Rank npu, long long id);
  void dispatch(long long ticket);
  void finish_after(long long ticket, TimeNs delta, ActClass cls);
  void complete(long long ticket, ActClass cls);

  void dispatch_collective(long long ticket);
  void coll_try_start(std::size_t gidx, std::uint32_t slot, std::uint32_t stage);
  void coll_start_step(std::size_t gidx, std::uint32_t slot, std::uint32_t stage);
  void coll_op_done(std::uint64_t packed);

  Rank base_rank(const TraceNode& n) const;
  std::uint32_t slot_of(const TraceNode& n) const;
  const std::shared_ptr<ExecSchedule>& schedule_for(const TraceNode& n);

  BreakdownNs breakdown_for(const std::vector<Interval>& intervals, TimeNs makespan) const;

  const ScenarioConfig& cfg_;
  EventQueue queue_;
  Network net_;

  std::vector<NpuGraph> graphs_;
  std::deque<Ticket> tickets_;
  std::size_t nodes_total_ = 0;
  std::size_t nodes_done_ = 0;

  std::vector<std::vector<Interval>> intervals_;
  std::vector<std::vector<Rational>> traffic_;
  std::vector<CollectiveRecord> records_;

  std::deque<GroupOp> groups_;
  std::map<std::pair<long long, Rank>, std::size_t> active_groups_;  // (tag, base) -> index
  std::map<std::tuple<int, long long, std::string, int>, std::shared_ptr<ExecSchedule>>
      schedule_cache_;
};

Rank Simulation::base_rank(const TraceNode& n) const {
  auto coords = rank_to_coords(n.npu, cfg_.topology);
  for (int d : n.scope_dims) coords[d - 1] = 0;
  return coords_to_rank(coords, cfg_.topology);
}

std::uint32_t Simulation::slot_of(const TraceNode& n) const {
  auto coords = rank_to_coords(n.npu, cfg_.topology);
  std::vector<int> scope = n.scope_dims;
  std::sort(scope.begin(), scope.end());
  std::uint64_t slot = 0, stride = 1;
  for (int d : scope) {
    slot += static_cast<std::uint64_t>(coords[d - 1]) * stride;
    stride *= cfg_.topology.dims[d - 1].size;
  }
  return static_cast<std::uint32_t>(slot);
}

const std::shared_ptr<ExecSchedule>& Simulation::schedule_for(const TraceNode& n) {
  std::vector<int> scope = n.scope_dims;
  std::sort(scope.begin(), scope.end());
  std::string scope_key;
  for (int d : scope) scope_key += std::to_string(d) + ",";
  auto key = std::make_tuple(static_cast<int>(n.coll), n.comm_bytes, scope_key, cfg_.chunk_count);
  auto it = schedule_cache_.find(key);
  if (it == schedule_cache_.end()) {
    auto plan = plan_collective(n.coll, Rational(n.comm_bytes), cfg_.topology, scope,
                                cfg_.chunk_count);
    auto exec = build_exec_schedule(plan, cfg_.topology.dim_count());
    check_tag_capacity(*exec);
    it = schedule_cache_.emplace(key, std::move(exec)).first;
  }
  return it->second;
}

void Simulation::issue(Rank npu, long long id) {
  graphs_[npu].mark_issued(id);
  tickets_.push_back(Ticket{graphs_[npu].node(id), npu, queue_.now()});
  dispatch(static_cast<long long>(tickets_.size()) - 1);
}

void Simulation::dispatch(long long ticket) {
  Ticket& t = tickets_[ticket];
  const TraceNode& n = *t.node;
  switch (n.kind) {
    case NodeKind::Compute:
      finish_after(ticket, roofline_time_ns(n.flops, n.tensor_bytes, cfg_.npu),
                   ActClass::Compute);
      break;
    case NodeKind::MemoryAccess: {
      if (n.location == MemLocation::Local) {
        finish_after(ticket, local_access_time_ns(n.tensor_bytes, cfg_.npu.local_mem),
                     ActClass::LocalMem);
      } else {
        const MemoryPoolSpec& pool = *cfg_.pool;
        TimeNs d;
        if (pool.style == MemoryPoolSpec::Style::PerGpuChannel) {
          d = zero_infinity_access_time_ns(n.tensor_bytes, pool.remote_group_bw,
                                           pool.access_latency_ns);
        } else if (n.in_switch) {
          d = in_switch_collective_time_ns(n.tensor_bytes, pool,
                                           n.direction == MemDirection::Load
                                               ? CollectiveKind::AllGather
                                               : CollectiveKind::ReduceScatter);
        } else {
          d = remote_access_time_ns(n.tensor_bytes, pool, n.direction);
        }
        finish_after(ticket, d, ActClass::RemoteMem);
      }
      break;
    }
    case NodeKind::PeerComm: {
      int dim = net_.dim_of_pair(n.npu, n.peer);
      if (n.peer_dir == PeerDirection::Send) traffic_[n.npu][dim - 1] += Rational(n.comm_bytes);
      std::uint64_t packed = (static_cast<std::uint64_t>(ticket) << 8) |
                             static_cast<std::uint64_t>(ActClass::Comm);
      auto cb = [this, packed] {
        complete(static_cast<long long>(packed >> 8), static_cast<ActClass>(packed & 0xff));
      };
      if (n.peer_dir == PeerDirection::Send)
        net_.sim_send(Rational(n.comm_bytes), n.npu, n.peer, dim,
                      static_cast<std::uint64_t>(n.tag), cb);
      else
        net_.sim_recv(Rational(n.comm_bytes), n.peer, n.npu, dim,
                      static_cast<std::uint64_t>(n.tag), cb);
      break;
    }
    case NodeKind::CollectiveComm:
      dispatch_collective(ticket);
      break;
  }
}

void Simulation::finish_after(long long ticket, TimeNs delta, ActClass cls) {
  std::uint64_t packed = (static_cast<std::uint64_t>(ticket) << 8) |
                         static_cast<std::uint64_t>(cls);
  queue_.schedule(delta, [this, packed] {
    complete(static_cast<long long>(packed >> 8), static_cast<ActClass>(packed & 0xff));
  });
}

void Simulation::complete(long long ticket, ActClass cls) {
  Ticket& t = tickets_[ticket];
  intervals_[t.npu].push_back(Interval{t.start, queue_.now(), cls});
  ++nodes_done_;
  for (long long id : graphs_[t.npu].mark_complete(t.node->id)) issue(t.npu, id);
}

void Simulation::dispatch_collective(long long ticket) {
  Ticket& t = tickets_[ticket];
  const TraceNode& n = *t.node;
  Rank base = base_rank(n);

  auto [it, fresh] = active_groups_.try_emplace({n.tag, base}, groups_.size());
  if (fresh) {
    groups_.emplace_back();
    GroupOp& g = groups_.back();
    g.kind = n.coll;
    g.bytes = n.comm_bytes;
    g.tag = n.tag;
    g.base = base;
    g.scope = n.scope_dims;
    std::sort(g.scope.begin(), g.scope.end());
    g.first_arrival = queue_.now();

    auto base_coords = rank_to_coords(base, cfg_.topology);
    std::size_t group_size = 1;
    for (int d : g.scope) group_size *= cfg_.topology.dims[d - 1].size;
    g.members.reserve(group_size);
    for (std::size_t slot = 0; slot < group_size; ++slot) {
      auto coords = base_coords;
      std::size_t rem = slot;
      for (int d : g.scope) {
        coords[d - 1] = static_cast<int>(rem % cfg_.topology.dims[d - 1].size);
        rem /= cfg_.topology.dims[d - 1].size;
      }
      g.members.push_back(coords_to_rank(coords, cfg_.topology));
    }
    g.ticket_of_slot.assign(group_size, -1);
    if (n.comm_bytes > 0) {
      g.sched = schedule_for(n);
      g.progress.assign(group_size * g.sched->stages.size(), StageProgress{});
      for (std::size_t slot = 0; slot < group_size; ++slot)
        for (int d = 0; d < cfg_.topology.dim_count(); ++d)
          traffic_[g.members[slot]][d] += g.sched->slot_dim_traffic[slot][d];
    }
  }

  std::size_t gidx = it->second;
  GroupOp& g = groups_[gidx];
  {
    std::vector<int> scope = n.scope_dims;
    std::sort(scope.begin(), scope.end());
    if (g.kind != n.coll || g.bytes != n.comm_bytes || g.scope != scope)
      throw ValidationError("collective tag " + std::to_string(n.tag) +
                            ": group members disagree on kind/bytes/scope (npu " +
                            std::to_string(n.npu) + ")");
  }
  std::uint32_t slot = slot_of(n);
  if (g.ticket_of_slot[slot] != -1)
    throw ValidationError("collective tag " + std::to_string(n.tag) + ": npu " +
                          std::to_string(n.npu) + " posted twice");
  g.ticket_of_slot[slot] = ticket;
  ++g.arrived;

  if (g.bytes == 0) {
    // Pure synchronization: completes when the whole group has posted.
    if (g.arrived == g.members.size()) {
      active_groups_.erase({g.tag, g.base});
      records_.push_back(
          CollectiveRecord{g.kind, g.bytes, g.tag, g.first_arrival, queue_.now()});
      for (std::size_t s = 0; s < g.members.size(); ++s)
        complete(g.ticket_of_slot[s], ActClass::Comm);
    }
    return;
  }

  coll_try_start(gidx, slot, 0);
}

void Simulation::coll_try_start(std::size_t gidx, std::uint32_t slot, std::uint32_t stage) {
  GroupOp& g = groups_[gidx];
  const std::size_t num_stages = g.sched->stages.size();
  StageProgress& p = g.progress[slot * num_stages + stage];
  if (p.active) return;
  std::uint32_t chunk = p.chunks_done;
  if (chunk >= static_cast<std::uint32_t>(g.sched->chunk_count)) return;
  if (stage > 0 && g.progress[slot * num_stages + stage - 1].chunks_done <= chunk) return;
  p.active = true;
  p.chunk = chunk;
  p.step = 0;
  coll_start_step(gidx, slot, stage);
}

void Simulation::coll_start_step(std::size_t gidx, std::uint32_t slot, std::uint32_t stage) {
  GroupOp& g = groups_[gidx];
  const std::size_t num_stages = g.sched->stages.size();
  StageProgress& p = g.progress[slot * num_stages + stage];
  const ExecStage& es = g.sched->stages[stage];
  const ExecStep& step = es.steps[p.step];

  std::uint32_t outs = step.out_off[slot + 1] - step.out_off[slot];
  std::uint32_t ins = step.in_off[slot + 1] - step.in_off[slot];
  p.pending = outs + ins;
  if (p.pending == 0) {
    coll_op_done((gidx << 32) | (static_cast<std::uint64_t>(slot) << 8) | stage);
    return;
  }

  std::uint64_t inst = gidx;
  std::uint64_t tag = make_tag(inst, stage, p.step, p.chunk);
  std::uint64_t packed = (gidx << 32) | (static_cast<std::uint64_t>(slot) << 8) | stage;
  auto cb = [this, packed] { coll_op_done(packed); };

  for (std::uint32_t i = step.out_off[slot]; i < step.out_off[slot + 1]; ++i) {
    const ExecXfer& x = step.xfers[i];
    net_.sim_send(x.bytes, g.members[x.src], g.members[x.dst], es.dim, tag, cb);
  }
  for (std::uint32_t i = step.in_off[slot]; i < step.in_off[slot + 1]; ++i) {
    const ExecXfer& x = step.xfers[step.in_idx[i]];
    net_.sim_recv(x.bytes, g.members[x.src], g.members[x.dst], es.dim, tag, cb);
  }
}

void Simulation::coll_op_done(std::uint64_t packed) {
  std::size_t gidx = packed >> 32;
  std::uint32_t slot = static_cast<std::uint32_t>((packed >> 8) & 0xffffff);
  std::uint32_t stage = static_cast<std::uint32_t>(packed & 0xff);
  GroupOp& g = groups_[gidx];
  const std::size_t num_stages = g.sched->stages.size();
  StageProgress& p = g.progress[slot * num_stages + stage];

  if (p.pending > 0 && --p.pending > 0) return;

  if (p.step + 1 < g.sched->stages[stage].steps.size()) {
    ++p.step;
    coll_start_step(gidx, slot, stage);
    return;
  }

  // Chunk finished this stage.
  p.active = false;
  ++p.chunks_done;
  if (stage + 1 < num_stages) coll_try_start(gidx, slot, stage + 1);
  coll_try_start(gidx, slot, stage);

  if (stage + 1 == num_stages &&
      p.chunks_done == static_cast<std::uint32_t>(g.sched->chunk_count)) {
    ++g.finished;
    long long ticket = g.ticket_of_slot[slot];
    if (g.finished == g.members.size()) {
      active_groups_.erase({g.tag, g.base});
      records_.push_back(
          CollectiveRecord{g.kind, g.bytes, g.tag, g.first_arrival, queue_.now()});
    }
    complete(ticket, ActClass::Comm);
  }
}

BreakdownNs Simulation::breakdown_for(const std::vector<Interval>& intervals,
                                      TimeNs makespan) const {
  struct Edge {
    TimeNs t;
    int delta;
    ActClass cls;
  };
  std::vector<Edge> edges;
  edges.reserve(intervals.size() * 2);
  for (const auto& iv : intervals) {
    if (iv.start == iv.end) continue;
    edges.push_back(Edge{iv.start, +1, iv.cls});
    edges.push_back(Edge{iv.end, -1, iv.cls});
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.t < b.t; });

  BreakdownNs out;
  long long active[4] = {0, 0, 0, 0};
  TimeNs prev = 0;
  std::size_t i = 0;
  while (i < edges.size()) {
    TimeNs t = edges[i].t;
    if (t > prev) {
      TimeNs len = t - prev;
      if (active[0] > 0)
        out.compute += len;
      else if (active[1] > 0)
        out.local_mem += len;
      else if (active[2] > 0)
        out.remote_mem += len;
      else if (active[3] > 0)
        out.comm += len;
      else
        out.idle += len;
      prev = t;
    }
    while (i < edges.size() && edges[i].t == t) {
      active[static_cast<int>(edges[i].cls)] += edges[i].delta;
      ++i;
    }
  }
  out.idle += makespan - prev;
  return out;
}

RunReport Simulation::run() {
  const Rank npus = cfg_.topology.npu_count();
  graphs_.resize(npus);
  intervals_.resize(npus);
  traffic_.assign(npus, std::vector<Rational>(cfg_.topology.dim_count(), Rational(0)));

  for (const auto& node : cfg_.trace.nodes) graphs_[node.npu].add(&node);
  for (auto& graph : graphs_) graph.finalize();
  nodes_total_ = cfg_.trace.nodes.size();

  for (Rank npu = 0; npu < npus; ++npu)
    for (long long id : graphs_[npu].ready()) issue(npu, id);

  TimeNs makespan = queue_.run_until_idle();

  if (net_.has_parked() || nodes_done_ != nodes_total_) {
    std::vector<std::string> diag = net_.parked_diagnostics();
    for (const auto& [key, gidx] : active_groups_) {
      const GroupOp& g = groups_[gidx];
      std::ostringstream os;
      os << "collective tag " << key.first << " (base rank " << key.second << "): "
         << g.arrived << " of " << g.members.size() << " members posted";
      diag.push_back(os.str());
    }
    std::ostringstream msg;
    msg << "deadlock: " << (nodes_total_ - nodes_done_) << " of " << nodes_total_
        << " nodes unfinished";
    if (!diag.empty()) msg << "; " << diag.front();
    throw DeadlockError(msg.str(), diag);
  }

  RunReport report;
  report.makespan_ns = makespan;
  report.npu_count = npus;
  report.per_npu.reserve(npus);
  for (Rank npu = 0; npu < npus; ++npu) {
    BreakdownNs b = breakdown_for(intervals_[npu], makespan);
    report.aggregate.compute += b.compute;
    report.aggregate.local_mem += b.local_mem;
    report.aggregate.remote_mem += b.remote_mem;
    report.aggregate.comm += b.comm;
    report.aggregate.idle += b.idle;
    report.per_npu.push_back(b);
  }
  report.per_npu_dim_traffic = std::move(traffic_);
  report.dim_traffic_total.assign(cfg_.topology.dim_count(), Rational(0));
  for (const auto& row : report.per_npu_dim_traffic)
    for (int d = 0; d < cfg_.topology.dim_count(); ++d)
      report.dim_traffic_total[d] += row[d];
  report.collectives = std::move(records_);
  return report;
}

}  // namespace

RunReport run_simulation(const ScenarioConfig& config, SendLogSink send_log) {
  config.validate();
  Simulation sim(config, std::move(send_log));
  return sim.run();
}

}  // namespace hiersim
