#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hiersim/memory.hpp"
#include "hiersim/network.hpp"
#include "hiersim/trace.hpp"

namespace hiersim {

struct NpuSpec {
  long long peak_flops = 0;  // flops/s
  LocalMemSpec local_mem;
  void validate() const;
};

// max(flops / peak, tensor / local bandwidth), rounded up to the ns.
long long roofline_time_ns(long long flops, long long tensor_bytes, const NpuSpec& npu);

struct BreakdownNs {
  TimeNs compute = 0;
  TimeNs local_mem = 0;
  TimeNs remote_mem = 0;
  TimeNs comm = 0;
  TimeNs idle = 0;
  TimeNs total() const { return compute + local_mem + remote_mem + comm + idle; }
};

struct CollectiveRecord {
  CollectiveKind kind = CollectiveKind::AllReduce;
  long long bytes = 0;
  long long tag = 0;
  TimeNs start = 0;
  TimeNs end = 0;
};

struct RunReport {
  TimeNs makespan_ns = 0;
  long long npu_count = 0;
  BreakdownNs aggregate;
  std::vector<BreakdownNs> per_npu;
  std::vector<Rational> dim_traffic_total;               // bytes, all NPUs
  std::vector<std::vector<Rational>> per_npu_dim_traffic;  // [npu][dim]
  std::vector<CollectiveRecord> collectives;
};

struct ScenarioConfig {
  std::string name;
  TopologySpec topology;
  NpuSpec npu;
  std::optional<MemoryPoolSpec> pool;
  TraceFile trace;
  int chunk_count = 64;
  std::string scheduler = "fifo";

  void validate() const;
};

// Deterministic replay of the trace over the topology. Breakdown attribution
// per NPU uses fixed priority: compute hides local memory, which hides remote
// memory, which hides communication; what remains is idle.
RunReport run_simulation(const ScenarioConfig& config, SendLogSink send_log = nullptr);

// Readiness relation over one NPU's dependency graph.
class NpuGraph {
 public:
  void add(const TraceNode* node);  // declaration order
  void finalize();

  // All unissued nodes whose parents have completed.
  std::vector<long long> ready() const;
  void mark_issued(long long id);
  // Marks a node complete and returns the ids that just became ready.
  std::vector<long long> mark_complete(long long id);
  bool all_complete() const;
  std::size_t size() const { return entries_.size(); }
  std::size_t completed() const { return completed_; }
  const TraceNode* node(long long id) const;

 private:
  struct Entry {
    const TraceNode* node = nullptr;
    int pending = 0;
    bool issued = false;
    bool done = false;
  };
  std::size_t index_of(long long id) const;

  std::vector<Entry> entries_;
  std::vector<std::vector<std::size_t>> children_;
  std::unordered_map<long long, std::size_t> by_id_;
  std::size_t completed_ = 0;
  bool finalized_ = false;
};

}  // namespace hiersim
