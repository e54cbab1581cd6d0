#pragma once

#include <string>

#include "hiersim/collectives.hpp"
#include "hiersim/rational.hpp"

namespace hiersim {

enum class MemDirection { Load, Store };

struct LocalMemSpec {
  long long bandwidth = 0;  // bytes/s
  long long access_latency_ns = 0;
};

// Hierarchical disaggregated memory pool: remote memory groups feed out-node
// switches, which feed per-node in-node switches, which feed the GPUs.
// Style::PerGpuChannel models each GPU reading its own remote group directly
// over remote_group_bw with no shared switch stages.
struct MemoryPoolSpec {
  enum class Style { Hierarchical, PerGpuChannel };

  Style style = Style::Hierarchical;
  int num_nodes = 1;
  int gpus_per_node = 1;
  int num_out_switches = 1;
  int num_remote_groups = 1;
  long long chunk_size = 1 << 20;        // bytes, pipelining unit
  long long in_node_fabric_bw = 0;       // bytes/s
  long long gpu_side_out_fabric_bw = 0;  // bytes/s
  long long mem_side_out_fabric_bw = 0;  // bytes/s
  long long remote_group_bw = 0;         // bytes/s
  long long access_latency_ns = 0;       // per-GPU channel latency

  long long total_gpus() const { return static_cast<long long>(num_nodes) * gpus_per_node; }
  void validate() const;
};

// Bytes carried per component when every GPU moves tensor_bytes_per_gpu.
struct TierLoads {
  Rational per_remote_group;
  Rational rem_to_outsw_link;
  Rational outsw_to_node_link;
  Rational per_in_node_switch;
};

// access_latency + tensor / bandwidth, rounded up to the ns.
long long local_access_time_ns(long long tensor_bytes, const LocalMemSpec& mem);

// Link loads for a plain remote transfer or an in-switch collective, where
// gather/scatter happens inside the switches and downstream links carry the
// reconstructed tensor instead of per-GPU slices.
TierLoads link_loads(const MemoryPoolSpec& pool, const Rational& tensor_bytes_per_gpu,
                     bool in_switch);

// Pipelined three-stage transfer through the hierarchical pool. The chunk
// count is ceil(tensor * gpus / groups / switches / chunk_size), at least 1;
// total time is the fill (sum of the stage times) plus (N - 1) times the
// bottleneck stage. Stores traverse the stages in reverse, same timing.
long long remote_access_time_ns(long long tensor_bytes_per_gpu, const MemoryPoolSpec& pool,
                                MemDirection direction);

// Same pipeline skeleton with the in-switch stage equations: the out-switch
// stage loses the node-count divisor and the in-node stage loses the
// GPU-count divisor. AllGather applies on loads, ReduceScatter on stores.
long long in_switch_collective_time_ns(long long tensor_bytes_per_gpu,
                                       const MemoryPoolSpec& pool, CollectiveKind kind);

// Per-GPU private remote channel, no shared switch stages.
long long zero_infinity_access_time_ns(long long tensor_bytes_per_gpu, long long group_bw,
                                       long long latency_ns);

}  // namespace hiersim
