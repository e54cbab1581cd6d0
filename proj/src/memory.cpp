#include "hiersim/memory.hpp"

#include <algorithm>

namespace hiersim {

void MemoryPoolSpec::validate() const {
  auto positive = [](long long v, const char* name) {
    if (v <= 0) throw ValidationError(std::string("memory pool: ") + name + " must be positive");
  };
  positive(num_nodes, "num_nodes");
  positive(gpus_per_node, "gpus_per_node");
  positive(num_out_switches, "num_out_switches");
  positive(num_remote_groups, "num_remote_groups");
  positive(chunk_size, "chunk_size");
  positive(remote_group_bw, "remote_group_bw");
  if (style == Style::Hierarchical) {
    positive(in_node_fabric_bw, "in_node_fabric_bw");
    positive(gpu_side_out_fabric_bw, "gpu_side_out_fabric_bw");
    positive(mem_side_out_fabric_bw, "mem_side_out_fabric_bw");
  }
  if (access_latency_ns < 0)
    throw ValidationError("memory pool: access latency must be non-negative");
}

long long local_access_time_ns(long long tensor_bytes, const LocalMemSpec& mem) {
  if (tensor_bytes < 0) throw ValidationError("tensor size must be non-negative");
  if (mem.bandwidth <= 0) throw ValidationError("local memory bandwidth must be positive");
  if (tensor_bytes == 0) return mem.access_latency_ns;
  return mem.access_latency_ns + ceil_ns(Rational(tensor_bytes) / mem.bandwidth);
}

TierLoads link_loads(const MemoryPoolSpec& pool, const Rational& tensor_bytes_per_gpu,
                     bool in_switch) {
  pool.validate();
  const Rational w = tensor_bytes_per_gpu;
  const long long gpus = pool.total_gpus();

  TierLoads loads;
  loads.per_remote_group = w * gpus / pool.num_remote_groups;
  loads.rem_to_outsw_link = loads.per_remote_group / pool.num_out_switches;
  if (in_switch) {
    // Each out-node switch gathers one full copy and forwards it per node;
    // every in-node switch receives the reconstructed tensor.
    loads.outsw_to_node_link = w * gpus / pool.num_out_switches;
    loads.per_in_node_switch = w * gpus;
  } else {
    loads.outsw_to_node_link = w * pool.gpus_per_node / pool.num_out_switches;
    loads.per_in_node_switch = w * pool.gpus_per_node;
  }
  return loads;
}

namespace {

struct StageTimes {
  Rational rem_to_outsw;  // seconds per chunk
  Rational outsw_to_insw;
  Rational insw_to_gpu;
};

long long chunk_count(long long tensor_bytes_per_gpu, const MemoryPoolSpec& pool) {
  __int128 total = static_cast<__int128>(tensor_bytes_per_gpu) * pool.total_gpus();
  __int128 unit = static_cast<__int128>(pool.num_remote_groups) * pool.num_out_switches *
                  pool.chunk_size;
  __int128 n = (total + unit - 1) / unit;
  return n < 1 ? 1 : static_cast<long long>(n);
}

long long pipeline_total_ns(const StageTimes& st, long long n) {
  Rational bottleneck = std::max({st.rem_to_outsw, st.outsw_to_insw, st.insw_to_gpu});
  Rational total = st.rem_to_outsw + st.outsw_to_insw + st.insw_to_gpu +
                   bottleneck * Rational(n - 1);
  return ceil_ns(total);
}

}  // namespace

long long remote_access_time_ns(long long tensor_bytes_per_gpu, const MemoryPoolSpec& pool,
                                MemDirection direction) {
  (void)direction;  // stores mirror loads with identical stage timing
  pool.validate();
  if (tensor_bytes_per_gpu <= 0) throw ValidationError("tensor size must be positive");

  StageTimes st;
  st.rem_to_outsw = Rational(pool.chunk_size) / pool.mem_side_out_fabric_bw;
  st.outsw_to_insw = Rational(pool.num_remote_groups) * pool.chunk_size /
                     (Rational(pool.num_nodes) * pool.gpu_side_out_fabric_bw);
  st.insw_to_gpu = Rational(pool.num_remote_groups) * pool.num_out_switches * pool.chunk_size /
                   (Rational(pool.total_gpus()) * pool.in_node_fabric_bw);
  return pipeline_total_ns(st, chunk_count(tensor_bytes_per_gpu, pool));
}

long long in_switch_collective_time_ns(long long tensor_bytes_per_gpu,
                                       const MemoryPoolSpec& pool, CollectiveKind kind) {
  if (kind != CollectiveKind::AllGather && kind != CollectiveKind::ReduceScatter)
    throw ValidationError("in-switch collectives are AllGather (load) or ReduceScatter (store)");
  pool.validate();
  if (tensor_bytes_per_gpu <= 0) throw ValidationError("tensor size must be positive");

  StageTimes st;
  st.rem_to_outsw = Rational(pool.chunk_size) / pool.mem_side_out_fabric_bw;
  st.outsw_to_insw =
      Rational(pool.num_remote_groups) * pool.chunk_size / pool.gpu_side_out_fabric_bw;
  st.insw_to_gpu = Rational(pool.num_remote_groups) * pool.num_out_switches * pool.chunk_size /
                   pool.in_node_fabric_bw;
  return pipeline_total_ns(st, chunk_count(tensor_bytes_per_gpu, pool));
}

long long zero_infinity_access_time_ns(long long tensor_bytes_per_gpu, long long group_bw,
                                       long long latency_ns) {
  if (tensor_bytes_per_gpu < 0) throw ValidationError("tensor size must be non-negative");
  if (group_bw <= 0) throw ValidationError("remote group bandwidth must be positive");
  if (tensor_bytes_per_gpu == 0) return latency_ns;
  return latency_ns + ceil_ns(Rational(tensor_bytes_per_gpu) / group_bw);
}

}  // namespace hiersim
