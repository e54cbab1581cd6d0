#pragma once

#include <vector>

#include "hiersim/trace.hpp"

namespace hiersim {

// Per-layer shape of the model being trained. Backward flops default to
// twice the forward flops when not given explicitly. `minibatch` is carried
// as provenance metadata only.
struct ModelShape {
  int layer_count = 0;
  std::vector<long long> fwd_flops;
  std::vector<long long> bwd_flops;
  std::vector<long long> param_bytes;
  std::vector<long long> activation_bytes;
  int minibatch = 1;

  static ModelShape uniform(int layers, long long fwd_flops_per_layer,
                            long long param_bytes_per_layer, long long activation_bytes_per_layer,
                            long long bwd_flops_per_layer = -1);
  void validate() const;
};

// Data parallelism: identical forward/backward chains on every NPU, one
// gradient AllReduce per layer hanging off that layer's backward node.
TraceFile gen_dp_trace(const ModelShape& model, const TopologySpec& spec,
                       const std::vector<int>& scope_dims);

// Model parallelism: per-layer compute divided by the group size, an
// activation AllGather after each forward layer and an input-gradient
// AllReduce in the backward pass.
TraceFile gen_mp_trace(const ModelShape& model, const TopologySpec& spec,
                       const std::vector<int>& scope_dims);

// MP collectives on mp_scope, DP gradient AllReduce on dp_scope. Scopes must
// be disjoint; a scope with group size 1 contributes no collectives.
TraceFile gen_hybrid_trace(const ModelShape& model, const TopologySpec& spec,
                           const std::vector<int>& mp_scope, const std::vector<int>& dp_scope);

// Pipeline parallelism: contiguous rank blocks per stage, microbatches flow
// stage to stage over peer send/recv pairs, backward mirrors forward.
TraceFile gen_pipeline_trace(const ModelShape& model, const TopologySpec& spec, int stages,
                             int microbatches);

// One collective per NPU, no compute. scope_dims empty means full scope.
TraceFile gen_microbench(CollectiveKind kind, long long bytes, const TopologySpec& spec,
                         std::vector<int> scope_dims = {});

// Remote-memory stress loop: per NPU, `iterations` of load -> optional
// compute -> store against the configured pool.
TraceFile gen_memory_loop(long long tensor_bytes, int iterations, long long compute_flops,
                          bool in_switch, const TopologySpec& spec);

}  // namespace hiersim
