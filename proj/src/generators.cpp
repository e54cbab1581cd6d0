#include "hiersim/generators.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace hiersim {

ModelShape ModelShape::uniform(int layers, long long fwd_flops_per_layer,
                               long long param_bytes_per_layer,
                               long long activation_bytes_per_layer,
                               long long bwd_flops_per_layer) {
  ModelShape m;
  m.layer_count = layers;
  m.fwd_flops.assign(layers, fwd_flops_per_layer);
  m.bwd_flops.assign(layers, bwd_flops_per_layer < 0 ? 2 * fwd_flops_per_layer
                                                     : bwd_flops_per_layer);
  m.param_bytes.assign(layers, param_bytes_per_layer);
  m.activation_bytes.assign(layers, activation_bytes_per_layer);
  return m;
}

void ModelShape::validate() const {
  if (layer_count < 1) throw ValidationError("model must have at least one layer");
  auto check = [&](const std::vector<long long>& v, const char* name) {
    if (static_cast<int>(v.size()) != layer_count)
      throw ValidationError(std::string("model: ") + name + " must have one entry per layer");
    for (long long x : v)
      if (x < 0) throw ValidationError(std::string("model: negative ") + name);
  };
  check(fwd_flops, "fwd_flops");
  check(bwd_flops, "bwd_flops");
  check(param_bytes, "param_bytes");
  check(activation_bytes, "activation_bytes");
  if (minibatch < 1) throw ValidationError("model: minibatch must be >= 1");
}

namespace {

long long scope_degree(const TopologySpec& spec, const std::vector<int>& scope) {
  long long degree = 1;
  for (int d : scope) {
    if (d < 1 || d > spec.dim_count())
      throw ValidationError("scope dimension " + std::to_string(d) + " out of range");
    degree *= spec.dims[d - 1].size;
  }
  return degree;
}

std::string scope_string(const std::vector<int>& scope) {
  std::string s;
  for (std::size_t i = 0; i < scope.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(scope[i]);
  }
  return s.empty() ? "-" : s;
}

}  // namespace

TraceFile gen_hybrid_trace(const ModelShape& model, const TopologySpec& spec,
                           const std::vector<int>& mp_scope, const std::vector<int>& dp_scope) {
  model.validate();
  spec.validate();
  for (int d : mp_scope)
    if (std::find(dp_scope.begin(), dp_scope.end(), d) != dp_scope.end())
      throw ValidationError("mp and dp scopes overlap on dimension " + std::to_string(d));

  const long long mp_k = scope_degree(spec, mp_scope);
  const long long dp_k = scope_degree(spec, dp_scope);
  if (!mp_scope.empty() && !dp_scope.empty() && mp_k * dp_k != spec.npu_count())
    throw ValidationError("mp degree " + std::to_string(mp_k) + " x dp degree " +
                          std::to_string(dp_k) + " does not cover " +
                          std::to_string(spec.npu_count()) + " NPUs");

  const bool mp_active = mp_k > 1;
  const bool dp_active = dp_k > 1;
  const int L = model.layer_count;

  TraceFile trace;
  trace.npu_count = spec.npu_count();
  {
    std::ostringstream prov;
    prov << "gen-hybrid layers=" << L << " mp=" << mp_k << " dp=" << dp_k
         << " mp_scope=" << scope_string(mp_scope) << " dp_scope=" << scope_string(dp_scope)
         << " minibatch=" << model.minibatch;
    trace.provenance = prov.str();
  }

  for (Rank npu = 0; npu < trace.npu_count; ++npu) {
    long long next_id = 0;
    auto add = [&](TraceNode n) {
      n.npu = npu;
      n.id = next_id++;
      trace.nodes.push_back(std::move(n));
      return trace.nodes.back().id;
    };

    std::vector<long long> fwd_tail(L);  // last forward-chain node per layer
    long long prev = -1;
    for (int l = 0; l < L; ++l) {
      TraceNode fwd;
      fwd.kind = NodeKind::Compute;
      fwd.flops = model.fwd_flops[l] / mp_k;
      fwd.tensor_bytes = model.activation_bytes[l] / mp_k;
      if (prev >= 0) fwd.deps.push_back(prev);
      prev = add(std::move(fwd));
      if (mp_active) {
        TraceNode ag;
        ag.kind = NodeKind::CollectiveComm;
        ag.coll = CollectiveKind::AllGather;
        ag.comm_bytes = model.activation_bytes[l];
        ag.scope_dims = mp_scope;
        ag.tag = 3LL * l;
        ag.deps.push_back(prev);
        prev = add(std::move(ag));
      }
      fwd_tail[l] = prev;
    }

    for (int l = L - 1; l >= 0; --l) {
      TraceNode bwd;
      bwd.kind = NodeKind::Compute;
      bwd.flops = model.bwd_flops[l] / mp_k;
      bwd.tensor_bytes = model.activation_bytes[l] / mp_k;
      bwd.deps.push_back(prev);
      long long bwd_id = add(std::move(bwd));
      prev = bwd_id;
      if (mp_active) {
        TraceNode ar;
        ar.kind = NodeKind::CollectiveComm;
        ar.coll = CollectiveKind::AllReduce;
        ar.comm_bytes = model.activation_bytes[l];
        ar.scope_dims = mp_scope;
        ar.tag = 3LL * l + 1;
        ar.deps.push_back(bwd_id);
        prev = add(std::move(ar));
      }
      if (dp_active) {
        // Gradient sync hangs off this layer's backward only, so it can
        // overlap earlier layers' backward compute.
        TraceNode ar;
        ar.kind = NodeKind::CollectiveComm;
        ar.coll = CollectiveKind::AllReduce;
        ar.comm_bytes = model.param_bytes[l] / mp_k;
        ar.scope_dims = dp_scope;
        ar.tag = 3LL * l + 2;
        ar.deps.push_back(bwd_id);
        add(std::move(ar));
      }
    }
  }

  trace.validate();
  return trace;
}

TraceFile gen_dp_trace(const ModelShape& model, const TopologySpec& spec,
                       const std::vector<int>& scope_dims) {
  auto trace = gen_hybrid_trace(model, spec, {}, scope_dims);
  std::ostringstream prov;
  prov << "gen-dp layers=" << model.layer_count << " scope=" << scope_string(scope_dims)
       << " minibatch=" << model.minibatch;
  trace.provenance = prov.str();
  return trace;
}

TraceFile gen_mp_trace(const ModelShape& model, const TopologySpec& spec,
                       const std::vector<int>& scope_dims) {
  auto trace = gen_hybrid_trace(model, spec, scope_dims, {});
  std::ostringstream prov;
  prov << "gen-mp layers=" << model.layer_count << " scope=" << scope_string(scope_dims)
       << " minibatch=" << model.minibatch;
  trace.provenance = prov.str();
  return trace;
}

TraceFile gen_pipeline_trace(const ModelShape& model, const TopologySpec& spec, int stages,
                             int microbatches) {
  model.validate();
  spec.validate();
  if (stages < 1) throw ValidationError("pipeline needs at least one stage");
  if (microbatches < 1) throw ValidationError("pipeline needs at least one microbatch");
  if (model.layer_count % stages != 0)
    throw ValidationError("stage count " + std::to_string(stages) + " does not divide " +
                          std::to_string(model.layer_count) + " layers");
  if (spec.npu_count() % stages != 0)
    throw ValidationError("stage count " + std::to_string(stages) + " does not divide " +
                          std::to_string(spec.npu_count()) + " NPUs");

  const int layers_per_stage = model.layer_count / stages;
  const Rank group = spec.npu_count() / stages;

  TraceFile trace;
  trace.npu_count = spec.npu_count();
  {
    std::ostringstream prov;
    prov << "gen-pipeline layers=" << model.layer_count << " stages=" << stages
         << " microbatches=" << microbatches << " minibatch=" << model.minibatch;
    trace.provenance = prov.str();
  }

  for (Rank npu = 0; npu < trace.npu_count; ++npu) {
    const int s = static_cast<int>(npu / group);
    const int first_layer = s * layers_per_stage;
    const int last_layer = first_layer + layers_per_stage - 1;

    long long stage_fwd = 0, stage_bwd = 0, stage_bytes = 0;
    for (int l = first_layer; l <= last_layer; ++l) {
      stage_fwd += model.fwd_flops[l];
      stage_bwd += model.bwd_flops[l];
      stage_bytes += model.activation_bytes[l];
    }
    const long long act_out = model.activation_bytes[last_layer];
    const long long grad_out = model.activation_bytes[first_layer];

    long long next_id = 0;
    auto add = [&](TraceNode n) {
      n.npu = npu;
      n.id = next_id++;
      trace.nodes.push_back(std::move(n));
      return trace.nodes.back().id;
    };

    long long prev_fwd = -1;
    std::vector<long long> fwd_of(microbatches);
    for (int m = 0; m < microbatches; ++m) {
      long long recv_id = -1;
      if (s > 0) {
        TraceNode recv;
        recv.kind = NodeKind::PeerComm;
        recv.peer_dir = PeerDirection::Recv;
        recv.peer = npu - group;
        recv.comm_bytes = model.activation_bytes[first_layer - 1];
        recv.tag = 2LL * m;
        recv_id = add(std::move(recv));
      }
      TraceNode fwd;
      fwd.kind = NodeKind::Compute;
      fwd.flops = stage_fwd;
      fwd.tensor_bytes = stage_bytes;
      if (prev_fwd >= 0) fwd.deps.push_back(prev_fwd);
      if (recv_id >= 0) fwd.deps.push_back(recv_id);
      prev_fwd = add(std::move(fwd));
      fwd_of[m] = prev_fwd;
      if (s < stages - 1) {
        TraceNode send;
        send.kind = NodeKind::PeerComm;
        send.peer_dir = PeerDirection::Send;
        send.peer = npu + group;
        send.comm_bytes = act_out;
        send.tag = 2LL * m;
        send.deps.push_back(prev_fwd);
        add(std::move(send));
      }
    }

    long long prev_bwd = -1;
    for (int m = 0; m < microbatches; ++m) {
      long long recv_id = -1;
      if (s < stages - 1) {
        TraceNode recv;
        recv.kind = NodeKind::PeerComm;
        recv.peer_dir = PeerDirection::Recv;
        recv.peer = npu + group;
        recv.comm_bytes = model.activation_bytes[last_layer];
        recv.tag = 2LL * m + 1;
        recv_id = add(std::move(recv));
      }
      TraceNode bwd;
      bwd.kind = NodeKind::Compute;
      bwd.flops = stage_bwd;
      bwd.tensor_bytes = stage_bytes;
      bwd.deps.push_back(prev_bwd >= 0 ? prev_bwd : fwd_of[microbatches - 1]);
      if (recv_id >= 0) bwd.deps.push_back(recv_id);
      prev_bwd = add(std::move(bwd));
      if (s > 0) {
        TraceNode send;
        send.kind = NodeKind::PeerComm;
        send.peer_dir = PeerDirection::Send;
        send.peer = npu - group;
        send.comm_bytes = grad_out;
        send.tag = 2LL * m + 1;
        send.deps.push_back(prev_bwd);
        add(std::move(send));
      }
    }
  }

  trace.validate();
  return trace;
}

TraceFile gen_memory_loop(long long tensor_bytes, int iterations, long long compute_flops,
                          bool in_switch, const TopologySpec& spec) {
  spec.validate();
  if (tensor_bytes <= 0) throw ValidationError("memory loop tensor must be positive");
  if (iterations < 1) throw ValidationError("memory loop needs at least one iteration");

  TraceFile trace;
  trace.npu_count = spec.npu_count();
  {
    std::ostringstream prov;
    prov << "gen-memloop bytes=" << tensor_bytes << " iterations=" << iterations
         << " in_switch=" << (in_switch ? 1 : 0);
    trace.provenance = prov.str();
  }
  for (Rank npu = 0; npu < trace.npu_count; ++npu) {
    long long id = 0;
    auto add = [&](TraceNode n) {
      n.npu = npu;
      n.id = id;
      if (id > 0) n.deps.push_back(id - 1);
      ++id;
      trace.nodes.push_back(std::move(n));
    };
    for (int it = 0; it < iterations; ++it) {
      TraceNode load;
      load.kind = NodeKind::MemoryAccess;
      load.location = MemLocation::Remote;
      load.direction = MemDirection::Load;
      load.in_switch = in_switch;
      load.tensor_bytes = tensor_bytes;
      add(std::move(load));
      if (compute_flops > 0) {
        TraceNode comp;
        comp.kind = NodeKind::Compute;
        comp.flops = compute_flops;
        add(std::move(comp));
      }
      TraceNode store;
      store.kind = NodeKind::MemoryAccess;
      store.location = MemLocation::Remote;
      store.direction = MemDirection::Store;
      store.in_switch = in_switch;
      store.tensor_bytes = tensor_bytes;
      add(std::move(store));
    }
  }
  trace.validate();
  return trace;
}

TraceFile gen_microbench(CollectiveKind kind, long long bytes, const TopologySpec& spec,
                         std::vector<int> scope_dims) {
  spec.validate();
  if (bytes <= 0) throw ValidationError("microbenchmark collective must move at least one byte");
  if (scope_dims.empty())
    for (int d = 1; d <= spec.dim_count(); ++d) scope_dims.push_back(d);

  TraceFile trace;
  trace.npu_count = spec.npu_count();
  {
    std::ostringstream prov;
    prov << "gen-microbench kind=" << collective_name(kind) << " bytes=" << bytes
         << " scope=" << scope_string(scope_dims);
    trace.provenance = prov.str();
  }
  for (Rank npu = 0; npu < trace.npu_count; ++npu) {
    TraceNode n;
    n.npu = npu;
    n.id = 0;
    n.kind = NodeKind::CollectiveComm;
    n.coll = kind;
    n.comm_bytes = bytes;
    n.scope_dims = scope_dims;
    n.tag = 0;
    trace.nodes.push_back(std::move(n));
  }
  trace.validate();
  return trace;
}

}  // namespace hiersim
