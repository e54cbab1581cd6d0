#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hiersim/collectives.hpp"
#include "hiersim/memory.hpp"
#include "hiersim/topology.hpp"

namespace hiersim {

enum class NodeKind { Compute, MemoryAccess, CollectiveComm, PeerComm };
enum class MemLocation { Local, Remote };
enum class PeerDirection { Send, Recv };

// One node of a per-NPU dependency DAG. `deps` may only reference
// earlier-declared ids on the same NPU, so the graph is acyclic by
// construction.
struct TraceNode {
  long long id = 0;
  Rank npu = 0;
  NodeKind kind = NodeKind::Compute;
  std::vector<long long> deps;

  // Compute
  long long flops = 0;
  long long tensor_bytes = 0;

  // MemoryAccess
  MemLocation location = MemLocation::Local;
  MemDirection direction = MemDirection::Load;
  bool in_switch = false;

  // CollectiveComm
  CollectiveKind coll = CollectiveKind::AllReduce;
  long long comm_bytes = 0;
  std::vector<int> scope_dims;
  long long tag = 0;

  // PeerComm
  Rank peer = 0;
  PeerDirection peer_dir = PeerDirection::Send;
};

struct TraceFile {
  int version = 1;
  long long npu_count = 0;
  std::string provenance;
  std::vector<TraceNode> nodes;

  // Checks npu ranges, per-NPU id uniqueness, and dep resolvability.
  void validate() const;
  long long max_scope_dim() const;
};

void write_trace(const TraceFile& trace, std::ostream& out);
void write_trace(const TraceFile& trace, const std::string& path);
TraceFile read_trace(std::istream& in);
TraceFile read_trace_file(const std::string& path);

}  // namespace hiersim
