#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hiersim/errors.hpp"

namespace hiersim {

using Rank = long long;

enum class BlockKind { Ring, FullyConnected, Switch };

const char* block_name(BlockKind kind);

// Link traversals per message inside one building block: Ring and
// FullyConnected reach the peer over one link, Switch crosses the fabric
// (NPU -> switch -> NPU). Only matters when latency > 0; overridable per
// dimension via Dimension::hops.
int hop_count(BlockKind kind);

struct Dimension {
  BlockKind kind = BlockKind::Ring;
  int size = 0;                // NPUs (or NPU groups) joined at this level
  long long bandwidth = 0;     // bytes/s usable per NPU into this dimension
  long long latency_ns = 0;    // per link traversal
  int hops = 1;

  void validate(int dim_index) const;
};

// Ordered list of dimensions, innermost first (dimension 1).
struct TopologySpec {
  std::string name;
  std::vector<Dimension> dims;

  Rank npu_count() const;
  int dim_count() const { return static_cast<int>(dims.size()); }
  void validate() const;
};

// Parses compact notation like "Ring(4)_FC(8)_Switch(2)". Bandwidths are
// bytes/s, one per dimension; latencies (ns) may be omitted and default to 0.
TopologySpec parse_topology(const std::string& text,
                            const std::vector<long long>& bandwidths,
                            const std::vector<long long>& latencies_ns = {});

// Normalized compact notation; parse(format(spec)) round-trips.
std::string format_topology(const TopologySpec& spec);

// Mixed-radix decomposition with dimension 1 as the fastest-varying digit.
std::vector<int> rank_to_coords(Rank rank, const TopologySpec& spec);
Rank coords_to_rank(const std::vector<int>& coords, const TopologySpec& spec);

// All ranks that differ from `rank` only in coordinate `dim_index` (1-based),
// ordered by that coordinate. Every member sees the identical list.
std::vector<Rank> dim_group(Rank rank, int dim_index, const TopologySpec& spec);

}  // namespace hiersim
