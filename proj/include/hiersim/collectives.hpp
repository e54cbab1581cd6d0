#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hiersim/rational.hpp"
#include "hiersim/topology.hpp"

namespace hiersim {

enum class CollectiveKind { ReduceScatter, AllGather, AllReduce, AllToAll };
enum class PhaseAlgorithm { Ring, Direct, HalvingDoubling };

const char* collective_name(CollectiveKind kind);
CollectiveKind collective_from_name(const std::string& name);
const char* algorithm_name(PhaseAlgorithm algorithm);

// Each building block runs exactly one topology-aware algorithm.
PhaseAlgorithm algorithm_for_block(BlockKind kind);

// One transfer between group-local slots. `shards` labels the payload for
// the functional oracle: shard ids for reduce/gather passes, (src*G + dst)
// fragment ids for the exchange pass. Empty when the plan is unlabeled.
struct SlotSend {
  int src = 0;
  int dst = 0;
  Rational bytes;
  std::vector<std::uint32_t> shards;
};

struct PatternStep {
  std::vector<SlotSend> sends;
};

enum class PassKind { ReduceScatter, AllGather, Exchange };

struct StageSchedule {
  int dim_index = 0;  // 1-based topology dimension
  PassKind pass = PassKind::ReduceScatter;
  PhaseAlgorithm algorithm = PhaseAlgorithm::Ring;
  std::vector<PatternStep> steps;
};

// Slot-level schedule for one collective over one NPU group. Send bytes are
// totals across chunks; execution splits each send into chunk_count equal
// pieces that flow through the stages in pipelined FIFO order.
struct GroupSchedule {
  std::size_t group_size = 0;
  std::vector<int> scope_dims;  // ascending, 1-based
  Rational bytes_per_npu;
  int chunk_count = 1;
  bool labeled = false;
  std::vector<StageSchedule> stages;
};

struct RankSend {
  Rank src = 0;
  Rank dst = 0;
  Rational bytes;
};

// Rank-level view of one step of one stage.
struct Phase {
  int dim_index = 0;
  int step = 0;
  PhaseAlgorithm algorithm = PhaseAlgorithm::Ring;
  std::vector<RankSend> sends;
};

struct CollectivePlan {
  CollectiveKind kind = CollectiveKind::AllReduce;
  std::vector<int> scope_dims;
  Rational bytes_per_npu;
  int chunk_count = 1;
  GroupSchedule schedule;
  std::vector<Rank> members;  // slot -> rank for the canonical group

  std::vector<Phase> phases() const;
  // Bytes injected per slot into each topology dimension (index 0 = dim 1).
  std::vector<std::vector<Rational>> per_slot_dim_traffic(int dim_count) const;
};

// Per-step send patterns of the block's basic algorithm on k slots.
// `entering_bytes` is the per-NPU slab the dimension operates on: the data
// held on entry for ReduceScatter, the slab this dimension reconstructs for
// AllGather. Only ReduceScatter and AllGather exist as basic algorithms;
// AllReduce and AllToAll are composed at the plan level.
std::vector<PatternStep> basic_phases(CollectiveKind kind, BlockKind block, int k,
                                      Rational entering_bytes);

// Closed-form per-dimension traffic (bytes sent per NPU), zero outside scope.
std::vector<Rational> per_dim_traffic(CollectiveKind kind, Rational total_bytes_per_npu,
                                      const TopologySpec& spec,
                                      const std::vector<int>& scope_dims);

// Full phase schedule: ReduceScatter ascends scope_dims, AllGather descends,
// AllReduce concatenates both, AllToAll exchanges per dimension ascending.
// Shard labels are attached when the group has at most 64 slots.
CollectivePlan plan_collective(CollectiveKind kind, Rational bytes_per_npu,
                               const TopologySpec& spec, std::vector<int> scope_dims,
                               int chunk_count);

// Which data each slot currently holds: fragment id -> contributor bitmask.
// Drives the functional-correctness oracle for plan replay.
struct ChunkLabelState {
  std::size_t group_size = 0;
  std::vector<std::map<std::uint32_t, std::uint64_t>> holdings;

  static ChunkLabelState initial(CollectiveKind kind, std::size_t group_size);
};

struct PlanVerdict {
  bool ok = true;
  Rank first_bad_npu = -1;
  std::string message;
};

// Replays the plan's labeled sends on ChunkLabelState and checks the final
// holdings against the collective's definition. Requires a labeled plan.
PlanVerdict verify_plan(const CollectivePlan& plan, const TopologySpec& spec);

std::string plan_to_json(const CollectivePlan& plan);
void write_plan_json(const CollectivePlan& plan, const std::string& path);

}  // namespace hiersim
