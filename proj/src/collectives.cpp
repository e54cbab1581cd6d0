#include "hiersim/collectives.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace hiersim {

const char* collective_name(CollectiveKind kind) {
  switch (kind) {
    case CollectiveKind::ReduceScatter:
      return "reducescatter";
    case CollectiveKind::AllGather:
      return "allgather";
    case CollectiveKind::AllReduce:
      return "allreduce";
    case CollectiveKind::AllToAll:
      return "alltoall";
  }
  return "?";
}

CollectiveKind collective_from_name(const std::string& name) {
  if (name == "reducescatter" || name == "reduce-scatter") return CollectiveKind::ReduceScatter;
  if (name == "allgather" || name == "all-gather") return CollectiveKind::AllGather;
  if (name == "allreduce" || name == "all-reduce") return CollectiveKind::AllReduce;
  if (name == "alltoall" || name == "all-to-all") return CollectiveKind::AllToAll;
  throw ValidationError("unknown collective kind '" + name + "'");
}

const char* algorithm_name(PhaseAlgorithm algorithm) {
  switch (algorithm) {
    case PhaseAlgorithm::Ring:
      return "ring";
    case PhaseAlgorithm::Direct:
      return "direct";
    case PhaseAlgorithm::HalvingDoubling:
      return "halvingdoubling";
  }
  return "?";
}

PhaseAlgorithm algorithm_for_block(BlockKind kind) {
  switch (kind) {
    case BlockKind::Ring:
      return PhaseAlgorithm::Ring;
    case BlockKind::FullyConnected:
      return PhaseAlgorithm::Direct;
    case BlockKind::Switch:
      return PhaseAlgorithm::HalvingDoubling;
  }
  return PhaseAlgorithm::Ring;
}

namespace {

int wrap(int v, int k) { return ((v % k) + k) % k; }

std::vector<PatternStep> ring_pattern(CollectiveKind kind, int k, const Rational& entering) {
  Rational step_bytes = entering / k;
  std::vector<PatternStep> steps(k - 1);
  for (int t = 1; t < k; ++t) {
    auto& step = steps[t - 1];
    step.sends.reserve(k);
    for (int x = 0; x < k; ++x) {
      SlotSend s;
      s.src = x;
      s.dst = wrap(x + 1, k);
      s.bytes = step_bytes;
      int shard = kind == CollectiveKind::ReduceScatter ? wrap(x - t, k) : wrap(x - t + 1, k);
      s.shards.push_back(static_cast<std::uint32_t>(shard));
      step.sends.push_back(std::move(s));
    }
  }
  return steps;
}

std::vector<PatternStep> direct_pattern(CollectiveKind kind, int k, const Rational& entering) {
  Rational send_bytes = entering / k;
  std::vector<PatternStep> steps(1);
  auto& step = steps[0];
  step.sends.reserve(static_cast<std::size_t>(k) * (k - 1));
  for (int x = 0; x < k; ++x) {
    for (int p = 0; p < k; ++p) {
      if (p == x) continue;
      SlotSend s;
      s.src = x;
      s.dst = p;
      s.bytes = send_bytes;
      s.shards.push_back(
          static_cast<std::uint32_t>(kind == CollectiveKind::ReduceScatter ? p : x));
      step.sends.push_back(std::move(s));
    }
  }
  return steps;
}

std::vector<PatternStep> halving_doubling_pattern(CollectiveKind kind, int k,
                                                  const Rational& entering) {
  int m = std::countr_zero(static_cast<unsigned>(k));
  std::vector<PatternStep> steps(m);
  for (int i = 1; i <= m; ++i) {
    auto& step = steps[i - 1];
    step.sends.reserve(k);
    for (int x = 0; x < k; ++x) {
      SlotSend s;
      s.src = x;
      if (kind == CollectiveKind::ReduceScatter) {
        int bit = i - 1;
        s.dst = x ^ (1 << bit);
        int low_mask = (1 << bit) - 1;
        for (int shard = 0; shard < k; ++shard)
          if ((shard & low_mask) == (x & low_mask) && ((shard >> bit) & 1) == ((s.dst >> bit) & 1))
            s.shards.push_back(static_cast<std::uint32_t>(shard));
        s.bytes = entering / (1LL << i);
      } else {
        int bit = m - i;
        s.dst = x ^ (1 << bit);
        // Doubling: forward everything gathered so far (shards agreeing with
        // x on bits 0..bit).
        int keep_mask = (1 << (bit + 1)) - 1;
        for (int shard = 0; shard < k; ++shard)
          if ((shard & keep_mask) == (x & keep_mask)) s.shards.push_back(shard);
        s.bytes = entering / (1LL << (m - i + 1));
      }
      step.sends.push_back(std::move(s));
    }
  }
  return steps;
}

// Mixed-radix view of the scoped dimensions; slots and shards share it,
// digit 0 (the innermost scoped dimension) varying fastest.
struct ScopeView {
  std::vector<int> dims;    // 1-based topology dimension per digit
  std::vector<int> sizes;   // k per digit
  std::vector<long long> strides;
  std::size_t group_size = 1;

  ScopeView(const TopologySpec& spec, const std::vector<int>& scope) {
    dims = scope;
    for (int d : scope) {
      sizes.push_back(spec.dims[d - 1].size);
      strides.push_back(static_cast<long long>(group_size));
      group_size *= spec.dims[d - 1].size;
    }
  }

  int digit(std::size_t slot, std::size_t j) const {
    return static_cast<int>(slot / strides[j] % sizes[j]);
  }
  std::size_t with_digit(std::size_t slot, std::size_t j, int v) const {
    return slot + static_cast<long long>(v - digit(slot, j)) * strides[j];
  }
};

std::vector<int> normalize_scope(const TopologySpec& spec, std::vector<int> scope) {
  if (scope.empty()) throw ValidationError("collective scope is empty");
  std::sort(scope.begin(), scope.end());
  for (std::size_t i = 0; i < scope.size(); ++i) {
    if (scope[i] < 1 || scope[i] > spec.dim_count())
      throw ValidationError("scope dimension " + std::to_string(scope[i]) + " out of range [1, " +
                            std::to_string(spec.dim_count()) + "]");
    if (i > 0 && scope[i] == scope[i - 1])
      throw ValidationError("scope dimension " + std::to_string(scope[i]) + " listed twice");
  }
  return scope;
}

// Expands a pattern shard at scope digit j into full shard ids: digits below
// j pinned to the slot, digit j set to the pattern value, digits above j free.
void embed_shards(const ScopeView& sv, std::size_t slot, std::size_t j,
                  const std::vector<std::uint32_t>& pattern_shards,
                  std::vector<std::uint32_t>& out) {
  long long base = 0;
  for (std::size_t i = 0; i < j; ++i) base += sv.digit(slot, i) * sv.strides[i];
  std::vector<std::size_t> free_digits;
  for (std::size_t i = j + 1; i < sv.sizes.size(); ++i) free_digits.push_back(i);

  std::vector<int> combo(free_digits.size(), 0);
  for (;;) {
    long long high = 0;
    for (std::size_t f = 0; f < free_digits.size(); ++f)
      high += static_cast<long long>(combo[f]) * sv.strides[free_digits[f]];
    for (std::uint32_t v : pattern_shards)
      out.push_back(static_cast<std::uint32_t>(base + high + v * sv.strides[j]));
    std::size_t f = 0;
    for (; f < free_digits.size(); ++f) {
      if (++combo[f] < sv.sizes[free_digits[f]]) break;
      combo[f] = 0;
    }
    if (f == free_digits.size()) break;
  }
  if (free_digits.empty() && pattern_shards.empty()) out.clear();
}

StageSchedule make_pass_stage(const ScopeView& sv, std::size_t j, CollectiveKind pass_kind,
                              const TopologySpec& spec, const Rational& bytes_per_npu,
                              bool labeled) {
  const int dim = sv.dims[j];
  const int k = sv.sizes[j];
  const BlockKind block = spec.dims[dim - 1].kind;

  Rational slab = bytes_per_npu;
  for (std::size_t i = 0; i < j; ++i) slab /= sv.sizes[i];

  auto pattern = basic_phases(pass_kind, block, k, slab);

  StageSchedule stage;
  stage.dim_index = dim;
  stage.pass = pass_kind == CollectiveKind::ReduceScatter ? PassKind::ReduceScatter
                                                          : PassKind::AllGather;
  stage.algorithm = algorithm_for_block(block);
  stage.steps.resize(pattern.size());

  for (std::size_t t = 0; t < pattern.size(); ++t) {
    // Pattern sends grouped by source digit.
    std::vector<std::vector<const SlotSend*>> by_src(k);
    for (const auto& s : pattern[t].sends) by_src[s.src].push_back(&s);

    auto& step = stage.steps[t];
    for (std::size_t slot = 0; slot < sv.group_size; ++slot) {
      int v = sv.digit(slot, j);
      for (const SlotSend* p : by_src[v]) {
        SlotSend s;
        s.src = static_cast<int>(slot);
        s.dst = static_cast<int>(sv.with_digit(slot, j, p->dst));
        s.bytes = p->bytes;
        if (labeled) embed_shards(sv, slot, j, p->shards, s.shards);
        step.sends.push_back(std::move(s));
      }
    }
  }
  return stage;
}

StageSchedule make_exchange_stage(const ScopeView& sv, std::size_t j,
                                  const Rational& bytes_per_npu, bool labeled) {
  const int dim = sv.dims[j];
  const int k = sv.sizes[j];
  const std::size_t G = sv.group_size;

  StageSchedule stage;
  stage.dim_index = dim;
  stage.pass = PassKind::Exchange;
  stage.algorithm = PhaseAlgorithm::Direct;
  stage.steps.resize(1);
  auto& step = stage.steps[0];

  Rational send_bytes = bytes_per_npu / k;

  for (std::size_t slot = 0; slot < G; ++slot) {
    for (int wd = 0; wd < k; ++wd) {
      if (wd == sv.digit(slot, j)) continue;
      SlotSend s;
      s.src = static_cast<int>(slot);
      s.dst = static_cast<int>(sv.with_digit(slot, j, wd));
      s.bytes = send_bytes;
      if (labeled) {
        // Fragments (src, dst): src free below digit j, pinned to the slot at
        // and above it; dst pinned below j, digit j = wd, free above.
        for (std::size_t src = 0; src < G; ++src) {
          bool src_ok = true;
          for (std::size_t i = j; i < sv.sizes.size() && src_ok; ++i)
            src_ok = sv.digit(src, i) == sv.digit(slot, i);
          if (!src_ok) continue;
          for (std::size_t dst = 0; dst < G; ++dst) {
            if (sv.digit(dst, j) != wd) continue;
            bool dst_ok = true;
            for (std::size_t i = 0; i < j && dst_ok; ++i)
              dst_ok = sv.digit(dst, i) == sv.digit(slot, i);
            if (dst_ok) s.shards.push_back(static_cast<std::uint32_t>(src * G + dst));
          }
        }
      }
      step.sends.push_back(std::move(s));
    }
  }
  return stage;
}

}  // namespace

std::vector<PatternStep> basic_phases(CollectiveKind kind, BlockKind block, int k,
                                      Rational entering_bytes) {
  if (kind != CollectiveKind::ReduceScatter && kind != CollectiveKind::AllGather)
    throw ValidationError(std::string("basic_phases handles ReduceScatter/AllGather only, got ") +
                          collective_name(kind));
  if (k < 2) throw ValidationError("basic_phases requires k >= 2, got " + std::to_string(k));
  if (block == BlockKind::Switch && !std::has_single_bit(static_cast<unsigned>(k)))
    throw ValidationError("halving-doubling requires a power-of-two group, got " +
                          std::to_string(k));

  switch (algorithm_for_block(block)) {
    case PhaseAlgorithm::Ring:
      return ring_pattern(kind, k, entering_bytes);
    case PhaseAlgorithm::Direct:
      return direct_pattern(kind, k, entering_bytes);
    case PhaseAlgorithm::HalvingDoubling:
      return halving_doubling_pattern(kind, k, entering_bytes);
  }
  return {};
}

std::vector<Rational> per_dim_traffic(CollectiveKind kind, Rational total_bytes_per_npu,
                                      const TopologySpec& spec,
                                      const std::vector<int>& scope_dims) {
  spec.validate();
  if (!(total_bytes_per_npu > Rational(0)))
    throw ValidationError("collective payload must be positive");
  auto scope = normalize_scope(spec, scope_dims);

  std::vector<Rational> traffic(spec.dims.size(), Rational(0));
  if (kind == CollectiveKind::AllToAll) {
    for (int d : scope) {
      int k = spec.dims[d - 1].size;
      traffic[d - 1] = total_bytes_per_npu * Rational(k - 1, k);
    }
    return traffic;
  }

  int passes = kind == CollectiveKind::AllReduce ? 2 : 1;
  Rational shard = total_bytes_per_npu;
  for (int d : scope) {
    int k = spec.dims[d - 1].size;
    traffic[d - 1] = shard * Rational(k - 1, k) * passes;
    shard /= k;
  }
  return traffic;
}

CollectivePlan plan_collective(CollectiveKind kind, Rational bytes_per_npu,
                               const TopologySpec& spec, std::vector<int> scope_dims,
                               int chunk_count) {
  spec.validate();
  if (chunk_count < 1)
    throw ValidationError("chunk_count must be >= 1, got " + std::to_string(chunk_count));
  if (!(bytes_per_npu > Rational(0))) throw ValidationError("collective payload must be positive");
  auto scope = normalize_scope(spec, std::move(scope_dims));

  ScopeView sv(spec, scope);
  const bool labeled = sv.group_size <= 64;

  CollectivePlan plan;
  plan.kind = kind;
  plan.scope_dims = scope;
  plan.bytes_per_npu = bytes_per_npu;
  plan.chunk_count = chunk_count;
  plan.schedule.group_size = sv.group_size;
  plan.schedule.scope_dims = scope;
  plan.schedule.bytes_per_npu = bytes_per_npu;
  plan.schedule.chunk_count = chunk_count;
  plan.schedule.labeled = labeled;

  auto add_rs = [&] {
    for (std::size_t j = 0; j < scope.size(); ++j)
      plan.schedule.stages.push_back(
          make_pass_stage(sv, j, CollectiveKind::ReduceScatter, spec, bytes_per_npu, labeled));
  };
  auto add_ag = [&] {
    for (std::size_t j = scope.size(); j-- > 0;)
      plan.schedule.stages.push_back(
          make_pass_stage(sv, j, CollectiveKind::AllGather, spec, bytes_per_npu, labeled));
  };

  switch (kind) {
    case CollectiveKind::ReduceScatter:
      add_rs();
      break;
    case CollectiveKind::AllGather:
      add_ag();
      break;
    case CollectiveKind::AllReduce:
      add_rs();
      add_ag();
      break;
    case CollectiveKind::AllToAll:
      for (std::size_t j = 0; j < scope.size(); ++j)
        plan.schedule.stages.push_back(make_exchange_stage(sv, j, bytes_per_npu, labeled));
      break;
  }

  // Canonical group: all coordinates outside the scope pinned to zero.
  plan.members.reserve(sv.group_size);
  std::vector<int> coords(spec.dims.size(), 0);
  for (std::size_t slot = 0; slot < sv.group_size; ++slot) {
    for (std::size_t j = 0; j < scope.size(); ++j) coords[scope[j] - 1] = sv.digit(slot, j);
    plan.members.push_back(coords_to_rank(coords, spec));
  }
  return plan;
}

std::vector<Phase> CollectivePlan::phases() const {
  std::vector<Phase> out;
  for (const auto& stage : schedule.stages) {
    for (std::size_t t = 0; t < stage.steps.size(); ++t) {
      Phase phase;
      phase.dim_index = stage.dim_index;
      phase.step = static_cast<int>(t + 1);
      phase.algorithm = stage.algorithm;
      phase.sends.reserve(stage.steps[t].sends.size());
      for (const auto& s : stage.steps[t].sends)
        phase.sends.push_back({members[s.src], members[s.dst], s.bytes});
      out.push_back(std::move(phase));
    }
  }
  return out;
}

std::vector<std::vector<Rational>> CollectivePlan::per_slot_dim_traffic(int dim_count) const {
  std::vector<std::vector<Rational>> traffic(schedule.group_size,
                                             std::vector<Rational>(dim_count, Rational(0)));
  for (const auto& stage : schedule.stages)
    for (const auto& step : stage.steps)
      for (const auto& s : step.sends) traffic[s.src][stage.dim_index - 1] += s.bytes;
  return traffic;
}

ChunkLabelState ChunkLabelState::initial(CollectiveKind kind, std::size_t group_size) {
  ChunkLabelState state;
  state.group_size = group_size;
  state.holdings.resize(group_size);
  for (std::size_t g = 0; g < group_size; ++g) {
    std::uint64_t self = 1ULL << g;
    switch (kind) {
      case CollectiveKind::ReduceScatter:
      case CollectiveKind::AllReduce:
        for (std::size_t s = 0; s < group_size; ++s)
          state.holdings[g][static_cast<std::uint32_t>(s)] = self;
        break;
      case CollectiveKind::AllGather:
        state.holdings[g][static_cast<std::uint32_t>(g)] = self;
        break;
      case CollectiveKind::AllToAll:
        for (std::size_t d = 0; d < group_size; ++d)
          state.holdings[g][static_cast<std::uint32_t>(g * group_size + d)] = self;
        break;
    }
  }
  return state;
}

PlanVerdict verify_plan(const CollectivePlan& plan, const TopologySpec& spec) {
  if (!plan.schedule.labeled)
    throw ValidationError("verify_plan requires a labeled plan (group size <= 64)");

  const std::size_t G = plan.schedule.group_size;
  ScopeView sv(spec, plan.scope_dims);
  ChunkLabelState state = ChunkLabelState::initial(plan.kind, G);
  Rational shard_bytes = plan.bytes_per_npu / static_cast<long long>(G);

  auto fail = [&](std::size_t slot, const std::string& msg) {
    return PlanVerdict{false, plan.members[slot], msg};
  };

  for (std::size_t si = 0; si < plan.schedule.stages.size(); ++si) {
    const auto& stage = plan.schedule.stages[si];
    std::size_t j = std::find(sv.dims.begin(), sv.dims.end(), stage.dim_index) - sv.dims.begin();
    if (j == sv.dims.size())
      return PlanVerdict{false, -1,
                         "stage " + std::to_string(si) + " runs on unscoped dimension " +
                             std::to_string(stage.dim_index)};

    for (const auto& step : stage.steps) {
      for (const auto& send : step.sends) {
        std::size_t src = send.src, dst = send.dst;
        if (src == dst || sv.with_digit(src, j, sv.digit(dst, j)) != dst)
          return fail(src, "send leaves the dimension-" + std::to_string(stage.dim_index) +
                               " group: slot " + std::to_string(src) + " -> " +
                               std::to_string(dst));
        if (Rational(static_cast<long long>(send.shards.size())) * shard_bytes != send.bytes)
          return fail(src, "send bytes do not match shard payload");

        for (std::uint32_t id : send.shards) {
          auto it = state.holdings[src].find(id);
          if (it == state.holdings[src].end())
            return fail(src, "slot " + std::to_string(src) + " sends fragment " +
                                 std::to_string(id) + " it does not hold");
          std::uint64_t mask = it->second;
          auto& dst_holdings = state.holdings[dst];
          auto dst_it = dst_holdings.find(id);
          switch (stage.pass) {
            case PassKind::ReduceScatter:
              state.holdings[src].erase(it);
              if (dst_it != dst_holdings.end()) {
                if (dst_it->second & mask)
                  return fail(dst, "overlapping contributors for shard " + std::to_string(id));
                dst_it->second |= mask;
              } else {
                dst_holdings[id] = mask;
              }
              break;
            case PassKind::AllGather:
            case PassKind::Exchange:
              if (dst_it != dst_holdings.end())
                return fail(dst, "slot " + std::to_string(dst) + " already holds fragment " +
                                     std::to_string(id));
              dst_holdings[id] = mask;
              if (stage.pass == PassKind::Exchange) state.holdings[src].erase(it);
              break;
          }
        }
      }
    }
  }

  const std::uint64_t full = G == 64 ? ~0ULL : (1ULL << G) - 1;
  for (std::size_t g = 0; g < G; ++g) {
    const auto& h = state.holdings[g];
    switch (plan.kind) {
      case CollectiveKind::ReduceScatter: {
        auto it = h.find(static_cast<std::uint32_t>(g));
        if (h.size() != 1 || it == h.end() || it->second != full)
          return fail(g, "slot " + std::to_string(g) + " does not hold exactly its own shard, " +
                             "fully reduced");
        break;
      }
      case CollectiveKind::AllGather:
        if (h.size() != G)
          return fail(g, "slot " + std::to_string(g) + " holds " + std::to_string(h.size()) +
                             " of " + std::to_string(G) + " shards");
        for (const auto& [id, mask] : h)
          if (mask != (1ULL << id))
            return fail(g, "shard " + std::to_string(id) + " has wrong contributor");
        break;
      case CollectiveKind::AllReduce:
        if (h.size() != G)
          return fail(g, "slot " + std::to_string(g) + " holds " + std::to_string(h.size()) +
                             " of " + std::to_string(G) + " shards");
        for (const auto& [id, mask] : h)
          if (mask != full)
            return fail(g, "shard " + std::to_string(id) + " not reduced over all contributors");
        break;
      case CollectiveKind::AllToAll:
        if (h.size() != G) return fail(g, "slot " + std::to_string(g) + " missing fragments");
        for (const auto& [id, mask] : h) {
          std::size_t from = id / G, to = id % G;
          if (to != g || mask != (1ULL << from))
            return fail(g, "fragment " + std::to_string(id) + " misrouted");
        }
        break;
    }
  }
  return {};
}

std::string plan_to_json(const CollectivePlan& plan) {
  nlohmann::ordered_json j;
  j["kind"] = collective_name(plan.kind);
  j["scope_dims"] = plan.scope_dims;
  j["bytes_per_npu"] = plan.bytes_per_npu.to_string();
  j["chunk_count"] = plan.chunk_count;
  j["group_size"] = plan.schedule.group_size;
  j["members"] = plan.members;
  nlohmann::ordered_json phases = nlohmann::ordered_json::array();
  for (const auto& phase : plan.phases()) {
    nlohmann::ordered_json p;
    p["dim"] = phase.dim_index;
    p["step"] = phase.step;
    p["algorithm"] = algorithm_name(phase.algorithm);
    nlohmann::ordered_json sends = nlohmann::ordered_json::array();
    for (const auto& s : phase.sends)
      sends.push_back({{"src", s.src}, {"dst", s.dst}, {"bytes", s.bytes.to_string()}});
    p["sends"] = std::move(sends);
    phases.push_back(std::move(p));
  }
  j["phases"] = std::move(phases);
  return j.dump(2);
}

void write_plan_json(const CollectivePlan& plan, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  out << plan_to_json(plan) << '\n';
}

}  // namespace hiersim
