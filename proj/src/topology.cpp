#include "hiersim/topology.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <sstream>

namespace hiersim {

const char* block_name(BlockKind kind) {
  switch (kind) {
    case BlockKind::Ring:
      return "Ring";
    case BlockKind::FullyConnected:
      return "FC";
    case BlockKind::Switch:
      return "Switch";
  }
  return "?";
}

int hop_count(BlockKind kind) {
  return kind == BlockKind::Switch ? 2 : 1;
}

void Dimension::validate(int dim_index) const {
  const std::string where = "dimension " + std::to_string(dim_index);
  if (size < 2) throw ValidationError(where + ": size must be >= 2, got " + std::to_string(size));
  if (kind == BlockKind::Switch && !std::has_single_bit(static_cast<unsigned>(size)))
    throw ValidationError(where + ": Switch size must be a power of two, got " +
                          std::to_string(size));
  if (bandwidth <= 0) throw ValidationError(where + ": bandwidth must be positive");
  if (latency_ns < 0) throw ValidationError(where + ": latency must be non-negative");
  if (hops < 1) throw ValidationError(where + ": hops must be >= 1");
}

Rank TopologySpec::npu_count() const {
  Rank n = 1;
  for (const auto& d : dims) n *= d.size;
  return n;
}

void TopologySpec::validate() const {
  if (dims.empty()) throw ValidationError("topology has no dimensions");
  for (int i = 0; i < dim_count(); ++i) dims[i].validate(i + 1);
}

namespace {

bool iequals(const std::string& a, const char* b) {
  std::size_t n = 0;
  while (b[n] != '\0') ++n;
  if (a.size() != n) return false;
  for (std::size_t i = 0; i < n; ++i)
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  return true;
}

BlockKind kind_from_token(const std::string& name, const std::string& token) {
  if (iequals(name, "Ring") || iequals(name, "R")) return BlockKind::Ring;
  if (iequals(name, "FC") || iequals(name, "FullyConnected")) return BlockKind::FullyConnected;
  if (iequals(name, "Switch") || iequals(name, "SW")) return BlockKind::Switch;
  throw ValidationError("unknown block token '" + token + "'");
}

}  // namespace

TopologySpec parse_topology(const std::string& text,
                            const std::vector<long long>& bandwidths,
                            const std::vector<long long>& latencies_ns) {
  TopologySpec spec;
  spec.name = text;

  std::vector<std::string> tokens;
  std::string cur;
  for (char c : text) {
    if (c == '_') {
      tokens.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  tokens.push_back(cur);

  for (const auto& token : tokens) {
    auto open = token.find('(');
    auto close = token.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close != token.size() - 1 ||
        close <= open + 1)
      throw ValidationError("malformed block token '" + token + "', expected Name(size)");
    std::string name = token.substr(0, open);
    std::string size_str = token.substr(open + 1, close - open - 1);
    int size = 0;
    try {
      std::size_t pos = 0;
      size = std::stoi(size_str, &pos);
      if (pos != size_str.size()) throw std::invalid_argument(size_str);
    } catch (const std::exception&) {
      throw ValidationError("invalid size '" + size_str + "' in token '" + token + "'");
    }
    Dimension d;
    d.kind = kind_from_token(name, token);
    d.size = size;
    d.hops = hop_count(d.kind);
    spec.dims.push_back(d);
  }

  if (bandwidths.size() != spec.dims.size())
    throw ValidationError("expected " + std::to_string(spec.dims.size()) +
                          " bandwidth values, got " + std::to_string(bandwidths.size()));
  if (!latencies_ns.empty() && latencies_ns.size() != spec.dims.size())
    throw ValidationError("expected " + std::to_string(spec.dims.size()) +
                          " latency values, got " + std::to_string(latencies_ns.size()));
  for (std::size_t i = 0; i < spec.dims.size(); ++i) {
    spec.dims[i].bandwidth = bandwidths[i];
    spec.dims[i].latency_ns = latencies_ns.empty() ? 0 : latencies_ns[i];
  }

  spec.validate();
  return spec;
}

std::string format_topology(const TopologySpec& spec) {
  std::ostringstream out;
  for (std::size_t i = 0; i < spec.dims.size(); ++i) {
    if (i > 0) out << '_';
    out << block_name(spec.dims[i].kind) << '(' << spec.dims[i].size << ')';
  }
  return out.str();
}

std::vector<int> rank_to_coords(Rank rank, const TopologySpec& spec) {
  if (rank < 0 || rank >= spec.npu_count())
    throw ValidationError("rank " + std::to_string(rank) + " out of range [0, " +
                          std::to_string(spec.npu_count()) + ")");
  std::vector<int> coords(spec.dims.size());
  for (std::size_t i = 0; i < spec.dims.size(); ++i) {
    coords[i] = static_cast<int>(rank % spec.dims[i].size);
    rank /= spec.dims[i].size;
  }
  return coords;
}

Rank coords_to_rank(const std::vector<int>& coords, const TopologySpec& spec) {
  if (coords.size() != spec.dims.size())
    throw ValidationError("coordinate count " + std::to_string(coords.size()) +
                          " does not match dimension count " + std::to_string(spec.dims.size()));
  Rank rank = 0;
  for (std::size_t i = spec.dims.size(); i-- > 0;) {
    if (coords[i] < 0 || coords[i] >= spec.dims[i].size)
      throw ValidationError("coordinate " + std::to_string(coords[i]) + " out of range for dimension " +
                            std::to_string(i + 1));
    rank = rank * spec.dims[i].size + coords[i];
  }
  return rank;
}

std::vector<Rank> dim_group(Rank rank, int dim_index, const TopologySpec& spec) {
  if (dim_index < 1 || dim_index > spec.dim_count())
    throw ValidationError("dimension index " + std::to_string(dim_index) + " out of range [1, " +
                          std::to_string(spec.dim_count()) + "]");
  auto coords = rank_to_coords(rank, spec);
  std::vector<Rank> group;
  group.reserve(spec.dims[dim_index - 1].size);
  for (int v = 0; v < spec.dims[dim_index - 1].size; ++v) {
    coords[dim_index - 1] = v;
    group.push_back(coords_to_rank(coords, spec));
  }
  return group;
}

}  // namespace hiersim
