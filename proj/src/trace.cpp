#include "hiersim/trace.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace hiersim {

namespace {

const char* kind_token(NodeKind kind) {
  switch (kind) {
    case NodeKind::Compute:
      return "comp";
    case NodeKind::MemoryAccess:
      return "mem";
    case NodeKind::CollectiveComm:
      return "coll";
    case NodeKind::PeerComm:
      return "peer";
  }
  return "?";
}

std::string join_ll(const std::vector<long long>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::string join_int(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

long long parse_ll(const std::string& s, long long line, const char* what) {
  try {
    std::size_t pos = 0;
    long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw TraceError(std::string("invalid ") + what + " '" + s + "'", line);
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

void TraceFile::validate() const {
  if (version != 1) throw TraceError("unsupported trace version " + std::to_string(version));
  if (npu_count < 1) throw TraceError("npu count must be >= 1");

  std::unordered_map<Rank, std::unordered_set<long long>> seen;
  for (const auto& node : nodes) {
    if (node.npu < 0 || node.npu >= npu_count)
      throw TraceError("node " + std::to_string(node.id) + ": npu " + std::to_string(node.npu) +
                       " out of range [0, " + std::to_string(npu_count) + ")");
    auto& ids = seen[node.npu];
    if (!ids.insert(node.id).second)
      throw TraceError("duplicate node id " + std::to_string(node.id) + " on npu " +
                       std::to_string(node.npu));
    for (long long dep : node.deps) {
      if (dep >= node.id)
        throw TraceError("node " + std::to_string(node.id) + " on npu " +
                         std::to_string(node.npu) + ": dep " + std::to_string(dep) +
                         " does not precede the node");
      if (!ids.count(dep))
        throw TraceError("node " + std::to_string(node.id) + " on npu " +
                         std::to_string(node.npu) + ": dep " + std::to_string(dep) +
                         " not declared");
    }
    switch (node.kind) {
      case NodeKind::Compute:
        if (node.flops < 0 || node.tensor_bytes < 0)
          throw TraceError("node " + std::to_string(node.id) + ": negative compute metadata");
        break;
      case NodeKind::MemoryAccess:
        if (node.tensor_bytes < 0)
          throw TraceError("node " + std::to_string(node.id) + ": negative tensor size");
        break;
      case NodeKind::CollectiveComm:
        if (node.comm_bytes < 0)
          throw TraceError("node " + std::to_string(node.id) + ": negative collective size");
        if (node.scope_dims.empty())
          throw TraceError("node " + std::to_string(node.id) + ": collective without scope");
        if (node.tag < 0)
          throw TraceError("node " + std::to_string(node.id) + ": negative tag");
        break;
      case NodeKind::PeerComm:
        if (node.comm_bytes < 0)
          throw TraceError("node " + std::to_string(node.id) + ": negative message size");
        if (node.peer < 0 || node.peer >= npu_count)
          throw TraceError("node " + std::to_string(node.id) + ": peer " +
                           std::to_string(node.peer) + " out of range");
        if (node.peer == node.npu)
          throw TraceError("node " + std::to_string(node.id) + ": peer equals own npu");
        if (node.tag < 0)
          throw TraceError("node " + std::to_string(node.id) + ": negative tag");
        break;
    }
  }
}

long long TraceFile::max_scope_dim() const {
  long long m = 0;
  for (const auto& node : nodes)
    if (node.kind == NodeKind::CollectiveComm)
      for (int d : node.scope_dims) m = std::max<long long>(m, d);
  return m;
}

void write_trace(const TraceFile& trace, std::ostream& out) {
  out << "ETRACE " << trace.version << '\n';
  out << "npus " << trace.npu_count << '\n';
  if (!trace.provenance.empty()) out << "source " << trace.provenance << '\n';
  for (const auto& n : trace.nodes) {
    out << "node npu=" << n.npu << " id=" << n.id << " kind=" << kind_token(n.kind)
        << " deps=" << join_ll(n.deps);
    switch (n.kind) {
      case NodeKind::Compute:
        out << " flops=" << n.flops << " bytes=" << n.tensor_bytes;
        break;
      case NodeKind::MemoryAccess:
        out << " loc=" << (n.location == MemLocation::Local ? "local" : "remote")
            << " dir=" << (n.direction == MemDirection::Load ? "load" : "store")
            << " insw=" << (n.in_switch ? 1 : 0) << " bytes=" << n.tensor_bytes;
        break;
      case NodeKind::CollectiveComm:
        out << " coll=" << collective_name(n.coll) << " bytes=" << n.comm_bytes
            << " scope=" << join_int(n.scope_dims) << " tag=" << n.tag;
        break;
      case NodeKind::PeerComm:
        out << " dir=" << (n.peer_dir == PeerDirection::Send ? "send" : "recv")
            << " peer=" << n.peer << " tag=" << n.tag << " bytes=" << n.comm_bytes;
        break;
    }
    out << '\n';
  }
}

void write_trace(const TraceFile& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  write_trace(trace, out);
}

TraceFile read_trace(std::istream& in) {
  TraceFile trace;
  std::string line;
  long long line_no = 0;

  if (!std::getline(in, line)) throw TraceError("empty trace");
  ++line_no;
  {
    std::istringstream ls(line);
    std::string magic;
    int version = 0;
    if (!(ls >> magic >> version) || magic != "ETRACE")
      throw TraceError("expected 'ETRACE <version>' header", line_no);
    if (version != 1) throw TraceError("unsupported trace version " + std::to_string(version),
                                       line_no);
    trace.version = version;
  }

  bool saw_npus = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head == "npus") {
      std::string v;
      ls >> v;
      trace.npu_count = parse_ll(v, line_no, "npu count");
      saw_npus = true;
      continue;
    }
    if (head == "source") {
      std::string rest;
      std::getline(ls, rest);
      if (!rest.empty() && rest[0] == ' ') rest.erase(0, 1);
      trace.provenance = rest;
      continue;
    }
    if (head != "node") throw TraceError("unknown record '" + head + "'", line_no);
    if (!saw_npus) throw TraceError("node record before 'npus' header", line_no);

    TraceNode node;
    std::string field;
    bool have_npu = false, have_id = false, have_kind = false;
    while (ls >> field) {
      auto eq = field.find('=');
      if (eq == std::string::npos) throw TraceError("malformed field '" + field + "'", line_no);
      std::string key = field.substr(0, eq);
      std::string value = field.substr(eq + 1);
      if (key == "npu") {
        node.npu = parse_ll(value, line_no, "npu");
        have_npu = true;
      } else if (key == "id") {
        node.id = parse_ll(value, line_no, "id");
        have_id = true;
      } else if (key == "kind") {
        have_kind = true;
        if (value == "comp")
          node.kind = NodeKind::Compute;
        else if (value == "mem")
          node.kind = NodeKind::MemoryAccess;
        else if (value == "coll")
          node.kind = NodeKind::CollectiveComm;
        else if (value == "peer")
          node.kind = NodeKind::PeerComm;
        else
          throw TraceError("unknown node kind '" + value + "'", line_no);
      } else if (key == "deps") {
        if (!value.empty())
          for (const auto& d : split(value, ','))
            node.deps.push_back(parse_ll(d, line_no, "dep"));
      } else if (key == "flops") {
        node.flops = parse_ll(value, line_no, "flops");
      } else if (key == "bytes") {
        long long v = parse_ll(value, line_no, "bytes");
        node.tensor_bytes = v;
        node.comm_bytes = v;
      } else if (key == "loc") {
        if (value == "local")
          node.location = MemLocation::Local;
        else if (value == "remote")
          node.location = MemLocation::Remote;
        else
          throw TraceError("unknown location '" + value + "'", line_no);
      } else if (key == "dir") {
        if (value == "load")
          node.direction = MemDirection::Load;
        else if (value == "store")
          node.direction = MemDirection::Store;
        else if (value == "send")
          node.peer_dir = PeerDirection::Send;
        else if (value == "recv")
          node.peer_dir = PeerDirection::Recv;
        else
          throw TraceError("unknown direction '" + value + "'", line_no);
      } else if (key == "insw") {
        node.in_switch = parse_ll(value, line_no, "insw") != 0;
      } else if (key == "coll") {
        try {
          node.coll = collective_from_name(value);
        } catch (const ValidationError& e) {
          throw TraceError(e.what(), line_no);
        }
      } else if (key == "scope") {
        for (const auto& d : split(value, ','))
          node.scope_dims.push_back(static_cast<int>(parse_ll(d, line_no, "scope dim")));
      } else if (key == "tag") {
        node.tag = parse_ll(value, line_no, "tag");
      } else if (key == "peer") {
        node.peer = parse_ll(value, line_no, "peer");
      } else {
        throw TraceError("unknown field '" + key + "'", line_no);
      }
    }
    if (!have_npu || !have_id || !have_kind)
      throw TraceError("node record missing npu/id/kind", line_no);
    // "bytes" is a shared key; keep only the field the kind owns.
    if (node.kind == NodeKind::Compute || node.kind == NodeKind::MemoryAccess)
      node.comm_bytes = 0;
    else
      node.tensor_bytes = 0;
    trace.nodes.push_back(std::move(node));
  }

  if (!saw_npus) throw TraceError("missing 'npus' header");
  try {
    trace.validate();
  } catch (const TraceError&) {
    throw;
  }
  return trace;
}

TraceFile read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open trace file '" + path + "'");
  return read_trace(in);
}

}  // namespace hiersim
