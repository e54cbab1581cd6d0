#include "hiersim/network.hpp"

#include <algorithm>
#include <sstream>

namespace hiersim {

namespace {

// ceil(bytes / bandwidth) in ns without rational normalization.
inline TimeNs serialization_ns(const Rational& bytes, long long bandwidth) {
  if (bytes.is_zero()) return 0;
  __int128 num = static_cast<__int128>(bytes.num()) * 1'000'000'000;
  __int128 den = static_cast<__int128>(bytes.den()) * bandwidth;
  return static_cast<TimeNs>((num + den - 1) / den);
}

}  // namespace

TimeNs transfer_time_ns(const Rational& bytes, const LinkModel& link) {
  return link.latency_ns * link.hops + serialization_ns(bytes, link.bandwidth);
}

void EventQueue::schedule_at(TimeNs when, Completion action) {
  heap_.push_back(Event{when, seq_++, action});
  std::push_heap(heap_.begin(), heap_.end(), Later{});
}

TimeNs EventQueue::run_until_idle() {
  while (!heap_.empty()) {
    std::pop_heap(heap_.begin(), heap_.end(), Later{});
    Event ev = heap_.back();
    heap_.pop_back();
    now_ = ev.when;
    ++processed_;
    ev.action();
  }
  return now_;
}

Network::Network(const TopologySpec& spec, EventQueue& queue) : spec_(spec), queue_(queue) {
  spec_.validate();
  npu_count_ = spec_.npu_count();
  links_.reserve(spec_.dims.size());
  for (const auto& d : spec_.dims) links_.push_back({d.bandwidth, d.latency_ns, d.hops});
  port_free_.assign(static_cast<std::size_t>(npu_count_) * spec_.dims.size(), 0);
  pending_.reserve(1 << 12);
}

void Network::check_rank(Rank rank) const {
  if (rank < 0 || rank >= npu_count_)
    throw ValidationError("rank " + std::to_string(rank) + " out of range");
}

int Network::dim_of_pair(Rank src, Rank dst) const {
  check_rank(src);
  check_rank(dst);
  if (src == dst) throw ValidationError("src and dst must differ");
  auto a = rank_to_coords(src, spec_);
  auto b = rank_to_coords(dst, spec_);
  for (int d = spec_.dim_count(); d-- > 0;)
    if (a[d] != b[d]) return d + 1;
  return 1;
}

void Network::sim_send(Rational bytes, Rank src, Rank dst, std::uint64_t tag,
                       Completion on_sent) {
  sim_send(bytes, src, dst, dim_of_pair(src, dst), tag, on_sent);
}

void Network::sim_recv(Rational bytes, Rank src, Rank dst, std::uint64_t tag,
                       Completion on_received) {
  sim_recv(bytes, src, dst, dim_of_pair(src, dst), tag, on_received);
}

void Network::sim_send(Rational bytes, Rank src, Rank dst, int dim, std::uint64_t tag,
                       Completion on_sent) {
  check_rank(src);
  check_rank(dst);
  if (src == dst) throw ValidationError("send: src and dst must differ");
  MatchKey key{src, dst, tag};
  auto& mq = pending_[key];
  if (!mq.recvs.empty()) {
    PendingRecv recv = mq.recvs.front();
    mq.recvs.erase(mq.recvs.begin());
    --parked_ops_;
    start_transfer(key, PendingSend{bytes, dim, on_sent}, recv);
    if (mq.sends.empty() && mq.recvs.empty()) pending_.erase(key);
  } else {
    mq.sends.push_back(PendingSend{bytes, dim, on_sent});
    ++parked_ops_;
  }
}

void Network::sim_recv(Rational bytes, Rank src, Rank dst, int dim, std::uint64_t tag,
                       Completion on_received) {
  (void)dim;  // transfer dimension is the sender's choice
  check_rank(src);
  check_rank(dst);
  MatchKey key{src, dst, tag};
  auto& mq = pending_[key];
  if (!mq.sends.empty()) {
    PendingSend send = mq.sends.front();
    mq.sends.erase(mq.sends.begin());
    --parked_ops_;
    start_transfer(key, send, PendingRecv{bytes, on_received});
    if (mq.sends.empty() && mq.recvs.empty()) pending_.erase(key);
  } else {
    mq.recvs.push_back(PendingRecv{bytes, on_received});
    ++parked_ops_;
  }
}

void Network::start_transfer(const MatchKey& key, const PendingSend& send,
                             const PendingRecv& recv) {
  if (send.bytes != recv.bytes)
    throw ValidationError("mismatched transfer size for (" + std::to_string(key.src) + " -> " +
                          std::to_string(key.dst) + ", tag " + std::to_string(key.tag) +
                          "): send " + send.bytes.to_string() + " bytes, recv " +
                          recv.bytes.to_string() + " bytes");
  const LinkModel& lk = links_[send.dim - 1];
  TimeNs ser = serialization_ns(send.bytes, lk.bandwidth);

  TimeNs& free_at =
      port_free_[static_cast<std::size_t>(key.src) * links_.size() + (send.dim - 1)];
  TimeNs start = std::max(queue_.now(), free_at);
  TimeNs sent_at = start + ser;
  TimeNs arrive_at = sent_at + lk.latency_ns * lk.hops;
  free_at = sent_at;

  if (log_) log_(SendLogEntry{sent_at, key.src, key.dst, send.dim, send.bytes});
  queue_.schedule_at(sent_at, send.on_sent);
  queue_.schedule_at(arrive_at, recv.on_received);
}

TimeNs Network::run_until_idle() {
  TimeNs t = queue_.run_until_idle();
  if (parked_ops_ > 0) {
    auto parked = parked_diagnostics();
    std::ostringstream msg;
    msg << "simulation ended with " << parked_ops_
        << " parked operation(s); first: " << (parked.empty() ? "?" : parked.front());
    throw DeadlockError(msg.str(), parked);
  }
  return t;
}

std::vector<std::string> Network::parked_diagnostics() const {
  std::vector<std::string> out;
  for (const auto& [key, mq] : pending_) {
    for (const auto& s : mq.sends) {
      std::ostringstream os;
      os << "send " << key.src << " -> " << key.dst << ", tag " << key.tag << ", "
         << s.bytes.to_string() << " bytes (no matching recv)";
      out.push_back(os.str());
    }
    for (const auto& r : mq.recvs) {
      std::ostringstream os;
      os << "recv " << key.src << " -> " << key.dst << ", tag " << key.tag << ", "
         << r.bytes.to_string() << " bytes (no matching send)";
      out.push_back(os.str());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace hiersim
