#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <type_traits>
#include <unordered_map>
#include <vector>

#include "hiersim/rational.hpp"
#include "hiersim/topology.hpp"

namespace hiersim {

using TimeNs = long long;

// Type-erased completion with fixed inline storage: trivially copyable so
// the event heap can shuffle events as raw bytes. Callables must be
// trivially copyable and capture at most 24 bytes.
class Completion {
 public:
  Completion() = default;
  template <class F, class = std::enable_if_t<!std::is_same_v<std::decay_t<F>, Completion>>>
  Completion(F f) {  // NOLINT: implicit by design
    static_assert(sizeof(F) <= kStorage, "completion capture too large");
    static_assert(std::is_trivially_copyable_v<F>, "completion must be trivially copyable");
    new (storage_) F(f);
    invoke_ = [](const void* s) { (*static_cast<const F*>(s))(); };
  }
  void operator()() const { invoke_(storage_); }
  explicit operator bool() const { return invoke_ != nullptr; }

 private:
  static constexpr std::size_t kStorage = 24;
  alignas(8) unsigned char storage_[kStorage] = {};
  void (*invoke_)(const void*) = nullptr;
};

struct LinkModel {
  long long bandwidth = 0;  // bytes/s
  long long latency_ns = 0;
  int hops = 1;
};

// latency * hops + bytes / bandwidth, bandwidth term rounded up to the ns.
TimeNs transfer_time_ns(const Rational& bytes, const LinkModel& link);

// Deterministic discrete-event core: equal fire times resolve in
// registration order.
class EventQueue {
 public:
  TimeNs now() const { return now_; }
  bool empty() const { return heap_.empty(); }
  std::size_t processed() const { return processed_; }

  void schedule(TimeNs delta, Completion action) { schedule_at(now_ + delta, action); }
  void schedule_at(TimeNs when, Completion action);

  // Processes events until none remain; returns the final time.
  TimeNs run_until_idle();

 private:
  struct Event {
    TimeNs when;
    std::uint64_t seq;
    Completion action;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.when != b.when ? a.when > b.when : a.seq > b.seq;
    }
  };
  std::vector<Event> heap_;
  TimeNs now_ = 0;
  std::uint64_t seq_ = 0;
  std::size_t processed_ = 0;
};

struct SendLogEntry {
  TimeNs time;  // sender-side completion
  Rank src = 0;
  Rank dst = 0;
  int dim = 0;  // 1-based
  Rational bytes;
};

using SendLogSink = std::function<void(const SendLogEntry&)>;

// Analytical message transport over a topology. A send matches a recv with
// identical (src, dst, tag); the transfer then occupies the sender's
// per-dimension injection port FIFO for the serialization time. The send
// completion fires when serialization ends, the recv completion when the
// message lands at the destination (serialization + hop latency later).
// Unmatched operations park until their counterpart posts.
class Network {
 public:
  Network(const TopologySpec& spec, EventQueue& queue);

  void sim_send(Rational bytes, Rank src, Rank dst, int dim, std::uint64_t tag,
                Completion on_sent);
  void sim_recv(Rational bytes, Rank src, Rank dst, int dim, std::uint64_t tag,
                Completion on_received);
  // Convenience: derives the dimension from the rank pair.
  void sim_send(Rational bytes, Rank src, Rank dst, std::uint64_t tag, Completion on_sent);
  void sim_recv(Rational bytes, Rank src, Rank dst, std::uint64_t tag, Completion on_received);

  // Outermost dimension in which the two ranks differ.
  int dim_of_pair(Rank src, Rank dst) const;

  const LinkModel& link(int dim) const { return links_[dim - 1]; }
  const TopologySpec& topology() const { return spec_; }

  // Runs the queue dry and reports deadlock if operations are still parked.
  TimeNs run_until_idle();

  bool has_parked() const { return parked_ops_ > 0; }
  std::vector<std::string> parked_diagnostics() const;

  void set_send_log(SendLogSink sink) { log_ = std::move(sink); }

 private:
  struct MatchKey {
    Rank src;
    Rank dst;
    std::uint64_t tag;
    bool operator==(const MatchKey&) const = default;
  };
  struct MatchKeyHash {
    std::size_t operator()(const MatchKey& k) const {
      std::uint64_t h = static_cast<std::uint64_t>(k.src) * 0x9e3779b97f4a7c15ULL;
      h ^= static_cast<std::uint64_t>(k.dst) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      h ^= k.tag + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      return static_cast<std::size_t>(h);
    }
  };
  struct PendingSend {
    Rational bytes;
    int dim;
    Completion on_sent;
  };
  struct PendingRecv {
    Rational bytes;
    Completion on_received;
  };
  // FIFO per key; vectors keep the empty state allocation-free.
  struct MatchQueue {
    std::vector<PendingSend> sends;
    std::vector<PendingRecv> recvs;
  };

  void start_transfer(const MatchKey& key, const PendingSend& send, const PendingRecv& recv);
  void check_rank(Rank rank) const;

  const TopologySpec spec_;
  EventQueue& queue_;
  Rank npu_count_ = 0;
  std::vector<LinkModel> links_;
  std::vector<TimeNs> port_free_;  // [rank * dims + (dim-1)]
  std::unordered_map<MatchKey, MatchQueue, MatchKeyHash> pending_;
  std::size_t parked_ops_ = 0;
  SendLogSink log_;
};

}  // namespace hiersim
