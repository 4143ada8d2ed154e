#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <vector>

#include "precache/types.hpp"

namespace precache {

enum class ReqKind : std::uint8_t { Load, IFetch, StoreCommit, STC, PreCacheClear, Invalidate, StateUpdate };

const char* to_string(ReqKind k);

struct MemRequest {
  ReqKind kind = ReqKind::Load;
  CoreId core = 0;
  Addr addr = 0;
  Seq seq = 0;
  Word payload = 0;
  unsigned size = 4;
  Cycle enqueued = 0;
};

/// Per-component request FIFO with `ports` servers per cycle. Queued
/// PreCacheClear requests are always serviced ahead of every other kind.
class RequestQueue {
 public:
  explicit RequestQueue(unsigned ports) : ports_(ports) {}

  void push(MemRequest req, Cycle now);
  /// Dequeues up to `ports` requests that were enqueued at or before `now`.
  std::vector<MemRequest> service(Cycle now);
  std::size_t cancel_if(const std::function<bool(const MemRequest&)>& pred);

  bool empty() const { return queue_.empty(); }
  std::size_t size() const { return queue_.size(); }
  const std::deque<MemRequest>& pending() const { return queue_; }

 private:
  unsigned ports_;
  std::deque<MemRequest> queue_;
};

/// Reservation table for a pipelined level: at most `ports` accesses may
/// start in any one cycle.
class PortCalendar {
 public:
  explicit PortCalendar(unsigned ports) : ports_(ports) {}

  Cycle reserve(Cycle earliest);
  void prune(Cycle before);

 private:
  unsigned ports_;
  std::map<Cycle, unsigned> used_;
};

}  // namespace precache
