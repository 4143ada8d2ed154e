#include "precache/request_queue.hpp"

#include <algorithm>

namespace precache {

const char* to_string(ReqKind k) {
  switch (k) {
    case ReqKind::Load: return "Load";
    case ReqKind::IFetch: return "IFetch";
    case ReqKind::StoreCommit: return "StoreCommit";
    case ReqKind::STC: return "STC";
    case ReqKind::PreCacheClear: return "PreCacheClear";
    case ReqKind::Invalidate: return "Invalidate";
    case ReqKind::StateUpdate: return "StateUpdate";
  }
  return "?";
}

void RequestQueue::push(MemRequest req, Cycle now) {
  req.enqueued = now;
  queue_.push_back(req);
}

std::vector<MemRequest> RequestQueue::service(Cycle now) {
  std::vector<MemRequest> out;
  auto take = [&](bool clears) {
    for (auto it = queue_.begin(); it != queue_.end() && out.size() < ports_;) {
      bool is_clear = it->kind == ReqKind::PreCacheClear;
      if (is_clear == clears && it->enqueued <= now) {
        out.push_back(*it);
        it = queue_.erase(it);
      } else {
        ++it;
      }
    }
  };
  take(true);
  take(false);
  return out;
}

std::size_t RequestQueue::cancel_if(const std::function<bool(const MemRequest&)>& pred) {
  auto before = queue_.size();
  queue_.erase(std::remove_if(queue_.begin(), queue_.end(), pred), queue_.end());
  return before - queue_.size();
}

Cycle PortCalendar::reserve(Cycle earliest) {
  Cycle c = earliest;
  for (;;) {
    auto& n = used_[c];
    if (n < ports_) {
      ++n;
      return c;
    }
    ++c;
  }
}

void PortCalendar::prune(Cycle before) { used_.erase(used_.begin(), used_.lower_bound(before)); }

}  // namespace precache
