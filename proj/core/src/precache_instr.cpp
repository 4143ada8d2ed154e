#include "precache/precache_instr.hpp"

#include <algorithm>

namespace precache {

bool IPreCache::contains(Addr block) const {
  return std::find(blocks_.begin(), blocks_.end(), block) != blocks_.end();
}

void IPreCache::insert(Addr block) {
  if (contains(block)) return;
  if (full()) throw SimulationError("iprecache capacity exceeded");
  blocks_.push_back(block);
  ++counter_;
}

void IPreCache::on_guard_decoded(Seq guard_seq) {
  queue_.push_back({guard_seq, counter_});
  counter_ = 0;
}

std::vector<Addr> IPreCache::on_guard_commit(Seq guard_seq) {
  if (queue_.empty() || queue_.front().guard_seq != guard_seq)
    throw SimulationError("iprecache: committing guard is not the oldest");
  unsigned n = queue_.front().count;
  queue_.pop_front();
  // Blocks fetched after this guard now sit in the next slot (or the open
  // counter when this was the youngest guard).
  if (!queue_.empty()) {
    n += queue_.front().count;
    queue_.front().count = 0;
  } else {
    n += counter_;
    counter_ = 0;
  }
  if (n > blocks_.size()) throw SimulationError("iprecache: counter exceeds quarantined blocks");
  std::vector<Addr> out(blocks_.begin(), blocks_.begin() + n);
  blocks_.erase(blocks_.begin(), blocks_.begin() + n);
  oldest_index_ += n;
  return out;
}

void IPreCache::clear(Seq from_seq) {
  oldest_index_ += blocks_.size();
  blocks_.clear();
  while (!queue_.empty() && queue_.back().guard_seq >= from_seq) queue_.pop_back();
  for (auto& s : queue_) s.count = 0;
  counter_ = 0;
}

}  // namespace precache
