#pragma once

#include <deque>
#include <vector>

#include "precache/types.hpp"

namespace precache {

/// Instruction-side quarantine. Blocks are kept in arrival order; a queue of
/// per-guard block counts tells commit how many of the oldest blocks became
/// non-speculative.
class IPreCache {
 public:
  struct Slot {
    Seq guard_seq;
    unsigned count;  // blocks fetched since the previous guard was decoded
  };

  explicit IPreCache(unsigned capacity) : capacity_(capacity) {}

  bool contains(Addr block) const;
  bool full() const { return blocks_.size() >= capacity_; }
  bool guarded() const { return !queue_.empty(); }

  void insert(Addr block);
  /// A guard (indirect jump or conditional branch) left decode.
  void on_guard_decoded(Seq guard_seq);
  /// The oldest guard committed. Returns the blocks that leave quarantine.
  std::vector<Addr> on_guard_commit(Seq guard_seq);
  /// Squash from `from_seq`: every quarantined block is dropped, queue slots
  /// of squashed guards are removed and surviving slots are zeroed.
  void clear(Seq from_seq);

  std::size_t size() const { return blocks_.size(); }
  unsigned capacity() const { return capacity_; }
  unsigned counter() const { return counter_; }
  std::uint64_t oldest_index() const { return oldest_index_; }
  const std::deque<Slot>& queue() const { return queue_; }
  const std::deque<Addr>& blocks() const { return blocks_; }

 private:
  unsigned capacity_;
  std::deque<Addr> blocks_;
  std::deque<Slot> queue_;
  unsigned counter_ = 0;
  std::uint64_t oldest_index_ = 0;
};

}  // namespace precache
