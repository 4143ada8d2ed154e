#pragma once

#include <map>
#include <set>
#include <span>
#include <vector>

#include "precache/types.hpp"

namespace precache {

struct PreCacheEntry {
  Addr block = 0;
  std::vector<std::uint8_t> data;
  HitLevel hit_level = HitLevel::L2;
  bool stc_locked = false;
  Seq inserter_seq = 0;
  Cycle ready = 0;
};

/// Per-core quarantine for blocks brought in by uncommitted loads.
class PreCache {
 public:
  explicit PreCache(unsigned capacity) : capacity_(capacity) {}

  const PreCacheEntry* lookup(Addr block) const;
  PreCacheEntry* find(Addr block);

  /// Creates or overwrites the entry for `block`. Throws SimulationError if a
  /// new entry would exceed capacity.
  PreCacheEntry& fill(Addr block, std::span<const std::uint8_t> data, HitLevel hit, Seq inserter);
  bool erase(Addr block);
  /// Erases every entry not locked by an in-flight STC; returns their blocks.
  std::vector<Addr> clear_unlocked();

  std::size_t size() const { return entries_.size(); }
  unsigned capacity() const { return capacity_; }
  const std::map<Addr, PreCacheEntry>& entries() const { return entries_; }

 private:
  unsigned capacity_;
  std::map<Addr, PreCacheEntry> entries_;
};

/// Records which (block, core) pairs are quarantined above a cache level.
class PreCacheDirectory {
 public:
  void add(Addr block, CoreId core) { records_.emplace(block, core); }
  bool remove(Addr block, CoreId core) { return records_.erase({block, core}) != 0; }
  bool contains(Addr block, CoreId core) const { return records_.count({block, core}) != 0; }
  std::vector<CoreId> cores_for(Addr block) const;
  std::size_t size() const { return records_.size(); }
  const std::set<std::pair<Addr, CoreId>>& records() const { return records_; }

 private:
  std::set<std::pair<Addr, CoreId>> records_;
};

}  // namespace precache
