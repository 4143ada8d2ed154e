#include "precache/precache_data.hpp"

namespace precache {

const PreCacheEntry* PreCache::lookup(Addr block) const {
  auto it = entries_.find(block);
  return it == entries_.end() ? nullptr : &it->second;
}

PreCacheEntry* PreCache::find(Addr block) {
  auto it = entries_.find(block);
  return it == entries_.end() ? nullptr : &it->second;
}

PreCacheEntry& PreCache::fill(Addr block, std::span<const std::uint8_t> data, HitLevel hit, Seq inserter) {
  if (hit == HitLevel::L1) throw SimulationError("pre-cache fill for an L1 hit");
  auto it = entries_.find(block);
  if (it == entries_.end()) {
    if (entries_.size() >= capacity_) throw SimulationError("pre-cache capacity exceeded");
    it = entries_.emplace(block, PreCacheEntry{}).first;
  }
  PreCacheEntry& e = it->second;
  e.block = block;
  e.data.assign(data.begin(), data.end());
  e.hit_level = hit;
  e.stc_locked = false;
  e.inserter_seq = inserter;
  return e;
}

bool PreCache::erase(Addr block) { return entries_.erase(block) != 0; }

std::vector<Addr> PreCache::clear_unlocked() {
  std::vector<Addr> erased;
  for (auto it = entries_.begin(); it != entries_.end();) {
    if (it->second.stc_locked) {
      ++it;
      continue;
    }
    erased.push_back(it->first);
    it = entries_.erase(it);
  }
  return erased;
}

std::vector<CoreId> PreCacheDirectory::cores_for(Addr block) const {
  std::vector<CoreId> out;
  for (auto it = records_.lower_bound({block, -1}); it != records_.end() && it->first == block; ++it)
    out.push_back(it->second);
  return out;
}

}  // namespace precache
