#include "precache/cache_array.hpp"

#include <algorithm>

namespace precache {

char mesi_char(Mesi m) {
  switch (m) {
    case Mesi::I: return 'I';
    case Mesi::S: return 'S';
    case Mesi::E: return 'E';
    case Mesi::M: return 'M';
  }
  return '?';
}

CacheArray::CacheArray(std::string name, const CacheLevelConfig& cfg, unsigned line_size)
    : name_(std::move(name)),
      sets_(cfg.size_bytes / (cfg.assoc * line_size)),
      ways_(cfg.assoc),
      latency_(cfg.latency),
      ports_(cfg.ports),
      line_size_(line_size),
      lines_(static_cast<std::size_t>(sets_) * ways_) {
  if (sets_ == 0 || (sets_ & (sets_ - 1)) != 0) throw ConfigError(name_ + ": set count must be a power of two");
}

CacheLine* CacheArray::find(Addr block) {
  auto it = index_.find(block);
  return it == index_.end() ? nullptr : &lines_[it->second];
}

const CacheLine* CacheArray::find(Addr block) const {
  auto it = index_.find(block);
  return it == index_.end() ? nullptr : &lines_[it->second];
}

bool CacheArray::has_free_way(unsigned set) const {
  for (unsigned w = 0; w < ways_; ++w)
    if (!lines_[set * ways_ + w].valid) return true;
  return false;
}

CacheLine& CacheArray::lru_victim(unsigned set) {
  CacheLine* victim = nullptr;
  for (unsigned w = 0; w < ways_; ++w) {
    CacheLine& l = lines_[set * ways_ + w];
    if (!l.valid) continue;
    if (!victim || l.lru_stamp < victim->lru_stamp) victim = &l;
  }
  if (!victim) throw SimulationError(name_ + ": victim requested from an empty set");
  return *victim;
}

CacheLine& CacheArray::install(Addr block, Mesi state, std::span<const std::uint8_t> data) {
  if (index_.count(block)) throw SimulationError(name_ + ": duplicate install");
  unsigned set = set_index(block);
  for (unsigned w = 0; w < ways_; ++w) {
    std::uint32_t slot = set * ways_ + w;
    CacheLine& l = lines_[slot];
    if (l.valid) continue;
    l.valid = true;
    l.block = block;
    l.state = state;
    l.dirty = false;
    l.data.assign(data.begin(), data.end());
    l.data.resize(line_size_, 0);
    touch(l);
    index_[block] = slot;
    return l;
  }
  throw SimulationError(name_ + ": install into a full set");
}

void CacheArray::erase(Addr block) {
  auto it = index_.find(block);
  if (it == index_.end()) return;
  CacheLine& l = lines_[it->second];
  l = CacheLine{};
  index_.erase(it);
}

std::vector<const CacheLine*> CacheArray::lines() const {
  std::vector<const CacheLine*> out;
  out.reserve(index_.size());
  for (const auto& [block, slot] : index_) out.push_back(&lines_[slot]);
  std::sort(out.begin(), out.end(), [](const CacheLine* a, const CacheLine* b) { return a->block < b->block; });
  return out;
}

unsigned CacheArray::way_of(Addr block) const {
  auto it = index_.find(block);
  if (it == index_.end()) throw SimulationError(name_ + ": way_of on absent block");
  return it->second % ways_;
}

}  // namespace precache
