#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "precache/config.hpp"
#include "precache/types.hpp"

namespace precache {

enum class Mesi : std::uint8_t { I, S, E, M };

char mesi_char(Mesi m);

struct CacheLine {
  bool valid = false;
  Addr block = 0;
  Mesi state = Mesi::I;
  // Only used by the LLC, whose copy can be newer than memory.
  bool dirty = false;
  std::uint64_t lru_stamp = 0;
  // Cycle at which an in-flight fill delivers the data.
  Cycle ready = 0;
  std::vector<std::uint8_t> data;
};

/// Set-associative array with true-LRU replacement. Holds no policy: callers
/// pick victims, perform write-backs and keep inclusivity.
class CacheArray {
 public:
  CacheArray(std::string name, const CacheLevelConfig& cfg, unsigned line_size);

  const std::string& name() const { return name_; }
  unsigned sets() const { return sets_; }
  unsigned ways() const { return ways_; }
  unsigned latency() const { return latency_; }
  unsigned ports() const { return ports_; }
  unsigned line_size() const { return line_size_; }

  unsigned set_index(Addr block) const { return (block / line_size_) & (sets_ - 1); }

  CacheLine* find(Addr block);
  const CacheLine* find(Addr block) const;
  bool contains(Addr block) const { return index_.count(block) != 0; }

  void touch(CacheLine& line) { line.lru_stamp = ++clock_; }

  bool has_free_way(unsigned set) const;
  /// Least recently used valid line of a full set.
  CacheLine& lru_victim(unsigned set);
  /// Installs into a free way of the block's set and marks it most recent.
  CacheLine& install(Addr block, Mesi state, std::span<const std::uint8_t> data);
  void erase(Addr block);

  std::size_t resident() const { return index_.size(); }
  /// Valid lines sorted by block address.
  std::vector<const CacheLine*> lines() const;
  /// Way index of a resident block (for structural snapshots).
  unsigned way_of(Addr block) const;

 private:
  std::string name_;
  unsigned sets_;
  unsigned ways_;
  unsigned latency_;
  unsigned ports_;
  unsigned line_size_;
  std::uint64_t clock_ = 0;
  std::vector<CacheLine> lines_;
  std::unordered_map<Addr, std::uint32_t> index_;
};

}  // namespace precache
