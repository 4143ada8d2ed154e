#pragma once

#include <map>
#include <string>
#include <vector>

#include "precache/memory_system.hpp"

namespace precache {

/// Text snapshot of every modeled structure, grouped in named sections.
/// Each section holds sorted lines, so two dumps compare byte for byte.
struct CacheDump {
  std::map<std::string, std::vector<std::string>> sections;
  bool drained = true;
  Cycle cycle = 0;

  std::string text() const;
  static CacheDump parse(const std::string& text);

  bool contains(const std::string& section, Addr block) const;
  /// True if any section whose name starts with `prefix` lists `block`.
  bool any_contains(const std::string& prefix, Addr block) const;
  /// Subset of sections whose name starts with any of the prefixes.
  CacheDump only(const std::vector<std::string>& prefixes) const;

  bool operator==(const CacheDump&) const = default;
};

/// Rejects a memory system that still has in-flight work.
CacheDump dump_structures(const MemorySystem& mem, Cycle now);

std::string hex_addr(Addr a);

/// Checkpoint: JSON wrapper around a dump, written after a run.
std::string checkpoint_json(const CacheDump& d);
CacheDump checkpoint_from_json(const std::string& json);

}  // namespace precache
