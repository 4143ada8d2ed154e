#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "precache/types.hpp"

namespace precache {

struct CoreConfig {
  unsigned rob_entries = 128;
  unsigned fetch_queue_entries = 128;
  unsigned load_queue_entries = 32;
  unsigned store_queue_entries = 32;
  unsigned fetch_width = 4;
  unsigned issue_width = 4;
  unsigned commit_width = 4;
  unsigned exception_delay_cycles = 50;
};

struct CacheLevelConfig {
  unsigned size_bytes = 0;
  unsigned assoc = 1;
  unsigned latency = 1;
  unsigned ports = 1;
};

struct CacheConfig {
  unsigned line_size = 64;
  CacheLevelConfig l1{32 * 1024, 4, 4, 2};
  CacheLevelConfig l2{2 * 1024 * 1024, 8, 10, 4};
  CacheLevelConfig l3{8 * 1024 * 1024, 16, 40, 8};
  unsigned memory_latency = 200;
};

struct TlbConfig {
  bool paging = false;
  unsigned entries = 64;
  unsigned pre_tlb_entries = 32;
  unsigned walk_latency = 30;
  unsigned page_size = 4096;
};

struct SimConfig {
  Mode mode = Mode::PreCache;
  unsigned cores = 1;
  CoreConfig core;
  CacheConfig cache;
  TlbConfig tlb;
  // Instruction-side quarantine; only meaningful in precache mode.
  bool iprecache = true;
  unsigned iprecache_blocks = 28;
  bool victim_cache = false;
  unsigned victim_cache_blocks = 32;
  std::uint64_t seed = 1;
  Cycle max_cycles = 10'000'000;
  // Runs the cycle-boundary invariant scanner (slow).
  bool check_invariants = false;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejects geometry that the cache model cannot represent.
void validate(const SimConfig& cfg);

/// Parses flat `key = value` text; `#` and `;` start comments. Unknown keys
/// and malformed values raise ConfigError.
SimConfig parse_config(std::string_view text, SimConfig base = {});

std::string to_text(const SimConfig& cfg);

Mode parse_mode(std::string_view s);

}  // namespace precache
