#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include "precache/config.hpp"

namespace precache {

struct FuzzOptions {
  std::uint64_t seed = 1;
  unsigned count = 100;
  unsigned cores = 1;
  bool check_invariants = true;
};

struct FuzzSummary {
  std::uint64_t seed = 0;
  unsigned cores = 1;
  unsigned programs = 0;
  unsigned equivalent = 0;
  std::uint64_t invariant_violations = 0;
  // fills of L1/L2/L3 by loads that were still speculative (precache runs)
  std::uint64_t transient_fills = 0;
  std::uint64_t precache_polluting_loads = 0;
  std::uint64_t baseline_polluting_loads = 0;
  std::uint64_t squashed_loads = 0;
  std::uint64_t committed = 0;
  std::uint64_t stc_written = 0;
  std::uint64_t stc_aborted = 0;
  std::uint64_t stc_noop = 0;
  std::optional<std::string> failure;  // reproducer of the first failing program

  bool ok() const { return !failure && equivalent == programs && invariant_violations == 0 && transient_fills == 0; }
  std::string text() const;
};

/// Random race-free program for `cores` cores: every core loads only its own
/// words or read-only words, and stores only to its own words. Words of
/// different cores share cache blocks.
std::string generate_fuzz_program(std::mt19937_64& rng, unsigned cores);

/// Small geometry so that evictions and TLB misses are frequent.
SimConfig fuzz_config(Mode mode, unsigned cores);

FuzzSummary fuzz(const FuzzOptions& opt);

}  // namespace precache
