#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "precache/config.hpp"
#include "precache/core.hpp"
#include "precache/memory_system.hpp"

namespace precache {

struct Stats {
  Cycle cycles = 0;
  std::uint64_t committed = 0;
  double ipc = 0;
  // The L1D figure counts Pre-cache hits as hits.
  double l1d_hit_rate = 0;
  double l1i_hit_rate = 0;
  double l2_hit_rate = 0;
  double l3_hit_rate = 0;
  std::uint64_t precache_hits = 0;
  std::uint64_t squashed_loads = 0;
  std::uint64_t polluting_loads = 0;
  double polluting_loads_pct = 0;
  std::uint64_t stc_written = 0;
  std::uint64_t stc_aborted = 0;
  std::uint64_t stc_noop = 0;
  std::uint64_t squashes = 0;
  std::uint64_t mispredicts = 0;
  std::uint64_t page_walks = 0;
  bool max_cycles_exceeded = false;
  std::uint64_t invariant_violations = 0;
};

std::string stats_csv_header();
std::string stats_csv_row(const Stats& s);

struct CoreResult {
  CommitTrace trace;
  std::array<Word, kNumRegs> regs{};
  Addr pc = 0;
  bool halted = false;
  std::optional<FaultRecord> fault;
};

struct RunResult {
  Stats stats;
  std::vector<CoreResult> cores;
  SparseMemory memory;
  std::vector<std::string> violations;
};

/// Drives every core and the memory system cycle by cycle.
class Simulator {
 public:
  Simulator(const SimConfig& cfg, const Program& program);

  /// Advances one cycle.
  void step();
  /// Runs until every core has halted or faulted and the memory system is
  /// drained, or until max_cycles.
  RunResult run();
  bool done() const;

  Cycle now() const { return now_; }
  const SimConfig& config() const { return cfg_; }
  MemorySystem& memory() { return *mem_; }
  const MemorySystem& memory() const { return *mem_; }
  Core& core(CoreId c) { return *cores_[c]; }
  const Core& core(CoreId c) const { return *cores_[c]; }
  unsigned core_count() const { return static_cast<unsigned>(cores_.size()); }
  const std::vector<StcEvent>& stc_log() const { return stc_log_; }
  const std::vector<MemRequest>& request_log() const { return request_log_; }
  void set_request_logging(bool on) { log_requests_ = on; }
  /// Called after every cycle (tests use it to inject events mid-run).
  void on_cycle(std::function<void(Simulator&)> hook) { hook_ = std::move(hook); }

  Stats stats() const;
  RunResult result() const;
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  void check_invariants();

  SimConfig cfg_;
  const Program* program_;
  std::unique_ptr<MemorySystem> mem_;
  std::vector<std::unique_ptr<Core>> cores_;
  Cycle now_ = 0;
  std::vector<StcEvent> stc_log_;
  std::vector<MemRequest> request_log_;
  bool log_requests_ = false;
  std::function<void(Simulator&)> hook_;
  std::vector<std::string> violations_;
  std::uint64_t checked_version_ = ~0ull;
};

/// Builds the initial memory image of a program.
SparseMemory initial_memory(const Program& program);

}  // namespace precache
