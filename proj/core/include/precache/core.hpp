#pragma once

#include <array>
#include <deque>
#include <optional>
#include <set>
#include <vector>

#include "precache/branch_predictor.hpp"
#include "precache/config.hpp"
#include "precache/interpreter.hpp"
#include "precache/memory_system.hpp"

namespace precache {

struct SquashEvent {
  Seq from_seq = 0;
  Addr redirect = 0;
};

/// A load that was sent to the memory system, and whether it was later
/// squashed.
struct IssuedLoad {
  Seq seq = 0;
  Addr addr = 0;
  bool squashed = false;
};

struct CoreCounters {
  std::uint64_t committed = 0;
  std::uint64_t squashes = 0;
  std::uint64_t mispredicts = 0;
  std::uint64_t loads_issued = 0;
  std::uint64_t forwarded_loads = 0;
};

struct RobEntry {
  enum class State : std::uint8_t { Waiting, Executing, Done };

  Seq seq = 0;
  Instruction inst;
  State state = State::Waiting;
  Cycle done_at = 0;
  std::array<std::optional<Seq>, 2> producers{};
  Word result = 0;
  Addr addr = 0;
  Word store_value = 0;
  bool addr_known = false;
  bool awaiting_memory = false;
  bool forwarded = false;
  std::size_t load_log_index = 0;
  bool pred_taken = false;
  Addr pred_target = 0;
  Addr actual_target = 0;
  bool actual_taken = false;
  FaultKind fault = FaultKind::None;
  bool store_started = false;
  Cycle store_done = 0;
  Cycle exception_at = 0;
};

/// Out-of-order core with speculative loads, commit-time stores and
/// commit-time privilege checks. Memory interactions go straight to the
/// shared MemorySystem; `tick` also reports the requests it produced.
///
/// A squash in precache mode reports three PreCacheClear requests whose
/// payload names the structure: 0 data, 1 instruction, 2 translation.
class Core {
 public:
  Core(CoreId id, const CoreConfig& cfg, const Program& program, MemorySystem& mem);

  std::vector<MemRequest> tick(Cycle now);
  void deliver(const LoadResponse& r);
  void on_stc_event(const StcEvent& e);

  /// Trains the predictor with the real outcome and squashes the wrong path.
  std::optional<SquashEvent> resolve_branch(Seq seq, Addr actual_target, Cycle now);

  bool finished() const { return halted_ || fault_.has_value(); }
  CoreId id() const { return id_; }
  const std::array<Word, kNumRegs>& regs() const { return regs_; }
  Addr pc() const { return arch_pc_; }
  bool halted() const { return halted_; }
  const std::optional<FaultRecord>& fault() const { return fault_; }
  const CommitTrace& trace() const { return trace_; }
  const std::vector<IssuedLoad>& issued_loads() const { return load_log_; }
  const BranchPredictor& predictor() const { return bp_; }
  const CoreCounters& counters() const { return counters_; }
  std::size_t rob_size() const { return rob_.size(); }
  /// Loads occupying load-queue slots, including those held for an STC.
  std::size_t load_queue_used() const { return loads_in_rob_ + held_slots_.size(); }
  std::size_t loads_awaiting_memory() const;

 private:
  struct FetchEntry {
    Seq seq;
    Instruction inst;
    Cycle ready;
    bool pred_taken;
    Addr pred_target;
  };

  void commit(Cycle now, std::vector<MemRequest>& out);
  void writeback(Cycle now);
  void issue(Cycle now, std::vector<MemRequest>& out);
  void dispatch(Cycle now);
  void fetch(Cycle now, std::vector<MemRequest>& out);
  void squash(Seq from_seq, std::optional<Addr> redirect, Cycle now);
  void rebuild_rename();

  RobEntry* find(Seq seq);
  std::optional<Word> operand(const RobEntry& e, int idx) const;
  bool try_issue_load(RobEntry& e, Cycle now, std::vector<MemRequest>& out);

  CoreId id_;
  CoreConfig cfg_;
  const Program* program_;
  MemorySystem* mem_;
  BranchPredictor bp_;

  std::array<Word, kNumRegs> regs_{};
  Addr arch_pc_;
  bool halted_ = false;
  std::optional<FaultRecord> fault_;
  CommitTrace trace_;

  std::deque<RobEntry> rob_;
  std::deque<FetchEntry> fetch_queue_;
  std::array<std::optional<Seq>, kNumRegs> rename_{};
  std::size_t loads_in_rob_ = 0;
  std::size_t stores_in_rob_ = 0;
  std::set<Seq> held_slots_;
  std::vector<MemRequest> squash_requests_;
  std::vector<IssuedLoad> load_log_;

  Seq next_seq_ = 1;
  Addr fetch_pc_;
  bool fetch_blocked_ = false;
  Cycle fetch_stall_until_ = 0;
  std::optional<Addr> fetch_block_;
  CoreCounters counters_;
};

}  // namespace precache
