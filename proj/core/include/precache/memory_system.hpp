#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "precache/cache_array.hpp"
#include "precache/config.hpp"
#include "precache/interpreter.hpp"
#include "precache/precache_data.hpp"
#include "precache/precache_instr.hpp"
#include "precache/request_queue.hpp"
#include "precache/tlb.hpp"

namespace precache {

enum class Level : std::uint8_t { L1I, L1D, L2, L3, Victim };

const char* to_string(Level l);

enum class StcOutcome : std::uint8_t { Written, Aborted, Noop };

const char* to_string(StcOutcome o);

struct StcEvent {
  CoreId core = 0;
  Addr block = 0;
  StcOutcome outcome = StcOutcome::Noop;
  std::vector<Seq> seqs;
  Cycle cycle = 0;
};

struct LoadResult {
  Word value = 0;
  HitLevel hit = HitLevel::L1;
  Cycle completion = 0;
  bool precache_hit = false;
};

struct LoadResponse {
  CoreId core = 0;
  Seq seq = 0;
  Cycle ready = 0;
  Word value = 0;
};

enum class FillCause : std::uint8_t { SpeculativeLoad, Stc, StoreAllocate, Transfer, Fetch };

struct FillEvent {
  CoreId core = 0;
  Level level = Level::L1D;
  Addr block = 0;
  FillCause cause = FillCause::Fetch;
  Seq seq = 0;
};

struct DirEntry {
  std::uint32_t sharers = 0;  // bit per core
  int owner = -1;             // core holding M or E
};

struct MemCounters {
  std::uint64_t l1d_accesses = 0;
  std::uint64_t l1d_hits = 0;
  std::uint64_t precache_hits = 0;
  std::uint64_t l1i_accesses = 0;
  std::uint64_t l1i_hits = 0;
  std::uint64_t iprecache_hits = 0;
  std::uint64_t l2_accesses = 0;
  std::uint64_t l2_hits = 0;
  std::uint64_t l3_accesses = 0;
  std::uint64_t l3_hits = 0;
  std::uint64_t stc_written = 0;
  std::uint64_t stc_aborted = 0;
  std::uint64_t stc_noop = 0;
  std::uint64_t precache_fills = 0;
  std::uint64_t iprecache_transfers = 0;
  std::uint64_t invalidations = 0;
  std::uint64_t l1d_evictions = 0;
};

/// One line of a structural snapshot, used to check that speculative loads
/// leave no trace in the caches.
struct LineView {
  Level level;
  CoreId core;
  unsigned set;
  unsigned way;
  Addr block;
  Mesi state;
  std::uint64_t lru_stamp;
  bool operator==(const LineView&) const = default;
};

/// Private caches of every core plus the shared LLC, its directory, the
/// Pre-cache structures and the page-translation front ends.
class MemorySystem {
 public:
  MemorySystem(const SimConfig& cfg, const SparseMemory& initial);

  Mode mode() const { return cfg_.mode; }
  unsigned cores() const { return static_cast<unsigned>(cores_.size()); }
  unsigned line_size() const { return line_; }
  Addr block(Addr a) const { return block_of(a, line_); }

  // ---- data requests routed through the L1 access list ----
  void enqueue_load(CoreId c, Addr vaddr, unsigned size, Seq seq, Cycle now);
  /// Squash of core `c` from `from_seq`: queued loads of squashed
  /// instructions are cancelled and a prioritized clear is queued.
  void enqueue_clear(CoreId c, Seq from_seq, Cycle now);

  /// Services access lists and advances STC transactions for this cycle.
  void tick(Cycle now);
  std::vector<LoadResponse> take_responses(Cycle now);
  std::vector<StcEvent> take_stc_events();
  bool drained() const;

  // ---- synchronous operations ----
  LoadResult load_access(CoreId c, Addr vaddr, unsigned size, Seq seq, Cycle now);
  /// Performs the whole store protocol and returns the cycle at which every
  /// invalidation has been acknowledged and the line is held in M.
  Cycle store_commit_access(CoreId c, Addr vaddr, Word value, Cycle now);

  /// Commit of a load: LRU/TLB commit effects and STC issue. Returns true if
  /// `seq` started a new STC (its load-queue slot stays busy until the
  /// matching StcEvent).
  bool commit_load(CoreId c, Addr vaddr, Seq seq, Cycle now);
  /// Starts an STC. Noop outcomes are reported immediately via events.
  bool stc_issue(CoreId c, Addr block, Seq seq, Cycle now);

  void pc_clear(CoreId c);
  void pc_invalidate(CoreId c, Addr block);
  std::optional<PreCacheEntry> pc_lookup(CoreId c, Addr block) const;

  // ---- instruction side ----
  /// Returns the cycle at which the block is available, or nullopt when the
  /// fetch must stall (iPre-cache full).
  std::optional<Cycle> ifetch(CoreId c, Addr pc, Cycle now);
  void on_guard_decoded(CoreId c, Seq seq);
  void on_guard_commit(CoreId c, Seq seq);
  void ipc_clear(CoreId c, Seq from_seq);

  // ---- translation ----
  void tlb_on_commit(CoreId c, Addr vaddr);
  void pre_tlb_clear(CoreId c);

  // ---- inspection ----
  const CacheArray& l1i(CoreId c) const { return cores_[c].l1i; }
  const CacheArray& l1d(CoreId c) const { return cores_[c].l1d; }
  const CacheArray& l2(CoreId c) const { return cores_[c].l2; }
  const CacheArray* victim(CoreId c) const { return cores_[c].victim ? &*cores_[c].victim : nullptr; }
  const CacheArray& l3() const { return l3_; }
  const PreCache& precache(CoreId c) const { return cores_[c].pc; }
  const IPreCache& iprecache(CoreId c) const { return cores_[c].ipc; }
  const PreCacheDirectory& l2_directory(CoreId c) const { return cores_[c].l2_dir; }
  const PreCacheDirectory& l3_directory() const { return l3_dir_; }
  const TranslationUnit& translation(CoreId c) const { return cores_[c].tlb; }
  const std::map<Addr, DirEntry>& directory() const { return directory_; }
  const MemCounters& counters(CoreId c) const { return cores_[c].counters; }
  std::size_t stc_in_flight() const { return stcs_.size(); }
  std::size_t locks_held() const { return locks_.size(); }
  /// Seqs of loads whose L1 fill evicted a line.
  const std::vector<Seq>& evicting_seqs(CoreId c) const { return cores_[c].evicting_seqs; }
  const std::vector<FillEvent>& fill_log() const { return fill_log_; }
  void set_fill_logging(bool on) { log_fills_ = on; }

  std::vector<LineView> snapshot() const;
  /// Current architectural memory image (virtual addresses).
  SparseMemory architectural_memory() const;
  /// Monotone counter bumped whenever any modeled structure changes.
  std::uint64_t version() const { return version_; }

  // ---- test hooks ----
  /// Evicts `block` from the given level as if chosen by replacement.
  void force_evict(Level level, CoreId c, Addr block);
  /// Written STC data gets its first byte flipped (negative control).
  void corrupt_next_stc(bool on) { corrupt_stc_ = on; }

 private:
  struct Private {
    Private(const SimConfig& cfg, CoreId id);
    CacheArray l1i;
    CacheArray l1d;
    CacheArray l2;
    std::optional<CacheArray> victim;
    PreCacheDirectory l2_dir;
    PreCache pc;
    IPreCache ipc;
    TranslationUnit tlb;
    RequestQueue access_list;
    PortCalendar l2_ports;
    MemCounters counters;
    std::vector<Seq> evicting_seqs;
  };

  struct StcTx {
    std::uint64_t id = 0;
    CoreId core = 0;
    Addr block = 0;
    HitLevel hit = HitLevel::L2;
    Cycle issued = 0;
    Cycle ready = 0;
    std::vector<Level> path;  // write levels, then the extra visited level
    std::size_t step = 0;
    bool coherence_done = false;
    std::vector<std::pair<Level, unsigned>> locks;
    std::vector<Seq> seqs;
  };

  using LockKey = std::tuple<int, Level, unsigned>;

  // fills and evictions
  CacheLine& install(Level level, CoreId c, Addr block, Mesi state, std::span<const std::uint8_t> data,
                     FillCause cause, Seq seq, Cycle ready);
  void make_room(Level level, CoreId c, Addr block, FillCause cause, Seq seq);
  void evict_line(Level level, CoreId c, Addr block);
  CacheArray& array(Level level, CoreId c);

  // coherence helpers
  std::vector<std::uint8_t> freshest(CoreId owner, Addr block) const;
  void write_back_private(CoreId o, Addr block);
  void downgrade(CoreId o, Addr block);
  void drop_private(CoreId o, Addr block);
  void route_l3_directory(Addr block, std::optional<CoreId> except);
  CacheLine& ensure_l3(Addr block, Cycle& t);
  Mesi grant_state(CoreId c, Addr block) const;
  void dir_add(Addr block, CoreId c, Mesi state);
  void dir_remove(Addr block, CoreId c);
  const std::vector<std::uint8_t>& backing(Addr block) const;

  void advance_stc(StcTx& tx, Cycle now);
  void finish_stc(StcTx& tx, Cycle now);
  void release_locks(StcTx& tx);
  void abort_stc_for(CoreId c, Addr block);
  unsigned level_latency(Level l) const;

  Word read_word(std::span<const std::uint8_t> data, Addr addr, unsigned size) const;

  SimConfig cfg_;
  unsigned line_;
  std::vector<Private> cores_;
  CacheArray l3_;
  PreCacheDirectory l3_dir_;
  PortCalendar l3_ports_;
  std::map<Addr, DirEntry> directory_;
  std::map<Addr, std::vector<std::uint8_t>> memory_;
  std::vector<std::uint8_t> zero_block_;
  std::vector<LoadResponse> responses_;
  std::map<std::uint64_t, StcTx> stcs_;
  std::uint64_t next_stc_id_ = 1;
  std::map<LockKey, std::uint64_t> locks_;
  std::vector<StcEvent> stc_events_;
  std::vector<FillEvent> fill_log_;
  bool log_fills_ = false;
  bool corrupt_stc_ = false;
  std::uint64_t version_ = 0;
};

}  // namespace precache
