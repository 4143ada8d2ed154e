#include "precache/memory_system.hpp"

#include <algorithm>

namespace precache {

const char* to_string(Level l) {
  switch (l) {
    case Level::L1I: return "L1I";
    case Level::L1D: return "L1D";
    case Level::L2: return "L2";
    case Level::L3: return "L3";
    case Level::Victim: return "VICTIM";
  }
  return "?";
}

const char* to_string(StcOutcome o) {
  switch (o) {
    case StcOutcome::Written: return "written";
    case StcOutcome::Aborted: return "aborted";
    case StcOutcome::Noop: return "noop";
  }
  return "?";
}

namespace {

std::string core_name(CoreId id, const char* what) { return "core" + std::to_string(id) + "." + what; }

bool owns(Mesi m) { return m == Mesi::M || m == Mesi::E; }

std::uint32_t bit(CoreId c) { return 1u << static_cast<unsigned>(c); }

}  // namespace

MemorySystem::Private::Private(const SimConfig& cfg, CoreId id)
    : l1i(core_name(id, "L1I"), cfg.cache.l1, cfg.cache.line_size),
      l1d(core_name(id, "L1D"), cfg.cache.l1, cfg.cache.line_size),
      l2(core_name(id, "L2"), cfg.cache.l2, cfg.cache.line_size),
      pc(cfg.core.load_queue_entries),
      ipc(cfg.iprecache_blocks),
      tlb(cfg.tlb, cfg.mode),
      access_list(cfg.cache.l1.ports),
      l2_ports(cfg.cache.l2.ports) {
  if (cfg.victim_cache && cfg.mode == Mode::Baseline) {
    CacheLevelConfig vc{cfg.victim_cache_blocks * cfg.cache.line_size, cfg.victim_cache_blocks, 1, 1};
    victim.emplace(core_name(id, "VICTIM"), vc, cfg.cache.line_size);
  }
}

MemorySystem::MemorySystem(const SimConfig& cfg, const SparseMemory& initial)
    : cfg_(cfg),
      line_(cfg.cache.line_size),
      l3_("L3", cfg.cache.l3, cfg.cache.line_size),
      l3_ports_(cfg.cache.l3.ports),
      zero_block_(cfg.cache.line_size, 0) {
  validate(cfg_);
  cores_.reserve(cfg_.cores);
  for (unsigned c = 0; c < cfg_.cores; ++c) cores_.emplace_back(cfg_, static_cast<CoreId>(c));
  for (const auto& [addr, byte] : initial.bytes()) {
    Addr pa = cores_[0].tlb.physical(addr);
    auto& blk = memory_[block(pa)];
    if (blk.empty()) blk.assign(line_, 0);
    blk[pa % line_] = byte;
  }
}

CacheArray& MemorySystem::array(Level level, CoreId c) {
  switch (level) {
    case Level::L1I: return cores_[c].l1i;
    case Level::L1D: return cores_[c].l1d;
    case Level::L2: return cores_[c].l2;
    case Level::L3: return l3_;
    case Level::Victim:
      if (!cores_[c].victim) throw SimulationError("no victim cache configured");
      return *cores_[c].victim;
  }
  throw SimulationError("bad level");
}

unsigned MemorySystem::level_latency(Level l) const {
  switch (l) {
    case Level::L1I:
    case Level::L1D: return cfg_.cache.l1.latency;
    case Level::L2: return cfg_.cache.l2.latency;
    case Level::L3: return cfg_.cache.l3.latency;
    case Level::Victim: return 1;
  }
  return 0;
}

const std::vector<std::uint8_t>& MemorySystem::backing(Addr block) const {
  auto it = memory_.find(block);
  return it == memory_.end() ? zero_block_ : it->second;
}

Word MemorySystem::read_word(std::span<const std::uint8_t> data, Addr addr, unsigned size) const {
  unsigned off = addr % line_;
  Word v = 0;
  for (unsigned i = 0; i < size; ++i) v |= static_cast<Word>(data[off + i]) << (8 * i);
  return v;
}

// ---------------------------------------------------------------- fills

CacheLine& MemorySystem::install(Level level, CoreId c, Addr block, Mesi state, std::span<const std::uint8_t> data,
                                 FillCause cause, Seq seq, Cycle ready) {
  CacheArray& a = array(level, c);
  if (!a.has_free_way(a.set_index(block))) make_room(level, c, block, cause, seq);
  CacheLine& line = a.install(block, state, data);
  line.ready = ready;
  if (log_fills_ && (level == Level::L1D || level == Level::L1I)) fill_log_.push_back({c, level, block, cause, seq});
  ++version_;
  return line;
}

void MemorySystem::make_room(Level level, CoreId c, Addr block, FillCause cause, Seq seq) {
  CacheArray& a = array(level, c);
  Addr victim = a.lru_victim(a.set_index(block)).block;
  if (level == Level::L1D) {
    ++cores_[c].counters.l1d_evictions;
    if (cause == FillCause::SpeculativeLoad || cause == FillCause::Stc) cores_[c].evicting_seqs.push_back(seq);
  }
  evict_line(level, c, victim);
}

void MemorySystem::evict_line(Level level, CoreId c, Addr block) {
  ++version_;
  switch (level) {
    case Level::L1I:
      cores_[c].l1i.erase(block);
      return;
    case Level::L1D: {
      Private& p = cores_[c];
      CacheLine* l = p.l1d.find(block);
      if (!l) return;
      Mesi st = l->state;
      std::vector<std::uint8_t> data = l->data;
      p.l1d.erase(block);
      if (p.victim) {
        if (!p.victim->has_free_way(0)) evict_line(Level::Victim, c, p.victim->lru_victim(0).block);
        p.victim->install(block, st, data);
      } else if (st == Mesi::M) {
        p.l2.find(block)->data = std::move(data);
      }
      return;
    }
    case Level::Victim: {
      Private& p = cores_[c];
      CacheLine* l = p.victim->find(block);
      if (!l) return;
      if (l->state == Mesi::M) p.l2.find(block)->data = l->data;
      p.victim->erase(block);
      return;
    }
    case Level::L2:
      drop_private(c, block);
      return;
    case Level::L3: {
      if (auto it = directory_.find(block); it != directory_.end()) {
        std::uint32_t sharers = it->second.sharers;
        for (unsigned o = 0; o < cores_.size(); ++o)
          if (sharers & bit(static_cast<CoreId>(o))) drop_private(static_cast<CoreId>(o), block);
      }
      route_l3_directory(block, std::nullopt);
      CacheLine* l = l3_.find(block);
      if (!l) return;
      if (l->dirty) memory_[block] = l->data;
      l3_.erase(block);
      directory_.erase(block);
      return;
    }
  }
}

// ---------------------------------------------------------------- coherence

std::vector<std::uint8_t> MemorySystem::freshest(CoreId o, Addr block) const {
  const Private& p = cores_[o];
  if (const CacheLine* l = p.l1d.find(block); l && l->state == Mesi::M) return l->data;
  if (p.victim)
    if (const CacheLine* l = p.victim->find(block); l && l->state == Mesi::M) return l->data;
  if (const CacheLine* l = p.l2.find(block)) return l->data;
  return {};
}

void MemorySystem::write_back_private(CoreId o, Addr block) {
  Private& p = cores_[o];
  CacheLine* l2 = p.l2.find(block);
  if (!l2) return;
  bool dirty = l2->state == Mesi::M;
  if (const CacheLine* l = p.l1d.find(block); l && l->state == Mesi::M) dirty = true;
  if (p.victim)
    if (const CacheLine* l = p.victim->find(block); l && l->state == Mesi::M) dirty = true;
  if (!dirty) return;
  auto data = freshest(o, block);
  CacheLine* l3 = l3_.find(block);
  if (!l3) throw SimulationError("inclusivity: private block missing from L3");
  l3->data = data;
  l3->dirty = true;
  l2->data = std::move(data);
}

void MemorySystem::downgrade(CoreId o, Addr block) {
  write_back_private(o, block);
  Private& p = cores_[o];
  for (CacheLine* l : {p.l1d.find(block), p.l1i.find(block), p.l2.find(block)})
    if (l) l->state = Mesi::S;
  if (p.victim)
    if (CacheLine* l = p.victim->find(block)) l->state = Mesi::S;
  if (auto it = directory_.find(block); it != directory_.end() && it->second.owner == o) it->second.owner = -1;
  ++version_;
}

void MemorySystem::drop_private(CoreId o, Addr block) {
  Private& p = cores_[o];
  write_back_private(o, block);
  p.l1i.erase(block);
  p.l1d.erase(block);
  if (p.victim) p.victim->erase(block);
  p.l2.erase(block);
  dir_remove(block, o);
  if (p.l2_dir.contains(block, o)) pc_invalidate(o, block);
  ++version_;
}

void MemorySystem::route_l3_directory(Addr block, std::optional<CoreId> except) {
  for (CoreId o : l3_dir_.cores_for(block))
    if (!except || o != *except) pc_invalidate(o, block);
}

CacheLine& MemorySystem::ensure_l3(Addr block, Cycle& t) {
  if (CacheLine* l = l3_.find(block)) return *l;
  t += cfg_.cache.memory_latency;
  std::vector<std::uint8_t> data = backing(block);
  return install(Level::L3, -1, block, Mesi::E, data, FillCause::Fetch, 0, t);
}

Mesi MemorySystem::grant_state(CoreId c, Addr block) const {
  auto it = directory_.find(block);
  if (it == directory_.end()) return Mesi::E;
  return (it->second.sharers & ~bit(c)) ? Mesi::S : Mesi::E;
}

void MemorySystem::dir_add(Addr block, CoreId c, Mesi state) {
  DirEntry& d = directory_[block];
  d.sharers |= bit(c);
  if (owns(state)) d.owner = c;
}

void MemorySystem::dir_remove(Addr block, CoreId c) {
  auto it = directory_.find(block);
  if (it == directory_.end()) return;
  it->second.sharers &= ~bit(c);
  if (it->second.owner == c) it->second.owner = -1;
}

// ---------------------------------------------------------------- data loads

void MemorySystem::enqueue_load(CoreId c, Addr vaddr, unsigned size, Seq seq, Cycle now) {
  cores_[c].access_list.push({ReqKind::Load, c, vaddr, seq, 0, size, now}, now);
}

void MemorySystem::enqueue_clear(CoreId c, Seq from_seq, Cycle now) {
  Private& p = cores_[c];
  p.access_list.cancel_if([&](const MemRequest& r) { return r.kind == ReqKind::Load && r.seq >= from_seq; });
  std::erase_if(responses_, [&](const LoadResponse& r) { return r.core == c && r.seq >= from_seq; });
  if (cfg_.mode == Mode::PreCache) p.access_list.push({ReqKind::PreCacheClear, c, 0, from_seq, 0, 0, now}, now);
}

LoadResult MemorySystem::load_access(CoreId c, Addr vaddr, unsigned size, Seq seq, Cycle now) {
  Private& p = cores_[c];
  const bool quarantine = cfg_.mode == Mode::PreCache;
  auto tr = p.tlb.translate(vaddr, seq);
  if (tr.walked) ++version_;
  const Addr pa = tr.paddr;
  const Addr b = block(pa);
  const unsigned lat1 = cfg_.cache.l1.latency;
  const unsigned lat2 = cfg_.cache.l2.latency;
  const unsigned lat3 = cfg_.cache.l3.latency;
  Cycle t = now + tr.latency;
  ++p.counters.l1d_accesses;

  if (CacheLine* l = p.l1d.find(b)) {
    if (!quarantine) p.l1d.touch(*l);
    ++p.counters.l1d_hits;
    return {read_word(l->data, pa, size), HitLevel::L1, std::max(t + lat1, l->ready), false};
  }
  if (quarantine) {
    if (const PreCacheEntry* e = p.pc.find(b)) {
      ++p.counters.l1d_hits;
      ++p.counters.precache_hits;
      return {read_word(e->data, pa, size), HitLevel::L1, std::max(t + lat1, e->ready), true};
    }
  } else if (p.victim) {
    if (CacheLine* v = p.victim->find(b)) {
      ++p.counters.l1d_hits;
      Mesi st = v->state;
      std::vector<std::uint8_t> data = v->data;
      p.victim->erase(b);
      Cycle done = t + lat1 + 1;
      install(Level::L1D, c, b, st, data, FillCause::SpeculativeLoad, seq, done);
      return {read_word(data, pa, size), HitLevel::L1, done, false};
    }
  }

  auto fill_precache = [&](std::vector<std::uint8_t> data, HitLevel hit, Cycle done) {
    PreCacheEntry& e = p.pc.fill(b, data, hit, seq);
    e.ready = done;
    p.l2_dir.add(b, c);
    if (hit != HitLevel::L2) l3_dir_.add(b, c);
    ++p.counters.precache_fills;
    ++version_;
    return LoadResult{read_word(data, pa, size), hit, done, false};
  };

  Cycle t2 = p.l2_ports.reserve(t + lat1);
  ++p.counters.l2_accesses;
  if (CacheLine* l2 = p.l2.find(b)) {
    ++p.counters.l2_hits;
    Cycle done = std::max<Cycle>(t2 + lat2, l2->ready);
    std::vector<std::uint8_t> data = l2->data;
    if (quarantine) return fill_precache(std::move(data), HitLevel::L2, done);
    p.l2.touch(*l2);
    Mesi st = l2->state;
    install(Level::L1D, c, b, st, data, FillCause::SpeculativeLoad, seq, done);
    return {read_word(data, pa, size), HitLevel::L2, done, false};
  }

  Cycle t3 = l3_ports_.reserve(t2 + lat2);
  ++p.counters.l3_accesses;
  std::vector<std::uint8_t> data;
  HitLevel hit;
  Cycle done;
  if (CacheLine* l3 = l3_.find(b)) {
    ++p.counters.l3_hits;
    hit = HitLevel::L3;
    done = std::max<Cycle>(t3 + lat3, l3->ready);
    auto dit = directory_.find(b);
    int owner = dit == directory_.end() ? -1 : dit->second.owner;
    if (owner >= 0 && owner != c) {
      done += 2 * lat2;
      if (quarantine) {
        data = freshest(owner, b);
      } else {
        downgrade(owner, b);
        data = l3_.find(b)->data;
      }
    } else {
      data = l3->data;
    }
    if (!quarantine) l3_.touch(*l3_.find(b));
  } else {
    hit = HitLevel::Memory;
    done = t3 + lat3 + cfg_.cache.memory_latency;
    data = backing(b);
    if (!quarantine) install(Level::L3, -1, b, Mesi::E, data, FillCause::SpeculativeLoad, seq, done);
  }
  if (quarantine) return fill_precache(std::move(data), hit, done);

  Mesi st = grant_state(c, b);
  install(Level::L2, c, b, st, data, FillCause::SpeculativeLoad, seq, done);
  dir_add(b, c, st);
  install(Level::L1D, c, b, st, data, FillCause::SpeculativeLoad, seq, done);
  return {read_word(data, pa, size), hit, done, false};
}

// ---------------------------------------------------------------- stores

Cycle MemorySystem::store_commit_access(CoreId c, Addr vaddr, Word value, Cycle now) {
  Private& p = cores_[c];
  auto tr = p.tlb.translate_committed(vaddr);
  const Addr pa = tr.paddr;
  const Addr b = block(pa);
  const unsigned lat1 = cfg_.cache.l1.latency;
  const unsigned lat2 = cfg_.cache.l2.latency;
  const unsigned lat3 = cfg_.cache.l3.latency;
  Cycle t = now + tr.latency;
  ++version_;

  if (p.pc.find(b)) pc_invalidate(c, b);
  if (p.victim)
    if (CacheLine* v = p.victim->find(b)) {
      Mesi st = v->state;
      std::vector<std::uint8_t> data = v->data;
      p.victim->erase(b);
      install(Level::L1D, c, b, st, data, FillCause::StoreAllocate, 0, t + lat1);
    }

  Cycle done = t + lat1;
  CacheLine* l1 = p.l1d.find(b);
  if (!(l1 && owns(l1->state))) {
    Cycle t2 = p.l2_ports.reserve(t + lat1);
    done = t2 + lat2;
    CacheLine* l2 = p.l2.find(b);
    if (!(l2 && owns(l2->state))) {
      Cycle t3 = l3_ports_.reserve(done);
      done = t3 + lat3;
      ensure_l3(b, done);
      bool sent = false;
      std::uint32_t sharers = directory_[b].sharers;
      for (unsigned o = 0; o < cores_.size(); ++o) {
        auto oc = static_cast<CoreId>(o);
        if (oc == c || !(sharers & bit(oc))) continue;
        drop_private(oc, b);
        ++p.counters.invalidations;
        sent = true;
      }
      if (sent) done += 2 * lat2;
      std::vector<std::uint8_t> data = l3_.find(b)->data;
      if (CacheLine* own = p.l2.find(b))
        own->state = Mesi::M;
      else
        install(Level::L2, c, b, Mesi::M, data, FillCause::StoreAllocate, 0, done);
    }
    if (!p.l1d.find(b)) {
      std::vector<std::uint8_t> data = p.l2.find(b)->data;
      install(Level::L1D, c, b, Mesi::M, data, FillCause::StoreAllocate, 0, done);
    }
  }
  // Quarantined copies in other cores that were read from L3 or memory are
  // not tracked as sharers, so they are reached through the L3 directory even
  // when this store needed no ownership transfer.
  if (!l3_dir_.cores_for(b).empty()) {
    route_l3_directory(b, c);
    done = std::max<Cycle>(done, t + lat1 + 2 * lat2);
  }

  l1 = p.l1d.find(b);
  l1->state = Mesi::M;
  p.l1d.touch(*l1);
  unsigned off = pa % line_;
  for (unsigned i = 0; i < 4; ++i) l1->data[off + i] = static_cast<std::uint8_t>(value >> (8 * i));
  p.l2.find(b)->state = Mesi::M;
  DirEntry& d = directory_[b];
  d.sharers = bit(c);
  d.owner = c;
  return done;
}

// ---------------------------------------------------------------- STC

bool MemorySystem::commit_load(CoreId c, Addr vaddr, Seq seq, Cycle now) {
  Private& p = cores_[c];
  p.tlb.on_commit(vaddr);
  if (cfg_.mode == Mode::Baseline) return false;
  Addr b = block(p.tlb.physical(vaddr));
  if (CacheLine* l = p.l1d.find(b)) {
    p.l1d.touch(*l);
    ++version_;
  }
  return stc_issue(c, b, seq, now);
}

bool MemorySystem::stc_issue(CoreId c, Addr b, Seq seq, Cycle now) {
  // Coalesce into an in-flight transaction; only its creator holds a slot.
  for (auto& [id, tx] : stcs_)
    if (tx.core == c && tx.block == b) {
      tx.seqs.push_back(seq);
      return false;
    }
  Private& p = cores_[c];
  PreCacheEntry* e = p.pc.find(b);
  if (!e) {
    if (!p.l1d.find(b)) {
      ++p.counters.stc_noop;
      stc_events_.push_back({c, b, StcOutcome::Noop, {seq}, now});
    }
    return false;
  }
  e->stc_locked = true;
  StcTx tx;
  tx.id = next_stc_id_++;
  tx.core = c;
  tx.block = b;
  tx.hit = e->hit_level;
  tx.issued = now;
  tx.ready = now + 1;
  tx.path.push_back(Level::L1D);
  if (tx.hit != HitLevel::L2) tx.path.push_back(Level::L2);
  if (tx.hit == HitLevel::Memory) tx.path.push_back(Level::L3);
  if (tx.hit == HitLevel::L2) tx.path.push_back(Level::L2);
  if (tx.hit == HitLevel::L3) tx.path.push_back(Level::L3);
  tx.seqs.push_back(seq);
  stcs_.emplace(tx.id, std::move(tx));
  ++version_;
  return true;
}

void MemorySystem::advance_stc(StcTx& tx, Cycle now) {
  const std::size_t writes = tx.hit == HitLevel::Memory ? 3 : tx.hit == HitLevel::L3 ? 2 : 1;
  while (tx.step < tx.path.size() && tx.ready <= now) {
    Level l = tx.path[tx.step];
    if (tx.step < writes) {
      unsigned set = array(l, tx.core).set_index(tx.block);
      LockKey key{l == Level::L3 ? -1 : tx.core, l, set};
      auto it = locks_.find(key);
      if (it != locks_.end() && it->second != tx.id) {
        tx.ready = now + 1;
        return;
      }
      locks_[key] = tx.id;
      tx.locks.emplace_back(l, set);
    }
    tx.ready += level_latency(l);
    ++tx.step;
  }
  if (tx.step < tx.path.size() || tx.ready > now) return;
  if (!tx.coherence_done) {
    tx.coherence_done = true;
    if (tx.hit != HitLevel::L2) {
      auto it = directory_.find(tx.block);
      if (it != directory_.end() && it->second.owner >= 0 && it->second.owner != tx.core)
        tx.ready += 2 * cfg_.cache.l2.latency;
    }
    tx.ready += writes;
    if (tx.ready > now) return;
  }
  finish_stc(tx, now);
}

void MemorySystem::finish_stc(StcTx& tx, Cycle now) {
  const CoreId c = tx.core;
  const Addr b = tx.block;
  Private& p = cores_[c];
  if (!p.pc.find(b)) throw SimulationError("STC finishing without its pre-cache entry");
  const Seq cause = tx.seqs.front();
  Mesi st;
  std::vector<std::uint8_t> data;
  if (tx.hit == HitLevel::L2) {
    CacheLine* l2 = p.l2.find(b);
    if (!l2) throw SimulationError("STC: L2 block vanished without invalidating the entry");
    p.l2.touch(*l2);
    st = l2->state;
    data = l2->data;
  } else {
    Cycle ignored = now;
    if (tx.hit == HitLevel::Memory) {
      ensure_l3(b, ignored);
    } else if (!l3_.find(b)) {
      throw SimulationError("STC: L3 block vanished without invalidating the entry");
    }
    auto it = directory_.find(b);
    if (it != directory_.end() && it->second.owner >= 0 && it->second.owner != c) downgrade(it->second.owner, b);
    CacheLine* l3 = l3_.find(b);
    l3_.touch(*l3);
    data = l3->data;
    st = grant_state(c, b);
    if (corrupt_stc_) {
      data[0] ^= 0xFF;
      corrupt_stc_ = false;
    }
    install(Level::L2, c, b, st, data, FillCause::Stc, cause, now);
    dir_add(b, c, st);
  }
  if (corrupt_stc_) {
    data[0] ^= 0xFF;
    corrupt_stc_ = false;
  }
  if (!p.l1d.find(b)) install(Level::L1D, c, b, st, data, FillCause::Stc, cause, now);
  p.l2_dir.remove(b, c);
  l3_dir_.remove(b, c);
  p.pc.erase(b);
  release_locks(tx);
  ++p.counters.stc_written;
  stc_events_.push_back({c, b, StcOutcome::Written, tx.seqs, now});
  ++version_;
  stcs_.erase(tx.id);
}

void MemorySystem::release_locks(StcTx& tx) {
  for (auto [l, set] : tx.locks) locks_.erase(LockKey{l == Level::L3 ? -1 : tx.core, l, set});
  tx.locks.clear();
}

void MemorySystem::abort_stc_for(CoreId c, Addr b) {
  for (auto it = stcs_.begin(); it != stcs_.end(); ++it) {
    StcTx& tx = it->second;
    if (tx.core != c || tx.block != b) continue;
    release_locks(tx);
    ++cores_[c].counters.stc_aborted;
    stc_events_.push_back({c, b, StcOutcome::Aborted, tx.seqs, 0});
    stcs_.erase(it);
    ++version_;
    return;
  }
}

void MemorySystem::pc_invalidate(CoreId c, Addr b) {
  Private& p = cores_[c];
  abort_stc_for(c, b);
  p.pc.erase(b);
  p.l2_dir.remove(b, c);
  l3_dir_.remove(b, c);
  ++version_;
}

void MemorySystem::pc_clear(CoreId c) {
  Private& p = cores_[c];
  for (Addr b : p.pc.clear_unlocked()) {
    p.l2_dir.remove(b, c);
    l3_dir_.remove(b, c);
  }
  ++version_;
}

std::optional<PreCacheEntry> MemorySystem::pc_lookup(CoreId c, Addr b) const {
  if (const PreCacheEntry* e = cores_[c].pc.lookup(block(b))) return *e;
  return std::nullopt;
}

// ---------------------------------------------------------------- cycle driver

void MemorySystem::tick(Cycle now) {
  for (unsigned ci = 0; ci < cores_.size(); ++ci) {
    auto c = static_cast<CoreId>(ci);
    for (const MemRequest& r : cores_[ci].access_list.service(now)) {
      if (r.kind == ReqKind::PreCacheClear) {
        pc_clear(c);
      } else if (r.kind == ReqKind::Load) {
        LoadResult res = load_access(c, r.addr, r.size, r.seq, now);
        responses_.push_back({c, r.seq, res.completion, res.value});
      }
    }
    if (now > 0) cores_[ci].l2_ports.prune(now - 1);
  }
  if (now > 0) l3_ports_.prune(now - 1);

  std::vector<std::uint64_t> ids;
  ids.reserve(stcs_.size());
  for (const auto& [id, tx] : stcs_) ids.push_back(id);
  for (std::uint64_t id : ids) {
    auto it = stcs_.find(id);
    if (it == stcs_.end()) continue;
    advance_stc(it->second, now);
  }
  for (StcEvent& e : stc_events_)
    if (e.cycle == 0) e.cycle = now;
}

std::vector<LoadResponse> MemorySystem::take_responses(Cycle now) {
  std::vector<LoadResponse> out;
  auto mid = std::stable_partition(responses_.begin(), responses_.end(),
                                   [&](const LoadResponse& r) { return r.ready > now; });
  out.assign(mid, responses_.end());
  responses_.erase(mid, responses_.end());
  std::sort(out.begin(), out.end(), [](const LoadResponse& a, const LoadResponse& b) {
    return std::tie(a.ready, a.core, a.seq) < std::tie(b.ready, b.core, b.seq);
  });
  return out;
}

std::vector<StcEvent> MemorySystem::take_stc_events() { return std::exchange(stc_events_, {}); }

bool MemorySystem::drained() const {
  if (!responses_.empty() || !stcs_.empty()) return false;
  for (const auto& p : cores_)
    if (!p.access_list.empty()) return false;
  return true;
}

// ---------------------------------------------------------------- instruction side

std::optional<Cycle> MemorySystem::ifetch(CoreId c, Addr pc, Cycle now) {
  Private& p = cores_[c];
  const Addr b = block(code_byte_address(pc));
  const unsigned lat1 = cfg_.cache.l1.latency;
  const unsigned lat2 = cfg_.cache.l2.latency;
  const unsigned lat3 = cfg_.cache.l3.latency;
  const bool ipc_on = cfg_.mode == Mode::PreCache && cfg_.iprecache;
  const bool quarantine = ipc_on && p.ipc.guarded();
  ++p.counters.l1i_accesses;

  if (CacheLine* l = p.l1i.find(b)) {
    ++p.counters.l1i_hits;
    if (!quarantine) p.l1i.touch(*l);
    return std::max<Cycle>(now + lat1, l->ready);
  }
  if (ipc_on && p.ipc.contains(b)) {
    ++p.counters.l1i_hits;
    ++p.counters.iprecache_hits;
    return now + lat1;
  }
  if (quarantine && p.ipc.full()) return std::nullopt;

  Cycle t2 = p.l2_ports.reserve(now + lat1);
  ++p.counters.l2_accesses;
  Cycle done;
  if (CacheLine* l2 = p.l2.find(b)) {
    ++p.counters.l2_hits;
    done = std::max<Cycle>(t2 + lat2, l2->ready);
    if (!quarantine) {
      p.l2.touch(*l2);
      Mesi st = l2->state;
      std::vector<std::uint8_t> data = l2->data;
      install(Level::L1I, c, b, st, data, FillCause::Fetch, 0, done);
    }
  } else {
    Cycle t3 = l3_ports_.reserve(t2 + lat2);
    ++p.counters.l3_accesses;
    if (CacheLine* l3 = l3_.find(b)) {
      ++p.counters.l3_hits;
      done = std::max<Cycle>(t3 + lat3, l3->ready);
      if (!quarantine) {
        l3_.touch(*l3);
        auto it = directory_.find(b);
        if (it != directory_.end() && it->second.owner >= 0 && it->second.owner != c) {
          done += 2 * lat2;
          downgrade(it->second.owner, b);
        }
      }
    } else {
      done = t3 + lat3 + cfg_.cache.memory_latency;
      if (!quarantine) ensure_l3(b, t3);
    }
    if (!quarantine) {
      std::vector<std::uint8_t> data = l3_.find(b)->data;
      Mesi st = grant_state(c, b);
      install(Level::L2, c, b, st, data, FillCause::Fetch, 0, done);
      dir_add(b, c, st);
      install(Level::L1I, c, b, st, data, FillCause::Fetch, 0, done);
    }
  }
  if (quarantine) {
    p.ipc.insert(b);
    ++version_;
  }
  return done;
}

void MemorySystem::on_guard_decoded(CoreId c, Seq seq) {
  if (cfg_.mode != Mode::PreCache || !cfg_.iprecache) return;
  cores_[c].ipc.on_guard_decoded(seq);
  ++version_;
}

void MemorySystem::on_guard_commit(CoreId c, Seq seq) {
  if (cfg_.mode != Mode::PreCache || !cfg_.iprecache) return;
  Private& p = cores_[c];
  for (Addr b : p.ipc.on_guard_commit(seq)) {
    ++p.counters.iprecache_transfers;
    if (p.l1i.find(b)) continue;
    if (!p.l2.find(b)) {
      Cycle ignored = 0;
      ensure_l3(b, ignored);
      auto it = directory_.find(b);
      if (it != directory_.end() && it->second.owner >= 0 && it->second.owner != c) downgrade(it->second.owner, b);
      std::vector<std::uint8_t> data = l3_.find(b)->data;
      Mesi st = grant_state(c, b);
      install(Level::L2, c, b, st, data, FillCause::Transfer, seq, 0);
      dir_add(b, c, st);
    }
    CacheLine* l2 = p.l2.find(b);
    Mesi st = l2->state;
    std::vector<std::uint8_t> data = l2->data;
    install(Level::L1I, c, b, st, data, FillCause::Transfer, seq, 0);
  }
  ++version_;
}

void MemorySystem::ipc_clear(CoreId c, Seq from_seq) {
  if (cfg_.mode != Mode::PreCache || !cfg_.iprecache) return;
  cores_[c].ipc.clear(from_seq);
  ++version_;
}

void MemorySystem::tlb_on_commit(CoreId c, Addr vaddr) {
  cores_[c].tlb.on_commit(vaddr);
  ++version_;
}

void MemorySystem::pre_tlb_clear(CoreId c) {
  cores_[c].tlb.clear_pre();
  ++version_;
}

// ---------------------------------------------------------------- inspection

std::vector<LineView> MemorySystem::snapshot() const {
  std::vector<LineView> out;
  auto add = [&](Level lvl, CoreId c, const CacheArray& a) {
    for (const CacheLine* l : a.lines())
      out.push_back({lvl, c, a.set_index(l->block), a.way_of(l->block), l->block, l->state, l->lru_stamp});
  };
  for (unsigned ci = 0; ci < cores_.size(); ++ci) {
    auto c = static_cast<CoreId>(ci);
    add(Level::L1I, c, cores_[ci].l1i);
    add(Level::L1D, c, cores_[ci].l1d);
    add(Level::L2, c, cores_[ci].l2);
    if (cores_[ci].victim) add(Level::Victim, c, *cores_[ci].victim);
  }
  add(Level::L3, -1, l3_);
  return out;
}

SparseMemory MemorySystem::architectural_memory() const {
  std::map<Addr, std::vector<std::uint8_t>> image = memory_;
  for (const CacheLine* l : l3_.lines())
    if (l->dirty) image[l->block] = l->data;
  for (unsigned ci = 0; ci < cores_.size(); ++ci) {
    const Private& p = cores_[ci];
    for (const CacheLine* l : p.l2.lines()) {
      bool dirty = l->state == Mesi::M;
      if (const CacheLine* l1 = p.l1d.find(l->block); l1 && l1->state == Mesi::M) dirty = true;
      if (p.victim)
        if (const CacheLine* v = p.victim->find(l->block); v && v->state == Mesi::M) dirty = true;
      if (dirty) image[l->block] = freshest(static_cast<CoreId>(ci), l->block);
    }
  }
  SparseMemory out;
  const TranslationUnit& tu = cores_[0].tlb;
  for (const auto& [b, bytes] : image) {
    if (b >= kCodeBase) continue;
    for (unsigned i = 0; i < line_; ++i)
      if (bytes[i]) out.write8(tu.physical(b + i), bytes[i]);
  }
  return out;
}

void MemorySystem::force_evict(Level level, CoreId c, Addr b) {
  if (!array(level, c).find(b)) return;
  evict_line(level, c, b);
}

}  // namespace precache
