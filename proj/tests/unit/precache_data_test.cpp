#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"

using namespace precache;
using testutil::config;

TEST(PreCacheBuffer, FillLookupEraseAndCapacity) {
  PreCache pc(2);
  std::vector<std::uint8_t> d(64, 7);
  pc.fill(0x40, d, HitLevel::L2, 1);
  ASSERT_NE(pc.lookup(0x40), nullptr);
  EXPECT_EQ(pc.lookup(0x40)->data, d);
  EXPECT_EQ(pc.lookup(0x80), nullptr);
  pc.fill(0x80, d, HitLevel::Memory, 2);
  pc.fill(0x80, d, HitLevel::L3, 3);  // overwrite, no growth
  EXPECT_EQ(pc.size(), 2u);
  EXPECT_THROW(pc.fill(0xC0, d, HitLevel::L2, 4), SimulationError);
  EXPECT_THROW(pc.fill(0x40, d, HitLevel::L1, 4), SimulationError);
  pc.find(0x40)->stc_locked = true;
  auto erased = pc.clear_unlocked();
  EXPECT_EQ(erased, std::vector<Addr>{0x80});
  EXPECT_NE(pc.lookup(0x40), nullptr);
}

TEST(PreCacheBuffer, MatchesMapModel) {
  std::mt19937_64 rng(9);
  PreCache pc(32);
  std::map<Addr, bool> model;  // block -> locked
  std::vector<std::uint8_t> d(64, 0);
  for (int i = 0; i < 20000; ++i) {
    Addr b = static_cast<Addr>(rng() % 48) * 64;
    switch (rng() % 4) {
      case 0:
      case 1:
        if (model.size() < 32 || model.count(b)) {
          pc.fill(b, d, HitLevel::L3, static_cast<Seq>(i));
          model[b] = false;
        }
        break;
      case 2:
        if (auto* e = pc.find(b)) {
          e->stc_locked = true;
          model[b] = true;
        }
        break;
      default:
        if (rng() % 8 == 0) {
          pc.clear_unlocked();
          std::erase_if(model, [](const auto& kv) { return !kv.second; });
        } else {
          pc.erase(b);
          model.erase(b);
        }
    }
    ASSERT_EQ(pc.size(), model.size());
    ASSERT_LE(pc.size(), 32u);
  }
}

TEST(PreCache, ColdLoadFillsOnlyThePreCache) {
  MemorySystem mem(config(Mode::PreCache), testutil::memory_of(".data 0x1000: 5"));
  auto before = mem.snapshot();
  auto r = mem.load_access(0, 0x1000, 4, 1, 0);
  EXPECT_EQ(r.hit, HitLevel::Memory);
  EXPECT_EQ(to_int(r.hit), 3);
  EXPECT_EQ(r.value, 5u);
  EXPECT_EQ(mem.snapshot(), before);
  EXPECT_TRUE(mem.directory().empty());
  auto e = mem.pc_lookup(0, 0x1000);
  ASSERT_TRUE(e);
  EXPECT_EQ(e->hit_level, HitLevel::Memory);
  EXPECT_FALSE(e->stc_locked);
  // directory records at L2 and L3
  EXPECT_TRUE(mem.l2_directory(0).contains(0x1000, 0));
  EXPECT_TRUE(mem.l3_directory().contains(0x1000, 0));
  EXPECT_TRUE(check_hierarchy(mem).empty());
}

TEST(PreCache, L2HitRecordsOnlyAtL2) {
  MemorySystem mem(config(Mode::PreCache), {});
  Cycle t = mem.store_commit_access(0, 0x1000, 1, 0);
  mem.force_evict(Level::L1D, 0, 0x1000);
  auto r = mem.load_access(0, 0x1000, 4, 5, t);
  EXPECT_EQ(r.hit, HitLevel::L2);
  EXPECT_TRUE(mem.l2_directory(0).contains(0x1000, 0));
  EXPECT_FALSE(mem.l3_directory().contains(0x1000, 0));
}

TEST(PreCache, SecondLoadHitsAtL1Latency) {
  SimConfig cfg = config(Mode::PreCache);
  MemorySystem mem(cfg, {});
  auto first = mem.load_access(0, 0x1000, 4, 1, 0);
  auto second = mem.load_access(0, 0x1004, 4, 2, first.completion);
  EXPECT_TRUE(second.precache_hit);
  EXPECT_EQ(second.completion, first.completion + 4);
  EXPECT_EQ(mem.precache(0).size(), 1u);
}

TEST(PreCache, LookupIsPerCore) {
  MemorySystem mem(config(Mode::PreCache, 2), {});
  mem.load_access(0, 0x1000, 4, 1, 0);
  EXPECT_TRUE(mem.pc_lookup(0, 0x1000));
  EXPECT_FALSE(mem.pc_lookup(1, 0x1000));
}

TEST(PreCache, OpacityUnderRandomSpeculativeLoads) {
  std::mt19937_64 rng(21);
  SimConfig cfg = config(Mode::PreCache, 2);
  cfg.cache.l1 = {512, 2, 2, 2};
  cfg.cache.l2 = {2048, 4, 4, 2};
  cfg.cache.l3 = {16384, 8, 8, 2};
  for (int round = 0; round < 20; ++round) {
    MemorySystem mem(cfg, {});
    Cycle t = 0;
    // committed history
    for (int i = 0; i < 30; ++i) {
      Addr a = static_cast<Addr>(rng() % 64) * 64;
      CoreId c = static_cast<CoreId>(rng() % 2);
      if (rng() % 2)
        t = mem.store_commit_access(c, a, static_cast<Word>(rng()), t);
      else
        mem.commit_load(c, a, static_cast<Seq>(i), t), t = testutil::drain(mem, t) + 1;
    }
    mem.pc_clear(0);
    mem.pc_clear(1);
    auto before = mem.snapshot();
    for (int i = 0; i < 40; ++i) {
      CoreId c = static_cast<CoreId>(rng() % 2);
      if (mem.precache(c).size() >= 32) break;
      mem.load_access(c, static_cast<Addr>(rng() % 64) * 64, 4, 1000 + static_cast<Seq>(i), t + static_cast<Cycle>(i));
    }
    ASSERT_EQ(mem.snapshot(), before) << "round " << round;
    ASSERT_TRUE(check_hierarchy(mem).empty());
  }
}

namespace {
// Loads `addr` speculatively and commits it; returns the STC events.
std::vector<StcEvent> load_and_commit(MemorySystem& mem, CoreId c, Addr addr, Seq seq, Cycle& now) {
  auto r = mem.load_access(c, addr, 4, seq, now);
  now = r.completion;
  mem.commit_load(c, addr, seq, now);
  now = testutil::drain(mem, now) + 1;
  return mem.take_stc_events();
}
}  // namespace

TEST(Stc, L2HitWritesOnlyL1AndLeavesL2Alone) {
  MemorySystem mem(config(Mode::PreCache), {});
  Cycle now = mem.store_commit_access(0, 0x1000, 0x11, 0);
  mem.force_evict(Level::L1D, 0, 0x1000);
  auto l2_before = *mem.l2(0).find(0x1000);
  auto l3_dirty = mem.l3().find(0x1000)->dirty;
  auto ev = load_and_commit(mem, 0, 0x1000, 3, now);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].outcome, StcOutcome::Written);
  EXPECT_TRUE(mem.l1d(0).contains(0x1000));
  EXPECT_EQ(mem.l2(0).find(0x1000)->data, l2_before.data);
  EXPECT_EQ(mem.l2(0).find(0x1000)->state, l2_before.state);
  EXPECT_EQ(mem.l3().find(0x1000)->dirty, l3_dirty);
  EXPECT_FALSE(mem.l2_directory(0).contains(0x1000, 0));
  EXPECT_EQ(mem.precache(0).size(), 0u);
  EXPECT_EQ(mem.locks_held(), 0u);
  EXPECT_TRUE(check_hierarchy(mem).empty());
}

TEST(Stc, MemoryHitWritesAllLevelsExclusive) {
  MemorySystem mem(config(Mode::PreCache), testutil::memory_of(".data 0x2000: 1 2 3 4"));
  Cycle now = 0;
  auto ev = load_and_commit(mem, 0, 0x2000, 1, now);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].outcome, StcOutcome::Written);
  EXPECT_EQ(mem.l1d(0).find(0x2000)->state, Mesi::E);
  EXPECT_EQ(mem.l2(0).find(0x2000)->state, Mesi::E);
  EXPECT_TRUE(mem.l3().contains(0x2000));
  EXPECT_EQ(mem.directory().at(0x2000).owner, 0);
  EXPECT_EQ(mem.l3_directory().size(), 0u);
  EXPECT_EQ(mem.l2_directory(0).size(), 0u);
  EXPECT_TRUE(check_hierarchy(mem).empty());
}

TEST(Stc, RemoteOwnerIsDowngradedWithWriteback) {
  MemorySystem mem(config(Mode::PreCache, 2), {});
  Cycle now = mem.store_commit_access(1, 0x3000, 0xBEEF, 0);
  EXPECT_EQ(mem.l1d(1).find(0x3000)->state, Mesi::M);
  auto r = mem.load_access(0, 0x3000, 4, 1, now);
  EXPECT_EQ(r.value, 0xBEEFu);
  EXPECT_EQ(mem.l1d(1).find(0x3000)->state, Mesi::M);  // untouched while speculative
  now = r.completion;
  mem.commit_load(0, 0x3000, 1, now);
  testutil::drain(mem, now);
  EXPECT_EQ(mem.l1d(1).find(0x3000)->state, Mesi::S);
  EXPECT_EQ(mem.l1d(0).find(0x3000)->state, Mesi::S);
  EXPECT_TRUE(mem.l3().find(0x3000)->dirty);
  EXPECT_EQ(mem.l3().find(0x3000)->data[0], 0xEF);
  EXPECT_EQ(mem.directory().at(0x3000).owner, -1);
  EXPECT_TRUE(check_hierarchy(mem).empty());
}

TEST(Stc, SameBlockCommitsCoalesce) {
  MemorySystem mem(config(Mode::PreCache), {});
  auto r = mem.load_access(0, 0x1000, 4, 1, 0);
  mem.load_access(0, 0x1008, 4, 2, 0);
  EXPECT_TRUE(mem.commit_load(0, 0x1000, 1, r.completion));
  EXPECT_FALSE(mem.commit_load(0, 0x1008, 2, r.completion));
  EXPECT_EQ(mem.stc_in_flight(), 1u);
  testutil::drain(mem, r.completion);
  auto ev = mem.take_stc_events();
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].seqs, (std::vector<Seq>{1, 2}));
}

TEST(Stc, ClearSparesLockedEntry) {
  MemorySystem mem(config(Mode::PreCache), {});
  auto a = mem.load_access(0, 0x1000, 4, 1, 0);
  mem.load_access(0, 0x2000, 4, 2, 0);
  mem.commit_load(0, 0x1000, 1, a.completion);
  mem.pc_clear(0);
  EXPECT_TRUE(mem.pc_lookup(0, 0x1000));
  EXPECT_FALSE(mem.pc_lookup(0, 0x2000));
  EXPECT_FALSE(mem.l3_directory().contains(0x2000, 0));
  testutil::drain(mem, a.completion);
  auto ev = mem.take_stc_events();
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].outcome, StcOutcome::Written);
  EXPECT_TRUE(mem.l1d(0).contains(0x1000));
  EXPECT_FALSE(mem.l1d(0).contains(0x2000));
}

TEST(Stc, ClearRacingPostSquashLoadKeepsTheNewFill) {
  MemorySystem mem(config(Mode::PreCache), {});
  mem.enqueue_load(0, 0x1000, 4, 5, 0);   // squashed
  mem.enqueue_clear(0, 5, 0);
  mem.enqueue_load(0, 0x2000, 4, 6, 0);   // issued after the squash
  mem.tick(0);
  mem.tick(1);
  EXPECT_FALSE(mem.pc_lookup(0, 0x1000));
  EXPECT_TRUE(mem.pc_lookup(0, 0x2000));
}

TEST(Stc, InFlightFillOfSquashedLoadIsDropped) {
  MemorySystem mem(config(Mode::PreCache), {});
  mem.enqueue_load(0, 0x1000, 4, 5, 0);
  mem.tick(0);  // serviced, response pending
  mem.enqueue_clear(0, 5, 1);
  mem.tick(1);
  EXPECT_FALSE(mem.pc_lookup(0, 0x1000));
  EXPECT_TRUE(mem.take_responses(10'000).empty());
  EXPECT_EQ(mem.l2_directory(0).size(), 0u);
}

TEST(Stc, L2EvictionBeforeStcGivesNoop) {
  SimConfig cfg = config(Mode::PreCache);
  MemorySystem mem(cfg, {});
  Cycle now = mem.store_commit_access(0, 0x1000, 1, 0);
  mem.force_evict(Level::L1D, 0, 0x1000);
  auto r = mem.load_access(0, 0x1000, 4, 2, now);
  ASSERT_EQ(r.hit, HitLevel::L2);
  mem.force_evict(Level::L2, 0, 0x1000);
  EXPECT_FALSE(mem.pc_lookup(0, 0x1000));
  EXPECT_TRUE(check_hierarchy(mem).empty());
  mem.commit_load(0, 0x1000, 2, r.completion);
  auto ev = mem.take_stc_events();
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].outcome, StcOutcome::Noop);
  EXPECT_FALSE(mem.l1d(0).contains(0x1000));
}

TEST(Stc, RemoteStoreErasesEntryBeforeRetiring) {
  MemorySystem mem(config(Mode::PreCache, 2), testutil::memory_of(".data 0x1000: 1"));
  mem.load_access(1, 0x1000, 4, 1, 0);
  ASSERT_TRUE(mem.pc_lookup(1, 0x1000));
  Cycle done = mem.store_commit_access(0, 0x1000, 2, 10);
  EXPECT_FALSE(mem.pc_lookup(1, 0x1000));
  EXPECT_FALSE(mem.l3_directory().contains(0x1000, 1));
  auto again = mem.load_access(1, 0x1000, 4, 2, done);
  EXPECT_EQ(again.value, 2u);
  EXPECT_TRUE(check_hierarchy(mem).empty());
}

TEST(Stc, StoreRacingInFlightStcAbortsIt) {
  MemorySystem mem(config(Mode::PreCache, 2), testutil::memory_of(".data 0x1000: 1"));
  auto r = mem.load_access(1, 0x1000, 4, 1, 0);
  ASSERT_TRUE(mem.commit_load(1, 0x1000, 1, r.completion));
  mem.tick(r.completion);
  mem.tick(r.completion + 1);  // first level locked
  EXPECT_GT(mem.locks_held(), 0u);
  mem.store_commit_access(0, 0x1000, 0x77, r.completion + 2);
  auto ev = mem.take_stc_events();
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].outcome, StcOutcome::Aborted);
  EXPECT_EQ(mem.locks_held(), 0u);
  EXPECT_EQ(mem.stc_in_flight(), 0u);
  EXPECT_FALSE(mem.l1d(1).contains(0x1000));
  EXPECT_FALSE(mem.l2(1).contains(0x1000));
  EXPECT_TRUE(check_hierarchy(mem).empty());
}

TEST(Stc, InvalidateOfUnknownBlockIsHarmless) {
  MemorySystem mem(config(Mode::PreCache), {});
  mem.load_access(0, 0x1000, 4, 1, 0);
  mem.pc_invalidate(0, 0x9000);
  EXPECT_TRUE(mem.pc_lookup(0, 0x1000));
  mem.pc_clear(0);
  mem.pc_clear(0);
  EXPECT_EQ(mem.precache(0).size(), 0u);
  EXPECT_EQ(mem.l2_directory(0).size(), 0u);
}
