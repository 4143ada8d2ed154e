#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"

using namespace precache;
using testutil::config;

TEST(CacheArray, LruVictimIsLeastRecentlyTouched) {
  CacheArray a("t", {4 * 64, 4, 1, 1}, 64);  // one set, four ways
  std::vector<std::uint8_t> d(64, 0);
  for (Addr b : {0x000u, 0x040u, 0x080u, 0x0C0u}) a.install(b, Mesi::E, d);
  EXPECT_FALSE(a.has_free_way(0));
  EXPECT_EQ(a.lru_victim(0).block, 0x000u);
  a.touch(*a.find(0x000));
  EXPECT_EQ(a.lru_victim(0).block, 0x040u);
  EXPECT_THROW(a.install(0x100, Mesi::E, d), SimulationError);
  EXPECT_THROW(a.install(0x040, Mesi::E, d), SimulationError);
}

TEST(CacheArray, MatchesReferenceLruModel) {
  std::mt19937_64 rng(3);
  CacheArray a("t", {8 * 64 * 2, 2, 1, 1}, 64);  // 8 sets, 2 ways
  std::vector<std::uint8_t> d(64, 0);
  std::map<unsigned, std::vector<Addr>> model;  // per set, LRU first
  for (int i = 0; i < 5000; ++i) {
    Addr b = static_cast<Addr>(rng() % 64) * 64;
    unsigned set = a.set_index(b);
    auto& m = model[set];
    auto it = std::find(m.begin(), m.end(), b);
    if (it != m.end()) {
      m.erase(it);
      a.touch(*a.find(b));
    } else {
      if (m.size() == 2) {
        ASSERT_EQ(a.lru_victim(set).block, m.front());
        a.erase(m.front());
        m.erase(m.begin());
      }
      a.install(b, Mesi::S, d);
    }
    m.push_back(b);
    ASSERT_TRUE(a.contains(b));
  }
}

TEST(RequestQueue, ClearIsServicedFirst) {
  RequestQueue q(1);
  q.push({ReqKind::Load, 0, 0x100, 5}, 0);
  q.push({ReqKind::PreCacheClear, 0, 0, 3}, 0);
  auto first = q.service(0);
  ASSERT_EQ(first.size(), 1u);
  EXPECT_EQ(first[0].kind, ReqKind::PreCacheClear);
  auto second = q.service(1);
  ASSERT_EQ(second.size(), 1u);
  EXPECT_EQ(second[0].kind, ReqKind::Load);
}

TEST(RequestQueue, PortsBoundServiceAndFifoOrder) {
  RequestQueue q(2);
  for (Seq s = 1; s <= 3; ++s) q.push({ReqKind::Load, 0, 0x100 * static_cast<Addr>(s), s}, 0);
  auto a = q.service(0);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a[0].seq, 1u);
  EXPECT_EQ(a[1].seq, 2u);
  EXPECT_EQ(q.service(1).front().seq, 3u);
  q.push({ReqKind::Load, 0, 0, 9}, 5);
  EXPECT_TRUE(q.service(4).empty());
  EXPECT_EQ(q.service(5).size(), 1u);
}

TEST(PortCalendar, SpillsToLaterCycles) {
  PortCalendar p(2);
  EXPECT_EQ(p.reserve(10), 10u);
  EXPECT_EQ(p.reserve(10), 10u);
  EXPECT_EQ(p.reserve(10), 11u);
  EXPECT_EQ(p.reserve(9), 9u);
}

TEST(MemoryHierarchy, TwoLoadsWithTwoPortsCompleteAfterLatency) {
  SimConfig cfg = config(Mode::Baseline);
  MemorySystem mem(cfg, {});
  auto a = mem.load_access(0, 0x1000, 4, 1, 0);
  auto b = mem.load_access(0, 0x2000, 4, 2, 0);
  Cycle cold = cfg.cache.l1.latency + cfg.cache.l2.latency + cfg.cache.l3.latency + cfg.cache.memory_latency;
  EXPECT_EQ(a.completion, cold);
  EXPECT_EQ(b.completion, cold);
  EXPECT_EQ(a.hit, HitLevel::Memory);
}

TEST(MemoryHierarchy, BaselineLoadFillsEveryLevel) {
  MemorySystem mem(config(Mode::Baseline), testutil::memory_of(".data 0x1000: 42"));
  auto r = mem.load_access(0, 0x1000, 4, 1, 0);
  EXPECT_EQ(r.value, 42u);
  EXPECT_TRUE(mem.l1d(0).contains(0x1000));
  EXPECT_TRUE(mem.l2(0).contains(0x1000));
  EXPECT_TRUE(mem.l3().contains(0x1000));
  EXPECT_EQ(mem.l1d(0).find(0x1000)->state, Mesi::E);
  EXPECT_EQ(mem.directory().at(0x1000).owner, 0);
  EXPECT_TRUE(check_hierarchy(mem).empty());
}

TEST(MemoryHierarchy, L2HitReportsLevelOne) {
  MemorySystem mem(config(Mode::PreCache), {});
  Cycle t = mem.store_commit_access(0, 0x1000, 1, 0);
  mem.force_evict(Level::L1D, 0, 0x1000);
  auto r = mem.load_access(0, 0x1000, 4, 7, t);
  EXPECT_EQ(r.hit, HitLevel::L2);
  EXPECT_EQ(to_int(r.hit), 1);
  EXPECT_EQ(r.value, 1u);
}

TEST(MemoryHierarchy, StoreInvalidatesOtherSharers) {
  MemorySystem mem(config(Mode::Baseline, 2), {});
  mem.load_access(0, 0x1000, 4, 1, 0);
  mem.load_access(1, 0x1000, 4, 1, 0);
  EXPECT_EQ(mem.l1d(1).find(0x1000)->state, Mesi::S);
  EXPECT_EQ(mem.l1d(0).find(0x1000)->state, Mesi::S);
  mem.store_commit_access(0, 0x1000, 9, 1000);
  EXPECT_FALSE(mem.l1d(1).contains(0x1000));
  EXPECT_FALSE(mem.l2(1).contains(0x1000));
  EXPECT_EQ(mem.l1d(0).find(0x1000)->state, Mesi::M);
  EXPECT_EQ(mem.directory().at(0x1000).sharers, 1u);
  EXPECT_TRUE(check_hierarchy(mem).empty());
  EXPECT_EQ(mem.load_access(1, 0x1000, 4, 2, 2000).value, 9u);
  EXPECT_TRUE(check_hierarchy(mem).empty());
}

TEST(MemoryHierarchy, StoreWaitsForInvalidationAcknowledgments) {
  SimConfig cfg = config(Mode::Baseline, 2);
  MemorySystem alone(cfg, {});
  alone.load_access(0, 0x1000, 4, 1, 0);
  Cycle solo = alone.store_commit_access(0, 0x1040, 9, 1000);

  MemorySystem shared(cfg, {});
  shared.load_access(0, 0x1040, 4, 1, 0);
  shared.load_access(1, 0x1040, 4, 1, 0);
  Cycle with_sharer = shared.store_commit_access(0, 0x1040, 9, 1000);
  EXPECT_GT(with_sharer, solo - cfg.cache.memory_latency);
  EXPECT_GE(with_sharer, 1000 + cfg.cache.l1.latency + cfg.cache.l2.latency + cfg.cache.l3.latency + 2 * cfg.cache.l2.latency);
}

TEST(MemoryHierarchy, L2EvictionBackInvalidatesL1) {
  SimConfig cfg = config(Mode::Baseline);
  cfg.cache.l1 = {2 * 64, 2, 1, 1};
  cfg.cache.l2 = {2 * 64, 2, 2, 1};
  cfg.cache.l3 = {16 * 64, 16, 3, 1};
  MemorySystem mem(cfg, {});
  mem.load_access(0, 0x000, 4, 1, 0);
  mem.load_access(0, 0x040, 4, 2, 0);
  mem.load_access(0, 0x080, 4, 3, 0);  // L2 evicts 0x000
  EXPECT_FALSE(mem.l2(0).contains(0x000));
  EXPECT_FALSE(mem.l1d(0).contains(0x000));
  EXPECT_TRUE(check_hierarchy(mem).empty());
}

TEST(MemoryHierarchy, DirtyDataSurvivesEvictionChain) {
  SimConfig cfg = config(Mode::Baseline);
  cfg.cache.l1 = {2 * 64, 2, 1, 1};
  cfg.cache.l2 = {2 * 64, 2, 2, 1};
  cfg.cache.l3 = {2 * 64, 2, 3, 1};
  MemorySystem mem(cfg, {});
  mem.store_commit_access(0, 0x000, 0xAB, 0);
  for (Addr a : {0x040u, 0x080u, 0x0C0u}) mem.load_access(0, a, 4, 1, 100);
  EXPECT_FALSE(mem.l3().contains(0x000));
  EXPECT_EQ(mem.architectural_memory().read(0x000, 4), 0xABu);
  EXPECT_EQ(mem.load_access(0, 0x000, 4, 2, 1000).value, 0xABu);
}

TEST(MemoryHierarchy, SnapshotShowsBaselineFillAndDumpIsSorted) {
  MemorySystem mem(config(Mode::Baseline), {});
  mem.load_access(0, 0x3000, 4, 1, 0);
  mem.load_access(0, 0x1000, 4, 2, 0);
  CacheDump d = dump_structures(mem, 500);
  ASSERT_EQ(d.sections.at("L1D core0").size(), 2u);
  EXPECT_EQ(d.sections.at("L1D core0")[0], "0x00001000 E");
  EXPECT_EQ(d.sections.at("L1D core0")[1], "0x00003000 E");
}
