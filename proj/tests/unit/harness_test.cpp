#include <gtest/gtest.h>

#include <filesystem>

#include "test_util.hpp"

using namespace precache;
using testutil::config;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("precache_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Program streaming() { return assemble(testutil::read_text(testutil::source_path("workloads/streaming.pasm"))); }
}  // namespace

TEST(Config, ParsesKeysAndRejectsUnknownOnes) {
  SimConfig c = parse_config("mode = baseline\ncores = 2 # two\nl1_size = 1024\n; note\n");
  EXPECT_EQ(c.mode, Mode::Baseline);
  EXPECT_EQ(c.cores, 2u);
  EXPECT_EQ(c.cache.l1.size_bytes, 1024u);
  EXPECT_THROW(parse_config("bogus = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("cores = two\n"), ConfigError);
  EXPECT_EQ(to_text(parse_config(to_text(c))), to_text(c));
}

TEST(Config, ShippedFilesParse) {
  for (const char* f : {"baseline.cfg", "precache.cfg", "baseline_2core.cfg", "precache_2core.cfg", "victim_baseline.cfg"}) {
    SimConfig c = parse_config(testutil::read_text(testutil::source_path(std::string("configs/") + f)));
    EXPECT_NO_THROW(validate(c)) << f;
  }
}

TEST(Dump, RejectsInFlightWork) {
  MemorySystem mem(config(Mode::PreCache), {});
  mem.enqueue_load(0, 0x1000, 4, 1, 0);
  EXPECT_THROW(dump_structures(mem, 0), std::logic_error);
  testutil::drain(mem, 0);
  EXPECT_NO_THROW(dump_structures(mem, 500));
}

TEST(Dump, FreshSystemHasEmptySections) {
  MemorySystem mem(config(Mode::PreCache, 2), {});
  auto d = dump_structures(mem, 0);
  for (const char* s : {"L1I core1", "L1D core0", "L2 core1", "PRECACHE core0", "IPRECACHE core1", "TLB core0", "PRETLB core1", "L3"}) {
    ASSERT_TRUE(d.sections.count(s)) << s;
    EXPECT_TRUE(d.sections.at(s).empty()) << s;
  }
  EXPECT_EQ(CacheDump::parse(d.text()), d);
}

TEST(Dump, BaselineColdLoadIsVisibleAtEveryLevel) {
  MemorySystem mem(config(Mode::Baseline), {});
  Cycle t = mem.load_access(0, 0x1000, 4, 1, 0).completion;
  auto d = dump_structures(mem, t);
  EXPECT_TRUE(d.contains("L1D core0", 0x1000));
  EXPECT_TRUE(d.contains("L2 core0", 0x1000));
  EXPECT_TRUE(d.contains("L3", 0x1000));
  EXPECT_TRUE(d.sections.at("PRECACHE core0").empty());
}

TEST(Dump, PreCacheColdLoadIsVisibleOnlyInThePreCache) {
  MemorySystem mem(config(Mode::PreCache), {});
  Cycle t = mem.load_access(0, 0x1000, 4, 1, 0).completion;
  auto d = dump_structures(mem, t);
  EXPECT_EQ(d.sections.at("PRECACHE core0"), std::vector<std::string>{"0x00001000 3 0"});
  EXPECT_FALSE(d.any_contains("L", 0x1000));
}

TEST(Checkpoint, RoundTripsAndRejectsUndrainedOrMalformedInput) {
  auto out = run_program(config(Mode::PreCache), streaming());
  ASSERT_TRUE(out.dump);
  std::string js = checkpoint_json(*out.dump);
  EXPECT_EQ(checkpoint_from_json(js), *out.dump);
  EXPECT_EQ(checkpoint_from_json(js).text(), out.dump->text());
  auto undrained = *out.dump;
  undrained.drained = false;
  EXPECT_ANY_THROW(checkpoint_from_json(checkpoint_json(undrained)));
  EXPECT_ANY_THROW(checkpoint_from_json("{\"format\": 1}"));
  EXPECT_ANY_THROW(checkpoint_from_json("not json"));
}

TEST(Outputs, RerunProducesIdenticalFiles) {
  Program p = assemble(testutil::read_text(testutil::source_path("workloads/boundary.pasm")));
  auto a = scratch("det_a"), b = scratch("det_b");
  auto files_a = write_outputs(a, run_program(config(Mode::PreCache, 2), p));
  auto files_b = write_outputs(b, run_program(config(Mode::PreCache, 2), p));
  ASSERT_EQ(files_a.size(), files_b.size());
  for (std::size_t i = 0; i < files_a.size(); ++i) {
    EXPECT_EQ(files_a[i].filename(), files_b[i].filename());
    EXPECT_EQ(testutil::read_text(files_a[i].string()), testutil::read_text(files_b[i].string())) << files_a[i];
  }
  EXPECT_TRUE(compare_runs(load_run_dir(a), load_run_dir(b)).equal);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Outputs, RunDirectoryReloadsToTheSameResult) {
  Program p = streaming();
  auto out = run_program(config(Mode::Baseline), p);
  auto dir = scratch("reload");
  write_outputs(dir, out);
  auto back = load_run_dir(dir);
  EXPECT_TRUE(compare_runs(back, out.result).equal);
  EXPECT_TRUE(compare_runs(back, reference_run(p, 1)).equal);
  fs::remove_all(dir);
}

TEST(Equivalence, CorruptedTransferIsCaught) {
  // No branches, so nothing squashes the first transfer; the second read
  // sits past a full ROB of ALU work and hits the transferred line in L1.
  std::string src = ".data 0x1000: 7\nLD r1, [r0+0x1000]\n";
  for (int i = 0; i < 400; ++i) src += "ADD r2, r2, 1\n";
  src += "LD r3, [r0+0x1000]\nST [r0+0x2000], r3\nHALT\n";
  Program p = assemble(src);
  auto ref = reference_run(p, 1);
  EXPECT_TRUE(compare_runs(run_program(config(Mode::PreCache), p).result, ref).equal);
  Simulator sim(config(Mode::PreCache), p);
  sim.memory().corrupt_next_stc(true);
  auto eq = compare_runs(sim.run(), ref);
  EXPECT_FALSE(eq.equal);
  EXPECT_FALSE(eq.first_divergence.empty());
}

TEST(Equivalence, DetectsEachKindOfDifference) {
  auto base = reference_run(streaming(), 1);
  auto r = base;
  r.cores[0].regs[3] ^= 1;
  EXPECT_FALSE(compare_runs(base, r).equal);
  r = base;
  r.cores[0].trace.back().value ^= 1;
  EXPECT_FALSE(compare_runs(base, r).equal);
  r = base;
  r.cores[0].halted = false;
  EXPECT_FALSE(compare_runs(base, r).equal);
  r = base;
  r.memory.write(0x777, 1, 5);
  EXPECT_FALSE(compare_runs(base, r).equal);
}

TEST(Stats, CountersAreConsistent) {
  auto r = run_attack("spectre", Mode::Baseline);
  Program p = assemble(gadget_source("spectre", 0x53));
  for (Mode m : {Mode::Baseline, Mode::PreCache}) {
    Stats s = run_program(attack_config(m), p).result.stats;
    EXPECT_GT(s.cycles, 0u);
    EXPECT_DOUBLE_EQ(s.ipc, static_cast<double>(s.committed) / static_cast<double>(s.cycles));
    for (double h : {s.l1d_hit_rate, s.l1i_hit_rate, s.l2_hit_rate, s.l3_hit_rate}) {
      EXPECT_GE(h, 0.0);
      EXPECT_LE(h, 1.0);
    }
    EXPECT_LE(s.polluting_loads, s.squashed_loads);
    EXPECT_GT(s.squashed_loads, 0u);
    EXPECT_DOUBLE_EQ(s.polluting_loads_pct, 100.0 * static_cast<double>(s.polluting_loads) / static_cast<double>(s.squashed_loads));
    EXPECT_FALSE(s.max_cycles_exceeded);
    EXPECT_EQ(s.invariant_violations, 0u);
    if (m == Mode::Baseline) {
      EXPECT_GT(s.polluting_loads, 0u);
      EXPECT_EQ(s.precache_hits, 0u);
      EXPECT_EQ(s.stc_written + s.stc_aborted + s.stc_noop, 0u);
    } else {
      EXPECT_EQ(s.polluting_loads, 0u);
      EXPECT_GT(s.stc_written, 0u);
    }
  }
  const std::string header = stats_csv_header();
  const std::string row = stats_csv_row(Stats{});
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(row.begin(), row.end(), ','));
}

TEST(Fuzz, SameSeedSameSummary) {
  FuzzOptions o{.seed = 11, .count = 15, .cores = 2};
  auto a = fuzz(o);
  auto b = fuzz(o);
  EXPECT_EQ(a.text(), b.text());
  EXPECT_TRUE(a.ok()) << a.text();
  std::mt19937_64 r1(5), r2(5);
  EXPECT_EQ(generate_fuzz_program(r1, 4), generate_fuzz_program(r2, 4));
}

TEST(Attacks, GadgetsExistAndTakeTheSecret) {
  EXPECT_EQ(attack_names(), (std::vector<std::string>{"meltdown", "spectre", "imeltdown", "ispectre"}));
  for (const auto& n : attack_names()) {
    std::string s = gadget_source(n, 0x53);
    EXPECT_EQ(s.find("{{SECRET}}"), std::string::npos) << n;
    EXPECT_NO_THROW(assemble(s)) << n;
  }
  EXPECT_ANY_THROW(gadget_source("rowhammer", 1));
}
