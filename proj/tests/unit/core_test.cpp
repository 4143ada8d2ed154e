#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"

using namespace precache;
using testutil::config;

TEST(Predictor, TwoBitCounterAndBtb) {
  Program p = assemble("top: BEQ r0, r0, top\n LI r1, top\n JI r1\n HALT\n");
  BranchPredictor bp;
  const Instruction& br = *p.at(0);
  EXPECT_EQ(bp.counter(0), BranchPredictor::kInitialCounter);
  EXPECT_FALSE(bp.predict(br).taken);
  bp.train(br, true, 0);
  EXPECT_TRUE(bp.predict(br).taken);
  EXPECT_EQ(bp.predict(br).target, 0u);
  bp.train(br, true, 0);
  bp.train(br, true, 0);
  EXPECT_EQ(bp.counter(0), 3);
  bp.train(br, false, 1);
  EXPECT_TRUE(bp.predict(br).taken);
  bp.train(br, false, 1);
  EXPECT_FALSE(bp.predict(br).taken);

  const Instruction& ji = *p.at(2);
  EXPECT_FALSE(bp.btb(2));
  EXPECT_EQ(bp.predict(ji).target, 3u);  // falls through when unknown
  bp.train(ji, true, 0);
  EXPECT_EQ(bp.btb(2), 0u);
  EXPECT_EQ(bp.predict(ji).target, 0u);
}

TEST(CoreModel, FirstTickRequestsOneFetchBlock) {
  Program p = assemble("NOP\nNOP\nNOP\nHALT\n");
  SimConfig cfg = config(Mode::PreCache);
  MemorySystem mem(cfg, initial_memory(p));
  Core core(0, cfg.core, p, mem);
  auto reqs = core.tick(0);
  ASSERT_EQ(reqs.size(), 1u);
  EXPECT_EQ(reqs[0].kind, ReqKind::IFetch);
  EXPECT_EQ(reqs[0].addr, code_byte_address(0));
}

TEST(CoreModel, YoungerLoadIssuesBeforeOlderOneCompletes) {
  Program p = assemble("LD r1, [r0+0x1000]\nLD r2, [r0+0x2000]\nHALT\n");
  Simulator sim(config(Mode::PreCache), p);
  while (sim.core(0).issued_loads().size() < 2 && !sim.done()) sim.step();
  ASSERT_EQ(sim.core(0).issued_loads().size(), 2u);
  EXPECT_TRUE(sim.core(0).trace().empty());
  EXPECT_EQ(sim.core(0).loads_awaiting_memory(), 2u);
  sim.run();
  EXPECT_EQ(sim.core(0).trace().size(), 2u);
}

TEST(CoreModel, LoadQueueNeverExceedsItsSize) {
  // Second pass runs from a warm instruction cache against cold data.
  std::string src = "LI r6, 2\ntop:\n";
  for (int i = 0; i < 33; ++i) src += "LD r1, [r5+" + std::to_string(0x1000 + i * 64) + "]\n";
  src += "LI r7, 0x10000\nADD r5, r5, r7\nSUB r6, r6, 1\nBNE r6, r0, top\nHALT\n";
  Program p = assemble(src);
  for (Mode m : {Mode::Baseline, Mode::PreCache}) {
    Simulator sim(config(m), p);
    std::size_t peak = 0;
    while (!sim.done()) {
      sim.step();
      peak = std::max(peak, sim.core(0).load_queue_used());
      ASSERT_LE(sim.core(0).load_queue_used(), 32u);
    }
    EXPECT_EQ(peak, 32u);
    EXPECT_EQ(sim.core(0).trace().size(), 66u);
  }
}

TEST(CoreModel, PrivilegedLoadFaultsWithoutArchitecturalEffect) {
  Program p = assemble(".priv 0x10000 0x10040\n.data 0x10000: 0x53\nLI r9, 0x10000\nLD r2, [r9+0]\nLI r3, 1\nHALT\n");
  for (Mode m : {Mode::Baseline, Mode::PreCache}) {
    auto r = run_program(config(m), p).result;
    ASSERT_TRUE(r.cores[0].fault);
    EXPECT_EQ(r.cores[0].fault->kind, FaultKind::Privilege);
    EXPECT_EQ(r.cores[0].fault->pc, 1u);
    EXPECT_EQ(r.cores[0].regs[2], 0u);
    EXPECT_EQ(r.cores[0].regs[3], 0u);
    EXPECT_TRUE(r.cores[0].trace.empty());
    EXPECT_TRUE(compare_runs(r, reference_run(p, 1)).equal);
  }
}

TEST(CoreModel, SameBlockLoadsShareOneTransfer) {
  Program p = assemble(".data 0x1000: 1 0 0 0 2\nLD r1, [r0+0x1000]\nLD r2, [r0+0x1004]\nHALT\n");
  Simulator sim(config(Mode::PreCache), p);
  auto r = sim.run();
  ASSERT_EQ(sim.stc_log().size(), 1u);
  EXPECT_EQ(sim.stc_log()[0].outcome, StcOutcome::Written);
  EXPECT_EQ(sim.stc_log()[0].seqs.size(), 2u);
  EXPECT_EQ(r.cores[0].regs[2], 2u);
}

TEST(CoreModel, SquashReportsThreeClears) {
  // The first branch is mispredicted (counter starts not-taken).
  Program p = assemble("LD r1, [r0+0x1000]\nBEQ r1, r0, skip\nLD r2, [r0+0x2000]\nskip: HALT\n");
  for (Mode m : {Mode::Baseline, Mode::PreCache}) {
    Simulator sim(config(m), p);
    sim.set_request_logging(true);
    sim.run();
    std::vector<Word> payloads;
    for (const auto& r : sim.request_log())
      if (r.kind == ReqKind::PreCacheClear) payloads.push_back(r.payload);
    ASSERT_GE(sim.core(0).counters().squashes, 1u);
    if (m == Mode::Baseline) {
      EXPECT_TRUE(payloads.empty());
    } else {
      ASSERT_EQ(payloads.size(), 3 * sim.core(0).counters().squashes);
      EXPECT_EQ(std::vector<Word>(payloads.begin(), payloads.begin() + 3), (std::vector<Word>{0, 1, 2}));
    }
  }
}

TEST(CoreModel, SpectreLoopTrainsTheExitBranchTaken) {
  Program p = assemble(gadget_source("spectre", 0x53));
  Simulator sim(attack_config(Mode::Baseline), p);
  auto r = sim.run();
  EXPECT_TRUE(r.cores[0].halted);
  EXPECT_GE(r.stats.mispredicts, 1u);
  EXPECT_GE(r.stats.squashed_loads, 1u);
}

TEST(CoreModel, ForwardedLoadSeesTheStore) {
  Program p = assemble("LI r1, 9\nST [r0+0x1000], r1\nLD r2, [r0+0x1000]\nHALT\n");
  for (Mode m : {Mode::Baseline, Mode::PreCache}) {
    auto r = run_program(config(m), p).result;
    EXPECT_EQ(r.cores[0].regs[2], 9u);
    EXPECT_TRUE(compare_runs(r, reference_run(p, 1)).equal);
  }
}

TEST(CoreModel, RandomProgramsMatchTheInterpreter) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 40; ++i) {
    unsigned cores = 1u << (i % 3);
    Program p = assemble(generate_fuzz_program(rng, cores));
    auto ref = reference_run(p, cores);
    for (Mode m : {Mode::Baseline, Mode::PreCache}) {
      auto out = run_program(fuzz_config(m, cores), p);
      auto eq = compare_runs(out.result, ref);
      ASSERT_TRUE(eq.equal) << "program " << i << ": " << eq.first_divergence;
      ASSERT_TRUE(out.result.violations.empty());
    }
  }
}
