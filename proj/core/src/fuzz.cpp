#include "precache/fuzz.hpp"

#include <algorithm>
#include <sstream>

#include "precache/harness.hpp"

namespace precache {

namespace {

constexpr unsigned kPoolBlocks = 64;
constexpr unsigned kReadOnlyFrom = 48;  // blocks 48..63 are never stored to
constexpr Addr kPrivBlock = 0x800;

// Blocks are spread over 8 pages; block b of every page maps to the same sets.
Addr pool_block(unsigned b) { return 0x10000 + (b % 8) * 0x1000 + (b / 8) * 64; }

class Gen {
 public:
  Gen(std::mt19937_64& rng, unsigned cores, unsigned core) : rng_(rng), cores_(cores), core_(core) {}

  std::string body() {
    emit("LI r0, 0");
    for (int r = 1; r <= 12; ++r)
      if (chance(50)) emit("LI r" + std::to_string(r) + ", " + std::to_string(pick(0, 300)));
    unsigned n = pick(20, 60);
    for (unsigned i = 0; i < n; ++i) {
      step_labels();
      unsigned k = pick(0, 99);
      if (k < 22) alu();
      else if (k < 44) load();
      else if (k < 56) store();
      else if (k < 68) branch();
      else if (k < 73) jump_indirect();
      else if (k < 76) jump();
      else if (k < 81) transient_privileged();
      else if (k < 86) loop();
      else alu();
    }
    flush_labels();
    if (chance(10)) {
      emit("LI r14, " + std::to_string(kPrivBlock));
      emit("LD r1, [r14+0]");
    }
    emit("HALT");
    return out_.str();
  }

 private:
  unsigned pick(unsigned lo, unsigned hi) { return std::uniform_int_distribution<unsigned>(lo, hi)(rng_); }
  bool chance(unsigned pct) { return pick(0, 99) < pct; }
  std::string reg() { return "r" + std::to_string(pick(1, 12)); }
  std::string any_reg() { return "r" + std::to_string(pick(0, 12)); }
  void emit(const std::string& s) { out_ << "  " << s << '\n'; }
  std::string label() { return "c" + std::to_string(core_) + "_L" + std::to_string(next_label_++); }

  // A word this core may read: its own or a read-only one.
  Addr readable_word() {
    if (chance(35)) return pool_block(pick(kReadOnlyFrom, kPoolBlocks - 1)) + 4 * pick(0, 15);
    return own_word();
  }
  Addr own_word() {
    unsigned b = pick(0, kReadOnlyFrom - 1);
    unsigned w = pick(0, 15 / cores_) * cores_ + core_;
    return pool_block(b) + 4 * w;
  }

  void alu() {
    switch (pick(0, 4)) {
      case 0: emit("LI " + reg() + ", " + std::to_string(pick(0, 1000))); break;
      case 1: emit("ADD " + reg() + ", " + any_reg() + ", " + any_reg()); break;
      case 2: emit("SUB " + reg() + ", " + any_reg() + ", " + any_reg()); break;
      case 3: emit("SHL " + reg() + ", " + any_reg() + ", " + std::to_string(pick(0, 4))); break;
      default: emit("ADD " + reg() + ", " + any_reg() + ", " + std::to_string(pick(0, 64))); break;
    }
  }
  void load() {
    Addr a = readable_word();
    emit("LI r14, " + std::to_string(a));
    if (chance(25))
      emit("LD.B " + reg() + ", [r14+" + std::to_string(pick(0, 3)) + "]");
    else
      emit("LD " + reg() + ", [r14+0]");
  }
  void store() {
    emit("LI r13, " + std::to_string(own_word()));
    emit("ST [r13+0], " + any_reg());
  }
  void branch() {
    auto l = label();
    emit(std::string(chance(50) ? "BEQ " : "BNE ") + any_reg() + ", " + any_reg() + ", " + l);
    pending_.push_back({l, pick(1, 6)});
  }
  void jump_indirect() {
    auto l = label();
    emit("LI r14, " + l);
    emit("JI r14");
    pending_.push_back({l, pick(0, 3)});
  }
  void jump() {
    auto l = label();
    emit("J " + l);
    pending_.push_back({l, pick(0, 3)});
  }
  // Always-taken branch over a privileged load: only a mispredicted path
  // ever reads it.
  void transient_privileged() {
    auto l = label();
    emit("BEQ r0, r0, " + l);
    emit("LI r14, " + std::to_string(kPrivBlock));
    emit("LD " + reg() + ", [r14+0]");
    pending_.push_back({l, 0});
  }
  void loop() {
    flush_labels();
    auto top = label();
    emit("LI r15, " + std::to_string(pick(2, 12)));
    out_ << top << ":\n";
    unsigned n = pick(2, 6);
    for (unsigned i = 0; i < n; ++i) {
      unsigned k = pick(0, 9);
      if (k < 4) load();
      else if (k < 6) store();
      else alu();
    }
    emit("SUB r15, r15, 1");
    emit("BNE r15, r0, " + top);
  }

  void step_labels() {
    for (auto it = pending_.begin(); it != pending_.end();) {
      if (it->second == 0) {
        out_ << it->first << ":\n";
        it = pending_.erase(it);
      } else {
        --it->second;
        ++it;
      }
    }
  }
  void flush_labels() {
    for (auto& p : pending_) out_ << p.first << ":\n";
    pending_.clear();
  }

  std::mt19937_64& rng_;
  unsigned cores_;
  unsigned core_;
  unsigned next_label_ = 0;
  std::vector<std::pair<std::string, unsigned>> pending_;
  std::ostringstream out_;
};

}  // namespace

std::string generate_fuzz_program(std::mt19937_64& rng, unsigned cores) {
  std::ostringstream os;
  os << ".priv " << kPrivBlock << ' ' << kPrivBlock + 64 << '\n';
  os << ".data " << kPrivBlock << ": 77 1 2 3\n";
  std::uniform_int_distribution<unsigned> byte(0, 255);
  for (unsigned b = 0; b < kPoolBlocks; ++b) {
    if (b < kReadOnlyFrom && rng() % 4 != 0) continue;
    os << ".data " << pool_block(b) << ':';
    for (int i = 0; i < 16; ++i) os << ' ' << byte(rng);
    os << '\n';
  }
  os << ".entry core0\n";
  for (unsigned c = 0; c < cores; ++c) {
    os << "core" << c << ":\n";
    os << Gen(rng, cores, c).body();
  }
  return os.str();
}

SimConfig fuzz_config(Mode mode, unsigned cores) {
  SimConfig cfg;
  cfg.mode = mode;
  cfg.cores = cores;
  cfg.cache.l1 = {1024, 2, 2, 2};
  cfg.cache.l2 = {4096, 4, 6, 2};
  cfg.cache.l3 = {32768, 8, 14, 4};
  cfg.cache.memory_latency = 40;
  cfg.core.exception_delay_cycles = 20;
  cfg.tlb.paging = true;
  cfg.tlb.entries = 4;
  cfg.tlb.walk_latency = 10;
  cfg.iprecache_blocks = 8;
  cfg.max_cycles = 500'000;
  return cfg;
}

std::string FuzzSummary::text() const {
  std::ostringstream os;
  os << "seed=" << seed << " cores=" << cores << " programs=" << programs << " equivalent=" << equivalent
     << " invariant_violations=" << invariant_violations << " transient_fills=" << transient_fills
     << " squashed_loads=" << squashed_loads << " polluting_precache=" << precache_polluting_loads
     << " polluting_baseline=" << baseline_polluting_loads << " committed=" << committed
     << " stc_written=" << stc_written << " stc_aborted=" << stc_aborted << " stc_noop=" << stc_noop;
  return os.str();
}

FuzzSummary fuzz(const FuzzOptions& opt) {
  FuzzSummary s;
  s.seed = opt.seed;
  s.cores = opt.cores;
  std::mt19937_64 rng(opt.seed);
  for (unsigned i = 0; i < opt.count; ++i) {
    std::string source = generate_fuzz_program(rng, opt.cores);
    ++s.programs;
    auto reproduce = [&](const std::string& why) {
      std::ostringstream os;
      os << "program " << i << " (seed " << opt.seed << ", cores " << opt.cores << "): " << why << "\n" << source;
      s.failure = os.str();
    };
    Program program = assemble(source);
    RunResult ref = reference_run(program, opt.cores);

    bool ok = true;
    for (Mode mode : {Mode::Baseline, Mode::PreCache}) {
      SimConfig cfg = fuzz_config(mode, opt.cores);
      cfg.check_invariants = opt.check_invariants;
      Simulator sim(cfg, program);
      RunResult r = sim.run();
      s.committed += r.stats.committed;
      s.invariant_violations += r.violations.size();
      if (mode == Mode::PreCache) {
        s.precache_polluting_loads += r.stats.polluting_loads;
        s.squashed_loads += r.stats.squashed_loads;
        s.stc_written += r.stats.stc_written;
        s.stc_aborted += r.stats.stc_aborted;
        s.stc_noop += r.stats.stc_noop;
        for (const FillEvent& f : sim.memory().fill_log())
          if (f.cause == FillCause::SpeculativeLoad) ++s.transient_fills;
      } else {
        s.baseline_polluting_loads += r.stats.polluting_loads;
      }
      std::string tag = std::string(to_string(mode)) + ": ";
      if (r.stats.max_cycles_exceeded) {
        ok = false;
        if (!s.failure) reproduce(tag + "max cycles exceeded");
        continue;
      }
      if (!r.violations.empty()) {
        ok = false;
        if (!s.failure) reproduce(tag + r.violations.front());
      }
      auto eq = compare_runs(r, ref);
      if (!eq.equal) {
        ok = false;
        if (!s.failure) reproduce(tag + "differs from interpreter: " + eq.first_divergence);
      }
    }
    if (ok) ++s.equivalent;
  }
  if (!s.failure && s.transient_fills) s.failure = "speculative fills reached the caches in precache mode";
  return s;
}

}  // namespace precache
