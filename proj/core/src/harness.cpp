#include "precache/harness.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "precache/gadgets.hpp"

namespace precache {

namespace {

std::string hex32(std::uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << std::setw(8) << std::setfill('0') << v;
  return os.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

bool is_instruction_gadget(const std::string& name) { return name == "imeltdown" || name == "ispectre"; }
bool reads_privileged(const std::string& name) { return name == "meltdown" || name == "imeltdown"; }

}  // namespace

RunOutput run_program(const SimConfig& cfg, const Program& program) {
  Simulator sim(cfg, program);
  RunOutput out;
  out.result = sim.run();
  if (sim.done()) out.dump = dump_structures(sim.memory(), sim.now());
  out.stc_log = sim.stc_log();
  return out;
}

std::string trace_text(const CommitTrace& trace) {
  std::ostringstream os;
  // seq is the commit ordinal; the trailing column is the access size.
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const MemAccess& a = trace[i];
    os << i << ' ' << (a.kind == MemAccess::Kind::Load ? "LD" : "ST") << ' ' << hex32(a.addr) << ' '
       << hex32(a.value) << ' ' << a.size << '\n';
  }
  return os.str();
}

std::string final_state_text(const CoreResult& c) {
  std::ostringstream os;
  os << "pc " << hex32(c.pc) << '\n';
  os << "halted " << (c.halted ? 1 : 0) << '\n';
  if (c.fault)
    os << "fault " << to_string(c.fault->kind) << ' ' << hex32(c.fault->pc) << ' ' << hex32(c.fault->addr) << '\n';
  else
    os << "fault none\n";
  for (int r = 0; r < kNumRegs; ++r) os << 'r' << r << ' ' << hex32(c.regs[r]) << '\n';
  return os.str();
}

std::string memory_text(const SparseMemory& m) {
  std::ostringstream os;
  for (const auto& [a, v] : m.bytes()) os << hex32(a) << ' ' << static_cast<unsigned>(v) << '\n';
  return os.str();
}

std::vector<std::filesystem::path> write_outputs(const std::filesystem::path& dir, const RunOutput& out) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& name, const std::string& text) {
    write_file(dir / name, text);
    written.push_back(dir / name);
  };
  put("stats.csv", stats_csv_header() + "\n" + stats_csv_row(out.result.stats) + "\n");
  for (std::size_t c = 0; c < out.result.cores.size(); ++c) {
    put("trace_core" + std::to_string(c) + ".txt", trace_text(out.result.cores[c].trace));
    put("state_core" + std::to_string(c) + ".txt", final_state_text(out.result.cores[c]));
  }
  put("memory.txt", memory_text(out.result.memory));
  std::ostringstream stc;
  for (const StcEvent& e : out.stc_log) {
    stc << e.cycle << " core" << e.core << ' ' << hex32(e.block) << ' ' << to_string(e.outcome);
    for (Seq s : e.seqs) stc << ' ' << s;
    stc << '\n';
  }
  put("stc_log.txt", stc.str());
  if (out.dump) {
    put("dump.txt", out.dump->text());
    put("checkpoint.json", checkpoint_json(*out.dump));
  }
  if (!out.result.violations.empty()) {
    std::ostringstream v;
    for (const auto& s : out.result.violations) v << s << '\n';
    put("violations.txt", v.str());
  }
  return written;
}

// ---- attacks ----

const std::vector<std::string>& attack_names() {
  static const std::vector<std::string> names{"meltdown", "spectre", "imeltdown", "ispectre"};
  return names;
}

std::string gadget_source(const std::string& name, unsigned secret) {
  const auto& g = embedded_gadgets();
  auto it = g.find(name);
  if (it == g.end()) throw std::invalid_argument("unknown gadget '" + name + "'");
  std::string text = it->second;
  const std::string key = "{{SECRET}}";
  for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos))
    text.replace(pos, key.size(), std::to_string(secret));
  return text;
}

SimConfig attack_config(Mode mode) {
  SimConfig cfg;
  cfg.mode = mode;
  cfg.cores = 1;
  cfg.tlb.paging = true;
  cfg.iprecache = true;
  cfg.max_cycles = 2'000'000;
  return cfg;
}

Addr secret_block(const std::string& name, unsigned secret, const MemorySystem& mem) {
  if (is_instruction_gadget(name)) return mem.block(code_byte_address(kStubTablePc + secret * 1024));
  return mem.block(mem.translation(0).physical(kProbeBase + secret * 4096));
}

AttackReport run_attack(const std::string& name, Mode mode) { return run_attack(name, attack_config(mode)); }

AttackReport run_attack(const std::string& name, const SimConfig& cfg) {
  AttackReport rep;
  rep.name = name;
  rep.mode = cfg.mode;
  for (unsigned secret : kAttackSecrets) {
    Program program = assemble(gadget_source(name, secret));
    Simulator sim(cfg, program);
    sim.set_request_logging(true);
    sim.run();
    AttackRun run;
    run.secret = secret;
    run.cycles = sim.now();
    if (!sim.done()) {
      rep.inconclusive = true;
      rep.runs.push_back(run);
      continue;
    }
    run.dump = dump_structures(sim.memory(), sim.now());
    const MemorySystem& mem = sim.memory();
    Addr target = secret_block(name, secret, mem);
    run.probe_present = run.dump.any_contains("", target);
    if (reads_privileged(name))
      run.privileged_present = run.dump.any_contains("", mem.block(mem.translation(0).physical(kPrivilegedAddr)));
    if (is_instruction_gadget(name)) {
      for (const MemRequest& r : sim.request_log())
        if (r.kind == ReqKind::IFetch && mem.block(r.addr) == target) run.transient_issued = true;
    } else {
      Addr probe = kProbeBase + secret * 4096;
      for (const IssuedLoad& l : sim.core(0).issued_loads())
        if (l.squashed && l.addr == probe) run.transient_issued = true;
    }
    run.polluting_loads = sim.stats().polluting_loads;
    if (!run.transient_issued) rep.inconclusive = true;
    rep.runs.push_back(std::move(run));
  }
  rep.dumps_differ = rep.runs.size() == 2 && rep.runs[0].dump != rep.runs[1].dump;
  bool any_probe = std::any_of(rep.runs.begin(), rep.runs.end(), [](const AttackRun& r) { return r.probe_present; });
  rep.secret_observable = !rep.inconclusive && (rep.dumps_differ || any_probe);
  return rep;
}

std::string AttackReport::summary() const {
  std::ostringstream os;
  os << name << ' ' << to_string(mode) << ": ";
  if (inconclusive)
    os << "INCONCLUSIVE (speculation not triggered)";
  else
    os << (secret_observable ? "secret observable" : "secret not observable");
  os << "; dumps " << (dumps_differ ? "differ" : "identical") << " across secrets";
  for (const AttackRun& r : runs)
    os << "; secret " << hex32(r.secret).substr(8) << ": probe " << (r.probe_present ? "present" : "absent")
       << ", privileged " << (r.privileged_present ? "present" : "absent") << ", transient access "
       << (r.transient_issued ? "issued" : "missing") << ", cycles " << r.cycles;
  return os.str();
}

// ---- equivalence ----

EquivalenceReport compare_runs(const RunResult& a, const RunResult& b) {
  EquivalenceReport rep;
  auto fail = [&](std::string s) {
    rep.equal = false;
    rep.first_divergence = std::move(s);
    return rep;
  };
  if (a.cores.size() != b.cores.size()) return fail("core count differs");
  for (std::size_t c = 0; c < a.cores.size(); ++c) {
    const CoreResult& x = a.cores[c];
    const CoreResult& y = b.cores[c];
    std::string core = "core" + std::to_string(c) + ": ";
    std::size_t n = std::min(x.trace.size(), y.trace.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (x.trace[i] != y.trace[i]) {
        auto one = [](const MemAccess& m) {
          return std::string(m.kind == MemAccess::Kind::Load ? "load " : "store ") + hex32(m.addr) + "/" +
                 std::to_string(m.size) + "=" + hex32(m.value);
        };
        return fail(core + "trace entry " + std::to_string(i) + ": " + one(x.trace[i]) + " vs " + one(y.trace[i]));
      }
    }
    if (x.trace.size() != y.trace.size())
      return fail(core + "trace length " + std::to_string(x.trace.size()) + " vs " + std::to_string(y.trace.size()));
    for (int r = 0; r < kNumRegs; ++r)
      if (x.regs[r] != y.regs[r])
        return fail(core + "r" + std::to_string(r) + " " + hex32(x.regs[r]) + " vs " + hex32(y.regs[r]));
    if (x.pc != y.pc) return fail(core + "pc " + hex32(x.pc) + " vs " + hex32(y.pc));
    if (x.halted != y.halted) return fail(core + "halted flag differs");
    if (x.fault != y.fault) return fail(core + "fault record differs");
  }
  if (a.memory != b.memory) {
    const auto& ma = a.memory.bytes();
    const auto& mb = b.memory.bytes();
    auto ia = ma.begin();
    auto ib = mb.begin();
    while (ia != ma.end() && ib != mb.end() && *ia == *ib) ++ia, ++ib;
    Addr at = ia == ma.end() ? ib->first : ib == mb.end() ? ia->first : std::min(ia->first, ib->first);
    return fail("memory byte " + hex32(at) + ": " + std::to_string(a.memory.read8(at)) + " vs " +
                std::to_string(b.memory.read8(at)));
  }
  return rep;
}

RunResult reference_run(const Program& program, unsigned cores) {
  RunResult r;
  SparseMemory initial = initial_memory(program);
  r.memory = initial;
  for (unsigned c = 0; c < cores; ++c) {
    InterpretResult ir = interpret_reference(program, initial, static_cast<CoreId>(c), kDefaultInstructionCap);
    CoreResult cr;
    cr.trace = ir.trace;
    cr.regs = ir.state.regs;
    cr.pc = ir.state.pc;
    cr.halted = ir.state.halted;
    cr.fault = ir.state.fault;
    replay_stores(cr.trace, r.memory);
    r.cores.push_back(std::move(cr));
  }
  return r;
}

RunResult load_run_dir(const std::filesystem::path& dir) {
  RunResult r;
  auto num = [](const std::string& s) { return static_cast<std::uint32_t>(std::stoull(s, nullptr, 0)); };
  for (int c = 0;; ++c) {
    auto tp = dir / ("trace_core" + std::to_string(c) + ".txt");
    auto sp = dir / ("state_core" + std::to_string(c) + ".txt");
    if (!std::filesystem::exists(tp) || !std::filesystem::exists(sp)) break;
    CoreResult cr;
    std::istringstream ts(read_file(tp));
    std::string seq, kind, addr, size, value;
    while (ts >> seq >> kind >> addr >> value >> size)
      cr.trace.push_back({kind == "LD" ? MemAccess::Kind::Load : MemAccess::Kind::Store, num(addr),
                          static_cast<unsigned>(num(size)), num(value)});
    std::istringstream ss(read_file(sp));
    std::string line;
    while (std::getline(ss, line)) {
      std::istringstream ls(line);
      std::string key;
      ls >> key;
      if (key == "pc") {
        ls >> addr;
        cr.pc = num(addr);
      } else if (key == "halted") {
        int h = 0;
        ls >> h;
        cr.halted = h != 0;
      } else if (key == "fault") {
        std::string k;
        ls >> k;
        if (k != "none") {
          FaultRecord f;
          for (auto fk : {FaultKind::Privilege, FaultKind::Unaligned, FaultKind::Unmapped, FaultKind::FetchFault})
            if (k == to_string(fk)) f.kind = fk;
          ls >> addr >> value;
          f.pc = num(addr);
          f.addr = num(value);
          cr.fault = f;
        }
      } else if (key.size() > 1 && key[0] == 'r') {
        ls >> value;
        cr.regs.at(std::stoi(key.substr(1))) = num(value);
      }
    }
    r.cores.push_back(std::move(cr));
  }
  if (r.cores.empty()) throw std::runtime_error(dir.string() + " holds no run output");
  std::istringstream ms(read_file(dir / "memory.txt"));
  std::string a, v;
  while (ms >> a >> v) r.memory.write8(num(a), static_cast<std::uint8_t>(num(v)));
  return r;
}

}  // namespace precache
