#include "precache/simulator.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

#include "precache/invariants.hpp"

namespace precache {

SparseMemory initial_memory(const Program& program) {
  SparseMemory m;
  m.load_segments(program.data_segments);
  return m;
}

Simulator::Simulator(const SimConfig& cfg, const Program& program)
    : cfg_(cfg), program_(&program), mem_(std::make_unique<MemorySystem>(cfg, initial_memory(program))) {
  validate(cfg_);
  mem_->set_fill_logging(cfg_.check_invariants);
  for (unsigned c = 0; c < cfg_.cores; ++c)
    cores_.push_back(std::make_unique<Core>(static_cast<CoreId>(c), cfg_.core, program, *mem_));
}

bool Simulator::done() const {
  for (const auto& c : cores_)
    if (!c->finished()) return false;
  return mem_->drained();
}

void Simulator::step() {
  mem_->tick(now_);
  for (const LoadResponse& r : mem_->take_responses(now_)) cores_[r.core]->deliver(r);
  for (auto& c : cores_) {
    auto reqs = c->tick(now_);
    if (log_requests_) request_log_.insert(request_log_.end(), reqs.begin(), reqs.end());
  }
  for (StcEvent& e : mem_->take_stc_events()) {
    if (e.cycle == 0) e.cycle = now_;
    cores_[e.core]->on_stc_event(e);
    stc_log_.push_back(std::move(e));
  }
  if (cfg_.check_invariants) check_invariants();
  if (hook_) hook_(*this);
  ++now_;
}

void Simulator::check_invariants() {
  if (mem_->version() == checked_version_) return;
  checked_version_ = mem_->version();
  for (auto& v : check_hierarchy(*mem_)) violations_.push_back("cycle " + std::to_string(now_) + ": " + v);
}

RunResult Simulator::run() {
  while (!done() && now_ < cfg_.max_cycles) step();
  return result();
}

Stats Simulator::stats() const {
  Stats s;
  s.cycles = now_;
  MemCounters m;
  for (unsigned ci = 0; ci < cores_.size(); ++ci) {
    auto c = static_cast<CoreId>(ci);
    const auto& k = cores_[ci]->counters();
    s.committed += k.committed;
    s.squashes += k.squashes;
    s.mispredicts += k.mispredicts;
    const MemCounters& mc = mem_->counters(c);
    m.l1d_accesses += mc.l1d_accesses;
    m.l1d_hits += mc.l1d_hits;
    m.l1i_accesses += mc.l1i_accesses;
    m.l1i_hits += mc.l1i_hits;
    m.l2_accesses += mc.l2_accesses;
    m.l2_hits += mc.l2_hits;
    m.l3_accesses += mc.l3_accesses;
    m.l3_hits += mc.l3_hits;
    s.precache_hits += mc.precache_hits;
    s.stc_written += mc.stc_written;
    s.stc_aborted += mc.stc_aborted;
    s.stc_noop += mc.stc_noop;
    s.page_walks += mem_->translation(c).walks();

    const auto& ev = mem_->evicting_seqs(c);
    std::set<Seq> evicting(ev.begin(), ev.end());
    for (const IssuedLoad& l : cores_[ci]->issued_loads()) {
      if (!l.squashed) continue;
      ++s.squashed_loads;
      if (evicting.count(l.seq)) ++s.polluting_loads;
    }
  }
  auto rate = [](std::uint64_t h, std::uint64_t a) { return a ? static_cast<double>(h) / static_cast<double>(a) : 0.0; };
  s.ipc = rate(s.committed, s.cycles);
  s.l1d_hit_rate = rate(m.l1d_hits, m.l1d_accesses);
  s.l1i_hit_rate = rate(m.l1i_hits, m.l1i_accesses);
  s.l2_hit_rate = rate(m.l2_hits, m.l2_accesses);
  s.l3_hit_rate = rate(m.l3_hits, m.l3_accesses);
  s.polluting_loads_pct = 100.0 * rate(s.polluting_loads, s.squashed_loads);
  s.max_cycles_exceeded = !done();
  s.invariant_violations = violations_.size();
  return s;
}

RunResult Simulator::result() const {
  RunResult r;
  r.stats = stats();
  for (const auto& c : cores_) {
    CoreResult cr;
    cr.trace = c->trace();
    cr.regs = c->regs();
    cr.pc = c->pc();
    cr.halted = c->halted();
    cr.fault = c->fault();
    r.cores.push_back(std::move(cr));
  }
  r.memory = mem_->architectural_memory();
  r.violations = violations_;
  return r;
}

std::string stats_csv_header() {
  return "cycles,committed,ipc,l1d_hit_rate,l1i_hit_rate,l2_hit_rate,l3_hit_rate,precache_hits,squashed_loads,"
         "polluting_loads,polluting_loads_pct,stc_written,stc_aborted,stc_noop,squashes,mispredicts,page_walks,"
         "max_cycles_exceeded,invariant_violations";
}

std::string stats_csv_row(const Stats& s) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6);
  os << s.cycles << ',' << s.committed << ',' << s.ipc << ',' << s.l1d_hit_rate << ',' << s.l1i_hit_rate << ','
     << s.l2_hit_rate << ',' << s.l3_hit_rate << ',' << s.precache_hits << ',' << s.squashed_loads << ','
     << s.polluting_loads << ',' << s.polluting_loads_pct << ',' << s.stc_written << ',' << s.stc_aborted << ','
     << s.stc_noop << ',' << s.squashes << ',' << s.mispredicts << ',' << s.page_walks << ','
     << (s.max_cycles_exceeded ? 1 : 0) << ',' << s.invariant_violations;
  return os.str();
}

}  // namespace precache
