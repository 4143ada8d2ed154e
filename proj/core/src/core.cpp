#include "precache/core.hpp"

#include <algorithm>

namespace precache {

namespace {

std::pair<bool, bool> sources(const Instruction& in) {
  switch (in.op) {
    case Opcode::MOV:
    case Opcode::LD:
    case Opcode::LDB:
    case Opcode::JI: return {true, false};
    case Opcode::ADD:
    case Opcode::SUB:
    case Opcode::SHL: return {true, !in.uses_imm};
    case Opcode::ST:
    case Opcode::BEQ:
    case Opcode::BNE: return {true, true};
    default: return {false, false};
  }
}

bool is_guard(const Instruction& in) { return in.is_cond_branch() || in.op == Opcode::JI; }

}  // namespace

Core::Core(CoreId id, const CoreConfig& cfg, const Program& program, MemorySystem& mem)
    : id_(id),
      cfg_(cfg),
      program_(&program),
      mem_(&mem),
      arch_pc_(program.entry_for(id)),
      fetch_pc_(program.entry_for(id)) {}

RobEntry* Core::find(Seq seq) {
  auto it = std::lower_bound(rob_.begin(), rob_.end(), seq, [](const RobEntry& e, Seq s) { return e.seq < s; });
  return it != rob_.end() && it->seq == seq ? &*it : nullptr;
}

std::size_t Core::loads_awaiting_memory() const {
  return static_cast<std::size_t>(
      std::count_if(rob_.begin(), rob_.end(), [](const RobEntry& e) { return e.awaiting_memory; }));
}

std::optional<Word> Core::operand(const RobEntry& e, int idx) const {
  std::uint8_t reg = idx == 0 ? e.inst.rs1 : e.inst.rs2;
  const auto& prod = e.producers[idx];
  if (!prod) return regs_[reg];
  auto it = std::lower_bound(rob_.begin(), rob_.end(), *prod, [](const RobEntry& r, Seq s) { return r.seq < s; });
  if (it == rob_.end() || it->seq != *prod) return regs_[reg];  // producer already committed
  if (it->state != RobEntry::State::Done) return std::nullopt;
  return it->result;
}

std::vector<MemRequest> Core::tick(Cycle now) {
  std::vector<MemRequest> out;
  if (finished()) return out;
  commit(now, out);
  auto flush_squash = [&] {
    out.insert(out.end(), squash_requests_.begin(), squash_requests_.end());
    squash_requests_.clear();
  };
  if (finished()) {
    flush_squash();
    return out;
  }
  writeback(now);
  issue(now, out);
  dispatch(now);
  flush_squash();
  fetch(now, out);
  return out;
}

void Core::deliver(const LoadResponse& r) {
  RobEntry* e = find(r.seq);
  if (!e || !e->awaiting_memory) return;
  e->awaiting_memory = false;
  e->result = r.value;
  e->state = RobEntry::State::Done;
  e->done_at = r.ready;
}

void Core::on_stc_event(const StcEvent& e) {
  if (e.core != id_) return;
  if (e.outcome == StcOutcome::Noop) return;
  for (Seq s : e.seqs) held_slots_.erase(s);
}

// ---------------------------------------------------------------- commit

void Core::commit(Cycle now, std::vector<MemRequest>& out) {
  Addr last_block = 0;
  bool have_last = false;
  for (unsigned n = 0; n < cfg_.commit_width && !rob_.empty(); ++n) {
    RobEntry& h = rob_.front();
    if (h.state != RobEntry::State::Done || h.done_at > now) return;

    if (h.fault != FaultKind::None) {
      if (h.exception_at == 0) h.exception_at = now + cfg_.exception_delay_cycles;
      if (now < h.exception_at) return;
      fault_ = FaultRecord{h.fault, h.inst.pc, h.addr};
      arch_pc_ = h.inst.pc;
      squash(h.seq, std::nullopt, now);
      return;
    }

    const Instruction& in = h.inst;
    if (in.is_store()) {
      if (!h.store_started) {
        h.store_started = true;
        h.store_done = mem_->store_commit_access(id_, h.addr, h.store_value, now);
        out.push_back({ReqKind::StoreCommit, id_, h.addr, h.seq, h.store_value, 4, now});
      }
      if (now < h.store_done) return;
      trace_.push_back({MemAccess::Kind::Store, h.addr, 4, h.store_value});
      --stores_in_rob_;
    } else if (in.is_load()) {
      regs_[in.rd] = h.result;
      trace_.push_back({MemAccess::Kind::Load, h.addr, in.access_size(), h.result});
      --loads_in_rob_;
      // Forwarded loads never reached the memory system.
      if (!h.forwarded) {
        Addr blk = mem_->block(h.addr);
        bool coalesced = have_last && blk == last_block;
        if (mem_->commit_load(id_, h.addr, h.seq, now)) held_slots_.insert(h.seq);
        if (!coalesced && mem_->mode() == Mode::PreCache)
          out.push_back({ReqKind::STC, id_, blk, h.seq, 0, 0, now});
        last_block = blk;
        have_last = true;
      }
    } else if (in.writes_reg()) {
      regs_[in.rd] = h.result;
    }
    if (is_guard(in)) mem_->on_guard_commit(id_, h.seq);

    ++counters_.committed;
    arch_pc_ = in.op == Opcode::HALT ? in.pc : (in.is_control() ? h.actual_target : in.pc + 1);
    if (in.op == Opcode::HALT) {
      halted_ = true;
      rob_.pop_front();
      return;
    }
    for (auto& r : rename_)
      if (r && *r == h.seq) r.reset();
    rob_.pop_front();
  }
}

// ---------------------------------------------------------------- writeback

void Core::writeback(Cycle now) {
  for (auto& e : rob_) {
    if (e.state != RobEntry::State::Executing || e.awaiting_memory || e.done_at > now) continue;
    e.state = RobEntry::State::Done;
  }
  // Resolve the oldest finished control instruction that mispredicted; one
  // squash per cycle, younger resolutions wait.
  for (std::size_t i = 0; i < rob_.size(); ++i) {
    RobEntry& e = rob_[i];
    if (!e.inst.is_control() || e.state != RobEntry::State::Done || e.done_at != now) continue;
    if (resolve_branch(e.seq, e.actual_target, now)) return;
  }
}

std::optional<SquashEvent> Core::resolve_branch(Seq seq, Addr actual_target, Cycle now) {
  RobEntry* e = find(seq);
  if (!e) throw SimulationError("resolve_branch: unknown rob seq");
  bool taken = e->inst.is_cond_branch() ? e->actual_taken : true;
  bp_.train(e->inst, taken, actual_target);
  if (e->pred_target == actual_target) return std::nullopt;
  ++counters_.mispredicts;
  SquashEvent ev{seq + 1, actual_target};
  squash(ev.from_seq, ev.redirect, now);
  return ev;
}

// ---------------------------------------------------------------- issue

bool Core::try_issue_load(RobEntry& e, Cycle now, std::vector<MemRequest>& out) {
  const Addr word = e.addr & ~3u;
  const RobEntry* fwd = nullptr;
  for (const auto& o : rob_) {
    if (o.seq >= e.seq) break;
    if (!o.inst.is_store()) continue;
    if (!o.addr_known) return false;
    if ((o.addr & ~3u) == word) fwd = &o;
  }
  if (fwd) {
    Word v = fwd->store_value;
    if (e.inst.op == Opcode::LDB) v = (v >> (8 * (e.addr & 3u))) & 0xFFu;
    e.result = v;
    e.state = RobEntry::State::Executing;
    e.done_at = now + 1;
    e.forwarded = true;
    ++counters_.forwarded_loads;
    return true;
  }
  e.state = RobEntry::State::Executing;
  e.awaiting_memory = true;
  e.load_log_index = load_log_.size();
  load_log_.push_back({e.seq, e.addr, false});
  ++counters_.loads_issued;
  mem_->enqueue_load(id_, e.addr, e.inst.access_size(), e.seq, now);
  out.push_back({ReqKind::Load, id_, e.addr, e.seq, 0, e.inst.access_size(), now});
  return true;
}

void Core::issue(Cycle now, std::vector<MemRequest>& out) {
  unsigned issued = 0;
  for (auto& e : rob_) {
    if (issued >= cfg_.issue_width) break;
    if (e.state != RobEntry::State::Waiting) continue;
    auto [use1, use2] = sources(e.inst);
    std::optional<Word> a = use1 ? operand(e, 0) : Word{0};
    std::optional<Word> b = use2 ? operand(e, 1) : Word{0};
    if (!a || !b) continue;
    const Instruction& in = e.inst;
    switch (in.op) {
      case Opcode::LD:
      case Opcode::LDB: {
        e.addr = *a + in.imm;
        e.fault = classify_access(*program_, e.addr, in.access_size());
        if (e.fault == FaultKind::Privilege) {
          // The privilege check is deferred to commit; the access itself
          // proceeds like any other load.
          if (!try_issue_load(e, now, out)) continue;
        } else if (e.fault != FaultKind::None) {
          e.state = RobEntry::State::Executing;
          e.done_at = now + 1;
        } else if (!try_issue_load(e, now, out)) {
          continue;
        }
        break;
      }
      case Opcode::ST:
        e.addr = *a + in.imm;
        e.store_value = *b;
        e.addr_known = true;
        e.fault = classify_access(*program_, e.addr, 4);
        e.state = RobEntry::State::Executing;
        e.done_at = now + 1;
        break;
      case Opcode::BEQ:
      case Opcode::BNE:
      case Opcode::JI:
      case Opcode::J:
        e.actual_target = control_target(in, *a, *b);
        e.actual_taken = in.is_cond_branch() ? ((in.op == Opcode::BEQ) == (*a == *b)) : true;
        e.state = RobEntry::State::Executing;
        e.done_at = now + 1;
        break;
      case Opcode::FetchFault:
        e.fault = FaultKind::FetchFault;
        e.state = RobEntry::State::Executing;
        e.done_at = now + 1;
        break;
      default:
        e.result = alu_result(in, *a, *b);
        e.state = RobEntry::State::Executing;
        e.done_at = now + 1;
        break;
    }
    ++issued;
  }
}

// ---------------------------------------------------------------- front end

void Core::dispatch(Cycle now) {
  for (unsigned n = 0; n < cfg_.fetch_width && !fetch_queue_.empty(); ++n) {
    const FetchEntry& f = fetch_queue_.front();
    if (f.ready > now || rob_.size() >= cfg_.rob_entries) return;
    if (f.inst.is_load() && load_queue_used() >= cfg_.load_queue_entries) return;
    if (f.inst.is_store() && stores_in_rob_ >= cfg_.store_queue_entries) return;
    RobEntry e;
    e.seq = f.seq;
    e.inst = f.inst;
    e.pred_taken = f.pred_taken;
    e.pred_target = f.pred_target;
    auto [use1, use2] = sources(f.inst);
    if (use1) e.producers[0] = rename_[f.inst.rs1];
    if (use2) e.producers[1] = rename_[f.inst.rs2];
    if (f.inst.writes_reg()) rename_[f.inst.rd] = f.seq;
    if (f.inst.is_load()) ++loads_in_rob_;
    if (f.inst.is_store()) ++stores_in_rob_;
    rob_.push_back(e);
    fetch_queue_.pop_front();
  }
}

void Core::fetch(Cycle now, std::vector<MemRequest>& out) {
  if (fetch_blocked_ || now < fetch_stall_until_) return;
  for (unsigned n = 0; n < cfg_.fetch_width; ++n) {
    if (fetch_queue_.size() >= cfg_.fetch_queue_entries) return;
    const Instruction* in = program_->at(fetch_pc_);
    if (!in) {
      Instruction bad;
      bad.op = Opcode::FetchFault;
      bad.pc = fetch_pc_;
      fetch_queue_.push_back({next_seq_++, bad, now + 1, false, fetch_pc_ + 1});
      fetch_blocked_ = true;
      return;
    }
    Addr blk = mem_->block(code_byte_address(fetch_pc_));
    if (!fetch_block_ || *fetch_block_ != blk) {
      auto ready = mem_->ifetch(id_, fetch_pc_, now);
      if (!ready) return;
      out.push_back({ReqKind::IFetch, id_, blk, next_seq_, 0, 0, now});
      fetch_block_ = blk;
      if (*ready > now) {
        fetch_stall_until_ = *ready;
        return;
      }
    }
    FetchEntry f{next_seq_++, *in, now + 1, false, fetch_pc_ + 1};
    if (in->is_control()) {
      auto p = bp_.predict(*in);
      f.pred_taken = p.taken;
      f.pred_target = p.target;
    }
    if (is_guard(*in)) mem_->on_guard_decoded(id_, f.seq);
    fetch_queue_.push_back(f);
    if (in->op == Opcode::HALT) {
      fetch_blocked_ = true;
      return;
    }
    fetch_pc_ = f.pred_target;
    if (f.pred_taken) return;
  }
}

void Core::squash(Seq from_seq, std::optional<Addr> redirect, Cycle now) {
  while (!rob_.empty() && rob_.back().seq >= from_seq) {
    RobEntry& e = rob_.back();
    if (e.inst.is_load()) {
      --loads_in_rob_;
      if (e.state != RobEntry::State::Waiting && load_log_.size() > e.load_log_index &&
          load_log_[e.load_log_index].seq == e.seq)
        load_log_[e.load_log_index].squashed = true;
    }
    if (e.inst.is_store()) --stores_in_rob_;
    rob_.pop_back();
  }
  while (!fetch_queue_.empty() && fetch_queue_.back().seq >= from_seq) fetch_queue_.pop_back();
  mem_->enqueue_clear(id_, from_seq, now);
  mem_->ipc_clear(id_, from_seq);
  mem_->pre_tlb_clear(id_);
  if (mem_->mode() == Mode::PreCache)
    for (Word target : {0u, 1u, 2u})
      squash_requests_.push_back({ReqKind::PreCacheClear, id_, 0, from_seq, target, 0, now});
  ++counters_.squashes;
  if (redirect) {
    fetch_pc_ = *redirect;
    fetch_blocked_ = false;
  } else {
    fetch_blocked_ = true;
  }
  fetch_stall_until_ = 0;
  fetch_block_.reset();
  rebuild_rename();
}

void Core::rebuild_rename() {
  rename_.fill(std::nullopt);
  for (const auto& e : rob_)
    if (e.inst.writes_reg()) rename_[e.inst.rd] = e.seq;
}

}  // namespace precache
