#include "precache/interpreter.hpp"

namespace precache {

Word SparseMemory::read(Addr a, unsigned size) const {
  Word v = 0;
  for (unsigned i = 0; i < size; ++i) v |= static_cast<Word>(read8(a + i)) << (8 * i);
  return v;
}

void SparseMemory::write(Addr a, unsigned size, Word v) {
  for (unsigned i = 0; i < size; ++i) write8(a + i, static_cast<std::uint8_t>(v >> (8 * i)));
}

void SparseMemory::load_segments(const std::vector<DataSegment>& segments) {
  for (const auto& seg : segments)
    for (std::size_t i = 0; i < seg.bytes.size(); ++i) write8(seg.base + static_cast<Addr>(i), seg.bytes[i]);
}

const char* to_string(FaultKind f) {
  switch (f) {
    case FaultKind::None: return "none";
    case FaultKind::Privilege: return "privilege";
    case FaultKind::Unaligned: return "unaligned";
    case FaultKind::Unmapped: return "unmapped";
    case FaultKind::FetchFault: return "fetch";
  }
  return "?";
}

FaultKind classify_access(const Program& program, Addr addr, unsigned size) {
  if (size == 4 && (addr & 3u) != 0) return FaultKind::Unaligned;
  if (std::uint64_t{addr} + size > kCodeBase) return FaultKind::Unmapped;
  if (program.is_privileged(addr, size)) return FaultKind::Privilege;
  return FaultKind::None;
}

Word alu_result(const Instruction& in, Word a, Word b) {
  Word rhs = in.uses_imm ? in.imm : b;
  switch (in.op) {
    case Opcode::LI: return in.imm;
    case Opcode::MOV: return a;
    case Opcode::ADD: return a + rhs;
    case Opcode::SUB: return a - rhs;
    case Opcode::SHL: return rhs >= 32 ? 0 : a << rhs;
    default: return 0;
  }
}

Addr control_target(const Instruction& in, Word a, Word b) {
  switch (in.op) {
    case Opcode::BEQ: return a == b ? in.imm : in.pc + 1;
    case Opcode::BNE: return a != b ? in.imm : in.pc + 1;
    case Opcode::J: return in.imm;
    case Opcode::JI: return a;
    default: return in.pc + 1;
  }
}

InterpretResult interpret_reference(const Program& program, CoreId core, std::uint64_t cap) {
  SparseMemory mem;
  mem.load_segments(program.data_segments);
  return interpret_reference(program, mem, core, cap);
}

InterpretResult interpret_reference(const Program& program, const SparseMemory& initial, CoreId core,
                                    std::uint64_t cap) {
  InterpretResult out;
  ArchState& st = out.state;
  st.memory = initial;
  st.pc = program.entry_for(core);

  while (!st.halted && !st.fault) {
    if (out.retired >= cap) throw InterpretError("instruction cap exceeded (likely infinite loop)");
    const Instruction* in = program.at(st.pc);
    if (!in) throw InterpretError("instruction fetch from unmapped pc " + std::to_string(st.pc));

    Word a = st.regs[in->rs1];
    Word b = st.regs[in->rs2];
    Addr next = st.pc + 1;
    switch (in->op) {
      case Opcode::LI:
      case Opcode::MOV:
      case Opcode::ADD:
      case Opcode::SUB:
      case Opcode::SHL:
        st.regs[in->rd] = alu_result(*in, a, b);
        break;
      case Opcode::LD:
      case Opcode::LDB:
      case Opcode::ST: {
        Addr addr = a + in->imm;
        unsigned size = in->access_size();
        if (auto f = classify_access(program, addr, size); f != FaultKind::None) {
          st.fault = FaultRecord{f, st.pc, addr};
          continue;
        }
        if (in->is_load()) {
          Word v = st.memory.read(addr, size);
          st.regs[in->rd] = v;
          out.trace.push_back({MemAccess::Kind::Load, addr, size, v});
        } else {
          st.memory.write(addr, size, b);
          out.trace.push_back({MemAccess::Kind::Store, addr, size, b});
        }
        break;
      }
      case Opcode::BEQ:
      case Opcode::BNE:
      case Opcode::J:
      case Opcode::JI:
        next = control_target(*in, a, b);
        break;
      case Opcode::HALT:
        st.halted = true;
        next = st.pc;
        break;
      case Opcode::NOP:
        break;
      case Opcode::FetchFault:
        st.fault = FaultRecord{FaultKind::FetchFault, st.pc, 0};
        continue;
    }
    ++out.retired;
    st.pc = next;
  }
  return out;
}

void replay_stores(const CommitTrace& trace, SparseMemory& memory) {
  for (const auto& acc : trace)
    if (acc.kind == MemAccess::Kind::Store) memory.write(acc.addr, acc.size, acc.value);
}

}  // namespace precache
