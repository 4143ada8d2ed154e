#include "precache/branch_predictor.hpp"

namespace precache {

BranchPredictor::Prediction BranchPredictor::predict(const Instruction& inst) const {
  switch (inst.op) {
    case Opcode::BEQ:
    case Opcode::BNE: {
      bool taken = counter(inst.pc) >= 2;
      return {taken, taken ? inst.imm : inst.pc + 1};
    }
    case Opcode::J: return {true, inst.imm};
    case Opcode::JI:
      if (auto t = btb(inst.pc)) return {true, *t};
      return {false, inst.pc + 1};
    default: return {false, inst.pc + 1};
  }
}

void BranchPredictor::train(const Instruction& inst, bool taken, Addr target) {
  if (inst.is_cond_branch()) {
    auto [it, fresh] = counters_.try_emplace(inst.pc, kInitialCounter);
    if (taken && it->second < 3) ++it->second;
    if (!taken && it->second > 0) --it->second;
  } else if (inst.op == Opcode::JI) {
    btb_[inst.pc] = target;
  }
}

std::uint8_t BranchPredictor::counter(Addr pc) const {
  auto it = counters_.find(pc);
  return it == counters_.end() ? kInitialCounter : it->second;
}

std::optional<Addr> BranchPredictor::btb(Addr pc) const {
  auto it = btb_.find(pc);
  if (it == btb_.end()) return std::nullopt;
  return it->second;
}

}  // namespace precache
