#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "precache/types.hpp"

namespace precache {

enum class Opcode : std::uint8_t {
  LI,
  MOV,
  ADD,
  SUB,
  SHL,
  LD,
  LDB,
  ST,
  BEQ,
  BNE,
  JI,
  J,
  HALT,
  NOP,
  // Produced by the front end for an unmapped pc; never assembled.
  FetchFault,
};

std::string_view mnemonic(Opcode op);

/// One decoded instruction. Register operands are indices 0..15.
///
/// Operand usage by opcode:
///   LI rd, imm          MOV rd, rs1
///   ADD/SUB/SHL rd, rs1, (rs2 | imm)
///   LD/LD.B rd, [rs1+imm]
///   ST [rs1+imm], rs2
///   BEQ/BNE rs1, rs2, imm(target pc)
///   JI rs1              J imm(target pc)
struct Instruction {
  Opcode op = Opcode::NOP;
  std::uint8_t rd = 0;
  std::uint8_t rs1 = 0;
  std::uint8_t rs2 = 0;
  bool uses_imm = false;
  Word imm = 0;
  Addr pc = 0;

  bool is_load() const { return op == Opcode::LD || op == Opcode::LDB; }
  bool is_store() const { return op == Opcode::ST; }
  bool is_mem() const { return is_load() || is_store(); }
  bool is_cond_branch() const { return op == Opcode::BEQ || op == Opcode::BNE; }
  bool is_control() const { return is_cond_branch() || op == Opcode::JI || op == Opcode::J; }
  bool writes_reg() const;
  unsigned access_size() const { return op == Opcode::LDB ? 1u : 4u; }

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

struct DataSegment {
  Addr base = 0;
  std::vector<std::uint8_t> bytes;

  friend bool operator==(const DataSegment&, const DataSegment&) = default;
};

/// Half-open byte interval [lo, hi).
struct PrivRange {
  Addr lo = 0;
  Addr hi = 0;

  bool contains(Addr a) const { return a >= lo && a < hi; }
  friend bool operator==(const PrivRange&, const PrivRange&) = default;
};

struct Program {
  std::map<Addr, Instruction> instructions;
  std::vector<DataSegment> data_segments;
  std::map<std::string, Addr> labels;
  std::vector<PrivRange> privileged_ranges;
  Addr entry = 0;

  const Instruction* at(Addr pc) const {
    auto it = instructions.find(pc);
    return it == instructions.end() ? nullptr : &it->second;
  }
  bool is_privileged(Addr addr, unsigned size) const;
  // Per-core entry point: label "core<N>" when present, otherwise `entry`.
  Addr entry_for(CoreId core) const;

  friend bool operator==(const Program&, const Program&) = default;
};

class AsmError : public std::runtime_error {
 public:
  AsmError(int line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Assembles `.pasm` text.
///
/// Grammar, one statement per line, `;` starts a comment:
///   label:                       (may precede an instruction on the same line)
///   MNEMONIC operands
///   .data ADDR: b0 b1 ...        byte values, decimal or 0x-hex
///   .priv LO HI                  privileged byte range [LO, HI)
///   .org PC                      place the next instruction at PC
///   .entry LABEL|PC              default entry point (pc 0 otherwise)
///
/// Immediate operands accept decimal, 0x-hex, negative values and label
/// names (resolved to the label's pc).
Program assemble(std::string_view source);

std::string to_string(const Instruction& inst, const Program* labels_from = nullptr);

/// Canonical text form; assemble(disassemble(p)) == p.
std::string disassemble(const Program& program);

}  // namespace precache
