#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "precache/isa.hpp"

namespace precache {

/// Byte-addressable memory storing only non-zero bytes, so two images compare
/// equal exactly when their contents do.
class SparseMemory {
 public:
  std::uint8_t read8(Addr a) const {
    auto it = bytes_.find(a);
    return it == bytes_.end() ? 0 : it->second;
  }
  void write8(Addr a, std::uint8_t v) {
    if (v == 0)
      bytes_.erase(a);
    else
      bytes_[a] = v;
  }
  Word read(Addr a, unsigned size) const;
  void write(Addr a, unsigned size, Word v);

  void load_segments(const std::vector<DataSegment>& segments);
  const std::map<Addr, std::uint8_t>& bytes() const { return bytes_; }

  friend bool operator==(const SparseMemory&, const SparseMemory&) = default;

 private:
  std::map<Addr, std::uint8_t> bytes_;
};

struct MemAccess {
  enum class Kind : std::uint8_t { Load, Store };
  Kind kind = Kind::Load;
  Addr addr = 0;
  unsigned size = 4;
  Word value = 0;

  friend bool operator==(const MemAccess&, const MemAccess&) = default;
};

// Index in the vector is the access's position in commit order.
using CommitTrace = std::vector<MemAccess>;

enum class FaultKind : std::uint8_t { None, Privilege, Unaligned, Unmapped, FetchFault };

const char* to_string(FaultKind f);

struct FaultRecord {
  FaultKind kind = FaultKind::None;
  Addr pc = 0;
  Addr addr = 0;

  friend bool operator==(const FaultRecord&, const FaultRecord&) = default;
};

struct ArchState {
  std::array<Word, kNumRegs> regs{};
  SparseMemory memory;
  Addr pc = 0;
  bool halted = false;
  std::optional<FaultRecord> fault;
};

class InterpretError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct InterpretResult {
  CommitTrace trace;
  ArchState state;
  std::uint64_t retired = 0;
};

inline constexpr std::uint64_t kDefaultInstructionCap = 1'000'000;

/// Classifies a data access the way commit does: alignment, mapping, privilege.
FaultKind classify_access(const Program& program, Addr addr, unsigned size);

/// Golden in-order execution of one core's instruction stream.
///
/// Stops at HALT or at the first faulting access; the faulting instruction
/// leaves no trace entry and no state change. Throws InterpretError when the
/// pc leaves the program or the instruction cap is exceeded.
InterpretResult interpret_reference(const Program& program, CoreId core = 0,
                                    std::uint64_t instruction_cap = kDefaultInstructionCap);

/// Same as above but starting from a caller-provided memory image.
InterpretResult interpret_reference(const Program& program, const SparseMemory& initial, CoreId core,
                                    std::uint64_t instruction_cap);

/// Applies the stores of a trace, in order, to `memory`.
void replay_stores(const CommitTrace& trace, SparseMemory& memory);

/// Evaluates an ALU-class instruction.
Word alu_result(const Instruction& inst, Word a, Word b);

/// Next pc of a control instruction given its operand values.
Addr control_target(const Instruction& inst, Word a, Word b);

}  // namespace precache
