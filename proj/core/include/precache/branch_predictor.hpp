#pragma once

#include <cstdint>
#include <map>
#include <optional>

#include "precache/isa.hpp"

namespace precache {

/// Per-pc 2-bit saturating counters (starting weakly not-taken) plus a
/// branch target buffer for indirect jumps.
class BranchPredictor {
 public:
  struct Prediction {
    bool taken = false;
    Addr target = 0;
  };

  static constexpr std::uint8_t kInitialCounter = 1;

  Prediction predict(const Instruction& inst) const;
  void train(const Instruction& inst, bool taken, Addr target);

  std::uint8_t counter(Addr pc) const;
  std::optional<Addr> btb(Addr pc) const;

 private:
  std::map<Addr, std::uint8_t> counters_;
  std::map<Addr, Addr> btb_;
};

}  // namespace precache
