#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace precache {

using Addr = std::uint32_t;
using Word = std::uint32_t;
using Seq = std::uint64_t;
using Cycle = std::uint64_t;
using CoreId = int;

inline constexpr int kNumRegs = 16;

// Data lives below this address; instruction blocks are placed above it so
// that code and data never alias in the unified L2/L3.
inline constexpr Addr kCodeBase = 0x8000'0000u;

inline constexpr Addr code_byte_address(Addr pc) { return kCodeBase + pc * 4u; }

inline constexpr Addr block_of(Addr addr, unsigned line_size) {
  return addr & ~static_cast<Addr>(line_size - 1);
}

// Level where a load found its block: 0=L1, 1=L2, 2=L3, 3=memory.
enum class HitLevel : std::uint8_t { L1 = 0, L2 = 1, L3 = 2, Memory = 3 };

inline constexpr int to_int(HitLevel h) { return static_cast<int>(h); }

enum class Mode : std::uint8_t { Baseline, PreCache };

inline const char* to_string(Mode m) { return m == Mode::Baseline ? "baseline" : "precache"; }

// Internal consistency failure of the model itself (never a program error).
class SimulationError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace precache
