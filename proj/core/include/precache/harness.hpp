#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "precache/dump.hpp"
#include "precache/simulator.hpp"

namespace precache {

struct RunOutput {
  RunResult result;
  std::optional<CacheDump> dump;  // absent when the run hit max_cycles
  std::vector<StcEvent> stc_log;
};

RunOutput run_program(const SimConfig& cfg, const Program& program);

std::string trace_text(const CommitTrace& trace);
std::string final_state_text(const CoreResult& c);
std::string memory_text(const SparseMemory& m);

/// Writes stats.csv, trace_coreN.txt, state_coreN.txt, memory.txt,
/// dump.txt and checkpoint.json into `dir`. Returns the written paths.
std::vector<std::filesystem::path> write_outputs(const std::filesystem::path& dir, const RunOutput& out);

// ---- attacks ----

inline constexpr Addr kProbeBase = 0x100000;
inline constexpr Addr kStubTablePc = 0x10000;
inline constexpr Addr kPrivilegedAddr = 0x10000;
inline const std::vector<unsigned> kAttackSecrets{0x53, 0x7A};

const std::vector<std::string>& attack_names();
/// Gadget source with the secret substituted.
std::string gadget_source(const std::string& name, unsigned secret);
SimConfig attack_config(Mode mode);

struct AttackRun {
  unsigned secret = 0;
  CacheDump dump;
  bool probe_present = false;       // secret-indexed block anywhere in the dump
  bool privileged_present = false;  // privileged block anywhere in the dump
  bool transient_issued = false;    // the secret-indexed access left the core
  std::uint64_t polluting_loads = 0;
  Cycle cycles = 0;
};

struct AttackReport {
  std::string name;
  Mode mode = Mode::Baseline;
  std::vector<AttackRun> runs;
  bool dumps_differ = false;
  bool inconclusive = false;
  bool secret_observable = false;

  std::string summary() const;
};

AttackReport run_attack(const std::string& name, Mode mode);
AttackReport run_attack(const std::string& name, const SimConfig& cfg);

/// Block that the secret selects: the probe data block, or the stub's code block.
Addr secret_block(const std::string& name, unsigned secret, const MemorySystem& mem);

// ---- equivalence ----

struct EquivalenceReport {
  bool equal = true;
  std::string first_divergence;
};

EquivalenceReport compare_runs(const RunResult& a, const RunResult& b);
/// Golden result: the interpreter per core; the final memory replays every
/// core's stores in core order (programs are expected to be race-free).
RunResult reference_run(const Program& program, unsigned cores);

/// Parses a run directory written by write_outputs back into a comparable form.
RunResult load_run_dir(const std::filesystem::path& dir);

}  // namespace precache
