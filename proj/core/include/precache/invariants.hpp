#pragma once

#include <string>
#include <vector>

#include "precache/memory_system.hpp"

namespace precache {

/// Structural checks over the whole memory system: inclusivity, single
/// writer, directory accuracy, reverse inclusivity of the Pre-cache
/// directories and capacity bounds. Returns one message per violation.
std::vector<std::string> check_hierarchy(const MemorySystem& mem);

}  // namespace precache
