#pragma once

#include <map>
#include <string>

namespace precache {

/// Attack gadget sources by name, with a {{SECRET}} placeholder.
const std::map<std::string, std::string>& embedded_gadgets();

}  // namespace precache
