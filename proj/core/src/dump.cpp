#include "precache/dump.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace precache {

std::string hex_addr(Addr a) {
  std::ostringstream os;
  os << "0x" << std::hex << std::setw(8) << std::setfill('0') << a;
  return os.str();
}

namespace {

std::string core_section(const char* name, CoreId c) { return std::string(name) + " core" + std::to_string(c); }

void add_array(CacheDump& d, const std::string& name, const CacheArray& a) {
  auto& out = d.sections[name];
  for (const CacheLine* l : a.lines()) out.push_back(hex_addr(l->block) + " " + mesi_char(l->state));
}

Addr leading_addr(const std::string& line) {
  auto end = line.find(' ');
  return std::stoull(line.substr(0, end), nullptr, 16);
}

}  // namespace

CacheDump dump_structures(const MemorySystem& mem, Cycle now) {
  if (!mem.drained()) throw std::logic_error("cache dump requested while memory accesses are in flight");
  CacheDump d;
  d.cycle = now;
  for (CoreId c = 0; c < static_cast<CoreId>(mem.cores()); ++c) {
    add_array(d, core_section("L1I", c), mem.l1i(c));
    add_array(d, core_section("L1D", c), mem.l1d(c));
    add_array(d, core_section("L2", c), mem.l2(c));
    if (const CacheArray* v = mem.victim(c)) add_array(d, core_section("VICTIM", c), *v);

    auto& pc = d.sections[core_section("PRECACHE", c)];
    for (const auto& [b, e] : mem.precache(c).entries())
      pc.push_back(hex_addr(b) + " " + std::to_string(to_int(e.hit_level)) + " " + (e.stc_locked ? "1" : "0"));

    auto& ipc = d.sections[core_section("IPRECACHE", c)];
    std::vector<Addr> iblocks(mem.iprecache(c).blocks().begin(), mem.iprecache(c).blocks().end());
    std::sort(iblocks.begin(), iblocks.end());
    for (Addr b : iblocks) ipc.push_back(hex_addr(b));

    auto& tlb = d.sections[core_section("TLB", c)];
    for (const auto& [vpn, pfn] : mem.translation(c).tlb().contents()) tlb.push_back(hex_addr(vpn) + " " + hex_addr(pfn));
    auto& pre = d.sections[core_section("PRETLB", c)];
    for (const auto& [vpn, e] : mem.translation(c).pre_tlb().contents())
      pre.push_back(hex_addr(vpn) + " " + hex_addr(e.pfn));
  }
  auto& l3 = d.sections["L3"];
  for (const CacheLine* l : mem.l3().lines()) l3.push_back(hex_addr(l->block) + " " + (l->dirty ? 'M' : 'E'));
  return d;
}

std::string CacheDump::text() const {
  std::ostringstream os;
  for (const auto& [name, lines] : sections) {
    os << '[' << name << "]\n";
    for (const auto& l : lines) os << l << '\n';
  }
  return os.str();
}

CacheDump CacheDump::parse(const std::string& text) {
  CacheDump d;
  std::istringstream is(text);
  std::string line;
  std::vector<std::string>* cur = nullptr;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      cur = &d.sections[line.substr(1, line.size() - 2)];
    } else {
      if (!cur) throw std::runtime_error("cache dump line outside a section: " + line);
      cur->push_back(line);
    }
  }
  return d;
}

bool CacheDump::contains(const std::string& section, Addr block) const {
  auto it = sections.find(section);
  if (it == sections.end()) return false;
  return std::any_of(it->second.begin(), it->second.end(),
                     [&](const std::string& l) { return leading_addr(l) == block; });
}

bool CacheDump::any_contains(const std::string& prefix, Addr block) const {
  for (const auto& [name, _] : sections)
    if (name.rfind(prefix, 0) == 0 && contains(name, block)) return true;
  return false;
}

CacheDump CacheDump::only(const std::vector<std::string>& prefixes) const {
  CacheDump d;
  d.drained = drained;
  d.cycle = cycle;
  for (const auto& [name, lines] : sections)
    for (const auto& p : prefixes)
      if (name.rfind(p, 0) == 0) {
        d.sections[name] = lines;
        break;
      }
  return d;
}

std::string checkpoint_json(const CacheDump& d) {
  nlohmann::ordered_json j;
  j["format"] = "precache-checkpoint-1";
  j["drained"] = d.drained;
  j["cycle"] = d.cycle;
  j["sections"] = nlohmann::ordered_json::object();
  for (const auto& [name, lines] : d.sections) j["sections"][name] = lines;
  return j.dump(2) + "\n";
}

CacheDump checkpoint_from_json(const std::string& json) {
  auto j = nlohmann::json::parse(json);
  if (j.value("format", "") != "precache-checkpoint-1") throw std::runtime_error("not a checkpoint file");
  CacheDump d;
  d.drained = j.at("drained").get<bool>();
  if (!d.drained) throw std::runtime_error("checkpoint was taken before the memory system drained");
  d.cycle = j.at("cycle").get<Cycle>();
  for (const auto& [name, lines] : j.at("sections").items()) d.sections[name] = lines.get<std::vector<std::string>>();
  return d;
}

}  // namespace precache
