#include "precache/invariants.hpp"

#include <sstream>

namespace precache {

namespace {

std::string hex(std::uint64_t a) {
  std::ostringstream os;
  os << "0x" << std::hex << a;
  return os.str();
}

template <typename... Args>
std::string msg(const Args&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

}  // namespace

std::vector<std::string> check_hierarchy(const MemorySystem& mem) {
  std::vector<std::string> out;
  const unsigned cores = mem.cores();

  for (unsigned ci = 0; ci < cores; ++ci) {
    auto c = static_cast<CoreId>(ci);
    const CacheArray& l2 = mem.l2(c);
    auto upper = [&](const CacheArray& a, const char* name) {
      for (const CacheLine* l : a.lines()) {
        const CacheLine* below = l2.find(l->block);
        if (!below) {
          out.push_back(msg("inclusivity: core", c, " ", name, " block ", hex(l->block), " missing from L2"));
        } else if (l->state != below->state && !(l->state == Mesi::M && below->state == Mesi::E)) {
          out.push_back(msg("state: core", c, " ", name, " block ", hex(l->block), " is ", mesi_char(l->state), " but L2 is ", mesi_char(below->state)));
        }
      }
    };
    upper(mem.l1i(c), "L1I");
    upper(mem.l1d(c), "L1D");
    if (const CacheArray* v = mem.victim(c)) upper(*v, "VICTIM");
    for (const CacheLine* l : l2.lines()) {
      if (!mem.l3().contains(l->block))
        out.push_back(msg("inclusivity: core", c, " L2 block ", hex(l->block), " missing from L3"));
      if (l->dirty) out.push_back(msg("dirty flag on private line ", hex(l->block)));
    }

    // Reverse inclusivity of the Pre-cache directories.
    const PreCache& pc = mem.precache(c);
    if (pc.size() > pc.capacity()) out.push_back(msg("capacity: core", c, " pre-cache holds ", pc.size()));
    for (const auto& [b, e] : pc.entries()) {
      if (!mem.l2_directory(c).contains(b, c))
        out.push_back(msg("reverse inclusivity: core", c, " entry ", hex(b), " lacks L2 record"));
      if (e.hit_level != HitLevel::L2 && !mem.l3_directory().contains(b, c))
        out.push_back(msg("reverse inclusivity: core", c, " entry ", hex(b), " lacks L3 record"));
      if (mem.l1d(c).contains(b) && !e.stc_locked)
        out.push_back(msg("pre-cache entry ", hex(b), " duplicated in core", c, " L1D"));
    }
    for (const auto& [b, owner] : mem.l2_directory(c).records())
      if (owner != c || !pc.lookup(b))
        out.push_back(msg("stale L2 pre-cache record core", c, " ", hex(b)));
    const IPreCache& ipc = mem.iprecache(c);
    if (ipc.size() > ipc.capacity()) out.push_back(msg("capacity: core", c, " iprecache holds ", ipc.size()));
    unsigned queued = ipc.counter();
    for (const auto& s : ipc.queue()) queued += s.count;
    if (queued != ipc.size())
      out.push_back(msg("iprecache: core", c, " counts ", queued, " but holds ", ipc.size()));
    const PreTlb& pre = mem.translation(c).pre_tlb();
    if (pre.size() > pre.capacity()) out.push_back(msg("capacity: core", c, " pre-tlb holds ", pre.size()));
  }
  for (const auto& [b, c] : mem.l3_directory().records()) {
    const PreCacheEntry* e = mem.precache(c).lookup(b);
    if (!e || e->hit_level == HitLevel::L2) out.push_back(msg("stale L3 pre-cache record core", c, " ", hex(b)));
  }

  // Single writer and directory accuracy.
  for (const CacheLine* l : mem.l3().lines()) {
    const Addr b = l->block;
    std::uint32_t holders = 0;
    int owners = 0;
    int owner = -1;
    bool shared = false;
    for (unsigned ci = 0; ci < cores; ++ci) {
      const CacheLine* p = mem.l2(static_cast<CoreId>(ci)).find(b);
      if (!p) continue;
      holders |= 1u << ci;
      if (p->state == Mesi::M || p->state == Mesi::E) {
        ++owners;
        owner = static_cast<int>(ci);
      } else if (p->state == Mesi::S) {
        shared = true;
      } else {
        out.push_back(msg("invalid line resident for ", hex(b)));
      }
    }
    if (owners > 1 || (owners == 1 && shared))
      out.push_back(msg("single writer: block ", hex(b), " has ", owners, " owners, shared=", (shared ? "true" : "false")));
    auto it = mem.directory().find(b);
    std::uint32_t sharers = it == mem.directory().end() ? 0 : it->second.sharers;
    int dir_owner = it == mem.directory().end() ? -1 : it->second.owner;
    if (sharers != holders)
      out.push_back(msg("directory: block ", hex(b), " sharers ", hex(sharers), " but holders ", hex(holders)));
    if (dir_owner != owner)
      out.push_back(msg("directory: block ", hex(b), " owner ", dir_owner, " but actual ", owner));
  }
  for (const auto& [b, d] : mem.directory())
    if (!mem.l3().contains(b) && d.sharers != 0)
      out.push_back(msg("directory: record for non-resident block ", hex(b)));
  return out;
}

}  // namespace precache
