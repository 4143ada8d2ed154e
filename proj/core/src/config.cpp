#include "precache/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <functional>
#include <map>
#include <sstream>

namespace precache {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::uint64_t parse_uint(std::string_view key, std::string_view v) {
  int base = 10;
  if (v.size() > 2 && v[0] == '0' && (v[1] == 'x' || v[1] == 'X')) {
    base = 16;
    v.remove_prefix(2);
  }
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out, base);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("bad integer for '" + std::string(key) + "'");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError("bad boolean for '" + std::string(key) + "'");
}

using Setter = std::function<void(SimConfig&, std::string_view key, std::string_view value)>;

template <typename Get>
Setter uint_field(Get get) {
  return [get](SimConfig& c, std::string_view k, std::string_view v) {
    auto x = parse_uint(k, v);
    if (x > 0xFFFF'FFFFull) throw ConfigError("value out of range for '" + std::string(k) + "'");
    get(c) = static_cast<unsigned>(x);
  };
}

template <typename Get>
Setter bool_field(Get get) {
  return [get](SimConfig& c, std::string_view k, std::string_view v) { get(c) = parse_bool(k, v); };
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"mode", [](SimConfig& c, std::string_view, std::string_view v) { c.mode = parse_mode(v); }},
      {"cores", uint_field([](SimConfig& c) -> unsigned& { return c.cores; })},
      {"rob_entries", uint_field([](SimConfig& c) -> unsigned& { return c.core.rob_entries; })},
      {"fetch_queue_entries", uint_field([](SimConfig& c) -> unsigned& { return c.core.fetch_queue_entries; })},
      {"load_queue_entries", uint_field([](SimConfig& c) -> unsigned& { return c.core.load_queue_entries; })},
      {"store_queue_entries", uint_field([](SimConfig& c) -> unsigned& { return c.core.store_queue_entries; })},
      {"fetch_width", uint_field([](SimConfig& c) -> unsigned& { return c.core.fetch_width; })},
      {"issue_width", uint_field([](SimConfig& c) -> unsigned& { return c.core.issue_width; })},
      {"commit_width", uint_field([](SimConfig& c) -> unsigned& { return c.core.commit_width; })},
      {"exception_delay_cycles", uint_field([](SimConfig& c) -> unsigned& { return c.core.exception_delay_cycles; })},
      {"line_size", uint_field([](SimConfig& c) -> unsigned& { return c.cache.line_size; })},
      {"l1_size", uint_field([](SimConfig& c) -> unsigned& { return c.cache.l1.size_bytes; })},
      {"l1_assoc", uint_field([](SimConfig& c) -> unsigned& { return c.cache.l1.assoc; })},
      {"l1_latency", uint_field([](SimConfig& c) -> unsigned& { return c.cache.l1.latency; })},
      {"l1_ports", uint_field([](SimConfig& c) -> unsigned& { return c.cache.l1.ports; })},
      {"l2_size", uint_field([](SimConfig& c) -> unsigned& { return c.cache.l2.size_bytes; })},
      {"l2_assoc", uint_field([](SimConfig& c) -> unsigned& { return c.cache.l2.assoc; })},
      {"l2_latency", uint_field([](SimConfig& c) -> unsigned& { return c.cache.l2.latency; })},
      {"l2_ports", uint_field([](SimConfig& c) -> unsigned& { return c.cache.l2.ports; })},
      {"l3_size", uint_field([](SimConfig& c) -> unsigned& { return c.cache.l3.size_bytes; })},
      {"l3_assoc", uint_field([](SimConfig& c) -> unsigned& { return c.cache.l3.assoc; })},
      {"l3_latency", uint_field([](SimConfig& c) -> unsigned& { return c.cache.l3.latency; })},
      {"l3_ports", uint_field([](SimConfig& c) -> unsigned& { return c.cache.l3.ports; })},
      {"memory_latency", uint_field([](SimConfig& c) -> unsigned& { return c.cache.memory_latency; })},
      {"paging", bool_field([](SimConfig& c) -> bool& { return c.tlb.paging; })},
      {"tlb_entries", uint_field([](SimConfig& c) -> unsigned& { return c.tlb.entries; })},
      {"page_walk_latency", uint_field([](SimConfig& c) -> unsigned& { return c.tlb.walk_latency; })},
      {"iprecache", bool_field([](SimConfig& c) -> bool& { return c.iprecache; })},
      {"iprecache_blocks", uint_field([](SimConfig& c) -> unsigned& { return c.iprecache_blocks; })},
      {"victim_cache", bool_field([](SimConfig& c) -> bool& { return c.victim_cache; })},
      {"victim_cache_blocks", uint_field([](SimConfig& c) -> unsigned& { return c.victim_cache_blocks; })},
      {"seed", [](SimConfig& c, std::string_view k, std::string_view v) { c.seed = parse_uint(k, v); }},
      {"max_cycles", [](SimConfig& c, std::string_view k, std::string_view v) { c.max_cycles = parse_uint(k, v); }},
      {"check_invariants", bool_field([](SimConfig& c) -> bool& { return c.check_invariants; })},
  };
  return table;
}

bool is_pow2(unsigned v) { return v != 0 && (v & (v - 1)) == 0; }

void validate_level(const char* name, const CacheLevelConfig& l, unsigned line) {
  std::string n(name);
  if (l.assoc == 0 || l.ports == 0) throw ConfigError(n + ": associativity and ports must be > 0");
  if (l.size_bytes == 0 || l.size_bytes % (l.assoc * line) != 0)
    throw ConfigError(n + ": size must be a multiple of associativity x line size");
  if (!is_pow2(l.size_bytes / (l.assoc * line))) throw ConfigError(n + ": set count must be a power of two");
}

}  // namespace

Mode parse_mode(std::string_view s) {
  if (s == "baseline") return Mode::Baseline;
  if (s == "precache") return Mode::PreCache;
  throw ConfigError("mode must be 'baseline' or 'precache'");
}

void validate(const SimConfig& c) {
  if (c.cores != 1 && c.cores != 2 && c.cores != 4) throw ConfigError("cores must be 1, 2 or 4");
  if (!is_pow2(c.cache.line_size) || c.cache.line_size < 4) throw ConfigError("line_size must be a power of two >= 4");
  validate_level("l1", c.cache.l1, c.cache.line_size);
  validate_level("l2", c.cache.l2, c.cache.line_size);
  validate_level("l3", c.cache.l3, c.cache.line_size);
  const auto& k = c.core;
  if (k.rob_entries == 0 || k.fetch_queue_entries == 0 || k.load_queue_entries == 0 ||
      k.store_queue_entries == 0 || k.fetch_width == 0 || k.issue_width == 0 || k.commit_width == 0)
    throw ConfigError("core queue sizes and widths must be > 0");
  if (!is_pow2(c.tlb.page_size)) throw ConfigError("page size must be a power of two");
  if (c.tlb.entries == 0) throw ConfigError("tlb_entries must be > 0");
  if (c.iprecache_blocks == 0) throw ConfigError("iprecache_blocks must be > 0");
}

SimConfig parse_config(std::string_view text, SimConfig cfg) {
  const auto& table = setters();
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    ++line_no;
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (auto c = line.find_first_of("#;"); c != std::string_view::npos) line = line.substr(0, c);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    std::string_view key = trim(line.substr(0, eq));
    std::string_view value = trim(line.substr(eq + 1));
    auto it = table.find(key);
    if (it == table.end())
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    try {
      it->second(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  validate(cfg);
  return cfg;
}

std::string to_text(const SimConfig& c) {
  std::ostringstream os;
  auto b = [](bool v) { return v ? "true" : "false"; };
  os << "mode = " << to_string(c.mode) << "\n"
     << "cores = " << c.cores << "\n"
     << "rob_entries = " << c.core.rob_entries << "\n"
     << "fetch_queue_entries = " << c.core.fetch_queue_entries << "\n"
     << "load_queue_entries = " << c.core.load_queue_entries << "\n"
     << "store_queue_entries = " << c.core.store_queue_entries << "\n"
     << "fetch_width = " << c.core.fetch_width << "\n"
     << "issue_width = " << c.core.issue_width << "\n"
     << "commit_width = " << c.core.commit_width << "\n"
     << "exception_delay_cycles = " << c.core.exception_delay_cycles << "\n"
     << "line_size = " << c.cache.line_size << "\n";
  auto level = [&](const char* p, const CacheLevelConfig& l) {
    os << p << "_size = " << l.size_bytes << "\n"
       << p << "_assoc = " << l.assoc << "\n"
       << p << "_latency = " << l.latency << "\n"
       << p << "_ports = " << l.ports << "\n";
  };
  level("l1", c.cache.l1);
  level("l2", c.cache.l2);
  level("l3", c.cache.l3);
  os << "memory_latency = " << c.cache.memory_latency << "\n"
     << "paging = " << b(c.tlb.paging) << "\n"
     << "tlb_entries = " << c.tlb.entries << "\n"
     << "page_walk_latency = " << c.tlb.walk_latency << "\n"
     << "iprecache = " << b(c.iprecache) << "\n"
     << "iprecache_blocks = " << c.iprecache_blocks << "\n"
     << "victim_cache = " << b(c.victim_cache) << "\n"
     << "victim_cache_blocks = " << c.victim_cache_blocks << "\n"
     << "seed = " << c.seed << "\n"
     << "max_cycles = " << c.max_cycles << "\n"
     << "check_invariants = " << b(c.check_invariants) << "\n";
  return os.str();
}

}  // namespace precache
