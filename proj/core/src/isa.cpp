#include "precache/isa.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

namespace precache {

namespace {

struct MnemonicInfo {
  std::string_view name;
  Opcode op;
};

constexpr MnemonicInfo kMnemonics[] = {
    {"LI", Opcode::LI},     {"MOV", Opcode::MOV}, {"ADD", Opcode::ADD},   {"SUB", Opcode::SUB},
    {"SHL", Opcode::SHL},   {"LD", Opcode::LD},   {"LD.B", Opcode::LDB},  {"ST", Opcode::ST},
    {"BEQ", Opcode::BEQ},   {"BNE", Opcode::BNE}, {"JI", Opcode::JI},     {"J", Opcode::J},
    {"HALT", Opcode::HALT}, {"NOP", Opcode::NOP}, {"<fetch-fault>", Opcode::FetchFault},
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}
bool is_identifier(std::string_view s) {
  if (s.empty() || !is_ident_start(s.front())) return false;
  return std::all_of(s.begin(), s.end(), is_ident_char);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  int depth = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i < s.size() && s[i] == '[') ++depth;
    if (i < s.size() && s[i] == ']') --depth;
    if (i == s.size() || (s[i] == ',' && depth == 0)) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

// Parses a numeric literal fitting in 32 bits (signed or unsigned range).
std::optional<Word> parse_number(std::string_view s) {
  s = trim(s);
  bool neg = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    neg = s.front() == '-';
    s.remove_prefix(1);
  }
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    base = 16;
    s.remove_prefix(2);
  }
  if (s.empty()) return std::nullopt;
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  if (neg) {
    if (v > 0x8000'0000ull) return std::nullopt;
    return static_cast<Word>(-static_cast<std::int64_t>(v));
  }
  if (v > 0xFFFF'FFFFull) return std::nullopt;
  return static_cast<Word>(v);
}

struct Operand {
  std::string label;  // non-empty when the immediate is a label reference
  Word value = 0;
};

struct Pending {
  int line;
  Instruction inst;
  std::string imm_label;
};

class Assembler {
 public:
  Program run(std::string_view source) {
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= source.size()) {
      std::size_t nl = source.find('\n', pos);
      if (nl == std::string_view::npos) nl = source.size();
      ++line_no;
      handle_line(source.substr(pos, nl - pos), line_no);
      pos = nl + 1;
    }
    resolve();
    return std::move(program_);
  }

 private:
  void handle_line(std::string_view raw, int line) {
    if (auto semi = raw.find(';'); semi != std::string_view::npos) raw = raw.substr(0, semi);
    std::string_view text = trim(raw);
    if (text.empty()) return;

    if (text.front() == '.') {
      directive(text, line);
      return;
    }
    // Leading label, possibly followed by an instruction.
    if (auto colon = text.find(':'); colon != std::string_view::npos) {
      std::string_view name = trim(text.substr(0, colon));
      if (is_identifier(name)) {
        define_label(std::string(name), line);
        text = trim(text.substr(colon + 1));
        if (text.empty()) return;
      }
    }
    instruction(text, line);
  }

  void define_label(const std::string& name, int line) {
    if (program_.labels.count(name)) throw AsmError(line, "duplicate label '" + name + "'");
    program_.labels[name] = pc_;
  }

  void directive(std::string_view text, int line) {
    auto space = text.find_first_of(" \t");
    std::string name = upper(text.substr(0, space));
    std::string_view rest = space == std::string_view::npos ? "" : trim(text.substr(space));
    if (name == ".DATA") {
      auto colon = rest.find(':');
      if (colon == std::string_view::npos) throw AsmError(line, ".data requires 'ADDR:'");
      auto base = parse_number(rest.substr(0, colon));
      if (!base) throw AsmError(line, "bad .data address");
      DataSegment seg{*base, {}};
      for (auto tok : split_ws(rest.substr(colon + 1))) {
        auto v = parse_number(tok);
        if (!v || *v > 0xFF) throw AsmError(line, "bad data byte '" + std::string(tok) + "'");
        seg.bytes.push_back(static_cast<std::uint8_t>(*v));
      }
      std::uint64_t end = std::uint64_t{seg.base} + seg.bytes.size();
      if (end > kCodeBase) throw AsmError(line, "data segment overlaps the code region");
      for (const auto& other : program_.data_segments) {
        std::uint64_t oend = std::uint64_t{other.base} + other.bytes.size();
        if (seg.base < oend && other.base < end && !seg.bytes.empty() && !other.bytes.empty())
          throw AsmError(line, "overlapping data segments");
      }
      program_.data_segments.push_back(std::move(seg));
    } else if (name == ".PRIV") {
      auto toks = split_ws(rest);
      if (toks.size() != 2) throw AsmError(line, ".priv requires LO HI");
      auto lo = parse_number(toks[0]);
      auto hi = parse_number(toks[1]);
      if (!lo || !hi || *hi <= *lo) throw AsmError(line, "bad .priv range");
      program_.privileged_ranges.push_back({*lo, *hi});
    } else if (name == ".ORG") {
      auto v = parse_number(rest);
      if (!v) throw AsmError(line, "bad .org pc");
      pc_ = *v;
    } else if (name == ".ENTRY") {
      entry_line_ = line;
      entry_ref_ = std::string(rest);
    } else {
      throw AsmError(line, "unknown directive '" + name + "'");
    }
  }

  std::uint8_t reg(std::string_view tok, int line) {
    tok = trim(tok);
    if (tok.size() < 2 || (tok[0] != 'r' && tok[0] != 'R'))
      throw AsmError(line, "expected register, got '" + std::string(tok) + "'");
    unsigned v = 0;
    auto [ptr, ec] = std::from_chars(tok.data() + 1, tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      throw AsmError(line, "bad register '" + std::string(tok) + "'");
    if (v >= kNumRegs) throw AsmError(line, "register index " + std::to_string(v) + " >= 16");
    return static_cast<std::uint8_t>(v);
  }

  static bool looks_like_reg(std::string_view tok) {
    tok = trim(tok);
    return tok.size() >= 2 && (tok[0] == 'r' || tok[0] == 'R') &&
           std::all_of(tok.begin() + 1, tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
  }

  Operand imm(std::string_view tok, int line) {
    tok = trim(tok);
    if (auto v = parse_number(tok)) return {"", *v};
    if (is_identifier(tok)) return {std::string(tok), 0};
    throw AsmError(line, "bad immediate '" + std::string(tok) + "'");
  }

  // [rX], [rX+imm], [rX-imm]
  std::pair<std::uint8_t, Word> mem(std::string_view tok, int line) {
    tok = trim(tok);
    if (tok.size() < 3 || tok.front() != '[' || tok.back() != ']')
      throw AsmError(line, "expected memory operand [rX+imm]");
    std::string_view inner = trim(tok.substr(1, tok.size() - 2));
    auto op = inner.find_first_of("+-");
    if (op == std::string_view::npos) return {reg(inner, line), 0};
    auto base = reg(inner.substr(0, op), line);
    std::string num(trim(inner.substr(op + 1)));
    if (inner[op] == '-') num = "-" + num;
    auto v = parse_number(num);
    if (!v) throw AsmError(line, "bad memory offset");
    return {base, *v};
  }

  void instruction(std::string_view text, int line) {
    auto space = text.find_first_of(" \t");
    std::string name = upper(text.substr(0, space));
    std::string_view rest = space == std::string_view::npos ? "" : text.substr(space);
    auto ops = split_commas(rest);

    std::optional<Opcode> op;
    for (const auto& m : kMnemonics)
      if (m.name == name && m.op != Opcode::FetchFault) op = m.op;
    if (!op) throw AsmError(line, "unknown mnemonic '" + name + "'");

    Pending p{line, {}, {}};
    Instruction& in = p.inst;
    in.op = *op;
    in.pc = pc_;
    auto want = [&](std::size_t n) {
      if (ops.size() != n)
        throw AsmError(line, name + " expects " + std::to_string(n) + " operand(s)");
    };
    auto set_imm = [&](const Operand& o) {
      in.uses_imm = true;
      in.imm = o.value;
      p.imm_label = o.label;
    };

    switch (in.op) {
      case Opcode::LI:
        want(2);
        in.rd = reg(ops[0], line);
        set_imm(imm(ops[1], line));
        break;
      case Opcode::MOV:
        want(2);
        in.rd = reg(ops[0], line);
        in.rs1 = reg(ops[1], line);
        break;
      case Opcode::ADD:
      case Opcode::SUB:
      case Opcode::SHL:
        want(3);
        in.rd = reg(ops[0], line);
        in.rs1 = reg(ops[1], line);
        if (looks_like_reg(ops[2]))
          in.rs2 = reg(ops[2], line);
        else
          set_imm(imm(ops[2], line));
        break;
      case Opcode::LD:
      case Opcode::LDB: {
        want(2);
        in.rd = reg(ops[0], line);
        auto [base, off] = mem(ops[1], line);
        in.rs1 = base;
        in.uses_imm = true;
        in.imm = off;
        break;
      }
      case Opcode::ST: {
        want(2);
        auto [base, off] = mem(ops[0], line);
        in.rs1 = base;
        in.uses_imm = true;
        in.imm = off;
        in.rs2 = reg(ops[1], line);
        break;
      }
      case Opcode::BEQ:
      case Opcode::BNE:
        want(3);
        in.rs1 = reg(ops[0], line);
        in.rs2 = reg(ops[1], line);
        set_imm(imm(ops[2], line));
        break;
      case Opcode::JI:
        want(1);
        in.rs1 = reg(ops[0], line);
        break;
      case Opcode::J:
        want(1);
        set_imm(imm(ops[0], line));
        break;
      case Opcode::HALT:
      case Opcode::NOP:
        want(0);
        break;
      case Opcode::FetchFault:
        break;
    }
    if (seen_pcs_.count(pc_)) throw AsmError(line, "two instructions at pc " + std::to_string(pc_));
    seen_pcs_.insert(pc_);
    pending_.push_back(std::move(p));
    ++pc_;
  }

  void resolve() {
    for (auto& p : pending_) {
      if (!p.imm_label.empty()) {
        auto it = program_.labels.find(p.imm_label);
        if (it == program_.labels.end())
          throw AsmError(p.line, "unresolved label '" + p.imm_label + "'");
        p.inst.imm = it->second;
      }
      program_.instructions[p.inst.pc] = p.inst;
    }
    if (!entry_ref_.empty()) {
      if (auto v = parse_number(entry_ref_)) {
        program_.entry = *v;
      } else if (auto it = program_.labels.find(entry_ref_); it != program_.labels.end()) {
        program_.entry = it->second;
      } else {
        throw AsmError(entry_line_, "unresolved label '" + entry_ref_ + "'");
      }
    }
  }

  Program program_;
  Addr pc_ = 0;
  std::set<Addr> seen_pcs_;
  std::vector<Pending> pending_;
  std::string entry_ref_;
  int entry_line_ = 0;
};

std::string hex(Word v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

std::string target_text(Word pc, const Program* p) {
  if (p) {
    for (const auto& [name, at] : p->labels)
      if (at == pc) return name;
  }
  return std::to_string(pc);
}

}  // namespace

std::string_view mnemonic(Opcode op) {
  for (const auto& m : kMnemonics)
    if (m.op == op) return m.name;
  return "?";
}

bool Instruction::writes_reg() const {
  switch (op) {
    case Opcode::LI:
    case Opcode::MOV:
    case Opcode::ADD:
    case Opcode::SUB:
    case Opcode::SHL:
    case Opcode::LD:
    case Opcode::LDB:
      return true;
    default:
      return false;
  }
}

bool Program::is_privileged(Addr addr, unsigned size) const {
  for (const auto& r : privileged_ranges) {
    if (addr < r.hi && r.lo < addr + size) return true;
  }
  return false;
}

Addr Program::entry_for(CoreId core) const {
  auto it = labels.find("core" + std::to_string(core));
  return it == labels.end() ? entry : it->second;
}

Program assemble(std::string_view source) { return Assembler{}.run(source); }

std::string to_string(const Instruction& in, const Program* labels_from) {
  std::ostringstream os;
  os << mnemonic(in.op);
  auto r = [](unsigned i) { return "r" + std::to_string(i); };
  auto memop = [&](unsigned base, Word off) {
    auto s = static_cast<std::int32_t>(off);
    std::string o = "[" + r(base);
    if (s < 0)
      o += "-" + std::to_string(-static_cast<std::int64_t>(s));
    else
      o += "+" + std::to_string(s);
    return o + "]";
  };
  switch (in.op) {
    case Opcode::LI:
      os << " " << r(in.rd) << ", " << in.imm;
      break;
    case Opcode::MOV:
      os << " " << r(in.rd) << ", " << r(in.rs1);
      break;
    case Opcode::ADD:
    case Opcode::SUB:
    case Opcode::SHL:
      os << " " << r(in.rd) << ", " << r(in.rs1) << ", "
         << (in.uses_imm ? std::to_string(in.imm) : r(in.rs2));
      break;
    case Opcode::LD:
    case Opcode::LDB:
      os << " " << r(in.rd) << ", " << memop(in.rs1, in.imm);
      break;
    case Opcode::ST:
      os << " " << memop(in.rs1, in.imm) << ", " << r(in.rs2);
      break;
    case Opcode::BEQ:
    case Opcode::BNE:
      os << " " << r(in.rs1) << ", " << r(in.rs2) << ", " << target_text(in.imm, labels_from);
      break;
    case Opcode::JI:
      os << " " << r(in.rs1);
      break;
    case Opcode::J:
      os << " " << target_text(in.imm, labels_from);
      break;
    default:
      break;
  }
  return os.str();
}

std::string disassemble(const Program& program) {
  std::ostringstream os;
  if (program.entry != 0) os << ".entry " << program.entry << "\n";
  for (const auto& r : program.privileged_ranges) os << ".priv " << hex(r.lo) << " " << hex(r.hi) << "\n";
  for (const auto& seg : program.data_segments) {
    os << ".data " << hex(seg.base) << ":";
    for (auto b : seg.bytes) os << " " << hex(b);
    os << "\n";
  }

  std::multimap<Addr, std::string> labels_at;
  std::set<Addr> pcs;
  for (const auto& [name, pc] : program.labels) {
    labels_at.emplace(pc, name);
    pcs.insert(pc);
  }
  for (const auto& [pc, _] : program.instructions) pcs.insert(pc);

  Addr next = 0;
  for (Addr pc : pcs) {
    if (pc != next) os << ".org " << pc << "\n";
    auto [lo, hi] = labels_at.equal_range(pc);
    for (auto it = lo; it != hi; ++it) os << it->second << ":\n";
    next = pc;
    if (const auto* inst = program.at(pc)) {
      os << "  " << to_string(*inst) << "\n";
      next = pc + 1;
    }
  }
  return os.str();
}

}  // namespace precache
