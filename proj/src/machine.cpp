#include "machine.hpp"

#include <algorithm>
#include <cctype>

#include "error.hpp"

namespace autoasm {

namespace {

constexpr std::array<std::string_view, kNumRegisters> kRegisterNames = {"%eax", "%ebx", "%ecx", "%edx"};
constexpr std::array<std::string_view, kNumMemSlots> kMemNames = {"-0(%rbp)", "-4(%rbp)", "-8(%rbp)",
                                                                  "-12(%rbp)"};
constexpr std::array<std::string_view, kNumOpcodes> kOpcodeNames = {"addl", "subl", "movl", "imull"};

std::int32_t wrap_add(std::int32_t a, std::int32_t b) {
  return static_cast<std::int32_t>(static_cast<std::uint32_t>(a) + static_cast<std::uint32_t>(b));
}
std::int32_t wrap_sub(std::int32_t a, std::int32_t b) {
  return static_cast<std::int32_t>(static_cast<std::uint32_t>(a) - static_cast<std::uint32_t>(b));
}
std::int32_t wrap_mul(std::int32_t a, std::int32_t b) {
  return static_cast<std::int32_t>(static_cast<std::uint32_t>(a) * static_cast<std::uint32_t>(b));
}

std::int32_t read(const MachineState& s, const Operand& o) {
  switch (o.kind()) {
    case Operand::Kind::Imm:
      return o.digit();
    case Operand::Kind::Reg:
      return s.regs[o.index()];
    case Operand::Kind::Mem:
      return (*s.ram)[o.index()];
  }
  return 0;
}

std::int32_t& cell(MachineState& s, const Operand& o) {
  if (o.is_reg()) return s.regs[o.index()];
  return (*s.ram)[o.index()];
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

Operand parse_operand(std::string_view tok) {
  tok = trim(tok);
  if (tok.empty()) fail(ErrorCode::Syntax, "missing operand");
  if (tok.front() == '$') {
    std::string_view digits = tok.substr(1);
    if (digits.size() != 1 || !std::isdigit(static_cast<unsigned char>(digits[0])))
      fail(ErrorCode::Syntax, "immediate must be a single digit 0-9: '" + std::string(tok) + "'");
    return Operand::imm(digits[0] - '0');
  }
  for (int r = 0; r < kNumRegisters; ++r)
    if (tok == kRegisterNames[r]) return Operand::reg(static_cast<Register>(r));
  // Tolerate spaces inside the memory reference, e.g. "-4( %rbp )".
  std::string compact;
  for (char c : tok)
    if (!std::isspace(static_cast<unsigned char>(c))) compact.push_back(c);
  for (int m = 0; m < kNumMemSlots; ++m)
    if (compact == kMemNames[m]) return Operand::mem(static_cast<MemSlot>(m));
  if (compact == "0(%rbp)" || compact == "(%rbp)") return Operand::mem(MemSlot::M0);
  fail(ErrorCode::Syntax, "unknown operand '" + std::string(tok) + "'");
}

void check_constraints(const Instruction& instr, ErrorCode code) {
  if (instr.dst.is_imm()) fail(code, "immediate destination is not allowed");
  if (instr.src.is_mem() && instr.dst.is_mem()) fail(code, "memory-to-memory operands are not allowed");
  if (instr.opcode == Opcode::Imull && !instr.dst.is_reg())
    fail(code, "imull destination must be a register");
}

}  // namespace

std::string_view register_name(Register r) { return kRegisterNames[static_cast<int>(r)]; }
std::string_view mem_slot_name(MemSlot m) { return kMemNames[static_cast<int>(m)]; }
std::string_view opcode_name(Opcode op) { return kOpcodeNames[static_cast<int>(op)]; }

Operand Operand::imm(int digit) {
  if (digit < 0 || digit >= kNumDigits) fail(ErrorCode::InvalidArgument, "immediate outside 0..9");
  return Operand(Kind::Imm, static_cast<std::uint8_t>(digit));
}

void validate(const Instruction& instr) { check_constraints(instr, ErrorCode::IllegalInstruction); }

bool is_legal(const Instruction& instr, const SpaceConfig& space) {
  if (instr.dst.is_imm()) return false;
  if (instr.src.is_mem() && instr.dst.is_mem()) return false;
  if (instr.opcode == Opcode::Imull && !instr.dst.is_reg()) return false;
  for (const Operand* o : {&instr.src, &instr.dst}) {
    if (o->is_mem() && !space.ram_enabled) return false;
    if (o->is_reg() && o->index() >= space.num_registers) return false;
  }
  return true;
}

MachineState step(const MachineState& state, const Instruction& instr) {
  validate(instr);
  if ((instr.src.is_mem() || instr.dst.is_mem()) && !state.has_ram())
    fail(ErrorCode::RamDisabled, "memory operand used while RAM is disabled");

  MachineState next = state;
  const std::int32_t src = read(state, instr.src);
  std::int32_t& dst = cell(next, instr.dst);
  switch (instr.opcode) {
    case Opcode::Addl:
      dst = wrap_add(dst, src);
      break;
    case Opcode::Subl:
      dst = wrap_sub(dst, src);
      break;
    case Opcode::Movl:
      dst = src;
      break;
    case Opcode::Imull:
      dst = wrap_mul(dst, src);
      break;
  }
  return next;
}

MachineState run(const MachineState& state, const Program& prog) {
  MachineState s = state;
  for (std::size_t i = 0; i < prog.size(); ++i) {
    try {
      s = step(s, prog[i]);
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return s;
}

bool state_equals(const MachineState& a, const MachineState& b) {
  if (a.has_ram() != b.has_ram()) fail(ErrorCode::ConfigMismatch, "states differ in RAM configuration");
  return a == b;
}

Instruction parse_instruction(std::string_view text) {
  text = trim(text);
  std::size_t sp = 0;
  while (sp < text.size() && !std::isspace(static_cast<unsigned char>(text[sp]))) ++sp;
  const std::string_view mnemonic = text.substr(0, sp);
  const auto it = std::find(kOpcodeNames.begin(), kOpcodeNames.end(), mnemonic);
  if (it == kOpcodeNames.end()) fail(ErrorCode::Syntax, "unknown opcode '" + std::string(mnemonic) + "'");
  const auto op = static_cast<Opcode>(it - kOpcodeNames.begin());

  const std::string_view rest = text.substr(sp);
  // The operand separator is the last comma outside parentheses.
  int depth = 0;
  std::size_t comma = std::string_view::npos;
  for (std::size_t i = 0; i < rest.size(); ++i) {
    if (rest[i] == '(') ++depth;
    if (rest[i] == ')') --depth;
    if (rest[i] == ',' && depth == 0) {
      if (comma != std::string_view::npos) fail(ErrorCode::Syntax, "too many operands");
      comma = i;
    }
  }
  if (comma == std::string_view::npos) fail(ErrorCode::Syntax, "expected '<src>, <dst>'");

  Instruction instr{op, parse_operand(rest.substr(0, comma)), parse_operand(rest.substr(comma + 1))};
  check_constraints(instr, ErrorCode::Constraint);
  return instr;
}

namespace {
std::string operand_text(const Operand& o) {
  switch (o.kind()) {
    case Operand::Kind::Imm:
      return "$" + std::to_string(o.digit());
    case Operand::Kind::Reg:
      return std::string(register_name(o.reg()));
    case Operand::Kind::Mem:
      return std::string(mem_slot_name(o.slot()));
  }
  return {};
}
}  // namespace

std::string format_instruction(const Instruction& instr) {
  return std::string(opcode_name(instr.opcode)) + " " + operand_text(instr.src) + ", " + operand_text(instr.dst);
}

Program parse_program(std::string_view text) {
  Program prog;
  std::size_t line_no = 0;
  while (!text.empty()) {
    std::size_t end = text.find_first_of("\n;");
    std::string_view line = trim(text.substr(0, end));
    text = end == std::string_view::npos ? std::string_view{} : text.substr(end + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    try {
      prog.push_back(parse_instruction(line));
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return prog;
}

std::string format_program(const Program& prog, std::string_view separator) {
  std::string out;
  for (std::size_t i = 0; i < prog.size(); ++i) {
    if (i) out += separator;
    out += format_instruction(prog[i]);
  }
  return out;
}

std::vector<std::int32_t> cells_of(const MachineState& s, const SpaceConfig& space) {
  std::vector<std::int32_t> out(s.regs.begin(), s.regs.begin() + space.num_registers);
  if (space.ram_enabled) {
    if (!s.has_ram()) fail(ErrorCode::ConfigMismatch, "state has no RAM");
    out.insert(out.end(), s.ram->begin(), s.ram->end());
  }
  return out;
}

MachineState state_from_cells(const std::vector<std::int32_t>& cells, const SpaceConfig& space) {
  if (static_cast<int>(cells.size()) != space.cells())
    fail(ErrorCode::ConfigMismatch, "expected " + std::to_string(space.cells()) + " cells, got " +
                                        std::to_string(cells.size()));
  MachineState s;
  for (int r = 0; r < space.num_registers; ++r) s.regs[r] = cells[r];
  if (space.ram_enabled) {
    s.ram.emplace();
    for (int m = 0; m < kNumMemSlots; ++m) (*s.ram)[m] = cells[space.num_registers + m];
  }
  return s;
}

// ---------------------------------------------------------------------------

namespace vocab {

int opcode_token(Opcode op) { return kOpcodeBase + static_cast<int>(op); }

int operand_token(const Operand& o) {
  switch (o.kind()) {
    case Operand::Kind::Reg:
      return kRegisterBase + o.index();
    case Operand::Kind::Imm:
      return kDigitBase + o.digit();
    case Operand::Kind::Mem:
      return kMemBase + o.index();
  }
  return -1;
}

Opcode opcode_of(int token) {
  if (token < kOpcodeBase || token >= kRegisterBase) fail(ErrorCode::InvalidArgument, "not an opcode token");
  return static_cast<Opcode>(token - kOpcodeBase);
}

Operand operand_of(int token) {
  if (token >= kRegisterBase && token < kDigitBase) return Operand::reg(static_cast<Register>(token - kRegisterBase));
  if (token >= kDigitBase && token < kMemBase) return Operand::imm(token - kDigitBase);
  if (token >= kMemBase && token < kSize) return Operand::mem(static_cast<MemSlot>(token - kMemBase));
  fail(ErrorCode::InvalidArgument, "not an operand token");
}

std::string_view token_name(int token) {
  static const std::array<std::string, kSize> names = [] {
    std::array<std::string, kSize> n;
    for (int i = 0; i < kNumOpcodes; ++i) n[kOpcodeBase + i] = std::string(kOpcodeNames[i]);
    for (int i = 0; i < kNumRegisters; ++i) n[kRegisterBase + i] = std::string(kRegisterNames[i]);
    for (int i = 0; i < kNumDigits; ++i) n[kDigitBase + i] = "$" + std::to_string(i);
    for (int i = 0; i < kNumMemSlots; ++i) n[kMemBase + i] = std::string(kMemNames[i]);
    return n;
  }();
  return names.at(token);
}

}  // namespace vocab

std::array<bool, vocab::kSize> opcode_mask() {
  std::array<bool, vocab::kSize> m{};
  for (int i = 0; i < kNumOpcodes; ++i) m[vocab::kOpcodeBase + i] = true;
  return m;
}

std::array<bool, vocab::kSize> src_mask(const SpaceConfig& space) {
  std::array<bool, vocab::kSize> m{};
  for (int r = 0; r < space.num_registers; ++r) m[vocab::kRegisterBase + r] = true;
  for (int d = 0; d < kNumDigits; ++d) m[vocab::kDigitBase + d] = true;
  if (space.ram_enabled)
    for (int s = 0; s < kNumMemSlots; ++s) m[vocab::kMemBase + s] = true;
  return m;
}

std::array<bool, vocab::kSize> dst_mask(const SpaceConfig& space, Opcode op, const Operand& src) {
  std::array<bool, vocab::kSize> m{};
  for (int r = 0; r < space.num_registers; ++r) m[vocab::kRegisterBase + r] = true;
  if (space.ram_enabled && op != Opcode::Imull && !src.is_mem())
    for (int s = 0; s < kNumMemSlots; ++s) m[vocab::kMemBase + s] = true;
  return m;
}

ActionSpace::ActionSpace(const SpaceConfig& space)
    : space_(space), lookup_(kNumOpcodes * vocab::kSize * vocab::kSize, -1) {
  if (space.num_registers < 1 || space.num_registers > kNumRegisters)
    fail(ErrorCode::InvalidArgument, "register count must be within 1..4");
  const auto srcs = src_mask(space);
  for (int op = 0; op < kNumOpcodes; ++op) {
    for (int s = 0; s < vocab::kSize; ++s) {
      if (!srcs[s]) continue;
      const Operand src = vocab::operand_of(s);
      const auto dsts = dst_mask(space, static_cast<Opcode>(op), src);
      for (int d = 0; d < vocab::kSize; ++d) {
        if (!dsts[d]) continue;
        lookup_[(op * vocab::kSize + s) * vocab::kSize + d] = static_cast<int>(actions_.size());
        actions_.push_back(Instruction{static_cast<Opcode>(op), src, vocab::operand_of(d)});
      }
    }
  }
}

int ActionSpace::index_of(const Instruction& instr) const {
  const int op = static_cast<int>(instr.opcode);
  const int s = vocab::operand_token(instr.src);
  const int d = vocab::operand_token(instr.dst);
  if (s < 0 || d < 0) return -1;
  return lookup_[(op * vocab::kSize + s) * vocab::kSize + d];
}

std::vector<Instruction> enumerate_actions(const SpaceConfig& space) { return ActionSpace(space).actions(); }

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Syntax: return "SyntaxError";
    case ErrorCode::Constraint: return "ConstraintError";
    case ErrorCode::IllegalInstruction: return "IllegalInstruction";
    case ErrorCode::RamDisabled: return "RamDisabled";
    case ErrorCode::ConfigMismatch: return "ConfigMismatch";
    case ErrorCode::DegenerateTask: return "DegenerateTask";
    case ErrorCode::UnknownTask: return "UnknownTask";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::Io: return "IoError";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::MissingGold: return "MissingGold";
    case ErrorCode::MissingCheckpoint: return "MissingCheckpoint";
    case ErrorCode::NoLegalExpansion: return "NoLegalExpansion";
  }
  return "Unknown";
}

}  // namespace autoasm
