#pragma once

// Reduced x86 subset: four 32-bit registers, four optional RAM slots addressed
// off %rbp, and two-operand addl/subl/movl/imull with single-digit immediates.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace autoasm {

enum class Register : std::uint8_t { Eax = 0, Ebx = 1, Ecx = 2, Edx = 3 };
enum class MemSlot : std::uint8_t { M0 = 0, M4 = 1, M8 = 2, M12 = 3 };
enum class Opcode : std::uint8_t { Addl = 0, Subl = 1, Movl = 2, Imull = 3 };

inline constexpr int kNumRegisters = 4;
inline constexpr int kNumMemSlots = 4;
inline constexpr int kNumOpcodes = 4;
inline constexpr int kNumDigits = 10;

std::string_view register_name(Register r);   // "%eax"
std::string_view mem_slot_name(MemSlot m);     // "-8(%rbp)"
std::string_view opcode_name(Opcode op);       // "addl"

class Operand {
 public:
  enum class Kind : std::uint8_t { Imm, Reg, Mem };

  static Operand imm(int digit);
  static Operand reg(Register r) { return Operand(Kind::Reg, static_cast<std::uint8_t>(r)); }
  static Operand mem(MemSlot m) { return Operand(Kind::Mem, static_cast<std::uint8_t>(m)); }

  Kind kind() const { return kind_; }
  bool is_imm() const { return kind_ == Kind::Imm; }
  bool is_reg() const { return kind_ == Kind::Reg; }
  bool is_mem() const { return kind_ == Kind::Mem; }

  int digit() const { return value_; }
  Register reg() const { return static_cast<Register>(value_); }
  MemSlot slot() const { return static_cast<MemSlot>(value_); }
  int index() const { return value_; }

  friend bool operator==(const Operand&, const Operand&) = default;

 private:
  Operand(Kind k, std::uint8_t v) : kind_(k), value_(v) {}
  Kind kind_;
  std::uint8_t value_;
};

struct Instruction {
  Opcode opcode;
  Operand src;
  Operand dst;

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

using Program = std::vector<Instruction>;

/// Which part of the machine the action space may touch.
struct SpaceConfig {
  int num_registers = 4;
  bool ram_enabled = false;

  /// Cells seen by observers: live registers followed by RAM slots.
  int cells() const { return num_registers + (ram_enabled ? kNumMemSlots : 0); }

  friend bool operator==(const SpaceConfig&, const SpaceConfig&) = default;
};

struct MachineState {
  std::array<std::int32_t, kNumRegisters> regs{};
  std::optional<std::array<std::int32_t, kNumMemSlots>> ram;

  static MachineState with_regs(std::array<std::int32_t, kNumRegisters> r) {
    return MachineState{r, std::nullopt};
  }
  static MachineState with_ram(std::array<std::int32_t, kNumRegisters> r,
                               std::array<std::int32_t, kNumMemSlots> m) {
    return MachineState{r, m};
  }

  bool has_ram() const { return ram.has_value(); }

  friend bool operator==(const MachineState&, const MachineState&) = default;
};

// Throws IllegalInstruction for operand-constraint violations.
void validate(const Instruction& instr);
bool is_legal(const Instruction& instr, const SpaceConfig& space);

MachineState step(const MachineState& state, const Instruction& instr);
MachineState run(const MachineState& state, const Program& prog);

/// Exact equality of every cell. Throws ConfigMismatch when one state has RAM
/// and the other does not.
bool state_equals(const MachineState& a, const MachineState& b);

Instruction parse_instruction(std::string_view text);
std::string format_instruction(const Instruction& instr);

/// One instruction per line or separated by ';'. Blank lines and lines
/// starting with '#' are skipped.
Program parse_program(std::string_view text);
std::string format_program(const Program& prog, std::string_view separator = "\n");

/// Observable cells in display order (registers, then RAM), restricted to the
/// live registers of `space`.
std::vector<std::int32_t> cells_of(const MachineState& s, const SpaceConfig& space);
MachineState state_from_cells(const std::vector<std::int32_t>& cells, const SpaceConfig& space);

// ---------------------------------------------------------------------------
// Token vocabulary: every instruction is three tokens (opcode, src, dst).

namespace vocab {

inline constexpr int kSize = 22;
inline constexpr int kOpcodeBase = 0;
inline constexpr int kRegisterBase = 4;
inline constexpr int kDigitBase = 8;
inline constexpr int kMemBase = 18;

int opcode_token(Opcode op);
int operand_token(const Operand& o);
Opcode opcode_of(int token);
Operand operand_of(int token);
std::string_view token_name(int token);

}  // namespace vocab

/// Legal tokens for each decoding slot. The destination mask depends on the
/// already chosen opcode and source.
std::array<bool, vocab::kSize> opcode_mask();
std::array<bool, vocab::kSize> src_mask(const SpaceConfig& space);
std::array<bool, vocab::kSize> dst_mask(const SpaceConfig& space, Opcode op, const Operand& src);

/// The enumerated action space. Actions are sorted by (opcode, src token,
/// dst token) and the position in that order is the stable action index.
class ActionSpace {
 public:
  explicit ActionSpace(const SpaceConfig& space);

  const SpaceConfig& config() const { return space_; }
  const std::vector<Instruction>& actions() const { return actions_; }
  std::size_t size() const { return actions_.size(); }
  const Instruction& operator[](std::size_t i) const { return actions_[i]; }

  /// -1 when the instruction is not in this space.
  int index_of(const Instruction& instr) const;

 private:
  SpaceConfig space_;
  std::vector<Instruction> actions_;
  std::vector<int> lookup_;  // kNumOpcodes x vocab x vocab
};

std::vector<Instruction> enumerate_actions(const SpaceConfig& space);

}  // namespace autoasm
