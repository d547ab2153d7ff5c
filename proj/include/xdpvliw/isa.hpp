// Copyright 2026 The xdpvliw Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace xdpvliw {

// Base error for everything this library reports through exceptions. Runtime
// traps of executed programs are not errors; they are part of XdpResult.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace isa {

inline constexpr int kNumRegisters = 11;
inline constexpr int kStackSize = 512;

// One of r0..r10. r10 is the read-only frame pointer.
struct Reg {
    std::uint8_t index = 0;

    constexpr Reg() = default;
    constexpr explicit Reg(int i) : index(static_cast<std::uint8_t>(i)) {}

    [[nodiscard]] constexpr bool valid() const { return index < kNumRegisters; }
    friend constexpr bool operator==(Reg a, Reg b) { return a.index == b.index; }
    friend constexpr auto operator<=>(Reg a, Reg b) { return a.index <=> b.index; }
};

inline constexpr Reg R0{0}, R1{1}, R2{2}, R3{3}, R4{4}, R5{5}, R6{6}, R7{7}, R8{8}, R9{9}, R10{10};

enum class Kind : std::uint8_t {
    AluBinary,
    AluUnary,
    MovImm,
    MovReg,
    Load,
    Store,
    LoadImm64,
    Branch,
    JumpAlways,
    Call,
    Exit,
    AluThreeOp,
    Load48,
    Store48,
    EarlyExit,
};

// Values match the high nibble of the eBPF opcode (op >> 4) so the codec can
// reuse them directly. Le/Be are the END group with the byte order folded in.
enum class AluOp : std::uint8_t {
    Add = 0x0,
    Sub = 0x1,
    Mul = 0x2,
    Div = 0x3,
    Or = 0x4,
    And = 0x5,
    Lsh = 0x6,
    Rsh = 0x7,
    Neg = 0x8,
    Mod = 0x9,
    Xor = 0xa,
    Mov = 0xb,
    Arsh = 0xc,
    Le = 0xd,
    Be = 0xe,
};

enum class JmpOp : std::uint8_t {
    Eq = 0x1,
    Gt = 0x2,
    Ge = 0x3,
    Set = 0x4,
    Ne = 0x5,
    Sgt = 0x6,
    Sge = 0x7,
    Lt = 0xa,
    Le = 0xb,
    Slt = 0xc,
    Sle = 0xd,
};

// Statically inferred memory region of a load/store (or of the map a helper
// call touches). Filled in by analysis::annotate_regions; Unknown otherwise.
enum class Region : std::uint8_t { Unknown, Stack, Packet, Ctx, Map };

struct MemRef {
    Region region = Region::Unknown;
    std::optional<std::int32_t> stack_offset;  // r10-relative byte offset of the access
    std::optional<std::uint32_t> map_id;
};

struct Instruction {
    Kind kind = Kind::Exit;
    std::uint8_t op = 0;     // AluOp or JmpOp, depending on kind
    std::uint8_t width = 0;  // ALU/branch: 32 or 64. Memory: 1, 2, 4, 6 or 8 bytes
    Reg dst{};
    std::optional<Reg> src;   // absent: the immediate is the operand
    std::optional<Reg> src2;  // AluThreeOp register form only
    std::int16_t offset = 0;  // memory displacement
    std::int64_t imm = 0;
    std::int32_t target = -1;  // Branch/JumpAlways: instruction index (row index inside a VLIW program)
    bool map_ref = false;      // LoadImm64 of a map handle (pseudo map fd)
    MemRef mem;                // analysis annotation, ignored by the codec

    [[nodiscard]] AluOp alu_op() const { return static_cast<AluOp>(op); }
    [[nodiscard]] JmpOp jmp_op() const { return static_cast<JmpOp>(op); }

    [[nodiscard]] bool is_control() const {
        return kind == Kind::Branch || kind == Kind::JumpAlways || kind == Kind::Exit ||
               kind == Kind::EarlyExit;
    }
    [[nodiscard]] bool is_exit() const { return kind == Kind::Exit || kind == Kind::EarlyExit; }
    [[nodiscard]] bool is_memory() const {
        return kind == Kind::Load || kind == Kind::Store || kind == Kind::Load48 || kind == Kind::Store48;
    }
    [[nodiscard]] bool is_extended() const {
        return kind == Kind::AluThreeOp || kind == Kind::Load48 || kind == Kind::Store48 ||
               kind == Kind::EarlyExit;
    }
    // Register written by this instruction, if any (Call writes r0).
    [[nodiscard]] std::optional<Reg> written_register() const;
    // Number of 8-byte slots in the wire format.
    [[nodiscard]] int slots() const { return kind == Kind::LoadImm64 ? 2 : 1; }

    // Structural equality ignoring analysis annotations.
    friend bool operator==(const Instruction& a, const Instruction& b);
};

enum class MapKind : std::uint8_t { Array, Hash, LruHash };

struct MapDef {
    std::uint32_t id = 0;
    MapKind kind = MapKind::Hash;
    std::uint32_t key_size = 4;
    std::uint32_t value_size = 8;
    std::uint32_t max_entries = 1;

    friend bool operator==(const MapDef&, const MapDef&) = default;
};

inline constexpr std::uint32_t kMaxMaps = 64;

[[nodiscard]] const char* map_kind_name(MapKind k);
[[nodiscard]] std::optional<MapKind> parse_map_kind(std::string_view name);

struct Program {
    std::vector<Instruction> instructions;
    std::vector<MapDef> maps;

    [[nodiscard]] std::size_t size() const { return instructions.size(); }
    [[nodiscard]] const MapDef* find_map(std::uint32_t id) const;

    friend bool operator==(const Program& a, const Program& b) { return a.instructions == b.instructions; }
};

// Throws Error when targets are out of range or no exit exists.
void validate(const Program& program);

// Instruction constructors used by passes, tests and the fuzzer.
Instruction mov_imm(Reg dst, std::int64_t imm, int width = 64);
Instruction mov_reg(Reg dst, Reg src, int width = 64);
Instruction alu_imm(AluOp op, Reg dst, std::int64_t imm, int width = 64);
Instruction alu_reg(AluOp op, Reg dst, Reg src, int width = 64);
Instruction alu3_imm(AluOp op, Reg dst, Reg src, std::int64_t imm);
Instruction alu3_reg(AluOp op, Reg dst, Reg src, Reg src2);
Instruction load(int width, Reg dst, Reg base, std::int16_t offset);
Instruction store_reg(int width, Reg base, std::int16_t offset, Reg src);
Instruction store_imm(int width, Reg base, std::int16_t offset, std::int64_t imm);
Instruction load48(Reg dst, Reg base, std::int16_t offset);
Instruction store48(Reg base, std::int16_t offset, Reg src);
Instruction load_imm64(Reg dst, std::int64_t imm);
Instruction load_map(Reg dst, std::uint32_t map_id);
Instruction branch_imm(JmpOp op, Reg lhs, std::int64_t imm, std::int32_t target, int width = 64);
Instruction branch_reg(JmpOp op, Reg lhs, Reg rhs, std::int32_t target, int width = 64);
Instruction jump(std::int32_t target);
Instruction call(std::int64_t helper_id);
Instruction exit_insn();
Instruction early_exit(std::int64_t action);

// Exact eBPF arithmetic. `b` is the second operand (an immediate already
// sign-extended to 64 bits); 32-bit results are zero-extended. Division and
// modulo by zero yield 0. Le/Be take the bit count in `b`.
[[nodiscard]] std::uint64_t eval_alu(AluOp op, int width, std::uint64_t a, std::uint64_t b);
[[nodiscard]] bool eval_jump(JmpOp op, int width, std::uint64_t a, std::uint64_t b);

[[nodiscard]] bool is_commutative(AluOp op);
[[nodiscard]] const char* alu_op_name(AluOp op);

}  // namespace isa
}  // namespace xdpvliw
