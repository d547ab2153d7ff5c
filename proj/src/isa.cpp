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

#include "xdpvliw/isa.hpp"

#include <string>

namespace xdpvliw::isa {

std::optional<Reg> Instruction::written_register() const {
    switch (kind) {
    case Kind::AluBinary:
    case Kind::AluUnary:
    case Kind::MovImm:
    case Kind::MovReg:
    case Kind::Load:
    case Kind::LoadImm64:
    case Kind::AluThreeOp:
    case Kind::Load48:
        return dst;
    case Kind::Call:
    case Kind::EarlyExit:
        return R0;
    default:
        return std::nullopt;
    }
}

bool operator==(const Instruction& a, const Instruction& b) {
    return a.kind == b.kind && a.op == b.op && a.width == b.width && a.dst == b.dst && a.src == b.src &&
           a.src2 == b.src2 && a.offset == b.offset && a.imm == b.imm && a.target == b.target &&
           a.map_ref == b.map_ref;
}

const MapDef* Program::find_map(std::uint32_t id) const {
    for (const auto& m : maps) {
        if (m.id == id) return &m;
    }
    return nullptr;
}

void validate(const Program& program) {
    const auto n = static_cast<std::int32_t>(program.instructions.size());
    bool has_exit = false;
    for (std::int32_t i = 0; i < n; ++i) {
        const auto& insn = program.instructions[static_cast<std::size_t>(i)];
        if (insn.kind == Kind::Branch || insn.kind == Kind::JumpAlways) {
            if (insn.target < 0 || insn.target >= n) {
                throw Error("instruction " + std::to_string(i) + ": branch target " +
                            std::to_string(insn.target) + " out of range");
            }
        }
        if (!insn.dst.valid() || (insn.src && !insn.src->valid()) || (insn.src2 && !insn.src2->valid())) {
            throw Error("instruction " + std::to_string(i) + ": invalid register");
        }
        if (insn.width == 6 && insn.kind != Kind::Load48 && insn.kind != Kind::Store48) {
            throw Error("instruction " + std::to_string(i) + ": 6-byte width outside Load48/Store48");
        }
        has_exit = has_exit || insn.is_exit();
    }
    if (n > 0 && !has_exit) throw Error("program has no exit");
    if (n > 0) {
        const auto& last = program.instructions.back();
        if (!last.is_exit() && last.kind != Kind::JumpAlways) {
            throw Error("control falls off the end of the program");
        }
    }
}

Instruction mov_imm(Reg dst, std::int64_t imm, int width) {
    Instruction i;
    i.kind = Kind::MovImm;
    i.op = static_cast<std::uint8_t>(AluOp::Mov);
    i.width = static_cast<std::uint8_t>(width);
    i.dst = dst;
    i.imm = imm;
    return i;
}

Instruction mov_reg(Reg dst, Reg src, int width) {
    Instruction i;
    i.kind = Kind::MovReg;
    i.op = static_cast<std::uint8_t>(AluOp::Mov);
    i.width = static_cast<std::uint8_t>(width);
    i.dst = dst;
    i.src = src;
    return i;
}

Instruction alu_imm(AluOp op, Reg dst, std::int64_t imm, int width) {
    Instruction i;
    i.kind = (op == AluOp::Neg || op == AluOp::Le || op == AluOp::Be) ? Kind::AluUnary : Kind::AluBinary;
    i.op = static_cast<std::uint8_t>(op);
    // byte swaps always encode in the 32-bit class; imm selects 16/32/64
    i.width = static_cast<std::uint8_t>(i.kind == Kind::AluUnary && op != AluOp::Neg ? 32 : width);
    i.dst = dst;
    i.imm = imm;
    return i;
}

Instruction alu_reg(AluOp op, Reg dst, Reg src, int width) {
    Instruction i = alu_imm(op, dst, 0, width);
    i.src = src;
    return i;
}

Instruction alu3_imm(AluOp op, Reg dst, Reg src, std::int64_t imm) {
    Instruction i;
    i.kind = Kind::AluThreeOp;
    i.op = static_cast<std::uint8_t>(op);
    i.width = 64;
    i.dst = dst;
    i.src = src;
    i.imm = imm;
    return i;
}

Instruction alu3_reg(AluOp op, Reg dst, Reg src, Reg src2) {
    Instruction i = alu3_imm(op, dst, src, 0);
    i.src2 = src2;
    return i;
}

Instruction load(int width, Reg dst, Reg base, std::int16_t offset) {
    Instruction i;
    i.kind = Kind::Load;
    i.width = static_cast<std::uint8_t>(width);
    i.dst = dst;
    i.src = base;
    i.offset = offset;
    return i;
}

Instruction store_reg(int width, Reg base, std::int16_t offset, Reg src) {
    Instruction i;
    i.kind = Kind::Store;
    i.width = static_cast<std::uint8_t>(width);
    i.dst = base;
    i.src = src;
    i.offset = offset;
    return i;
}

Instruction store_imm(int width, Reg base, std::int16_t offset, std::int64_t imm) {
    Instruction i;
    i.kind = Kind::Store;
    i.width = static_cast<std::uint8_t>(width);
    i.dst = base;
    i.offset = offset;
    i.imm = imm;
    return i;
}

Instruction load48(Reg dst, Reg base, std::int16_t offset) {
    Instruction i = load(6, dst, base, offset);
    i.kind = Kind::Load48;
    return i;
}

Instruction store48(Reg base, std::int16_t offset, Reg src) {
    Instruction i = store_reg(6, base, offset, src);
    i.kind = Kind::Store48;
    return i;
}

Instruction load_imm64(Reg dst, std::int64_t imm) {
    Instruction i;
    i.kind = Kind::LoadImm64;
    i.width = 64;
    i.dst = dst;
    i.imm = imm;
    return i;
}

Instruction load_map(Reg dst, std::uint32_t map_id) {
    Instruction i = load_imm64(dst, map_id);
    i.map_ref = true;
    return i;
}

Instruction branch_imm(JmpOp op, Reg lhs, std::int64_t imm, std::int32_t target, int width) {
    Instruction i;
    i.kind = Kind::Branch;
    i.op = static_cast<std::uint8_t>(op);
    i.width = static_cast<std::uint8_t>(width);
    i.dst = lhs;
    i.imm = imm;
    i.target = target;
    return i;
}

Instruction branch_reg(JmpOp op, Reg lhs, Reg rhs, std::int32_t target, int width) {
    Instruction i = branch_imm(op, lhs, 0, target, width);
    i.src = rhs;
    return i;
}

Instruction jump(std::int32_t target) {
    Instruction i;
    i.kind = Kind::JumpAlways;
    i.target = target;
    return i;
}

Instruction call(std::int64_t helper_id) {
    Instruction i;
    i.kind = Kind::Call;
    i.imm = helper_id;
    return i;
}

Instruction exit_insn() {
    Instruction i;
    i.kind = Kind::Exit;
    return i;
}

Instruction early_exit(std::int64_t action) {
    Instruction i;
    i.kind = Kind::EarlyExit;
    i.imm = action;
    return i;
}

namespace {

std::uint64_t bswap(std::uint64_t v, int bits) {
    std::uint64_t out = 0;
    for (int i = 0; i < bits / 8; ++i) out = (out << 8) | ((v >> (8 * i)) & 0xff);
    return out;
}

std::uint64_t truncate(std::uint64_t v, int bits) { return bits >= 64 ? v : v & ((std::uint64_t{1} << bits) - 1); }

}  // namespace

std::uint64_t eval_alu(AluOp op, int width, std::uint64_t a, std::uint64_t b) {
    if (op == AluOp::Le) return truncate(a, static_cast<int>(b));
    if (op == AluOp::Be) return bswap(a, static_cast<int>(b));
    if (width == 32) {
        const auto x = static_cast<std::uint32_t>(a);
        const auto y = static_cast<std::uint32_t>(b);
        std::uint32_t r = 0;
        switch (op) {
        case AluOp::Add: r = x + y; break;
        case AluOp::Sub: r = x - y; break;
        case AluOp::Mul: r = x * y; break;
        case AluOp::Div: r = y == 0 ? 0 : x / y; break;
        case AluOp::Mod: r = y == 0 ? 0 : x % y; break;
        case AluOp::Or: r = x | y; break;
        case AluOp::And: r = x & y; break;
        case AluOp::Xor: r = x ^ y; break;
        case AluOp::Lsh: r = x << (y & 31); break;
        case AluOp::Rsh: r = x >> (y & 31); break;
        case AluOp::Arsh: r = static_cast<std::uint32_t>(static_cast<std::int32_t>(x) >> (y & 31)); break;
        case AluOp::Neg: r = 0U - x; break;
        case AluOp::Mov: r = y; break;
        default: break;
        }
        return r;
    }
    switch (op) {
    case AluOp::Add: return a + b;
    case AluOp::Sub: return a - b;
    case AluOp::Mul: return a * b;
    case AluOp::Div: return b == 0 ? 0 : a / b;
    case AluOp::Mod: return b == 0 ? 0 : a % b;
    case AluOp::Or: return a | b;
    case AluOp::And: return a & b;
    case AluOp::Xor: return a ^ b;
    case AluOp::Lsh: return a << (b & 63);
    case AluOp::Rsh: return a >> (b & 63);
    case AluOp::Arsh: return static_cast<std::uint64_t>(static_cast<std::int64_t>(a) >> (b & 63));
    case AluOp::Neg: return 0 - a;
    case AluOp::Mov: return b;
    default: return 0;
    }
}

bool eval_jump(JmpOp op, int width, std::uint64_t a, std::uint64_t b) {
    if (width == 32) {
        a = static_cast<std::uint32_t>(a);
        b = static_cast<std::uint32_t>(b);
    }
    const auto sa = width == 32 ? static_cast<std::int64_t>(static_cast<std::int32_t>(a)) : static_cast<std::int64_t>(a);
    const auto sb = width == 32 ? static_cast<std::int64_t>(static_cast<std::int32_t>(b)) : static_cast<std::int64_t>(b);
    switch (op) {
    case JmpOp::Eq: return a == b;
    case JmpOp::Ne: return a != b;
    case JmpOp::Gt: return a > b;
    case JmpOp::Ge: return a >= b;
    case JmpOp::Lt: return a < b;
    case JmpOp::Le: return a <= b;
    case JmpOp::Set: return (a & b) != 0;
    case JmpOp::Sgt: return sa > sb;
    case JmpOp::Sge: return sa >= sb;
    case JmpOp::Slt: return sa < sb;
    case JmpOp::Sle: return sa <= sb;
    }
    return false;
}

bool is_commutative(AluOp op) {
    return op == AluOp::Add || op == AluOp::Mul || op == AluOp::Or || op == AluOp::And || op == AluOp::Xor;
}

const char* alu_op_name(AluOp op) {
    switch (op) {
    case AluOp::Add: return "add";
    case AluOp::Sub: return "sub";
    case AluOp::Mul: return "mul";
    case AluOp::Div: return "div";
    case AluOp::Or: return "or";
    case AluOp::And: return "and";
    case AluOp::Lsh: return "lsh";
    case AluOp::Rsh: return "rsh";
    case AluOp::Neg: return "neg";
    case AluOp::Mod: return "mod";
    case AluOp::Xor: return "xor";
    case AluOp::Mov: return "mov";
    case AluOp::Arsh: return "arsh";
    case AluOp::Le: return "le";
    case AluOp::Be: return "be";
    }
    return "?";
}

const char* map_kind_name(MapKind k) {
    switch (k) {
    case MapKind::Array: return "array";
    case MapKind::Hash: return "hash";
    case MapKind::LruHash: return "lru_hash";
    }
    return "?";
}

std::optional<MapKind> parse_map_kind(std::string_view name) {
    if (name == "array") return MapKind::Array;
    if (name == "hash") return MapKind::Hash;
    if (name == "lru_hash") return MapKind::LruHash;
    return std::nullopt;
}

}  // namespace xdpvliw::isa
