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

#include "xdpvliw/codec.hpp"

#include <cstdio>
#include <limits>
#include <string>

namespace xdpvliw::isa {

namespace {

constexpr std::uint8_t kClassLd = 0x00;
constexpr std::uint8_t kClassLdx = 0x01;
constexpr std::uint8_t kClassSt = 0x02;
constexpr std::uint8_t kClassStx = 0x03;
constexpr std::uint8_t kClassAlu = 0x04;
constexpr std::uint8_t kClassJmp = 0x05;
constexpr std::uint8_t kClassJmp32 = 0x06;
constexpr std::uint8_t kClassAlu64 = 0x07;

constexpr std::uint8_t kSrcX = 0x08;
constexpr std::uint8_t kModeMem = 0x60;
constexpr std::uint8_t kModeImm = 0x00;

constexpr std::uint8_t kOpJa = 0x00;
constexpr std::uint8_t kOpCall = 0x80;
constexpr std::uint8_t kOpExit = 0x90;

struct Word {
    std::uint8_t opcode;
    std::uint8_t dst;
    std::uint8_t src;
    std::int16_t off;
    std::int32_t imm;
};

Word read_word(std::span<const std::uint8_t> b, std::size_t slot) {
    const std::uint8_t* p = b.data() + slot * 8;
    Word w{};
    w.opcode = p[0];
    w.dst = p[1] & 0x0f;
    w.src = (p[1] >> 4) & 0x0f;
    w.off = static_cast<std::int16_t>(static_cast<std::uint16_t>(p[2] | (p[3] << 8)));
    const std::uint32_t u = static_cast<std::uint32_t>(p[4]) | (static_cast<std::uint32_t>(p[5]) << 8) |
                            (static_cast<std::uint32_t>(p[6]) << 16) | (static_cast<std::uint32_t>(p[7]) << 24);
    w.imm = static_cast<std::int32_t>(u);
    return w;
}

void write_word(std::vector<std::uint8_t>& out, const Word& w) {
    out.push_back(w.opcode);
    out.push_back(static_cast<std::uint8_t>((w.dst & 0x0f) | ((w.src & 0x0f) << 4)));
    const auto off = static_cast<std::uint16_t>(w.off);
    out.push_back(static_cast<std::uint8_t>(off & 0xff));
    out.push_back(static_cast<std::uint8_t>(off >> 8));
    const auto imm = static_cast<std::uint32_t>(w.imm);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(imm >> (8 * i)));
}

int size_bytes(std::uint8_t size_bits) {
    switch (size_bits) {
    case 0x00: return 4;
    case 0x08: return 2;
    case 0x10: return 1;
    case 0x18: return 8;
    default: return 0;
    }
}

std::uint8_t size_bits(int width) {
    switch (width) {
    case 4: return 0x00;
    case 2: return 0x08;
    case 1: return 0x10;
    case 8: return 0x18;
    default: throw EncodeError("unencodable memory width " + std::to_string(width));
    }
}

bool valid_alu_op(std::uint8_t op) { return op <= 0xc; }

bool valid_jmp_op(std::uint8_t op) {
    return (op >= 0x1 && op <= 0x7) || (op >= 0xa && op <= 0xd);
}

[[noreturn]] void unknown(std::size_t slot, std::uint8_t opcode) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "0x%02x", opcode);
    throw DecodeError(DecodeError::Code::UnknownOpcode, slot,
                      "unknown opcode " + std::string(buf) + " at slot " + std::to_string(slot));
}

std::int32_t to_imm32(std::int64_t v) {
    if (v < std::numeric_limits<std::int32_t>::min() || v > std::numeric_limits<std::int32_t>::max()) {
        throw EncodeError("immediate " + std::to_string(v) + " does not fit in 32 bits");
    }
    return static_cast<std::int32_t>(v);
}

}  // namespace

Program decode(std::span<const std::uint8_t> bytes) {
    if (bytes.size() % 8 != 0) {
        throw DecodeError(DecodeError::Code::TruncatedStream, bytes.size() / 8,
                          "byte stream length " + std::to_string(bytes.size()) + " is not a multiple of 8");
    }
    const std::size_t nslots = bytes.size() / 8;
    Program prog;
    // slot -> instruction index; -1 marks the second half of an lddw.
    std::vector<std::int32_t> slot_to_insn(nslots + 1, -1);
    std::vector<std::pair<std::size_t, std::int64_t>> pending;  // insn index, target slot

    for (std::size_t slot = 0; slot < nslots; ++slot) {
        const Word w = read_word(bytes, slot);
        slot_to_insn[slot] = static_cast<std::int32_t>(prog.instructions.size());
        if (w.dst > 10 || w.src > 10) {
            throw DecodeError(DecodeError::Code::BadRegister, slot,
                              "register out of range at slot " + std::to_string(slot));
        }
        Instruction insn;
        const std::uint8_t cls = w.opcode & 0x07;
        const std::uint8_t opcode = w.opcode;

        auto set_target = [&](std::int16_t off) {
            pending.emplace_back(prog.instructions.size(), static_cast<std::int64_t>(slot) + 1 + off);
        };

        if (opcode == kOpAluThreeOpImm || opcode == kOpAluThreeOpReg) {
            const auto op = static_cast<std::uint8_t>((static_cast<std::uint16_t>(w.off) >> 4) & 0x0f);
            if (!valid_alu_op(op) || op == 0x8 || op == 0xb) unknown(slot, opcode);
            insn = opcode == kOpAluThreeOpImm ? alu3_imm(static_cast<AluOp>(op), Reg(w.dst), Reg(w.src), w.imm)
                                              : alu3_reg(static_cast<AluOp>(op), Reg(w.dst), Reg(w.src),
                                                         Reg(static_cast<std::uint16_t>(w.off) & 0x0f));
            if (insn.src2 && !insn.src2->valid()) {
                throw DecodeError(DecodeError::Code::BadRegister, slot, "bad second source register");
            }
            if (opcode == kOpAluThreeOpImm && (static_cast<std::uint16_t>(w.off) & 0xff0f) != 0) unknown(slot, opcode);
            if (opcode == kOpAluThreeOpReg && (static_cast<std::uint16_t>(w.off) & 0xff00) != 0) unknown(slot, opcode);
        } else if (opcode == kOpLoad48) {
            insn = load48(Reg(w.dst), Reg(w.src), w.off);
        } else if (opcode == kOpStore48) {
            insn = store48(Reg(w.dst), w.off, Reg(w.src));
        } else if (opcode == kOpEarlyExit) {
            insn = early_exit(w.imm);
        } else if (cls == kClassAlu || cls == kClassAlu64) {
            const std::uint8_t op = opcode >> 4;
            const bool x = (opcode & kSrcX) != 0;
            const int width = cls == kClassAlu64 ? 64 : 32;
            if (w.off != 0) unknown(slot, opcode);
            if (op == 0xd) {
                // END: byte order is in the source bit, class must be ALU
                if (cls != kClassAlu || (w.imm != 16 && w.imm != 32 && w.imm != 64)) unknown(slot, opcode);
                insn = alu_imm(x ? AluOp::Be : AluOp::Le, Reg(w.dst), w.imm, 32);
            } else if (op == 0x8) {
                if (x) unknown(slot, opcode);
                insn = alu_imm(AluOp::Neg, Reg(w.dst), 0, width);
            } else if (op == 0xb) {
                insn = x ? mov_reg(Reg(w.dst), Reg(w.src), width) : mov_imm(Reg(w.dst), w.imm, width);
            } else if (valid_alu_op(op)) {
                insn = x ? alu_reg(static_cast<AluOp>(op), Reg(w.dst), Reg(w.src), width)
                         : alu_imm(static_cast<AluOp>(op), Reg(w.dst), w.imm, width);
            } else {
                unknown(slot, opcode);
            }
            if (!x && w.src != 0) unknown(slot, opcode);
        } else if (opcode == (kClassLd | kModeImm | 0x18)) {
            if (slot + 1 >= nslots) {
                throw DecodeError(DecodeError::Code::TruncatedStream, slot, "lddw without second half");
            }
            const Word hi = read_word(bytes, slot + 1);
            if (hi.opcode != 0 || hi.dst != 0 || hi.src != 0 || hi.off != 0) {
                throw DecodeError(DecodeError::Code::DanglingLddwSecondHalf, slot + 1,
                                  "malformed second half of lddw at slot " + std::to_string(slot + 1));
            }
            if (w.src > 1) unknown(slot, opcode);
            const std::uint64_t v = static_cast<std::uint32_t>(w.imm) |
                                    (static_cast<std::uint64_t>(static_cast<std::uint32_t>(hi.imm)) << 32);
            if (w.src == 1) {
                insn = load_map(Reg(w.dst), static_cast<std::uint32_t>(v));
                if (v >= kMaxMaps) {
                    throw DecodeError(DecodeError::Code::UnknownOpcode, slot, "map id out of range");
                }
            } else {
                insn = load_imm64(Reg(w.dst), static_cast<std::int64_t>(v));
            }
            ++slot;
        } else if (cls == kClassLdx) {
            const int sz = size_bytes(opcode & 0x18);
            if ((opcode & 0xe0) != kModeMem || sz == 0) unknown(slot, opcode);
            insn = load(sz, Reg(w.dst), Reg(w.src), w.off);
        } else if (cls == kClassStx) {
            const int sz = size_bytes(opcode & 0x18);
            if ((opcode & 0xe0) != kModeMem || sz == 0) unknown(slot, opcode);
            insn = store_reg(sz, Reg(w.dst), w.off, Reg(w.src));
        } else if (cls == kClassSt) {
            const int sz = size_bytes(opcode & 0x18);
            if ((opcode & 0xe0) != kModeMem || sz == 0 || w.src != 0) unknown(slot, opcode);
            insn = store_imm(sz, Reg(w.dst), w.off, w.imm);
        } else if (cls == kClassJmp || cls == kClassJmp32) {
            const std::uint8_t op = opcode & 0xf0;
            const bool x = (opcode & kSrcX) != 0;
            if (cls == kClassJmp && op == kOpJa && !x) {
                insn = jump(-1);
                set_target(w.off);
            } else if (cls == kClassJmp && op == kOpCall && !x) {
                if (w.src != 0) unknown(slot, opcode);  // call to local function
                insn = call(w.imm);
            } else if (cls == kClassJmp && op == kOpExit && !x) {
                insn = exit_insn();
            } else if (valid_jmp_op(op >> 4)) {
                const int width = cls == kClassJmp ? 64 : 32;
                insn = x ? branch_reg(static_cast<JmpOp>(op >> 4), Reg(w.dst), Reg(w.src), -1, width)
                         : branch_imm(static_cast<JmpOp>(op >> 4), Reg(w.dst), w.imm, -1, width);
                set_target(w.off);
            } else {
                unknown(slot, opcode);
            }
        } else {
            unknown(slot, opcode);
        }
        prog.instructions.push_back(insn);
    }
    slot_to_insn[nslots] = -2;

    for (const auto& [idx, tslot] : pending) {
        if (tslot < 0 || tslot >= static_cast<std::int64_t>(nslots) || slot_to_insn[static_cast<std::size_t>(tslot)] < 0) {
            throw DecodeError(DecodeError::Code::BadBranchTarget, idx,
                              "branch target slot " + std::to_string(tslot) + " is invalid");
        }
        prog.instructions[idx].target = slot_to_insn[static_cast<std::size_t>(tslot)];
    }
    return prog;
}

std::uint8_t opcode_of(const Instruction& insn) {
    const auto wcls = [&](std::uint8_t c32, std::uint8_t c64) { return insn.width == 32 ? c32 : c64; };
    switch (insn.kind) {
    case Kind::AluBinary:
        return static_cast<std::uint8_t>((insn.op << 4) | (insn.src ? kSrcX : 0) | wcls(kClassAlu, kClassAlu64));
    case Kind::AluUnary:
        if (insn.alu_op() == AluOp::Neg) return static_cast<std::uint8_t>(0x80 | wcls(kClassAlu, kClassAlu64));
        return static_cast<std::uint8_t>(0xd0 | (insn.alu_op() == AluOp::Be ? kSrcX : 0) | kClassAlu);
    case Kind::MovImm: return static_cast<std::uint8_t>(0xb0 | wcls(kClassAlu, kClassAlu64));
    case Kind::MovReg: return static_cast<std::uint8_t>(0xb0 | kSrcX | wcls(kClassAlu, kClassAlu64));
    case Kind::Load: return static_cast<std::uint8_t>(kClassLdx | kModeMem | size_bits(insn.width));
    case Kind::Store:
        return static_cast<std::uint8_t>((insn.src ? kClassStx : kClassSt) | kModeMem | size_bits(insn.width));
    case Kind::LoadImm64: return 0x18;
    case Kind::Branch:
        return static_cast<std::uint8_t>((insn.op << 4) | (insn.src ? kSrcX : 0) | wcls(kClassJmp32, kClassJmp));
    case Kind::JumpAlways: return kClassJmp | kOpJa;
    case Kind::Call: return kClassJmp | kOpCall;
    case Kind::Exit: return kClassJmp | kOpExit;
    case Kind::AluThreeOp: return insn.src2 ? kOpAluThreeOpReg : kOpAluThreeOpImm;
    case Kind::Load48: return kOpLoad48;
    case Kind::Store48: return kOpStore48;
    case Kind::EarlyExit: return kOpEarlyExit;
    }
    throw EncodeError("unknown instruction kind");
}

std::vector<std::uint8_t> encode(const Program& program) {
    const auto& insns = program.instructions;
    std::vector<std::size_t> slot_of(insns.size() + 1, 0);
    for (std::size_t i = 0; i < insns.size(); ++i) slot_of[i + 1] = slot_of[i] + static_cast<std::size_t>(insns[i].slots());

    std::vector<std::uint8_t> out;
    out.reserve(slot_of.back() * 8);
    for (std::size_t i = 0; i < insns.size(); ++i) {
        const Instruction& insn = insns[i];
        Word w{};
        w.opcode = opcode_of(insn);
        w.dst = insn.dst.index;
        w.src = insn.src ? insn.src->index : 0;
        w.off = insn.offset;
        switch (insn.kind) {
        case Kind::LoadImm64: {
            const auto v = static_cast<std::uint64_t>(insn.imm);
            w.src = insn.map_ref ? 1 : 0;
            w.off = 0;
            w.imm = static_cast<std::int32_t>(static_cast<std::uint32_t>(v));
            write_word(out, w);
            Word hi{};
            hi.imm = static_cast<std::int32_t>(static_cast<std::uint32_t>(v >> 32));
            write_word(out, hi);
            continue;
        }
        case Kind::Branch:
        case Kind::JumpAlways: {
            if (insn.target < 0 || static_cast<std::size_t>(insn.target) >= insns.size()) {
                throw EncodeError("branch target out of range at instruction " + std::to_string(i));
            }
            const auto rel = static_cast<std::int64_t>(slot_of[static_cast<std::size_t>(insn.target)]) -
                             static_cast<std::int64_t>(slot_of[i]) - 1;
            if (rel < std::numeric_limits<std::int16_t>::min() || rel > std::numeric_limits<std::int16_t>::max()) {
                throw EncodeError("branch offset out of range at instruction " + std::to_string(i));
            }
            w.off = static_cast<std::int16_t>(rel);
            w.imm = to_imm32(insn.imm);
            break;
        }
        case Kind::AluThreeOp: {
            const auto op = static_cast<std::uint16_t>(insn.op << 4);
            w.off = static_cast<std::int16_t>(op | (insn.src2 ? insn.src2->index : 0));
            w.imm = to_imm32(insn.imm);
            break;
        }
        default:
            w.imm = to_imm32(insn.imm);
            break;
        }
        write_word(out, w);
    }
    return out;
}

}  // namespace xdpvliw::isa
