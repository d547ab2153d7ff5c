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

#include <catch_amalgamated.hpp>

#include <random>

#include "support/oracles.hpp"
#include "xdpvliw/assembly.hpp"
#include "xdpvliw/codec.hpp"
#include "xdpvliw/harness.hpp"
#include "xdpvliw/symbols.hpp"

using namespace xdpvliw;
using isa::Kind;

namespace {

std::vector<std::uint8_t> bytes(std::initializer_list<int> v) {
    std::vector<std::uint8_t> out;
    for (int b : v) out.push_back(static_cast<std::uint8_t>(b));
    return out;
}

std::vector<isa::Program> fuzz_programs(std::size_t n, std::uint64_t seed) {
    std::vector<isa::Program> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(harness::generate_case(harness::case_seed(seed, i)).program);
    return out;
}

// Field split of one 8-byte eBPF word, written independently of the codec.
struct RawWord {
    int opcode, dst, src, offset;
    std::int32_t imm;
};

RawWord split_word(const std::vector<std::uint8_t>& b) {
    RawWord w{};
    w.opcode = b[0];
    w.dst = b[1] & 0xf;
    w.src = b[1] >> 4;
    w.offset = static_cast<std::int16_t>(b[2] | b[3] << 8);
    w.imm = static_cast<std::int32_t>(static_cast<std::uint32_t>(b[4]) | static_cast<std::uint32_t>(b[5]) << 8 |
                                      static_cast<std::uint32_t>(b[6]) << 16 | static_cast<std::uint32_t>(b[7]) << 24);
    return w;
}

}  // namespace

TEST_CASE("decode rejects a zero word") {
    try {
        (void)isa::decode(bytes({0, 0, 0, 0, 0, 0, 0, 0}));
        FAIL("no error");
    } catch (const isa::DecodeError& e) {
        CHECK(e.code() == isa::DecodeError::Code::UnknownOpcode);
        CHECK(e.index() == 0);
    }
}

TEST_CASE("decode mov r0, 1") {
    const auto raw = bytes({0xb7, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00});
    const RawWord w = split_word(raw);
    // class ALU64 (0x07), op MOV (0xb0), source K (0x00)
    REQUIRE((w.opcode & 0x07) == 0x07);
    REQUIRE((w.opcode & 0xf0) == 0xb0);
    REQUIRE((w.opcode & 0x08) == 0);
    const isa::Program p = isa::decode(raw);
    REQUIRE(p.size() == 1);
    const auto& x = p.instructions[0];
    CHECK(x.kind == Kind::MovImm);
    CHECK(x.dst.index == w.dst);
    CHECK(x.imm == w.imm);
    CHECK(x.width == 64);
}

TEST_CASE("decode errors") {
    SECTION("truncated") {
        try {
            (void)isa::decode(bytes({0xb7, 0, 0, 0}));
            FAIL("no error");
        } catch (const isa::DecodeError& e) {
            CHECK(e.code() == isa::DecodeError::Code::TruncatedStream);
        }
    }
    SECTION("lddw at the end of the stream") {
        try {
            (void)isa::decode(bytes({0x18, 0x01, 0, 0, 1, 0, 0, 0}));
            FAIL("no error");
        } catch (const isa::DecodeError& e) {
            CHECK(e.code() == isa::DecodeError::Code::TruncatedStream);
        }
    }
    SECTION("lddw followed by a real instruction") {
        try {
            (void)isa::decode(bytes({0x18, 0x01, 0, 0, 1, 0, 0, 0, 0x95, 0, 0, 0, 0, 0, 0, 0}));
            FAIL("no error");
        } catch (const isa::DecodeError& e) {
            CHECK(e.code() == isa::DecodeError::Code::DanglingLddwSecondHalf);
            CHECK(e.index() == 1);
        }
    }
}

TEST_CASE("encode fixed words") {
    CHECK(isa::encode(isa::Program{}).empty());
    isa::Program p;
    p.instructions = {isa::exit_insn()};
    CHECK(isa::encode(p) == bytes({0x95, 0, 0, 0, 0, 0, 0, 0}));
    p.instructions = {isa::early_exit(1)};
    CHECK(isa::encode(p) == bytes({isa::kOpEarlyExit, 0, 0, 0, 1, 0, 0, 0}));
}

TEST_CASE("extended opcodes use bytes unassigned in base eBPF") {
    // Every opcode byte the base ISA defines, enumerated by class.
    std::set<int> base;
    for (int cls : {0x04, 0x07}) {
        for (int op = 0; op <= 0xd; ++op) {
            base.insert(cls | op << 4);
            base.insert(cls | op << 4 | 0x08);
        }
    }
    for (int cls : {0x05, 0x06}) {
        for (int op : {0x1, 0x2, 0x3, 0x4, 0x5, 0x6, 0x7, 0xa, 0xb, 0xc, 0xd}) {
            base.insert(cls | op << 4);
            base.insert(cls | op << 4 | 0x08);
        }
    }
    // ja, call, exit (immediate forms only)
    for (int op : {0x05, 0x06, 0x85, 0x95}) base.insert(op);
    for (int sz : {0x00, 0x08, 0x10, 0x18}) {
        for (int mode : {0x00, 0x20, 0x40, 0x60, 0x80, 0xa0, 0xc0}) {
            for (int cls : {0x00, 0x01, 0x02, 0x03}) base.insert(mode | sz | cls);
        }
    }
    for (int op : {isa::kOpAluThreeOpImm, isa::kOpAluThreeOpReg, isa::kOpLoad48, isa::kOpStore48, isa::kOpEarlyExit}) {
        CHECK_FALSE(base.contains(op));
    }
}

TEST_CASE("codec round trip on generated programs") {
    for (const auto& p : fuzz_programs(1000, 11)) {
        const auto b = isa::encode(p);
        const isa::Program q = isa::decode(b);
        REQUIRE(q == p);
        REQUIRE(isa::encode(q) == b);
    }
}

TEST_CASE("codec round trip of every extended form") {
    isa::Program p;
    p.instructions = {isa::alu3_imm(isa::AluOp::Add, isa::R4, isa::R1, 20),
                      isa::alu3_reg(isa::AluOp::Xor, isa::R5, isa::R2, isa::R3),
                      isa::load48(isa::R2, isa::R7, 6),
                      isa::store48(isa::R7, 0, isa::R2),
                      isa::early_exit(3)};
    CHECK(isa::decode(isa::encode(p)) == p);
}

TEST_CASE("parse_asm listing forms") {
    const isa::Program two = isa::parse_asm("r4 = r1\nr4 += 20\n");
    REQUIRE(two.size() == 2);
    CHECK(two.instructions[0] == isa::mov_reg(isa::R4, isa::R1));
    CHECK(two.instructions[1] == isa::alu_imm(isa::AluOp::Add, isa::R4, 20));

    const isa::Program one = isa::parse_asm("r4 = r1 + 20");
    REQUIRE(one.size() == 1);
    CHECK(one.instructions[0] == isa::alu3_imm(isa::AluOp::Add, isa::R4, isa::R1, 20));

    const isa::Program e = isa::parse_asm("exit");
    REQUIRE(e.size() == 1);
    CHECK(e.instructions[0].kind == Kind::Exit);
}

TEST_CASE("parse_asm classic mnemonics match infix") {
    CHECK(isa::parse_asm("mov r4, r1\nadd r4, 20\nexit") == isa::parse_asm("r4 = r1\nr4 += 20\nexit"));
    CHECK(isa::parse_asm("ldxw r2, [r1+0]\nexit") == isa::parse_asm("r2 = *(u32 *)(r1 + 0)\nexit"));
}

TEST_CASE("parse_asm errors") {
    auto code_of = [](const char* text) {
        try {
            (void)isa::parse_asm(text);
        } catch (const isa::AsmError& e) {
            return e.code();
        }
        FAIL("no error");
        return isa::AsmError::Code::SyntaxError;
    };
    CHECK(code_of("frobnicate r1\n") == isa::AsmError::Code::UnknownMnemonic);
    CHECK(code_of("goto nowhere\nexit\n") == isa::AsmError::Code::UndefinedLabel);
    CHECK(code_of("L1:\nL1:\nexit\n") == isa::AsmError::Code::DuplicateLabel);
    try {
        (void)isa::parse_asm("r0 = 1\nr1 = = 2\nexit\n");
        FAIL("no error");
    } catch (const isa::AsmError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("format/parse round trip on generated programs") {
    for (const auto& p : fuzz_programs(300, 12)) REQUIRE(isa::parse_asm(isa::format_asm(p)) == p);
}

TEST_CASE("validate") {
    isa::Program p;
    p.instructions = {isa::mov_imm(isa::R0, 1)};
    CHECK_THROWS_AS(isa::validate(p), Error);
    p.instructions = {isa::jump(5), isa::exit_insn()};
    CHECK_THROWS_AS(isa::validate(p), Error);
    p.instructions = {isa::jump(1), isa::exit_insn()};
    CHECK_NOTHROW(isa::validate(p));
}

TEST_CASE("eval_alu arithmetic") {
    using isa::AluOp;
    CHECK(isa::eval_alu(AluOp::Add, 32, 0xffffffffULL, 1) == 0);
    CHECK(isa::eval_alu(AluOp::Add, 64, ~0ULL, 1) == 0);
    CHECK(isa::eval_alu(AluOp::Div, 64, 7, 0) == 0);
    CHECK(isa::eval_alu(AluOp::Mod, 64, 7, 0) == 0);
    CHECK(isa::eval_alu(AluOp::Arsh, 64, 0x8000000000000000ULL, 63) == ~0ULL);
    CHECK(isa::eval_alu(AluOp::Rsh, 64, 0x8000000000000000ULL, 63) == 1);
    CHECK(isa::eval_alu(AluOp::Arsh, 32, 0x80000000ULL, 31) == 0xffffffffULL);
    CHECK(isa::eval_alu(AluOp::Be, 64, 0x1234, 16) == 0x3412);
    CHECK(isa::eval_jump(isa::JmpOp::Sgt, 64, 1, ~0ULL));
    CHECK_FALSE(isa::eval_jump(isa::JmpOp::Gt, 64, 1, ~0ULL));
}

TEST_CASE("io_sets of the three-operand add") {
    const auto s = isa::io_sets(isa::alu3_imm(isa::AluOp::Add, isa::R4, isa::R1, 20));
    CHECK(s.inputs == std::vector<isa::Symbol>{isa::Symbol::of(isa::R1)});
    CHECK(s.outputs == std::vector<isa::Symbol>{isa::Symbol::of(isa::R4)});
}

TEST_CASE("io_sets stack store matches the byte-level tracer") {
    const isa::Instruction st = isa::store_reg(4, isa::R10, -8, isa::R2);
    const auto s = isa::io_sets(st);
    const isa::SymbolSet in = s.input_set();
    const isa::SymbolSet out = s.output_set();
    CHECK(in.contains(isa::R2));
    CHECK(in.contains(isa::R10));
    std::mt19937_64 rng(5);
    std::set<int> touched;
    for (int t = 0; t < 200; ++t) {
        auto state = oracles::random_state(rng);
        for (int o : oracles::changed_stack_bytes(st, state)) touched.insert(o);
    }
    CHECK(touched == std::set<int>{-8, -7, -6, -5});
    for (int o = -isa::kStackSize; o < 0; ++o) CHECK(out.stack_byte(o) == touched.contains(o));
    CHECK(out.registers() == 0);
}

TEST_CASE("io_sets of a map lookup call") {
    const auto s = isa::io_sets(isa::call(1));
    const auto in = s.input_set();
    const auto out = s.output_set();
    CHECK(in.contains(isa::R1));
    CHECK(in.contains(isa::R2));
    CHECK_FALSE(in.contains(isa::R3));
    CHECK(out.contains(isa::R0));
    CHECK(out.registers() == (1U << 0));
    isa::SymbolSet maps;
    maps.add(isa::Symbol::region(isa::Symbol::Kind::AnyMap));
    CHECK(in.intersects(maps));
}

TEST_CASE("io_sets soundness on randomized state pairs") {
    std::mt19937_64 rng(99);
    std::size_t checked = 0;
    for (const auto& p : fuzz_programs(60, 13)) {
        for (const auto& insn : p.instructions) {
            if (insn.kind == Kind::Call || insn.kind == Kind::LoadImm64) continue;
            const auto s = isa::io_sets(insn);
            const isa::SymbolSet in = s.input_set();
            const isa::SymbolSet out = s.output_set();
            for (int t = 0; t < 20; ++t) {
                vm::MachineState a = oracles::random_state(rng);
                // Point some registers at the stack and packet so memory ops resolve.
                for (int r = 0; r < 10; ++r) {
                    const auto pick = rng() % 3;
                    if (pick == 0) a.regs[static_cast<std::size_t>(r)] = vm::kStackBase + 256 + rng() % 256;
                    if (pick == 1) a.regs[static_cast<std::size_t>(r)] = a.data_addr() + rng() % 32;
                }
                vm::MachineState b = a;
                for (int r = 0; r < 10; ++r) {
                    if (!in.contains(isa::Reg(r))) b.regs[static_cast<std::size_t>(r)] = rng();
                }
                for (int o = -isa::kStackSize; o < 0; ++o) {
                    if (!in.stack_byte(o)) b.stack[static_cast<std::size_t>(o + isa::kStackSize)] = static_cast<std::uint8_t>(rng());
                }
                const vm::Effect ea = vm::evaluate(insn, a);
                const vm::Effect eb = vm::evaluate(insn, b);
                REQUIRE(ea.trap.has_value() == eb.trap.has_value());
                if (ea.trap) continue;
                REQUIRE(ea.reg == eb.reg);
                REQUIRE(ea.control == eb.control);
                REQUIRE(ea.target == eb.target);
                REQUIRE(ea.mem.has_value() == eb.mem.has_value());
                if (ea.reg) REQUIRE(out.contains(isa::Reg(ea.reg->first)));
                if (ea.mem) {
                    REQUIRE(ea.mem->addr == eb.mem->addr);
                    REQUIRE(ea.mem->value == eb.mem->value);
                    if (ea.mem->addr >= vm::kStackBase && ea.mem->addr < vm::kStackBase + isa::kStackSize) {
                        const int lo = static_cast<int>(ea.mem->addr - vm::kStackBase) - isa::kStackSize;
                        for (int o = lo; o < lo + ea.mem->width; ++o) REQUIRE(out.stack_byte(o));
                    } else {
                        REQUIRE(out.has_memory());
                    }
                }
                ++checked;
            }
        }
    }
    CHECK(checked > 1000);
}
