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

#include <atomic>
#include <chrono>
#include <cstring>
#include <random>
#include <sstream>
#include <thread>

#include "xdpvliw/assembly.hpp"
#include "xdpvliw/harness.hpp"
#include "xdpvliw/helpers.hpp"

namespace xdpvliw::harness {

using isa::Instruction;
using isa::Reg;

// ---- differential execution ----

Comparison compare(const isa::Program& source, const vliw::VliwProgram& compiled, const vm::Packet& packet,
                   const vm::MapStore& maps, vm::MapStore* final_maps, const sephirot::RunOptions& options) {
    Comparison c;
    vm::MapStore om;
    vm::MapStore vmaps;
    c.oracle = vm::run_oracle(source, packet, maps, &om, options.limits);
    c.vliw = sephirot::run_vliw(compiled, packet, maps, &vmaps, options);
    const vm::XdpResult& a = c.oracle;
    const vm::XdpResult& b = c.vliw.result;
    auto miss = [&](std::string m) {
        c.equivalent = false;
        c.mismatches.push_back(std::move(m));
    };
    if (a.action != b.action) {
        miss(std::string("action: oracle ") + vm::action_name(a.action) + ", vliw " + vm::action_name(b.action));
    }
    if (a.trap.has_value() != b.trap.has_value()) {
        miss(std::string("trap: oracle ") + (a.trap ? vm::trap_kind_name(a.trap->kind) : "none") + ", vliw " +
             (b.trap ? vm::trap_kind_name(b.trap->kind) : "none"));
    }
    if (!a.trap && !b.trap) {
        if (a.packet != b.packet) miss("packet: oracle " + to_hex(a.packet) + ", vliw " + to_hex(b.packet));
        if (a.action == vm::Action::Redirect && a.redirect != b.redirect) miss("redirect target differs");
    }
    if (!om.same_contents(vmaps)) miss("maps: oracle\n" + om.describe() + "vliw\n" + vmaps.describe());
    for (const auto& v : c.vliw.hazard_violations) miss("forwarding: " + sephirot::describe(v));
    if (final_maps) *final_maps = std::move(om);
    return c;
}

// ---- generator ----

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Largest packet offset the body touches; packets are at least 64 bytes and
// adjust_head shrinks them by at most 16.
constexpr int kPacketWindow = 40;
constexpr std::uint32_t kDevMap = 3;

class Generator {
  public:
    explicit Generator(std::uint64_t seed) : rng_(seed) {}

    FuzzCase make(std::uint64_t seed) {
        FuzzCase c;
        c.seed = seed;
        c.maps = make_maps();
        c.packet = make_packet();
        c.program = make_program();
        c.program.maps = c.maps.defs;
        return c;
    }

  private:
    std::uint64_t next() { return rng_(); }
    int below(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }
    int range(int lo, int hi) { return lo + below(hi - lo + 1); }
    bool chance(int percent) { return below(100) < percent; }
    template <class T, std::size_t N>
    T pick(const T (&a)[N]) {
        return a[below(static_cast<int>(N))];
    }

    Reg scratch() {
        static constexpr int regs[] = {0, 1, 2, 3, 4, 5, 9};
        return Reg(pick(regs));
    }
    int width() { return chance(70) ? 64 : 32; }
    std::int64_t imm() {
        switch (below(4)) {
        case 0: return range(-4, 4);
        case 1: return range(0, 255);
        case 2: return static_cast<std::int32_t>(next());
        default: return range(-70000, 70000);
        }
    }
    int mem_width() {
        static constexpr int w[] = {1, 2, 4, 8};
        return pick(w);
    }

    MapConfig make_maps() {
        MapConfig m;
        m.defs = {{0, isa::MapKind::Hash, 4, 8, 8},
                  {1, isa::MapKind::Array, 4, 8, 4},
                  {2, isa::MapKind::LruHash, 4, 8, 2},
                  {kDevMap, isa::MapKind::Array, 4, 4, 4}};
        for (std::uint32_t id : {0U, 2U}) {
            const int n = below(id == 0 ? 5 : 3);
            for (int i = 0; i < n; ++i) m.entries.push_back({id, bytes(static_cast<std::uint32_t>(below(6)), 4), bytes(next(), 8)});
        }
        for (std::uint32_t k = 0; k < 4; ++k) {
            if (chance(50)) m.entries.push_back({1, bytes(k, 4), bytes(next(), 8)});
            if (chance(50)) m.entries.push_back({kDevMap, bytes(k, 4), bytes(static_cast<std::uint64_t>(below(8)), 4)});
        }
        return m;
    }

    static std::vector<std::uint8_t> bytes(std::uint64_t v, int n) {
        std::vector<std::uint8_t> b(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) b[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v >> (8 * i));
        return b;
    }

    vm::Packet make_packet() {
        vm::Packet p;
        p.data.resize(static_cast<std::size_t>(range(64, 160)));
        for (auto& b : p.data) b = static_cast<std::uint8_t>(next());
        if (chance(50)) {
            p.data[12] = 0x08;
            p.data[13] = 0x00;
        }
        p.ingress_port = static_cast<std::uint32_t>(below(4));
        return p;
    }

    // ---- program construction with forward labels ----

    int new_label() { return labels_++; }
    void bind(int label) { bound_.emplace_back(label, static_cast<std::int32_t>(code_.size())); }
    void emit(Instruction i) { code_.push_back(i); }
    void emit_branch(Instruction i, int label) {
        fixups_.emplace_back(static_cast<std::int32_t>(code_.size()), label);
        code_.push_back(i);
    }

    isa::JmpOp jmp_op() {
        static constexpr isa::JmpOp ops[] = {isa::JmpOp::Eq,  isa::JmpOp::Gt,  isa::JmpOp::Ge,  isa::JmpOp::Set,
                                             isa::JmpOp::Ne,  isa::JmpOp::Sgt, isa::JmpOp::Sge, isa::JmpOp::Lt,
                                             isa::JmpOp::Le,  isa::JmpOp::Slt, isa::JmpOp::Sle};
        return pick(ops);
    }

    Instruction cond_branch() {
        const int w = width();
        if (chance(50)) return isa::branch_imm(jmp_op(), scratch(), range(-8, 300), 0, w);
        return isa::branch_reg(jmp_op(), scratch(), scratch(), 0, w);
    }

    void alu_op() {
        static constexpr isa::AluOp ops[] = {isa::AluOp::Add, isa::AluOp::Sub, isa::AluOp::Mul, isa::AluOp::Div,
                                             isa::AluOp::Or,  isa::AluOp::And, isa::AluOp::Lsh, isa::AluOp::Rsh,
                                             isa::AluOp::Mod, isa::AluOp::Xor, isa::AluOp::Arsh, isa::AluOp::Add,
                                             isa::AluOp::Xor, isa::AluOp::And};
        const int r = below(20);
        if (r == 0) {
            emit(isa::alu_imm(isa::AluOp::Neg, scratch(), 0, width()));
            return;
        }
        if (r == 1) {
            static constexpr int bits[] = {16, 32, 64};
            emit(isa::alu_imm(chance(50) ? isa::AluOp::Le : isa::AluOp::Be, scratch(), pick(bits), 64));
            return;
        }
        if (r == 2) {
            emit(isa::mov_imm(scratch(), imm(), width()));
            return;
        }
        if (r == 3) {
            emit(isa::mov_reg(scratch(), scratch(), width()));
            return;
        }
        if (r == 4) {
            emit(isa::load_imm64(scratch(), static_cast<std::int64_t>(next())));
            return;
        }
        const isa::AluOp op = pick(ops);
        const int w = width();
        if (chance(50)) {
            std::int64_t v = imm();
            if (op == isa::AluOp::Lsh || op == isa::AluOp::Rsh || op == isa::AluOp::Arsh) v = below(w);
            emit(isa::alu_imm(op, scratch(), v, w));
        } else {
            emit(isa::alu_reg(op, scratch(), scratch(), w));
        }
    }

    void three_operand_idiom() {
        const Reg d = scratch();
        if (chance(60)) {
            emit(isa::mov_reg(d, chance(25) ? Reg(static_cast<int>(range(6, 8))) : scratch()));
            static constexpr isa::AluOp ops[] = {isa::AluOp::Add, isa::AluOp::Sub, isa::AluOp::Or, isa::AluOp::And,
                                                 isa::AluOp::Xor, isa::AluOp::Lsh, isa::AluOp::Mul};
            const isa::AluOp op = pick(ops);
            if (chance(50)) emit(isa::alu_imm(op, d, op == isa::AluOp::Lsh ? below(64) : imm()));
            else emit(isa::alu_reg(op, d, scratch()));
        } else {
            emit(isa::mov_imm(d, imm()));
            static constexpr isa::AluOp ops[] = {isa::AluOp::Add, isa::AluOp::Or, isa::AluOp::And, isa::AluOp::Xor,
                                                 isa::AluOp::Mul};
            emit(isa::alu_reg(pick(ops), d, scratch()));
        }
    }

    int packet_off(int w) { return below(kPacketWindow - w + 1); }

    void packet_access() {
        const int w = mem_width();
        const int off = packet_off(w);
        switch (below(3)) {
        case 0: emit(isa::load(w, scratch(), isa::R7, static_cast<std::int16_t>(off))); break;
        case 1: emit(isa::store_reg(w, isa::R7, static_cast<std::int16_t>(off), scratch())); break;
        default: emit(isa::store_imm(w, isa::R7, static_cast<std::int16_t>(off), imm())); break;
        }
    }

    // May run past the end of a short packet; both engines must trap alike.
    void risky_access() {
        const int w = mem_width();
        const int off = range(60, 170);
        if (chance(50)) emit(isa::load(w, scratch(), isa::R7, static_cast<std::int16_t>(off)));
        else emit(isa::store_reg(w, isa::R7, static_cast<std::int16_t>(off), scratch()));
    }

    void cursor_access() {
        const int w = mem_width();
        const int k = range(1, kPacketWindow - w);
        const Reg c = chance(50) ? isa::R9 : scratch();
        emit(isa::mov_reg(c, isa::R7));
        emit(isa::alu_imm(isa::AluOp::Add, c, k));
        const int off = below(kPacketWindow - w - k + 1);
        Reg d = scratch();
        while (d == c) d = scratch();
        if (chance(60)) emit(isa::load(w, d, c, static_cast<std::int16_t>(off)));
        else emit(isa::store_reg(w, c, static_cast<std::int16_t>(off), d));
    }

    int stack_off(int w) { return -w * range(1, 256 / w); }

    void stack_access() {
        const int w = mem_width();
        const int off = stack_off(w);
        switch (below(4)) {
        case 0: emit(isa::store_reg(w, isa::R10, static_cast<std::int16_t>(off), scratch())); break;
        case 1: emit(isa::store_imm(w, isa::R10, static_cast<std::int16_t>(off), chance(40) ? 0 : imm())); break;
        default: emit(isa::load(w, scratch(), isa::R10, static_cast<std::int16_t>(off))); break;
        }
    }

    void copy6() {
        const bool to_stack = chance(30);
        const int a = below(kPacketWindow - 6 + 1);
        int b = below(kPacketWindow - 6 + 1);
        const Reg lo = chance(50) ? isa::R2 : isa::R4;
        const Reg hi = lo == isa::R2 ? isa::R3 : isa::R5;
        const bool lo_first = chance(70);
        const int lw = lo_first ? 4 : 2;
        const int hw = 6 - lw;
        emit(isa::load(lw, lo, isa::R7, static_cast<std::int16_t>(a)));
        emit(isa::load(hw, hi, isa::R7, static_cast<std::int16_t>(a + lw)));
        if (chance(40)) alu_op();
        const Reg base = to_stack ? isa::R10 : isa::R7;
        if (to_stack) b = -8 * range(1, 60);
        emit(isa::store_reg(lw, base, static_cast<std::int16_t>(b), lo));
        emit(isa::store_reg(hw, base, static_cast<std::int16_t>(b + lw), hi));
    }

    void mac_swap() {
        emit(isa::load(4, isa::R2, isa::R7, 0));
        emit(isa::load(2, isa::R3, isa::R7, 4));
        emit(isa::load(4, isa::R4, isa::R7, 6));
        emit(isa::load(2, isa::R5, isa::R7, 10));
        emit(isa::store_reg(4, isa::R7, 0, isa::R4));
        emit(isa::store_reg(2, isa::R7, 4, isa::R5));
        emit(isa::store_reg(4, isa::R7, 6, isa::R2));
        emit(isa::store_reg(2, isa::R7, 10, isa::R3));
    }

    void key_on_stack(int off) {
        if (chance(50)) {
            emit(isa::store_imm(4, isa::R10, static_cast<std::int16_t>(off), below(6)));
        } else {
            const Reg s = scratch();
            emit(isa::alu_imm(isa::AluOp::And, s, 7));
            emit(isa::store_reg(4, isa::R10, static_cast<std::int16_t>(off), s));
        }
    }

    std::uint32_t data_map() { return static_cast<std::uint32_t>(below(3)); }

    void map_lookup() {
        key_on_stack(-4);
        emit(isa::load_map(isa::R1, data_map()));
        emit(isa::mov_reg(isa::R2, isa::R10));
        emit(isa::alu_imm(isa::AluOp::Add, isa::R2, -4));
        emit(isa::call(static_cast<std::int64_t>(isa::HelperId::MapLookup)));
        const int skip = new_label();
        emit_branch(isa::branch_imm(isa::JmpOp::Eq, isa::R0, 0, 0), skip);
        const int w = mem_width();
        const int off = w * below(8 / w);
        const Reg t = chance(50) ? isa::R3 : isa::R9;
        emit(isa::load(w, t, isa::R0, static_cast<std::int16_t>(off)));
        emit(isa::alu_imm(isa::AluOp::Add, t, range(1, 9)));
        emit(isa::store_reg(w, isa::R0, static_cast<std::int16_t>(off), t));
        if (chance(30)) emit(isa::store_imm(w, isa::R0, static_cast<std::int16_t>(off), imm()));
        bind(skip);
    }

    void map_update() {
        key_on_stack(-8);
        emit(isa::store_reg(8, isa::R10, -16, scratch()));
        emit(isa::load_map(isa::R1, data_map()));
        emit(isa::mov_reg(isa::R2, isa::R10));
        emit(isa::alu_imm(isa::AluOp::Add, isa::R2, -8));
        emit(isa::mov_reg(isa::R3, isa::R10));
        emit(isa::alu_imm(isa::AluOp::Add, isa::R3, -16));
        emit(isa::mov_imm(isa::R4, chance(70) ? 0 : range(0, 3)));
        emit(isa::call(static_cast<std::int64_t>(isa::HelperId::MapUpdate)));
    }

    void map_delete() {
        key_on_stack(-8);
        emit(isa::load_map(isa::R1, data_map()));
        emit(isa::mov_reg(isa::R2, isa::R10));
        emit(isa::alu_imm(isa::AluOp::Add, isa::R2, -8));
        emit(isa::call(static_cast<std::int64_t>(isa::HelperId::MapDelete)));
    }

    void csum() {
        static constexpr int sizes[] = {0, 4, 8, 8, 3};
        const int from = pick(sizes);
        const int to = pick(sizes);
        emit(isa::mov_reg(isa::R1, isa::R10));
        emit(isa::alu_imm(isa::AluOp::Add, isa::R1, -32));
        emit(isa::mov_imm(isa::R2, from));
        emit(isa::mov_reg(isa::R3, isa::R7));
        emit(isa::alu_imm(isa::AluOp::Add, isa::R3, below(kPacketWindow - 8 + 1)));
        emit(isa::mov_imm(isa::R4, to));
        emit(isa::mov_reg(isa::R5, scratch()));
        emit(isa::call(static_cast<std::int64_t>(isa::HelperId::CsumDiff)));
    }

    void adjust_head() {
        static constexpr int deltas[] = {-16, -8, -4, -2, 2, 4, 8, 14, 16, -300};
        emit(isa::mov_reg(isa::R1, isa::R6));
        emit(isa::mov_imm(isa::R2, pick(deltas)));
        emit(isa::call(static_cast<std::int64_t>(isa::HelperId::XdpAdjustHead)));
        emit(isa::load(4, isa::R7, isa::R6, 0));
        emit(isa::load(4, isa::R8, isa::R6, 4));
    }

    void redirect() {
        emit(isa::load_map(isa::R1, kDevMap));
        emit(isa::mov_imm(isa::R2, below(6)));
        emit(isa::mov_imm(isa::R3, below(4)));
        emit(isa::call(static_cast<std::int64_t>(isa::HelperId::RedirectMap)));
    }

    void conditional_exit() {
        const int next = new_label();
        emit_branch(cond_branch(), next);
        emit(isa::mov_imm(isa::R0, below(6), chance(80) ? 64 : 32));
        emit(isa::exit_insn());
        bind(next);
    }

    void body(int segments, int end_label) {
        // Branch targets are labels bound at later segment starts.
        std::vector<int> starts;
        for (int i = 0; i < segments; ++i) starts.push_back(new_label());
        starts.push_back(end_label);
        bool adjusted = false;
        for (int i = 0; i < segments; ++i) {
            bind(starts[static_cast<std::size_t>(i)]);
            const int n = range(1, 3);
            for (int k = 0; k < n; ++k) {
                const int r = below(100);
                if (r < 22) alu_op();
                else if (r < 32) three_operand_idiom();
                else if (r < 42) packet_access();
                else if (r < 47) cursor_access();
                else if (r < 55) stack_access();
                else if (r < 59) copy6();
                else if (r < 61) mac_swap();
                else if (r < 67) map_lookup();
                else if (r < 71) map_update();
                else if (r < 73) map_delete();
                else if (r < 76) csum();
                else if (r < 78 && !adjusted) {
                    adjust_head();
                    adjusted = true;
                } else if (r < 80) redirect();
                else if (r < 86) conditional_exit();
                else if (r < 87) risky_access();
                else {
                    const int t = starts[static_cast<std::size_t>(range(i + 1, segments))];
                    if (chance(15)) emit_branch(isa::jump(0), t);
                    else emit_branch(cond_branch(), t);
                }
            }
        }
    }

    isa::Program make_program() {
        code_.clear();
        fixups_.clear();
        bound_.clear();
        labels_ = 0;
        const int abort = new_label();
        const int end = new_label();

        emit(isa::mov_reg(isa::R6, isa::R1));
        emit(isa::load(4, isa::R7, isa::R6, 0));
        emit(isa::load(4, isa::R8, isa::R6, 4));
        if (chance(70)) {
            const int k = range(1, 3);
            int len = 0;
            for (int i = 0; i < k; ++i) {
                len = std::min(64, len + range(6, 24));
                emit(isa::mov_reg(isa::R9, isa::R7));
                emit(isa::alu_imm(isa::AluOp::Add, isa::R9, len));
                if (chance(70)) emit_branch(isa::branch_reg(isa::JmpOp::Gt, isa::R9, isa::R8, 0), abort);
                else emit_branch(isa::branch_reg(isa::JmpOp::Lt, isa::R8, isa::R9, 0), abort);
            }
        }
        if (chance(50)) {
            const int n = range(1, 4);
            for (int i = 0; i < n; ++i) {
                if (chance(50)) emit(isa::mov_imm(scratch(), 0));
                else emit(isa::store_imm(8, isa::R10, static_cast<std::int16_t>(-8 * range(1, 8)), 0));
            }
        }
        body(range(3, 12), end);
        bind(end);
        switch (below(3)) {
        case 0: emit(isa::mov_imm(isa::R0, below(5))); break;
        case 1:
            emit(isa::mov_reg(isa::R0, scratch()));
            emit(isa::alu_imm(isa::AluOp::And, isa::R0, 3));
            break;
        default: break;  // r0 as left by the body
        }
        emit(isa::exit_insn());
        bind(abort);
        emit(isa::mov_imm(isa::R0, below(2)));
        emit(isa::exit_insn());

        std::vector<std::int32_t> where(static_cast<std::size_t>(labels_), -1);
        for (auto [l, at] : bound_) where[static_cast<std::size_t>(l)] = at;
        for (auto [at, l] : fixups_) code_[static_cast<std::size_t>(at)].target = where[static_cast<std::size_t>(l)];
        isa::Program p;
        p.instructions = code_;
        return p;
    }

    std::mt19937_64 rng_;
    std::vector<Instruction> code_;
    std::vector<std::pair<std::int32_t, int>> fixups_;
    std::vector<std::pair<int, std::int32_t>> bound_;
    int labels_ = 0;
};

}  // namespace

std::uint64_t case_seed(std::uint64_t seed, std::uint64_t index) { return splitmix64(splitmix64(seed) ^ index); }

FuzzCase generate_case(std::uint64_t seed) { return Generator(seed).make(seed); }

const char* verdict_name(Verdict v) {
    switch (v) {
    case Verdict::Equivalent: return "equivalent";
    case Verdict::Divergent: return "divergent";
    case Verdict::HazardViolation: return "hazard violation";
    case Verdict::CompileError: return "compile error";
    }
    return "?";
}

CaseOutcome run_case(const FuzzCase& c, const opt::LaneConstraints& constraints, const opt::PassOptions& passes) {
    CaseOutcome out;
    out.source_size = c.program.size();
    opt::CompileResult cr;
    try {
        cr = opt::compile(c.program, constraints, passes);
    } catch (const Error& e) {
        out.verdict = Verdict::CompileError;
        out.detail = e.what();
        return out;
    }
    out.rows = cr.vliw.rows.size();
    const auto hz = sephirot::hazard_check(cr.vliw, constraints.forwarding);
    if (!hz.empty()) {
        out.verdict = Verdict::HazardViolation;
        out.detail = sephirot::describe(hz.front());
        return out;
    }
    vm::MapStore maps;
    try {
        maps = build_maps(c.maps);
    } catch (const Error& e) {
        out.verdict = Verdict::CompileError;
        out.detail = e.what();
        return out;
    }
    sephirot::RunOptions ro;
    ro.check_forwarding = constraints.forwarding;
    const Comparison cmp = compare(c.program, cr.vliw, c.packet, maps, nullptr, ro);
    out.trapped = cmp.oracle.trap.has_value();
    if (!cmp.equivalent) {
        out.verdict = Verdict::Divergent;
        for (const auto& m : cmp.mismatches) out.detail += m + "\n";
    }
    return out;
}

FuzzCase minimize(const FuzzCase& c, const std::function<bool(const FuzzCase&)>& still_fails) {
    FuzzCase best = c;
    bool progress = true;
    while (progress) {
        progress = false;
        // Chunks first, then single instructions; the final exit stays.
        for (std::size_t chunk = std::max<std::size_t>(1, best.program.size() / 4);; chunk /= 2) {
            for (std::size_t at = 0; at + 1 < best.program.size();) {
                std::vector<bool> drop(best.program.size(), false);
                const std::size_t end = std::min(at + chunk, best.program.size() - 1);
                for (std::size_t i = at; i < end; ++i) drop[i] = true;
                FuzzCase trial = best;
                try {
                    trial.program = opt::delete_instructions(best.program, drop);
                    trial.program.maps = best.program.maps;
                    isa::validate(trial.program);
                } catch (const Error&) {
                    at += chunk;
                    continue;
                }
                if (still_fails(trial)) {
                    best = std::move(trial);
                    progress = true;
                } else {
                    at += chunk;
                }
            }
            if (chunk == 1) break;
        }
    }
    return best;
}

std::string serialize_case(const FuzzCase& c) {
    std::string one_line = map_config_to_json(c.maps, -1);
    one_line.pop_back();
    std::ostringstream os;
    os << "; fuzz case seed " << c.seed << "\n";
    os << ";! packet " << to_hex(c.packet.data) << " @" << c.packet.ingress_port << "\n";
    os << ";! maps " << one_line << "\n";
    os << isa::format_asm(c.program);
    return os.str();
}

FuzzCase deserialize_case(std::string_view text) {
    FuzzCase c;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.starts_with("; fuzz case seed ")) c.seed = std::stoull(line.substr(17));
        if (line.starts_with(";! packet ")) {
            auto p = parse_packets_hex(line.substr(10));
            if (p.size() != 1) throw Error("reproducer: bad packet line");
            c.packet = p.front();
        }
        if (line.starts_with(";! maps ")) c.maps = parse_map_config(line.substr(8));
    }
    c.program = isa::parse_asm(text);
    c.program.maps = c.maps.defs;
    return c;
}

FuzzSummary fuzz(const FuzzOptions& options) {
    if (options.iterations == 0) throw Error("fuzz: iterations must be at least 1");
    opt::validate(options.constraints);
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<CaseOutcome> outcomes(options.iterations);
    std::atomic<std::uint64_t> next{0};
    auto worker = [&] {
        for (std::uint64_t i = next++; i < options.iterations; i = next++) {
            const FuzzCase c = generate_case(case_seed(options.seed, i));
            outcomes[i] = run_case(c, options.constraints, options.passes);
        }
    };
    unsigned jobs = options.jobs ? options.jobs : std::max(1U, std::thread::hardware_concurrency());
    jobs = static_cast<unsigned>(std::min<std::uint64_t>(jobs, options.iterations));
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }

    FuzzSummary s;
    s.cases = options.iterations;
    for (std::uint64_t i = 0; i < options.iterations; ++i) {
        const CaseOutcome& o = outcomes[i];
        s.total_source_instructions += o.source_size;
        s.total_rows += o.rows;
        if (o.trapped) ++s.trapped;
        switch (o.verdict) {
        case Verdict::Equivalent: ++s.equivalent; continue;
        case Verdict::Divergent: ++s.divergent; break;
        case Verdict::HazardViolation: ++s.hazard_cases; break;
        case Verdict::CompileError: ++s.compile_errors; break;
        }
        FuzzFailure f;
        f.index = i;
        f.original = generate_case(case_seed(options.seed, i));
        f.outcome = o;
        f.minimized = f.original;
        if (options.minimize && s.failures.empty()) {
            f.minimized = minimize(f.original, [&](const FuzzCase& t) {
                return run_case(t, options.constraints, options.passes).verdict == o.verdict;
            });
        }
        if (options.failure_dir) {
            const std::string stem = "case-" + std::to_string(f.original.seed);
            write_text(*options.failure_dir / (stem + ".s"), serialize_case(f.original));
            if (options.minimize && s.failures.empty()) {
                write_text(*options.failure_dir / (stem + ".min.s"), serialize_case(f.minimized));
            }
        }
        s.failures.push_back(std::move(f));
    }
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return s;
}

std::string format_fuzz_summary(const FuzzSummary& s) {
    std::ostringstream os;
    os << "cases: " << s.cases << "\n";
    os << "equivalent: " << s.equivalent << "\n";
    os << "divergent: " << s.divergent << "\n";
    os << "hazard violations: " << s.hazard_cases << "\n";
    os << "compile errors: " << s.compile_errors << "\n";
    os << "trapping cases: " << s.trapped << "\n";
    if (s.total_rows) {
        os << "mean source instructions: " << static_cast<double>(s.total_source_instructions) / static_cast<double>(s.cases)
           << ", mean rows: " << static_cast<double>(s.total_rows) / static_cast<double>(s.cases) << "\n";
    }
    os << "seconds: " << s.seconds << "\n";
    if (!s.failures.empty()) {
        const FuzzFailure& f = s.failures.front();
        os << "first failure: case " << f.index << " (seed " << f.original.seed << "), "
           << verdict_name(f.outcome.verdict) << "\n"
           << f.outcome.detail;
        if (f.outcome.detail.empty() || f.outcome.detail.back() != '\n') os << "\n";
        os << "reproducer (" << f.minimized.program.size() << " instructions):\n" << serialize_case(f.minimized);
    }
    return os.str();
}

}  // namespace xdpvliw::harness
