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

#include <algorithm>

#include "xdpvliw/analysis.hpp"
#include "xdpvliw/optimizer.hpp"
#include "xdpvliw/symbols.hpp"

namespace xdpvliw::opt {

using analysis::AbstractValue;
using isa::AluOp;
using isa::Kind;
using isa::Reg;
using AK = AbstractValue::Kind;

Program delete_instructions(const Program& program, const std::vector<bool>& remove) {
    const std::size_t n = program.instructions.size();
    std::vector<std::int32_t> next_survivor(n + 1, -1);
    std::vector<std::int32_t> new_index(n, -1);
    std::int32_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!remove[i]) new_index[i] = count++;
    }
    std::int32_t next = count;  // one past the end
    for (std::size_t i = n; i-- > 0;) {
        if (!remove[i]) next = new_index[i];
        next_survivor[i] = next;
    }
    next_survivor[n] = count;
    Program out;
    out.maps = program.maps;
    for (std::size_t i = 0; i < n; ++i) {
        if (remove[i]) continue;
        Instruction insn = program.instructions[i];
        if (insn.kind == Kind::Branch || insn.kind == Kind::JumpAlways) {
            const auto t = static_cast<std::size_t>(std::clamp<std::int32_t>(insn.target, 0, static_cast<std::int32_t>(n)));
            insn.target = next_survivor[t];
            if (insn.target >= count) throw Error("deleting instructions left a branch without a target");
        }
        out.instructions.push_back(insn);
    }
    return out;
}

namespace {

Program annotated(const Program& p) {
    Program q = p;
    analysis::annotate_regions(q);
    return q;
}

std::vector<bool> leaders(const Program& p) {
    std::vector<bool> lead(p.instructions.size() + 1, false);
    for (const auto& b : analysis::find_basic_blocks(p)) lead[static_cast<std::size_t>(b.first)] = true;
    return lead;
}

PassResult finish_pass(const Program& p, const std::vector<bool>& remove, int rewrites) {
    PassResult r;
    for (std::size_t i = 0; i < remove.size(); ++i) {
        if (remove[i]) r.removed.push_back(static_cast<std::int32_t>(i));
    }
    r.program = r.removed.empty() ? p : delete_instructions(p, remove);
    r.rewrites = rewrites;
    return r;
}

bool is_abort_block(const Program& p, std::int32_t t) {
    const auto n = static_cast<std::int32_t>(p.instructions.size());
    if (t < 0 || t >= n) return false;
    const Instruction& a = p.instructions[static_cast<std::size_t>(t)];
    if (a.kind == Kind::EarlyExit) return a.imm == 0 || a.imm == 1;
    if (t + 1 >= n) return false;
    const Instruction& b = p.instructions[static_cast<std::size_t>(t + 1)];
    return a.kind == Kind::MovImm && a.dst == isa::R0 && (a.imm == 0 || a.imm == 1) && b.kind == Kind::Exit;
}

bool is_cursor(const AbstractValue& v) { return v.kind == AK::PacketData || v.kind == AK::PacketPtr; }

}  // namespace

PassResult remove_boundary_checks(const Program& program, std::optional<int> max_removals) {
    const Program p = annotated(program);
    const auto n = static_cast<std::int32_t>(p.instructions.size());
    const auto cfg = analysis::build_cfg(p);
    const auto prov = analysis::provenance(cfg, p);
    const auto live = analysis::liveness(cfg, p);
    const auto lead = leaders(p);
    std::vector<bool> remove(p.instructions.size(), false);
    int found = 0;
    for (std::int32_t i = 0; i + 2 < n; ++i) {
        if (max_removals && found >= *max_removals) break;
        const auto ui = static_cast<std::size_t>(i);
        if (lead[ui + 1] || lead[ui + 2]) continue;
        const Instruction& mov = p.instructions[ui];
        const Instruction& add = p.instructions[ui + 1];
        const Instruction& br = p.instructions[ui + 2];
        if (mov.kind != Kind::MovReg || mov.width != 64) continue;
        const Reg x = mov.dst;
        if (x == *mov.src || !is_cursor(prov.before[ui][mov.src->index])) continue;
        if (add.kind != Kind::AluBinary || add.width != 64 || add.alu_op() != AluOp::Add || add.src || add.dst != x ||
            add.imm <= 0) {
            continue;
        }
        if (br.kind != Kind::Branch || br.width != 64 || !br.src) continue;
        const auto& st = prov.before[ui + 2];
        bool shape = false;
        if (br.jmp_op() == isa::JmpOp::Gt && br.dst == x && st[br.src->index].kind == AK::PacketEnd) shape = true;
        if (br.jmp_op() == isa::JmpOp::Lt && *br.src == x && st[br.dst.index].kind == AK::PacketEnd) shape = true;
        if (!shape || !is_abort_block(p, br.target)) continue;
        if (live.live_after[ui + 2].contains(x)) continue;
        remove[ui] = remove[ui + 1] = remove[ui + 2] = true;
        ++found;
        i += 2;
    }
    return finish_pass(program, remove, found);
}

namespace {

// Registers and stack bytes never written on any path from entry to the
// point before each instruction (r1 and r10 hold pointers at entry).
struct Untouched {
    std::uint16_t regs = 0;
    std::bitset<isa::kStackSize> stack;
};

std::vector<Untouched> untouched_before(const analysis::ControlFlowGraph& cfg, const Program& p) {
    const std::size_t n = cfg.size();
    Untouched top;
    top.regs = 0x7ff;
    top.stack.set();
    Untouched entry = top;
    entry.regs = static_cast<std::uint16_t>(entry.regs & ~((1U << 1) | (1U << 10)));
    std::vector<Untouched> in(n, top);
    std::vector<bool> seen(n, false);
    if (n == 0) return {};
    in[0] = entry;
    seen[0] = true;
    std::vector<Untouched> before(p.instructions.size(), top);
    auto step = [](Untouched u, const Instruction& insn) {
        for (const auto& s : isa::io_sets(insn).outputs) {
            switch (s.kind) {
            case isa::Symbol::Kind::Reg: u.regs = static_cast<std::uint16_t>(u.regs & ~(1U << s.reg)); break;
            case isa::Symbol::Kind::StackBytes:
                for (int o = s.lo; o < s.hi; ++o) {
                    if (o >= -isa::kStackSize && o < 0) u.stack.reset(static_cast<std::size_t>(o + isa::kStackSize));
                }
                break;
            case isa::Symbol::Kind::Stack:
            case isa::Symbol::Kind::AnyMemory: u.stack.reset(); break;
            default: break;
            }
        }
        return u;
    };
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t b = 0; b < n; ++b) {
            if (!seen[b]) continue;
            Untouched u = in[b];
            const auto& blk = cfg.blocks[b];
            for (std::int32_t i = blk.first; i <= blk.last; ++i) {
                before[static_cast<std::size_t>(i)] = u;
                u = step(u, p.instructions[static_cast<std::size_t>(i)]);
            }
            for (int s : blk.successors) {
                const auto us = static_cast<std::size_t>(s);
                Untouched meet = u;
                if (seen[us]) {
                    meet.regs &= in[us].regs;
                    meet.stack &= in[us].stack;
                }
                if (!seen[us] || meet.regs != in[us].regs || meet.stack != in[us].stack) {
                    in[us] = meet;
                    seen[us] = true;
                    changed = true;
                }
            }
        }
    }
    return before;
}

std::optional<int> known_stack_offset(const Instruction& insn) {
    if (insn.dst == isa::R10) return insn.offset;
    if (insn.mem.region == isa::Region::Stack && insn.mem.stack_offset) return *insn.mem.stack_offset;
    return std::nullopt;
}

}  // namespace

PassResult remove_zeroing(const Program& program) {
    Program cur = program;
    std::vector<std::int32_t> origin(program.instructions.size());
    for (std::size_t i = 0; i < origin.size(); ++i) origin[i] = static_cast<std::int32_t>(i);
    std::vector<bool> removed_orig(program.instructions.size(), false);
    int total = 0;
    for (;;) {
        const Program p = annotated(cur);
        const auto cfg = analysis::build_cfg(p);
        const auto prov = analysis::provenance(cfg, p);
        const auto live = analysis::liveness(cfg, p);
        const auto untouched = untouched_before(cfg, p);
        std::vector<bool> remove(p.instructions.size(), false);
        bool any = false;
        for (std::size_t i = 0; i < p.instructions.size(); ++i) {
            const Instruction& insn = p.instructions[i];
            if (!cfg.reachable[static_cast<std::size_t>(cfg.block_of[i])]) continue;
            bool zero_write = false;
            bool still_zero = false;
            bool dead = false;
            if (insn.kind == Kind::MovImm && insn.imm == 0) {
                zero_write = true;
                still_zero = (untouched[i].regs >> insn.dst.index) & 1U;
                dead = !live.live_after[i].contains(insn.dst);
            } else if (insn.kind == Kind::Store) {
                const auto off = known_stack_offset(insn);
                const bool zero_src = !insn.src ? insn.imm == 0
                                                : (prov.before[i][insn.src->index].kind == AK::Scalar &&
                                                   prov.before[i][insn.src->index].constant == 0);
                if (off && zero_src && *off >= -isa::kStackSize && *off + insn.width <= 0) {
                    zero_write = true;
                    still_zero = true;
                    dead = true;
                    for (int o = *off; o < *off + insn.width; ++o) {
                        const auto bit = static_cast<std::size_t>(o + isa::kStackSize);
                        still_zero = still_zero && untouched[i].stack.test(bit);
                        dead = dead && !live.live_after[i].stack_byte(o);
                    }
                }
            }
            if (zero_write && (still_zero || dead)) {
                remove[i] = true;
                any = true;
            }
        }
        if (!any) break;
        std::vector<std::int32_t> next_origin;
        for (std::size_t i = 0; i < remove.size(); ++i) {
            if (remove[i]) {
                removed_orig[static_cast<std::size_t>(origin[i])] = true;
                ++total;
            } else {
                next_origin.push_back(origin[i]);
            }
        }
        origin = std::move(next_origin);
        cur = delete_instructions(cur, remove);
    }
    PassResult r;
    r.program = cur;
    for (std::size_t i = 0; i < removed_orig.size(); ++i) {
        if (removed_orig[i]) r.removed.push_back(static_cast<std::int32_t>(i));
    }
    r.rewrites = total;
    return r;
}

namespace {

bool binary_alu(const Instruction& insn) {
    if (insn.kind != Kind::AluBinary || insn.width != 64) return false;
    const AluOp op = insn.alu_op();
    return op != AluOp::Neg && op != AluOp::Mov && op != AluOp::Le && op != AluOp::Be;
}

}  // namespace

PassResult fuse_three_operand(const Program& program) {
    Program p = program;
    const auto lead = leaders(p);
    std::vector<bool> remove(p.instructions.size(), false);
    int fused = 0;
    for (std::size_t i = 0; i + 1 < p.instructions.size(); ++i) {
        if (lead[i + 1]) continue;
        const Instruction& a = p.instructions[i];
        const Instruction& b = p.instructions[i + 1];
        if (!binary_alu(b) || b.dst != a.dst || a.dst == isa::R10) continue;
        std::optional<Instruction> merged;
        if (a.kind == Kind::MovReg && a.width == 64 && *a.src != a.dst) {
            if (b.src) {
                const Reg x = *b.src == a.dst ? *a.src : *b.src;
                merged = isa::alu3_reg(b.alu_op(), a.dst, *a.src, x);
            } else {
                merged = isa::alu3_imm(b.alu_op(), a.dst, *a.src, b.imm);
            }
        } else if (a.kind == Kind::MovImm && a.width == 64 && b.src && *b.src != a.dst && isa::is_commutative(b.alu_op())) {
            merged = isa::alu3_imm(b.alu_op(), a.dst, *b.src, a.imm);
        }
        if (!merged) continue;
        p.instructions[i + 1] = *merged;
        remove[i] = true;
        ++fused;
        ++i;
    }
    return finish_pass(p, remove, fused);
}

namespace {

struct MemPair {
    std::size_t first = 0;  // index of the first instruction of the pair
    Reg base;
    int offset = 0;  // lowest address offset
    Reg lo_reg;      // register holding the bytes at `offset`
    Reg hi_reg;
    int lo_width = 0;
};

// Two adjacent same-base accesses of widths 4+2 or 2+4 covering 6 contiguous bytes.
std::optional<MemPair> match_pair(const Instruction& a, const Instruction& b, bool loads) {
    const Kind k = loads ? Kind::Load : Kind::Store;
    if (a.kind != k || b.kind != k || !a.src || !b.src) return std::nullopt;
    if (a.width + b.width != 6 || (a.width != 4 && a.width != 2)) return std::nullopt;
    const Reg base_a = loads ? *a.src : a.dst;
    const Reg base_b = loads ? *b.src : b.dst;
    if (base_a != base_b) return std::nullopt;
    const Reg ra = loads ? a.dst : *a.src;
    const Reg rb = loads ? b.dst : *b.src;
    if (ra == rb) return std::nullopt;
    MemPair m;
    m.base = base_a;
    if (b.offset == a.offset + a.width) {
        m.offset = a.offset;
        m.lo_reg = ra;
        m.hi_reg = rb;
        m.lo_width = a.width;
    } else if (a.offset == b.offset + b.width) {
        m.offset = b.offset;
        m.lo_reg = rb;
        m.hi_reg = ra;
        m.lo_width = b.width;
    } else {
        return std::nullopt;
    }
    return m;
}

bool references(const Instruction& insn, Reg r) {
    const auto io = isa::io_sets(insn);
    return io.input_set().contains(r) || io.output_set().contains(r);
}

}  // namespace

PassResult fuse_load_store_6b(const Program& program) {
    const Program p = annotated(program);
    const auto cfg = analysis::build_cfg(p);
    const auto live = analysis::liveness(cfg, p);
    const auto lead = leaders(p);
    const std::size_t n = p.instructions.size();
    Program out = program;
    std::vector<bool> remove(n, false);
    std::vector<bool> used(n, false);
    int fused = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (used[i] || used[i + 1] || lead[i + 1]) continue;
        auto ld = match_pair(p.instructions[i], p.instructions[i + 1], true);
        if (!ld || ld->lo_reg == ld->base || ld->hi_reg == ld->base) continue;
        for (std::size_t j = i + 2; j + 1 < n; ++j) {
            if (lead[j]) break;
            auto st = match_pair(p.instructions[j], p.instructions[j + 1], false);
            const bool shape = st && !lead[j + 1] && st->lo_reg == ld->lo_reg && st->hi_reg == ld->hi_reg &&
                               st->lo_width == ld->lo_width && st->base != ld->lo_reg && st->base != ld->hi_reg;
            const isa::Region region = p.instructions[j].mem.region;
            if (shape && (region == isa::Region::Stack || region == isa::Region::Packet || st->base == isa::R10) &&
                p.instructions[j].mem.region == p.instructions[j + 1].mem.region && !used[j] && !used[j + 1] &&
                !live.live_after[j + 1].contains(ld->lo_reg) && !live.live_after[j + 1].contains(ld->hi_reg)) {
                out.instructions[i] = isa::load48(ld->lo_reg, ld->base, static_cast<std::int16_t>(ld->offset));
                remove[i + 1] = true;
                out.instructions[j] = isa::store48(st->base, static_cast<std::int16_t>(st->offset), ld->lo_reg);
                remove[j + 1] = true;
                used[i] = used[i + 1] = used[j] = used[j + 1] = true;
                ++fused;
                break;
            }
            const Instruction& mid = p.instructions[j];
            if (references(mid, ld->lo_reg) || references(mid, ld->hi_reg)) break;
        }
    }
    return finish_pass(out, remove, fused);
}

PassResult fuse_early_exit(const Program& program) {
    Program p = program;
    const auto lead = leaders(p);
    std::vector<bool> remove(p.instructions.size(), false);
    int fused = 0;
    for (std::size_t i = 0; i + 1 < p.instructions.size(); ++i) {
        const Instruction& a = p.instructions[i];
        const Instruction& b = p.instructions[i + 1];
        if (lead[i + 1] || b.kind != Kind::Exit || a.kind != Kind::MovImm || a.dst != isa::R0) continue;
        if (a.width == 32 && a.imm < 0) continue;
        p.instructions[i] = isa::early_exit(a.imm);
        remove[i + 1] = true;
        ++fused;
        ++i;
    }
    return finish_pass(p, remove, fused);
}

PassResult remove_unreachable(const Program& program) {
    if (program.instructions.empty()) return PassResult{program, {}, 0};
    const auto cfg = analysis::build_cfg(program);
    std::vector<bool> remove(program.instructions.size(), false);
    int blocks = 0;
    for (const auto& b : cfg.blocks) {
        if (cfg.reachable[static_cast<std::size_t>(b.id)]) continue;
        ++blocks;
        for (std::int32_t i = b.first; i <= b.last; ++i) remove[static_cast<std::size_t>(i)] = true;
    }
    return finish_pass(program, remove, blocks);
}

PeepholeResult peephole(const Program& program, const PassOptions& options) {
    PeepholeResult res;
    res.program = program;
    struct Entry {
        const char* name;
        bool enabled;
    };
    const Entry passes[] = {{"boundary_checks", options.boundary_checks},
                            {"zeroing", options.zeroing},
                            {"three_operand", options.three_operand},
                            {"load_store_6b", options.load_store_6b},
                            {"early_exit", options.early_exit}};
    for (const auto& e : passes) res.deltas.push_back({e.name, 0, 0});
    std::optional<int> boundary_budget = options.max_boundary_removals;
    for (int iter = 0; iter < 32; ++iter) {
        ++res.iterations;
        bool changed = false;
        for (std::size_t k = 0; k < std::size(passes); ++k) {
            if (!passes[k].enabled) continue;
            PassResult r;
            switch (k) {
            case 0:
                if (boundary_budget && *boundary_budget <= 0) continue;
                r = remove_boundary_checks(res.program, boundary_budget);
                if (boundary_budget) *boundary_budget -= r.rewrites;
                break;
            case 1: r = remove_zeroing(res.program); break;
            case 2: r = fuse_three_operand(res.program); break;
            case 3: r = fuse_load_store_6b(res.program); break;
            default: r = fuse_early_exit(res.program); break;
            }
            if (r.rewrites == 0) continue;
            res.deltas[k].rewrites += r.rewrites;
            res.deltas[k].instructions_removed += static_cast<int>(r.removed.size());
            res.program = std::move(r.program);
            changed = true;
        }
        if (!changed) break;
    }
    return res;
}

}  // namespace xdpvliw::opt
