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

#include <deque>

#include "xdpvliw/analysis.hpp"
#include "xdpvliw/helpers.hpp"

namespace xdpvliw::analysis {

using isa::AluOp;
using isa::Kind;
using isa::Reg;
using isa::Symbol;
using AK = AbstractValue::Kind;

SymbolSet exit_live_set() {
    SymbolSet s;
    s.add(Symbol::region(Symbol::Kind::Packet));
    s.add(Symbol::region(Symbol::Kind::Ctx));
    s.add(Symbol::region(Symbol::Kind::AnyMap));
    s.add(Symbol::region(Symbol::Kind::Redirect));
    return s;
}

LivenessInfo liveness(const ControlFlowGraph& cfg, const Program& program) {
    LivenessInfo info;
    const std::size_t n = cfg.size();
    info.blocks.resize(n);
    info.live_after.assign(program.instructions.size(), SymbolSet{});

    for (std::size_t b = 0; b < n; ++b) {
        auto& bl = info.blocks[b];
        const auto& blk = cfg.blocks[b];
        for (std::int32_t i = blk.first; i <= blk.last; ++i) {
            const auto& insn = program.instructions[static_cast<std::size_t>(i)];
            SymbolSet in = isa::io_sets(insn).input_set();
            in.subtract(bl.def);
            bl.use.merge(in);
            bl.def.merge(isa::must_writes(insn));
        }
    }

    const SymbolSet at_exit = exit_live_set();
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t b = n; b-- > 0;) {
            auto& bl = info.blocks[b];
            const auto& blk = cfg.blocks[b];
            SymbolSet out;
            if (program.instructions[static_cast<std::size_t>(blk.last)].is_exit()) out.merge(at_exit);
            for (int s : blk.successors) out.merge(info.blocks[static_cast<std::size_t>(s)].live_in);
            SymbolSet in = out;
            in.subtract(bl.def);
            in.merge(bl.use);
            if (!(out == bl.live_out) || !(in == bl.live_in)) {
                bl.live_out = out;
                bl.live_in = in;
                changed = true;
            }
        }
    }

    for (std::size_t b = 0; b < n; ++b) {
        const auto& blk = cfg.blocks[b];
        SymbolSet live = info.blocks[b].live_out;
        for (std::int32_t i = blk.last; i >= blk.first; --i) {
            const auto& insn = program.instructions[static_cast<std::size_t>(i)];
            info.live_after[static_cast<std::size_t>(i)] = live;
            live.subtract(isa::must_writes(insn));
            live.merge(isa::io_sets(insn).input_set());
        }
    }
    return info;
}

namespace {

AbstractValue make(AK k) {
    AbstractValue v;
    v.kind = k;
    return v;
}

AbstractValue scalar(std::optional<std::int64_t> c = std::nullopt) {
    AbstractValue v = make(AK::Scalar);
    v.constant = c;
    return v;
}

bool is_packet(AK k) { return k == AK::PacketData || k == AK::PacketPtr; }

AbstractValue join(const AbstractValue& a, const AbstractValue& b) {
    if (a.kind == AK::Unset) return b;
    if (b.kind == AK::Unset) return a;
    if (a == b) return a;
    if (a.kind == AK::Scalar && b.kind == AK::Scalar) return scalar();
    if (a.kind == AK::Stack && b.kind == AK::Stack) return make(AK::Stack);
    if (a.kind == AK::MapValue && b.kind == AK::MapValue) {
        AbstractValue v = make(AK::MapValue);
        if (a.map_id == b.map_id) v.map_id = a.map_id;
        return v;
    }
    if (is_packet(a.kind) && is_packet(b.kind)) return make(AK::PacketPtr);
    return make(AK::Unknown);
}

bool join_into(RegisterState& dst, const RegisterState& src) {
    bool changed = false;
    for (std::size_t r = 0; r < dst.size(); ++r) {
        const AbstractValue j = join(dst[r], src[r]);
        if (!(j == dst[r])) {
            dst[r] = j;
            changed = true;
        }
    }
    return changed;
}

bool is_pointer(AK k) {
    return k == AK::Ctx || k == AK::PacketData || k == AK::PacketPtr || k == AK::PacketEnd || k == AK::Stack ||
           k == AK::MapValue || k == AK::MapHandle;
}

// dst op= operand for 64-bit arithmetic with abstract operands.
AbstractValue arith(AluOp op, int width, const AbstractValue& a, const AbstractValue& b) {
    if (width == 32) {
        if (a.kind == AK::Scalar && b.kind == AK::Scalar && a.constant && b.constant) {
            return scalar(static_cast<std::int64_t>(isa::eval_alu(op, 32, static_cast<std::uint64_t>(*a.constant),
                                                                  static_cast<std::uint64_t>(*b.constant))));
        }
        return scalar();
    }
    if (a.kind == AK::Scalar && b.kind == AK::Scalar) {
        if (a.constant && b.constant) {
            return scalar(static_cast<std::int64_t>(isa::eval_alu(op, 64, static_cast<std::uint64_t>(*a.constant),
                                                                  static_cast<std::uint64_t>(*b.constant))));
        }
        return scalar();
    }
    if (op != AluOp::Add && op != AluOp::Sub) {
        return (is_pointer(a.kind) || is_pointer(b.kind) || a.kind == AK::Unknown || b.kind == AK::Unknown)
                   ? make(AK::Unknown)
                   : scalar();
    }
    // pointer +/- scalar, or scalar + pointer
    const AbstractValue* ptr = nullptr;
    const AbstractValue* off = nullptr;
    if (is_pointer(a.kind) && b.kind == AK::Scalar) {
        ptr = &a;
        off = &b;
    } else if (op == AluOp::Add && a.kind == AK::Scalar && is_pointer(b.kind)) {
        ptr = &b;
        off = &a;
    } else {
        return make(AK::Unknown);
    }
    std::optional<std::int64_t> delta;
    if (off->constant) delta = op == AluOp::Sub ? -*off->constant : *off->constant;
    switch (ptr->kind) {
    case AK::Stack: {
        AbstractValue v = make(AK::Stack);
        if (ptr->offset && delta && *delta > -4096 && *delta < 4096) {
            v.offset = static_cast<std::int32_t>(*ptr->offset + *delta);
        }
        return v;
    }
    case AK::PacketData:
    case AK::PacketPtr: {
        AbstractValue v = make(AK::PacketPtr);
        const std::optional<std::int32_t> base = ptr->kind == AK::PacketData ? std::optional<std::int32_t>(0) : ptr->offset;
        if (base && delta && *delta > -65536 && *delta < 65536) v.offset = static_cast<std::int32_t>(*base + *delta);
        return v;
    }
    case AK::MapValue: {
        AbstractValue v = make(AK::MapValue);
        v.map_id = ptr->map_id;
        return v;
    }
    default: return make(AK::Unknown);
    }
}

void transfer(const Instruction& insn, RegisterState& st) {
    auto& d = st[insn.dst.index];
    switch (insn.kind) {
    case Kind::MovImm:
        d = scalar(insn.width == 32 ? static_cast<std::int64_t>(static_cast<std::uint32_t>(insn.imm)) : insn.imm);
        break;
    case Kind::LoadImm64:
        if (insn.map_ref) {
            d = make(AK::MapHandle);
            d.map_id = static_cast<std::uint32_t>(insn.imm);
        } else {
            d = scalar(insn.imm);
        }
        break;
    case Kind::MovReg:
        if (insn.width == 64) {
            d = st[insn.src->index];
        } else {
            const auto& s = st[insn.src->index];
            d = (s.kind == AK::Scalar && s.constant) ? scalar(static_cast<std::int64_t>(static_cast<std::uint32_t>(*s.constant)))
                                                      : scalar();
        }
        break;
    case Kind::AluBinary: {
        const AbstractValue b = insn.src ? st[insn.src->index] : scalar(insn.imm);
        d = arith(insn.alu_op(), insn.width, d, b);
        break;
    }
    case Kind::AluThreeOp: {
        const AbstractValue a = st[insn.src->index];
        const AbstractValue b = insn.src2 ? st[insn.src2->index] : scalar(insn.imm);
        d = arith(insn.alu_op(), 64, a, b);
        break;
    }
    case Kind::AluUnary:
        if (d.kind == AK::Scalar && d.constant) {
            d = scalar(static_cast<std::int64_t>(isa::eval_alu(insn.alu_op(), insn.width,
                                                               static_cast<std::uint64_t>(*d.constant),
                                                               static_cast<std::uint64_t>(insn.imm))));
        } else {
            d = is_pointer(d.kind) || d.kind == AK::Unknown ? make(AK::Unknown) : scalar();
        }
        break;
    case Kind::Load: {
        const AbstractValue base = st[insn.src->index];
        if (base.kind == AK::Ctx && insn.width == 4 && insn.offset == 0) {
            d = make(AK::PacketData);
        } else if (base.kind == AK::Ctx && insn.width == 4 && insn.offset == 4) {
            d = make(AK::PacketEnd);
        } else if (base.kind == AK::Ctx && insn.width == 4 && insn.offset == 8) {
            d = make(AK::PacketPtr);
        } else if (insn.width == 8 && (base.kind == AK::Stack || base.kind == AK::MapValue ||
                                        base.kind == AK::Unknown)) {
            d = make(AK::Unknown);  // may be a spilled pointer
        } else {
            d = scalar();
        }
        break;
    }
    case Kind::Load48: d = scalar(); break;
    case Kind::Call: {
        const isa::HelperInfo* h = isa::find_helper(insn.imm);
        if (h && h->id == static_cast<std::int64_t>(isa::HelperId::MapLookup)) {
            AbstractValue v = make(AK::MapValue);
            if (st[1].kind == AK::MapHandle) v.map_id = st[1].map_id;
            st[0] = v;
        } else {
            st[0] = scalar();
        }
        break;
    }
    case Kind::EarlyExit: st[0] = scalar(insn.imm); break;
    default: break;
    }
}

isa::MemRef region_of(const AbstractValue& base, std::int16_t offset) {
    isa::MemRef m;
    switch (base.kind) {
    case AK::Stack:
        m.region = isa::Region::Stack;
        if (base.offset) m.stack_offset = *base.offset + offset;
        break;
    case AK::Ctx: m.region = isa::Region::Ctx; break;
    case AK::PacketData:
    case AK::PacketPtr:
    case AK::PacketEnd: m.region = isa::Region::Packet; break;
    case AK::MapValue:
        m.region = isa::Region::Map;
        m.map_id = base.map_id;
        break;
    default: break;
    }
    return m;
}

}  // namespace

ProvenanceInfo provenance(const ControlFlowGraph& cfg, const Program& program) {
    ProvenanceInfo info;
    info.before.assign(program.instructions.size(), RegisterState{});
    const std::size_t n = cfg.size();
    if (n == 0) return info;
    std::vector<RegisterState> in(n);
    for (auto& v : in[0]) v = scalar(0);
    in[0][1] = make(AK::Ctx);
    in[0][10] = make(AK::Stack);
    in[0][10].offset = 0;

    std::deque<int> work{0};
    std::vector<bool> queued(n, false);
    queued[0] = true;
    while (!work.empty()) {
        const int b = work.front();
        work.pop_front();
        queued[static_cast<std::size_t>(b)] = false;
        const auto& blk = cfg.blocks[static_cast<std::size_t>(b)];
        RegisterState st = in[static_cast<std::size_t>(b)];
        for (std::int32_t i = blk.first; i <= blk.last; ++i) {
            info.before[static_cast<std::size_t>(i)] = st;
            transfer(program.instructions[static_cast<std::size_t>(i)], st);
        }
        for (int s : blk.successors) {
            if (join_into(in[static_cast<std::size_t>(s)], st) && !queued[static_cast<std::size_t>(s)]) {
                queued[static_cast<std::size_t>(s)] = true;
                work.push_back(s);
            }
        }
    }
    return info;
}

void annotate_regions(Program& program) {
    if (program.instructions.empty()) return;
    const ControlFlowGraph cfg = build_cfg(program);
    const ProvenanceInfo prov = provenance(cfg, program);
    for (std::size_t i = 0; i < program.instructions.size(); ++i) {
        auto& insn = program.instructions[i];
        const RegisterState& st = prov.before[i];
        insn.mem = isa::MemRef{};
        switch (insn.kind) {
        case Kind::Load:
        case Kind::Load48: insn.mem = region_of(st[insn.src->index], insn.offset); break;
        case Kind::Store:
        case Kind::Store48: insn.mem = region_of(st[insn.dst.index], insn.offset); break;
        case Kind::Call:
            if (st[1].kind == AK::MapHandle) {
                insn.mem.region = isa::Region::Map;
                insn.mem.map_id = st[1].map_id;
            }
            break;
        default: break;
        }
    }
}

}  // namespace xdpvliw::analysis
