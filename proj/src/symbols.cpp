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

#include "xdpvliw/symbols.hpp"

#include <sstream>

#include "xdpvliw/helpers.hpp"

namespace xdpvliw::isa {

namespace {

constexpr std::uint64_t kAllMaps = ~std::uint64_t{0};

int stack_index(int offset) { return offset + kStackSize; }

// Memory symbol for a load/store, from the base register or the region
// annotation.
Symbol memory_symbol(const Instruction& insn) {
    const int w = insn.width;
    if (insn.kind == Kind::Load || insn.kind == Kind::Load48) {
        if (insn.src && *insn.src == R10) return Symbol::stack_bytes(insn.offset, insn.offset + w);
    } else if (insn.dst == R10) {
        return Symbol::stack_bytes(insn.offset, insn.offset + w);
    }
    switch (insn.mem.region) {
    case Region::Stack:
        if (insn.mem.stack_offset) {
            const int lo = *insn.mem.stack_offset;
            return Symbol::stack_bytes(lo, lo + w);
        }
        return Symbol::region(Symbol::Kind::Stack);
    case Region::Packet: return Symbol::region(Symbol::Kind::Packet);
    case Region::Ctx: return Symbol::region(Symbol::Kind::Ctx);
    case Region::Map:
        if (insn.mem.map_id) return Symbol::map(*insn.mem.map_id);
        return Symbol::region(Symbol::Kind::AnyMap);
    case Region::Unknown: break;
    }
    return Symbol::region(Symbol::Kind::AnyMemory);
}

}  // namespace

std::string Symbol::to_string() const {
    switch (kind) {
    case Kind::Reg: return "r" + std::to_string(reg);
    case Kind::StackBytes: return "stack[" + std::to_string(lo) + ".." + std::to_string(hi) + "]";
    case Kind::Stack: return "stack";
    case Kind::Packet: return "packet";
    case Kind::Ctx: return "ctx";
    case Kind::Map: return "map" + std::to_string(map_id);
    case Kind::AnyMap: return "maps";
    case Kind::AnyMemory: return "memory";
    case Kind::Fault: return "fault";
    case Kind::Redirect: return "redirect";
    }
    return "?";
}

void SymbolSet::add(const Symbol& s) {
    switch (s.kind) {
    case Symbol::Kind::Reg: regs_ |= static_cast<std::uint16_t>(1U << s.reg); break;
    case Symbol::Kind::StackBytes:
        for (int o = s.lo; o < s.hi; ++o) {
            if (o >= -kStackSize && o < 0) stack_.set(static_cast<std::size_t>(stack_index(o)));
        }
        break;
    case Symbol::Kind::Stack: stack_.set(); break;
    case Symbol::Kind::Packet: flags_ |= kPacket; break;
    case Symbol::Kind::Ctx: flags_ |= kCtx; break;
    case Symbol::Kind::Map: maps_ |= std::uint64_t{1} << (s.map_id % kMaxMaps); break;
    case Symbol::Kind::AnyMap: maps_ = kAllMaps; break;
    case Symbol::Kind::AnyMemory:
        stack_.set();
        maps_ = kAllMaps;
        flags_ |= kPacket | kCtx;
        break;
    case Symbol::Kind::Fault: flags_ |= kFault; break;
    case Symbol::Kind::Redirect: flags_ |= kRedirect; break;
    }
}

void SymbolSet::kill(const Symbol& s) {
    if (s.kind == Symbol::Kind::Reg) {
        regs_ &= static_cast<std::uint16_t>(~(1U << s.reg));
    } else if (s.kind == Symbol::Kind::StackBytes) {
        for (int o = s.lo; o < s.hi; ++o) {
            if (o >= -kStackSize && o < 0) stack_.reset(static_cast<std::size_t>(stack_index(o)));
        }
    }
}

void SymbolSet::merge(const SymbolSet& other) {
    regs_ |= other.regs_;
    stack_ |= other.stack_;
    maps_ |= other.maps_;
    flags_ |= other.flags_;
}

void SymbolSet::subtract(const SymbolSet& other) {
    regs_ &= static_cast<std::uint16_t>(~other.regs_);
    stack_ &= ~other.stack_;
    maps_ &= ~other.maps_;
    flags_ &= static_cast<std::uint8_t>(~other.flags_);
}

bool SymbolSet::intersects(const SymbolSet& other) const {
    return (regs_ & other.regs_) != 0 || (stack_ & other.stack_).any() || (maps_ & other.maps_) != 0 ||
           (flags_ & other.flags_) != 0;
}

bool SymbolSet::empty() const { return regs_ == 0 && stack_.none() && maps_ == 0 && flags_ == 0; }

bool SymbolSet::stack_byte(int offset) const {
    if (offset < -kStackSize || offset >= 0) return false;
    return stack_.test(static_cast<std::size_t>(stack_index(offset)));
}

bool SymbolSet::has_memory() const { return stack_.any() || maps_ != 0 || (flags_ & (kPacket | kCtx)) != 0; }

std::vector<Symbol> SymbolSet::symbols() const {
    std::vector<Symbol> out;
    for (int r = 0; r < kNumRegisters; ++r) {
        if ((regs_ >> r) & 1U) out.push_back(Symbol::of(Reg(r)));
    }
    if (stack_.all()) {
        out.push_back(Symbol::region(Symbol::Kind::Stack));
    } else {
        int o = -kStackSize;
        while (o < 0) {
            if (!stack_byte(o)) {
                ++o;
                continue;
            }
            int e = o;
            while (e < 0 && stack_byte(e)) ++e;
            out.push_back(Symbol::stack_bytes(o, e));
            o = e;
        }
    }
    if (flags_ & kPacket) out.push_back(Symbol::region(Symbol::Kind::Packet));
    if (flags_ & kCtx) out.push_back(Symbol::region(Symbol::Kind::Ctx));
    if (maps_ == kAllMaps) {
        out.push_back(Symbol::region(Symbol::Kind::AnyMap));
    } else {
        for (std::uint32_t m = 0; m < kMaxMaps; ++m) {
            if ((maps_ >> m) & 1U) out.push_back(Symbol::map(m));
        }
    }
    if (flags_ & kFault) out.push_back(Symbol::region(Symbol::Kind::Fault));
    if (flags_ & kRedirect) out.push_back(Symbol::region(Symbol::Kind::Redirect));
    return out;
}

std::string SymbolSet::to_string() const {
    std::ostringstream os;
    os << '{';
    bool first = true;
    for (const auto& s : symbols()) {
        if (!first) os << ", ";
        first = false;
        os << s.to_string();
    }
    os << '}';
    return os.str();
}

bool access_is_safe(const Instruction& insn) {
    if (!insn.is_memory()) return true;
    const bool is_load = insn.kind == Kind::Load || insn.kind == Kind::Load48;
    const Reg base = is_load ? *insn.src : insn.dst;
    std::optional<int> stack_off;
    if (base == R10) {
        stack_off = insn.offset;
    } else if (insn.mem.region == Region::Stack && insn.mem.stack_offset) {
        stack_off = *insn.mem.stack_offset;
    }
    if (stack_off) return *stack_off >= -kStackSize && *stack_off + insn.width <= 0;
    if (insn.mem.region == Region::Ctx && insn.kind == Kind::Load) {
        return insn.width == 4 && insn.offset >= 0 && insn.offset <= 20 && insn.offset % 4 == 0;
    }
    return false;
}

IoSets io_sets(const Instruction& insn) {
    IoSets io;
    auto in = [&](Symbol s) { io.inputs.push_back(s); };
    auto out = [&](Symbol s) { io.outputs.push_back(s); };
    switch (insn.kind) {
    case Kind::AluBinary:
        in(Symbol::of(insn.dst));
        if (insn.src) in(Symbol::of(*insn.src));
        out(Symbol::of(insn.dst));
        break;
    case Kind::AluUnary:
        in(Symbol::of(insn.dst));
        out(Symbol::of(insn.dst));
        break;
    case Kind::MovImm:
    case Kind::LoadImm64: out(Symbol::of(insn.dst)); break;
    case Kind::MovReg:
        in(Symbol::of(*insn.src));
        out(Symbol::of(insn.dst));
        break;
    case Kind::AluThreeOp:
        in(Symbol::of(*insn.src));
        if (insn.src2) in(Symbol::of(*insn.src2));
        out(Symbol::of(insn.dst));
        break;
    case Kind::Load:
    case Kind::Load48:
        in(Symbol::of(*insn.src));
        in(memory_symbol(insn));
        if (!access_is_safe(insn)) in(Symbol::region(Symbol::Kind::Fault));
        out(Symbol::of(insn.dst));
        break;
    case Kind::Store:
    case Kind::Store48: {
        in(Symbol::of(insn.dst));
        if (insn.src) in(Symbol::of(*insn.src));
        if (!access_is_safe(insn)) in(Symbol::region(Symbol::Kind::Fault));
        const Symbol m = memory_symbol(insn);
        out(m);
        if (m.kind == Symbol::Kind::Map || m.kind == Symbol::Kind::AnyMap || m.kind == Symbol::Kind::AnyMemory) {
            out(Symbol::region(Symbol::Kind::Fault));
        }
        break;
    }
    case Kind::Branch:
        in(Symbol::of(insn.dst));
        if (insn.src) in(Symbol::of(*insn.src));
        break;
    case Kind::JumpAlways: break;
    case Kind::Call: {
        const HelperInfo* h = find_helper(insn.imm);
        const int arity = h ? h->arity : 5;
        for (int r = 1; r <= arity; ++r) in(Symbol::of(Reg(r)));
        in(Symbol::region(Symbol::Kind::Fault));
        if (!h || h->reads_memory) in(Symbol::region(Symbol::Kind::AnyMemory));
        Symbol map_sym = insn.mem.map_id ? Symbol::map(*insn.mem.map_id) : Symbol::region(Symbol::Kind::AnyMap);
        if (!h || h->map_argument) in(map_sym);
        out(Symbol::of(R0));
        out(Symbol::region(Symbol::Kind::Fault));
        if (!h || h->writes_map) out(map_sym);
        if (!h || h->writes_packet) {
            out(Symbol::region(Symbol::Kind::Packet));
            out(Symbol::region(Symbol::Kind::Ctx));
        }
        if (!h || h->writes_redirect) {
            in(Symbol::region(Symbol::Kind::Redirect));
            out(Symbol::region(Symbol::Kind::Redirect));
        }
        break;
    }
    case Kind::Exit:
        in(Symbol::of(R0));
        in(Symbol::region(Symbol::Kind::Redirect));
        break;
    case Kind::EarlyExit:
        in(Symbol::region(Symbol::Kind::Redirect));
        out(Symbol::of(R0));
        break;
    }
    return io;
}

SymbolSet must_writes(const Instruction& insn) {
    SymbolSet s;
    if (auto r = insn.written_register()) s.add(Symbol::of(*r));
    if (insn.kind == Kind::Store || insn.kind == Kind::Store48) {
        const Symbol m = memory_symbol(insn);
        if (m.kind == Symbol::Kind::StackBytes) s.add(m);
    }
    return s;
}

}  // namespace xdpvliw::isa
