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

#include <cstdio>
#include <cstring>

#include "xdpvliw/helpers.hpp"
#include "xdpvliw/vm.hpp"

namespace xdpvliw::vm {

using isa::Kind;

const char* action_name(Action a) {
    switch (a) {
    case Action::Aborted: return "ABORTED";
    case Action::Drop: return "DROP";
    case Action::Pass: return "PASS";
    case Action::Tx: return "TX";
    case Action::Redirect: return "REDIRECT";
    }
    return "?";
}

const char* trap_kind_name(Trap::Kind k) {
    switch (k) {
    case Trap::Kind::OutOfBounds: return "out-of-bounds";
    case Trap::Kind::InstructionLimit: return "instruction-limit";
    case Trap::Kind::BadHelperArgs: return "bad-helper-args";
    case Trap::Kind::UnknownHelper: return "unknown-helper";
    case Trap::Kind::FellOffEnd: return "fell-off-end";
    case Trap::Kind::RowConflict: return "row-conflict";
    case Trap::Kind::BadJump: return "bad-jump";
    }
    return "?";
}

Action action_from_r0(std::uint64_t r0) { return r0 <= 4 ? static_cast<Action>(r0) : Action::Aborted; }

MachineState::MachineState(const Packet& packet, MapStore m, std::uint32_t headroom) : maps(std::move(m)) {
    buffer.assign(headroom, 0);
    buffer.insert(buffer.end(), packet.data.begin(), packet.data.end());
    data_off = headroom;
    end_off = static_cast<std::uint32_t>(buffer.size());
    ingress_port = packet.ingress_port;
    regs[1] = kCtxBase;
    regs[10] = kStackBase + isa::kStackSize;
}

std::vector<std::uint8_t> MachineState::packet_bytes() const {
    return {buffer.begin() + data_off, buffer.begin() + end_off};
}

const std::uint8_t* MachineState::span(std::uint64_t addr, std::size_t n) const {
    return const_cast<MachineState*>(this)->mutable_span(addr, n);
}

std::uint8_t* MachineState::mutable_span(std::uint64_t addr, std::size_t n) {
    if (n == 0) return nullptr;
    if (addr >= kStackBase && addr + n <= kStackBase + isa::kStackSize) return stack.data() + (addr - kStackBase);
    if (addr >= data_addr() && addr + n <= end_addr()) return buffer.data() + (addr - kPacketBase);
    if (addr >= kMapBase && addr < kMapBase + isa::kMaxMaps * kMapStride) {
        const auto id = static_cast<std::uint32_t>((addr - kMapBase) / kMapStride);
        MapInstance* m = maps.find(id);
        if (!m) return nullptr;
        const std::uint64_t rel = addr - kMapBase - id * kMapStride;
        const std::uint32_t vs = m->def().value_size;
        const std::uint64_t slot = rel / vs;
        if (slot >= m->def().max_entries || (rel % vs) + n > vs) return nullptr;
        return m->value_at(static_cast<std::uint32_t>(slot)) + rel % vs;
    }
    return nullptr;
}

bool MachineState::read(std::uint64_t addr, int width, std::uint64_t& out) const {
    if (addr >= kCtxBase && addr < kCtxBase + kCtxSize) {
        const std::uint64_t field = addr - kCtxBase;
        if (width != 4 || field % 4 != 0) return false;
        switch (field) {
        case 0: out = data_addr(); break;
        case 4: out = end_addr(); break;
        case 8: out = data_addr(); break;  // data_meta: no metadata area
        case 12: out = ingress_port; break;
        default: out = 0; break;  // rx_queue_index, egress_ifindex
        }
        return true;
    }
    const std::uint8_t* p = span(addr, static_cast<std::size_t>(width));
    if (!p) return false;
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    out = v;
    return true;
}

bool MachineState::write(std::uint64_t addr, int width, std::uint64_t value) {
    std::uint8_t* p = mutable_span(addr, static_cast<std::size_t>(width));
    if (!p) return false;
    for (int i = 0; i < width; ++i) p[i] = static_cast<std::uint8_t>(value >> (8 * i));
    return true;
}

namespace {

Trap oob(std::uint64_t addr, int width) {
    return Trap{Trap::Kind::OutOfBounds, 0, addr,
                "access of " + std::to_string(width) + " bytes at 0x" + [&] {
                    char b[24];
                    std::snprintf(b, sizeof b, "%llx", static_cast<unsigned long long>(addr));
                    return std::string(b);
                }()};
}

}  // namespace

Effect evaluate(const isa::Instruction& insn, const MachineState& st) {
    Effect e;
    const auto& r = st.regs;
    const auto imm = static_cast<std::uint64_t>(insn.imm);
    switch (insn.kind) {
    case Kind::AluBinary: {
        const std::uint64_t b = insn.src ? r[insn.src->index] : imm;
        e.reg = {insn.dst.index, isa::eval_alu(insn.alu_op(), insn.width, r[insn.dst.index], b)};
        break;
    }
    case Kind::AluUnary:
        e.reg = {insn.dst.index, isa::eval_alu(insn.alu_op(), insn.width, r[insn.dst.index], imm)};
        break;
    case Kind::MovImm: e.reg = {insn.dst.index, insn.width == 32 ? static_cast<std::uint32_t>(imm) : imm}; break;
    case Kind::MovReg: {
        const std::uint64_t v = r[insn.src->index];
        e.reg = {insn.dst.index, insn.width == 32 ? static_cast<std::uint32_t>(v) : v};
        break;
    }
    case Kind::AluThreeOp: {
        const std::uint64_t b = insn.src2 ? r[insn.src2->index] : imm;
        e.reg = {insn.dst.index, isa::eval_alu(insn.alu_op(), 64, r[insn.src->index], b)};
        break;
    }
    case Kind::Load:
    case Kind::Load48: {
        const std::uint64_t addr = r[insn.src->index] + static_cast<std::uint64_t>(static_cast<std::int64_t>(insn.offset));
        std::uint64_t v = 0;
        if (!st.read(addr, insn.width, v)) {
            e.trap = oob(addr, insn.width);
        } else {
            e.reg = {insn.dst.index, v};
        }
        break;
    }
    case Kind::Store:
    case Kind::Store48: {
        const std::uint64_t addr = r[insn.dst.index] + static_cast<std::uint64_t>(static_cast<std::int64_t>(insn.offset));
        if (!st.span(addr, static_cast<std::size_t>(insn.width))) {
            e.trap = oob(addr, insn.width);
        } else {
            e.mem = Effect::MemWrite{addr, insn.width, insn.src ? r[insn.src->index] : imm};
        }
        break;
    }
    case Kind::LoadImm64: e.reg = {insn.dst.index, insn.map_ref ? kMapHandleBase + imm : imm}; break;
    case Kind::Branch: {
        const std::uint64_t b = insn.src ? r[insn.src->index] : imm;
        if (isa::eval_jump(insn.jmp_op(), insn.width, r[insn.dst.index], b)) {
            e.control = Effect::Control::Jump;
            e.target = insn.target;
        }
        break;
    }
    case Kind::JumpAlways:
        e.control = Effect::Control::Jump;
        e.target = insn.target;
        break;
    case Kind::Exit: e.control = Effect::Control::Exit; break;
    case Kind::EarlyExit:
        e.reg = {0, imm};
        e.control = Effect::Control::Exit;
        break;
    case Kind::Call: break;
    }
    return e;
}

namespace {

MapInstance* map_from_handle(MachineState& st, std::uint64_t handle) {
    if (handle < kMapHandleBase || handle >= kMapHandleBase + isa::kMaxMaps) return nullptr;
    return st.maps.find(static_cast<std::uint32_t>(handle - kMapHandleBase));
}

Trap bad_args(const std::string& what) { return Trap{Trap::Kind::BadHelperArgs, 0, 0, what}; }

std::uint64_t ones_complement_words(const std::uint8_t* p, std::size_t n, bool invert) {
    std::uint64_t acc = 0;
    for (std::size_t i = 0; i + 4 <= n; i += 4) {
        std::uint32_t w = 0;
        std::memcpy(&w, p + i, 4);
        acc += invert ? static_cast<std::uint32_t>(~w) : w;
    }
    return acc;
}

}  // namespace

std::uint64_t call_helper(std::int64_t id, MachineState& st, std::optional<Trap>& trap) {
    auto& r = st.regs;
    auto as_u64 = [](std::int64_t v) { return static_cast<std::uint64_t>(v); };
    switch (static_cast<isa::HelperId>(id)) {
    case isa::HelperId::MapLookup: {
        MapInstance* m = map_from_handle(st, r[1]);
        if (!m) {
            trap = bad_args("map_lookup_elem: r1 is not a map");
            return 0;
        }
        const std::uint8_t* key = st.span(r[2], m->def().key_size);
        if (!key) {
            trap = bad_args("map_lookup_elem: unreadable key");
            return 0;
        }
        auto slot = m->lookup(key);
        if (!slot) return 0;
        return kMapBase + m->def().id * kMapStride + static_cast<std::uint64_t>(*slot) * m->def().value_size;
    }
    case isa::HelperId::MapUpdate: {
        MapInstance* m = map_from_handle(st, r[1]);
        if (!m) {
            trap = bad_args("map_update_elem: r1 is not a map");
            return 0;
        }
        const std::uint8_t* key = st.span(r[2], m->def().key_size);
        const std::uint8_t* value = st.span(r[3], m->def().value_size);
        if (!key || !value) {
            trap = bad_args("map_update_elem: unreadable key or value");
            return 0;
        }
        std::vector<std::uint8_t> k(key, key + m->def().key_size);
        return as_u64(m->update(k.data(), value, r[4]));
    }
    case isa::HelperId::MapDelete: {
        MapInstance* m = map_from_handle(st, r[1]);
        if (!m) {
            trap = bad_args("map_delete_elem: r1 is not a map");
            return 0;
        }
        const std::uint8_t* key = st.span(r[2], m->def().key_size);
        if (!key) {
            trap = bad_args("map_delete_elem: unreadable key");
            return 0;
        }
        std::vector<std::uint8_t> k(key, key + m->def().key_size);
        return as_u64(m->remove(k.data()));
    }
    case isa::HelperId::CsumDiff: {
        const std::uint64_t from_size = r[2];
        const std::uint64_t to_size = r[4];
        if (from_size % 4 != 0 || to_size % 4 != 0 || from_size > 512 || to_size > 512) return as_u64(kEINVAL);
        const std::uint8_t* from = from_size ? st.span(r[1], from_size) : nullptr;
        const std::uint8_t* to = to_size ? st.span(r[3], to_size) : nullptr;
        if ((from_size && !from) || (to_size && !to)) {
            trap = bad_args("csum_diff: unreadable buffer");
            return 0;
        }
        std::uint64_t acc = static_cast<std::uint32_t>(r[5]);
        if (from) acc += ones_complement_words(from, from_size, true);
        if (to) acc += ones_complement_words(to, to_size, false);
        while (acc >> 32) acc = (acc & 0xffffffffULL) + (acc >> 32);
        return acc;
    }
    case isa::HelperId::XdpAdjustHead: {
        if (r[1] != kCtxBase) {
            trap = bad_args("xdp_adjust_head: r1 is not the context");
            return 0;
        }
        const auto delta = static_cast<std::int64_t>(static_cast<std::int32_t>(r[2]));
        const std::int64_t next = static_cast<std::int64_t>(st.data_off) + delta;
        if (next < 0 || next > static_cast<std::int64_t>(st.end_off) - 14) return as_u64(kEINVAL);
        st.data_off = static_cast<std::uint32_t>(next);
        return 0;
    }
    case isa::HelperId::RedirectMap: {
        MapInstance* m = map_from_handle(st, r[1]);
        if (!m) {
            trap = bad_args("redirect_map: r1 is not a map");
            return 0;
        }
        const auto key = static_cast<std::uint32_t>(r[2]);
        if (key < m->def().max_entries) {
            st.redirect = std::make_pair(m->def().id, key);
            return static_cast<std::uint64_t>(Action::Redirect);
        }
        return r[3] & 3;
    }
    }
    trap = Trap{Trap::Kind::UnknownHelper, 0, 0, "unknown helper " + std::to_string(id)};
    return 0;
}

XdpResult finish(const MachineState& st, std::uint64_t r0) {
    XdpResult res;
    res.r0 = r0;
    res.action = action_from_r0(r0);
    res.redirect = st.redirect;
    res.packet = st.packet_bytes();
    return res;
}

}  // namespace xdpvliw::vm
