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

#include <bitset>
#include <cstdint>
#include <string>
#include <vector>

#include "xdpvliw/isa.hpp"

namespace xdpvliw::isa {

// A storage location an instruction may read or write. Stack byte ranges are
// r10-relative and half-open; coarser symbols stand for whole regions.
struct Symbol {
    enum class Kind : std::uint8_t {
        Reg,
        StackBytes,
        Stack,
        Packet,
        Ctx,
        Map,
        AnyMap,
        AnyMemory,
        Fault,     // ordering token between trapping accesses and persistent writes
        Redirect,  // the recorded redirect target
    };

    Kind kind = Kind::Reg;
    std::uint8_t reg = 0;
    std::int16_t lo = 0;
    std::int16_t hi = 0;
    std::uint32_t map_id = 0;

    static Symbol of(Reg r) { return Symbol{Kind::Reg, r.index, 0, 0, 0}; }
    static Symbol stack_bytes(int lo, int hi) {
        return Symbol{Kind::StackBytes, 0, static_cast<std::int16_t>(lo), static_cast<std::int16_t>(hi), 0};
    }
    static Symbol region(Kind k) { return Symbol{k, 0, 0, 0, 0}; }
    static Symbol map(std::uint32_t id) { return Symbol{Kind::Map, 0, 0, 0, id}; }

    [[nodiscard]] std::string to_string() const;
    friend bool operator==(const Symbol&, const Symbol&) = default;
};

// Set of storage locations with overlap-aware intersection. Registers and
// stack bytes are exact; packet, ctx and maps are tracked per region.
class SymbolSet {
  public:
    SymbolSet() = default;
    SymbolSet(std::initializer_list<Symbol> symbols) {
        for (const auto& s : symbols) add(s);
    }

    void add(const Symbol& s);
    // Removes what a must-write of `s` overwrites. Only registers and exact
    // stack ranges are killed; region writes are may-writes.
    void kill(const Symbol& s);
    void merge(const SymbolSet& other);
    void subtract(const SymbolSet& other);

    [[nodiscard]] bool intersects(const SymbolSet& other) const;
    [[nodiscard]] bool contains(Reg r) const { return (regs_ >> r.index) & 1U; }
    [[nodiscard]] bool empty() const;
    [[nodiscard]] std::uint16_t registers() const { return regs_; }
    [[nodiscard]] bool stack_byte(int offset) const;
    [[nodiscard]] bool has_memory() const;
    // Expanded back into symbols (stack bytes coalesced into ranges).
    [[nodiscard]] std::vector<Symbol> symbols() const;
    [[nodiscard]] std::string to_string() const;

    friend bool operator==(const SymbolSet&, const SymbolSet&) = default;

  private:
    enum Flag : std::uint8_t { kPacket = 1, kCtx = 2, kFault = 4, kRedirect = 8 };

    std::uint16_t regs_ = 0;
    std::bitset<kStackSize> stack_;
    std::uint64_t maps_ = 0;
    std::uint8_t flags_ = 0;
};

struct IoSets {
    std::vector<Symbol> inputs;
    std::vector<Symbol> outputs;

    [[nodiscard]] SymbolSet input_set() const { return to_set(inputs); }
    [[nodiscard]] SymbolSet output_set() const { return to_set(outputs); }
    static SymbolSet to_set(const std::vector<Symbol>& v) {
        SymbolSet s;
        for (const auto& sym : v) s.add(sym);
        return s;
    }
};

[[nodiscard]] IoSets io_sets(const Instruction& insn);

// Symbols the instruction is guaranteed to overwrite (used to kill liveness).
[[nodiscard]] SymbolSet must_writes(const Instruction& insn);

// True when the access can never trap: stack accesses with a statically known
// in-range window and well-formed ctx field reads.
[[nodiscard]] bool access_is_safe(const Instruction& insn);

}  // namespace xdpvliw::isa
