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
#include <string>
#include <vector>

#include "xdpvliw/isa.hpp"
#include "xdpvliw/symbols.hpp"

namespace xdpvliw::analysis {

using isa::Instruction;
using isa::Program;
using isa::SymbolSet;

struct BasicBlock {
    int id = 0;
    std::int32_t first = 0;  // leader index
    std::int32_t last = 0;   // inclusive
    std::vector<int> successors;
    std::vector<int> predecessors;

    [[nodiscard]] std::int32_t size() const { return last - first + 1; }
};

struct ControlFlowGraph {
    std::vector<BasicBlock> blocks;
    int entry = 0;
    std::vector<int> block_of;     // instruction index -> block id
    std::vector<bool> reachable;   // per block, from entry
    std::vector<int> idom;         // -1 for the entry and unreachable blocks
    std::vector<int> ipdom;        // -1 when the virtual exit is the immediate post-dominator
    std::vector<int> scc;          // strongly connected component id per block
    std::vector<bool> on_cycle;    // block lies on some CFG cycle

    [[nodiscard]] bool dominates(int a, int b) const { return dom_sets[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)]; }
    [[nodiscard]] bool post_dominates(int a, int b) const {
        return pdom_sets[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)];
    }
    [[nodiscard]] std::size_t size() const { return blocks.size(); }

    // dom_sets[b][a]: a dominates b. pdom_sets[b][a]: a post-dominates b.
    std::vector<std::vector<bool>> dom_sets;
    std::vector<std::vector<bool>> pdom_sets;
};

// Leaders are 0, every branch target and every instruction after a control
// instruction. Blocks partition the whole instruction list.
[[nodiscard]] std::vector<BasicBlock> find_basic_blocks(const Program& program);

[[nodiscard]] ControlFlowGraph build_cfg(const Program& program, std::vector<BasicBlock> blocks);
[[nodiscard]] ControlFlowGraph build_cfg(const Program& program);

[[nodiscard]] std::vector<int> control_equivalent(const ControlFlowGraph& cfg, int b);
[[nodiscard]] std::vector<int> candidate_blocks(const ControlFlowGraph& cfg, int b);

struct BlockLiveness {
    SymbolSet use;
    SymbolSet def;
    SymbolSet live_in;
    SymbolSet live_out;
};

struct LivenessInfo {
    std::vector<BlockLiveness> blocks;
    // live_after[i]: symbols live right after instruction i.
    std::vector<SymbolSet> live_after;
};

// Symbols observable after the program exits.
[[nodiscard]] SymbolSet exit_live_set();

[[nodiscard]] LivenessInfo liveness(const ControlFlowGraph& cfg, const Program& program);

// Abstract register contents used to classify memory accesses.
struct AbstractValue {
    enum class Kind : std::uint8_t {
        Unset,       // not yet reached
        Unknown,
        Scalar,
        Ctx,         // the xdp_md pointer itself
        PacketData,  // exactly ctx->data
        PacketPtr,   // somewhere in the packet buffer
        PacketEnd,   // exactly ctx->data_end
        Stack,
        MapValue,
        MapHandle,
    };
    Kind kind = Kind::Unset;
    std::optional<std::int32_t> offset;  // Stack: r10-relative; PacketPtr: bytes past data
    std::optional<std::uint32_t> map_id;
    std::optional<std::int64_t> constant;  // Scalar with a known value

    friend bool operator==(const AbstractValue&, const AbstractValue&) = default;
};

using RegisterState = std::array<AbstractValue, isa::kNumRegisters>;

struct ProvenanceInfo {
    std::vector<RegisterState> before;  // per instruction; Unset entries for unreachable code
};

[[nodiscard]] ProvenanceInfo provenance(const ControlFlowGraph& cfg, const Program& program);

// Fills Instruction::mem for every load, store and call from provenance.
void annotate_regions(Program& program);

enum class DepKind : std::uint8_t { RAW, WAR, WAW };

struct DdgEdge {
    int from = 0;  // node index
    int to = 0;
    DepKind kind = DepKind::RAW;
};

struct DataDependenceGraph {
    std::vector<std::int32_t> nodes;  // instruction indices, program order
    std::vector<DdgEdge> edges;
};

[[nodiscard]] DataDependenceGraph build_ddg(const BasicBlock& block, const Program& program);

[[nodiscard]] bool bernstein_ok(const Instruction& a, const Instruction& b);
[[nodiscard]] std::uint64_t n_checks(std::uint64_t n);

[[nodiscard]] std::string cfg_to_dot(const ControlFlowGraph& cfg, const Program& program);
[[nodiscard]] std::string ddg_to_dot(const DataDependenceGraph& ddg, const Program& program);

[[nodiscard]] const char* dep_kind_name(DepKind k);

}  // namespace xdpvliw::analysis
