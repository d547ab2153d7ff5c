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

#include "xdpvliw/optimizer.hpp"
#include "xdpvliw/symbols.hpp"

namespace xdpvliw::opt {

using isa::Kind;

void validate(const LaneConstraints& c) {
    if (c.lanes < 1 || c.lanes > 8) throw Error("lanes must be in [1, 8]");
    if (c.helpers_per_row < 1) throw Error("helpers_per_row must be positive");
}

namespace {

// Output is a single register and nothing else is read in place, so the
// destination can be renamed by editing the instruction alone.
bool renamable_writer(const Instruction& insn) {
    switch (insn.kind) {
    case Kind::MovImm:
    case Kind::MovReg:
    case Kind::LoadImm64:
    case Kind::Load:
    case Kind::Load48:
    case Kind::AluThreeOp: return insn.dst != isa::R10;
    default: return false;
    }
}

bool register_only(const isa::SymbolSet& s) { return !s.empty() && !s.has_memory() && s.symbols().size() == 1; }

}  // namespace

SchedGraph build_sched_graph(const std::vector<Instruction>& insns, bool soft_waw) {
    SchedGraph g;
    const int n = static_cast<int>(insns.size());
    std::vector<isa::SymbolSet> ins(insns.size());
    std::vector<isa::SymbolSet> outs(insns.size());
    for (int i = 0; i < n; ++i) {
        const auto& insn = insns[static_cast<std::size_t>(i)];
        SchedNode node;
        node.is_control = insn.is_control();
        node.is_call = insn.kind == Kind::Call;
        node.is_terminator = node.is_control && i == n - 1;
        g.nodes.push_back(node);
        const auto io = isa::io_sets(insn);
        ins[static_cast<std::size_t>(i)] = io.input_set();
        outs[static_cast<std::size_t>(i)] = io.output_set();
    }
    for (int j = 0; j < n; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        for (int i = 0; i < j; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            SchedEdge e{i, j, -1, false};
            if (outs[ui].intersects(ins[uj])) {
                e.latency = 1;
                isa::SymbolSet a = outs[ui];
                isa::SymbolSet b = ins[uj];
                e.forwarded = (a.registers() & b.registers()) != 0;
            }
            if (ins[ui].intersects(outs[uj])) e.latency = 1;
            if (outs[ui].intersects(outs[uj])) {
                const bool soft = soft_waw && renamable_writer(insns[ui]) && register_only(outs[ui]) &&
                                  register_only(outs[uj]) && !g.nodes[uj].is_call;
                e.latency = std::max(e.latency, soft ? 0 : 1);
            }
            if (g.nodes[uj].is_terminator) e.latency = std::max(e.latency, 0);
            if (e.latency >= 0) g.edges.push_back(e);
        }
    }
    return g;
}

SchedGraph sched_graph_from_ddg(const analysis::DataDependenceGraph& ddg, const Program& program, bool soft_waw) {
    std::vector<Instruction> insns;
    for (auto idx : ddg.nodes) insns.push_back(program.instructions[static_cast<std::size_t>(idx)]);
    return build_sched_graph(insns, soft_waw);
}

BlockSchedule list_schedule(const SchedGraph& g, const LaneConstraints& c) {
    validate(c);
    const int n = g.size();
    BlockSchedule s;
    s.where.assign(static_cast<std::size_t>(n), Placement{});
    if (n == 0) return s;

    std::vector<std::vector<const SchedEdge*>> preds(static_cast<std::size_t>(n));
    std::vector<std::vector<const SchedEdge*>> succs(static_cast<std::size_t>(n));
    for (const auto& e : g.edges) {
        preds[static_cast<std::size_t>(e.to)].push_back(&e);
        succs[static_cast<std::size_t>(e.from)].push_back(&e);
    }
    // critical path height, counted in rows
    std::vector<int> height(static_cast<std::size_t>(n), 0);
    for (int i = n - 1; i >= 0; --i) {
        for (const auto* e : succs[static_cast<std::size_t>(i)]) {
            height[static_cast<std::size_t>(i)] =
                std::max(height[static_cast<std::size_t>(i)], height[static_cast<std::size_t>(e->to)] + e->latency);
        }
    }
    std::vector<bool> feeds_control(static_cast<std::size_t>(n), false);
    for (const auto& e : g.edges) {
        if (e.forwarded && g.nodes[static_cast<std::size_t>(e.to)].is_control) feeds_control[static_cast<std::size_t>(e.from)] = true;
    }
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return height[static_cast<std::size_t>(a)] > height[static_cast<std::size_t>(b)];
    });

    int placed = 0;
    for (int r = 0; placed < n; ++r) {
        s.rows.emplace_back(static_cast<std::size_t>(c.lanes), -1);
        auto& row = s.rows.back();
        int calls = 0;
        for (bool progress = true; progress;) {
            progress = false;
            for (int v : order) {
                const auto uv = static_cast<std::size_t>(v);
                if (s.where[uv].row >= 0) continue;
                const SchedNode& node = g.nodes[uv];
                if (node.is_call && calls >= c.helpers_per_row) continue;
                bool ready = true;
                int pinned = -1;
                bool conflict = false;
                for (const auto* e : preds[uv]) {
                    const Placement& p = s.where[static_cast<std::size_t>(e->from)];
                    if (p.row < 0 || p.row > r || (e->latency > 0 && p.row == r)) {
                        ready = false;
                        break;
                    }
                    if (c.forwarding && e->forwarded && p.row == r - 1) {
                        if (pinned >= 0 && pinned != p.lane) conflict = true;
                        pinned = p.lane;
                    }
                }
                if (!ready || conflict) continue;
                int lane = -1;
                if (pinned >= 0) {
                    if (row[static_cast<std::size_t>(pinned)] < 0) lane = pinned;
                } else if (node.is_control || feeds_control[uv]) {
                    for (int l = 0; l < c.lanes && lane < 0; ++l) {
                        if (row[static_cast<std::size_t>(l)] < 0) lane = l;
                    }
                } else {
                    for (int l = c.lanes - 1; l >= 0 && lane < 0; --l) {
                        if (row[static_cast<std::size_t>(l)] < 0) lane = l;
                    }
                }
                if (lane < 0) continue;
                row[static_cast<std::size_t>(lane)] = v;
                s.where[uv] = {r, lane};
                if (node.is_call) ++calls;
                ++placed;
                progress = true;
                break;  // rescan from the highest priority
            }
        }
    }
    return s;
}

std::string check_block_schedule(const SchedGraph& g, const BlockSchedule& s, const LaneConstraints& c) {
    const int n = g.size();
    if (static_cast<int>(s.where.size()) != n) return "placement count mismatch";
    std::vector<int> seen(static_cast<std::size_t>(n), 0);
    for (int r = 0; r < s.row_count(); ++r) {
        const auto& row = s.rows[static_cast<std::size_t>(r)];
        if (static_cast<int>(row.size()) != c.lanes) return "row " + std::to_string(r) + " has wrong width";
        int calls = 0;
        for (int l = 0; l < c.lanes; ++l) {
            const int v = row[static_cast<std::size_t>(l)];
            if (v < 0) continue;
            if (v >= n) return "unknown node";
            ++seen[static_cast<std::size_t>(v)];
            const Placement& p = s.where[static_cast<std::size_t>(v)];
            if (p.row != r || p.lane != l) return "placement table disagrees with rows";
            if (g.nodes[static_cast<std::size_t>(v)].is_call) ++calls;
        }
        if (calls > c.helpers_per_row) return "row " + std::to_string(r) + " has too many helper calls";
    }
    for (int v = 0; v < n; ++v) {
        if (seen[static_cast<std::size_t>(v)] != 1) return "node " + std::to_string(v) + " not placed exactly once";
        if (g.nodes[static_cast<std::size_t>(v)].is_terminator && s.where[static_cast<std::size_t>(v)].row != s.row_count() - 1) {
            return "terminator not in the last row";
        }
    }
    for (const auto& e : g.edges) {
        const Placement& a = s.where[static_cast<std::size_t>(e.from)];
        const Placement& b = s.where[static_cast<std::size_t>(e.to)];
        if (b.row < a.row + e.latency) {
            return "edge " + std::to_string(e.from) + "->" + std::to_string(e.to) + " violated";
        }
        if (c.forwarding && e.forwarded && b.row == a.row + 1 && a.lane != b.lane) {
            return "cross-lane forwarding " + std::to_string(e.from) + "->" + std::to_string(e.to);
        }
    }
    return {};
}

}  // namespace xdpvliw::opt
