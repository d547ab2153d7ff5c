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
#include <set>
#include <sstream>

#include "xdpvliw/analysis.hpp"
#include "xdpvliw/assembly.hpp"

namespace xdpvliw::analysis {

using isa::Kind;

namespace {

using BoolMatrix = std::vector<std::vector<bool>>;

// reach[a][b]: b reachable from a through at least one edge.
BoolMatrix transitive_successors(const std::vector<BasicBlock>& blocks) {
    const std::size_t n = blocks.size();
    BoolMatrix reach(n, std::vector<bool>(n, false));
    for (std::size_t a = 0; a < n; ++a) {
        std::vector<int> stack(blocks[a].successors.begin(), blocks[a].successors.end());
        while (!stack.empty()) {
            const auto b = static_cast<std::size_t>(stack.back());
            stack.pop_back();
            if (reach[a][b]) continue;
            reach[a][b] = true;
            for (int s : blocks[b].successors) stack.push_back(s);
        }
    }
    return reach;
}

int closest(const std::vector<bool>& strict, const BoolMatrix& rel, std::size_t n) {
    // the strict (post-)dominator that every other strict one (post-)dominates
    for (std::size_t c = 0; c < n; ++c) {
        if (!strict[c]) continue;
        bool ok = true;
        for (std::size_t o = 0; o < n && ok; ++o) {
            if (o != c && strict[o] && !rel[c][o]) ok = false;
        }
        if (ok) return static_cast<int>(c);
    }
    return -1;
}

}  // namespace

std::vector<BasicBlock> find_basic_blocks(const Program& program) {
    const auto n = static_cast<std::int32_t>(program.instructions.size());
    if (n == 0) return {};
    std::vector<bool> leader(static_cast<std::size_t>(n), false);
    leader[0] = true;
    for (std::int32_t i = 0; i < n; ++i) {
        const auto& insn = program.instructions[static_cast<std::size_t>(i)];
        if (insn.kind == Kind::Branch || insn.kind == Kind::JumpAlways) {
            if (insn.target < 0 || insn.target >= n) throw Error("branch target out of range");
            leader[static_cast<std::size_t>(insn.target)] = true;
        }
        if (insn.is_control() && i + 1 < n) leader[static_cast<std::size_t>(i + 1)] = true;
    }
    std::vector<BasicBlock> blocks;
    for (std::int32_t i = 0; i < n; ++i) {
        if (leader[static_cast<std::size_t>(i)]) {
            BasicBlock b;
            b.id = static_cast<int>(blocks.size());
            b.first = i;
            blocks.push_back(b);
        }
        blocks.back().last = i;
    }
    std::vector<int> block_of(static_cast<std::size_t>(n));
    for (const auto& b : blocks) {
        for (std::int32_t i = b.first; i <= b.last; ++i) block_of[static_cast<std::size_t>(i)] = b.id;
    }
    for (auto& b : blocks) {
        const auto& last = program.instructions[static_cast<std::size_t>(b.last)];
        auto add = [&](int s) {
            if (std::find(b.successors.begin(), b.successors.end(), s) == b.successors.end()) b.successors.push_back(s);
        };
        if (last.kind == Kind::Branch) {
            if (b.last + 1 < n) add(block_of[static_cast<std::size_t>(b.last + 1)]);
            add(block_of[static_cast<std::size_t>(last.target)]);
        } else if (last.kind == Kind::JumpAlways) {
            add(block_of[static_cast<std::size_t>(last.target)]);
        } else if (!last.is_exit() && b.last + 1 < n) {
            add(block_of[static_cast<std::size_t>(b.last + 1)]);
        }
    }
    for (const auto& b : blocks) {
        for (int s : b.successors) blocks[static_cast<std::size_t>(s)].predecessors.push_back(b.id);
    }
    return blocks;
}

ControlFlowGraph build_cfg(const Program& program) { return build_cfg(program, find_basic_blocks(program)); }

ControlFlowGraph build_cfg(const Program& program, std::vector<BasicBlock> blocks) {
    ControlFlowGraph cfg;
    cfg.blocks = std::move(blocks);
    const std::size_t n = cfg.blocks.size();
    cfg.block_of.assign(program.instructions.size(), -1);
    for (const auto& b : cfg.blocks) {
        for (std::int32_t i = b.first; i <= b.last; ++i) cfg.block_of[static_cast<std::size_t>(i)] = b.id;
    }
    if (n == 0) return cfg;

    const BoolMatrix reach = transitive_successors(cfg.blocks);
    cfg.reachable.assign(n, false);
    cfg.reachable[0] = true;
    for (std::size_t b = 0; b < n; ++b) cfg.reachable[b] = b == 0 || reach[0][b];

    cfg.on_cycle.assign(n, false);
    cfg.scc.assign(n, -1);
    int next_scc = 0;
    for (std::size_t b = 0; b < n; ++b) {
        cfg.on_cycle[b] = reach[b][b];
        if (cfg.scc[b] >= 0) continue;
        cfg.scc[b] = next_scc;
        for (std::size_t c = b + 1; c < n; ++c) {
            if (reach[b][c] && reach[c][b]) cfg.scc[c] = next_scc;
        }
        ++next_scc;
    }

    // dominators over reachable blocks
    cfg.dom_sets.assign(n, std::vector<bool>(n, false));
    for (std::size_t b = 0; b < n; ++b) {
        if (b == 0 || !cfg.reachable[b]) {
            cfg.dom_sets[b][b] = true;
        } else {
            for (std::size_t a = 0; a < n; ++a) cfg.dom_sets[b][a] = cfg.reachable[a];
        }
    }
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t b = 1; b < n; ++b) {
            if (!cfg.reachable[b]) continue;
            std::vector<bool> meet(n, true);
            for (int p : cfg.blocks[b].predecessors) {
                if (!cfg.reachable[static_cast<std::size_t>(p)]) continue;
                for (std::size_t a = 0; a < n; ++a) meet[a] = meet[a] && cfg.dom_sets[static_cast<std::size_t>(p)][a];
            }
            meet[b] = true;
            if (meet != cfg.dom_sets[b]) {
                cfg.dom_sets[b] = meet;
                changed = true;
            }
        }
    }

    // post-dominators against a virtual exit fed by every exiting block
    std::vector<bool> reaches_exit(n, false);
    for (std::size_t b = 0; b < n; ++b) {
        if (program.instructions[static_cast<std::size_t>(cfg.blocks[b].last)].is_exit()) reaches_exit[b] = true;
    }
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t c = 0; c < n && !reaches_exit[b]; ++c) {
            if (reach[b][c] && program.instructions[static_cast<std::size_t>(cfg.blocks[c].last)].is_exit()) {
                reaches_exit[b] = true;
            }
        }
    }
    cfg.pdom_sets.assign(n, std::vector<bool>(n, false));
    for (std::size_t b = 0; b < n; ++b) {
        const bool exits = program.instructions[static_cast<std::size_t>(cfg.blocks[b].last)].is_exit();
        if (exits || !reaches_exit[b]) {
            cfg.pdom_sets[b][b] = true;
        } else {
            for (std::size_t a = 0; a < n; ++a) cfg.pdom_sets[b][a] = reaches_exit[a];
        }
    }
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t b = n; b-- > 0;) {
            const bool exits = program.instructions[static_cast<std::size_t>(cfg.blocks[b].last)].is_exit();
            if (exits || !reaches_exit[b]) continue;
            std::vector<bool> meet(n, true);
            for (int s : cfg.blocks[b].successors) {
                if (!reaches_exit[static_cast<std::size_t>(s)]) continue;
                for (std::size_t a = 0; a < n; ++a) meet[a] = meet[a] && cfg.pdom_sets[static_cast<std::size_t>(s)][a];
            }
            meet[b] = true;
            if (meet != cfg.pdom_sets[b]) {
                cfg.pdom_sets[b] = meet;
                changed = true;
            }
        }
    }

    // dominance as a relation: rel[c][o] true when c is dominated by o
    cfg.idom.assign(n, -1);
    cfg.ipdom.assign(n, -1);
    for (std::size_t b = 0; b < n; ++b) {
        std::vector<bool> sd = cfg.dom_sets[b];
        sd[b] = false;
        if (cfg.reachable[b]) cfg.idom[b] = closest(sd, cfg.dom_sets, n);
        std::vector<bool> spd = cfg.pdom_sets[b];
        spd[b] = false;
        cfg.ipdom[b] = closest(spd, cfg.pdom_sets, n);
    }
    return cfg;
}

std::vector<int> control_equivalent(const ControlFlowGraph& cfg, int b) {
    std::vector<int> out;
    const auto bs = static_cast<std::size_t>(b);
    for (std::size_t c = 0; c < cfg.size(); ++c) {
        const int ci = static_cast<int>(c);
        if (ci == b) {
            out.push_back(ci);
            continue;
        }
        if (!cfg.reachable[c] || !cfg.reachable[bs]) continue;
        const bool same_nest = cfg.on_cycle[bs] ? cfg.scc[c] == cfg.scc[bs] : !cfg.on_cycle[c];
        if (!same_nest) continue;
        if ((cfg.dominates(b, ci) && cfg.post_dominates(ci, b)) ||
            (cfg.dominates(ci, b) && cfg.post_dominates(b, ci))) {
            out.push_back(ci);
        }
    }
    return out;
}

std::vector<int> candidate_blocks(const ControlFlowGraph& cfg, int b) {
    std::set<int> pool;
    for (int x : control_equivalent(cfg, b)) {
        pool.insert(x);
        for (int s : cfg.blocks[static_cast<std::size_t>(x)].successors) {
            if (cfg.dominates(x, s) && cfg.post_dominates(s, x)) pool.insert(s);
        }
    }
    std::vector<int> out;
    for (int c : pool) {
        if (c != b && cfg.reachable[static_cast<std::size_t>(c)] && cfg.dominates(b, c)) out.push_back(c);
    }
    return out;
}

namespace {

std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

}  // namespace

std::string cfg_to_dot(const ControlFlowGraph& cfg, const Program& program) {
    std::ostringstream os;
    os << "digraph cfg {\n  node [shape=box, fontname=monospace];\n";
    for (const auto& b : cfg.blocks) {
        os << "  B" << b.id << " [label=\"B" << b.id << "\\l";
        for (std::int32_t i = b.first; i <= b.last; ++i) {
            os << i << ": " << dot_escape(isa::format_instruction(program.instructions[static_cast<std::size_t>(i)]))
               << "\\l";
        }
        os << "\"";
        if (!cfg.reachable[static_cast<std::size_t>(b.id)]) os << ", style=dashed";
        os << "];\n";
    }
    for (const auto& b : cfg.blocks) {
        for (int s : b.successors) os << "  B" << b.id << " -> B" << s << ";\n";
    }
    os << "}\n";
    return os.str();
}

std::string ddg_to_dot(const DataDependenceGraph& ddg, const Program& program) {
    std::ostringstream os;
    os << "digraph ddg {\n  node [shape=box, fontname=monospace];\n";
    for (std::size_t k = 0; k < ddg.nodes.size(); ++k) {
        const auto idx = ddg.nodes[k];
        os << "  n" << k << " [label=\"" << idx << ": "
           << dot_escape(isa::format_instruction(program.instructions[static_cast<std::size_t>(idx)])) << "\"];\n";
    }
    for (const auto& e : ddg.edges) {
        os << "  n" << e.from << " -> n" << e.to << " [label=\"" << dep_kind_name(e.kind) << "\"];\n";
    }
    os << "}\n";
    return os.str();
}

}  // namespace xdpvliw::analysis
