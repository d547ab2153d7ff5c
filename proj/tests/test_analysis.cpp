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

#include <algorithm>
#include <random>

#include "support/oracles.hpp"
#include "xdpvliw/analysis.hpp"
#include "xdpvliw/assembly.hpp"
#include "xdpvliw/symbols.hpp"

using namespace xdpvliw;
using analysis::ControlFlowGraph;

namespace {

std::vector<std::vector<int>> successors(const ControlFlowGraph& cfg) {
    std::vector<std::vector<int>> s;
    for (const auto& b : cfg.blocks) s.push_back(b.successors);
    return s;
}

std::vector<int> exit_blocks(const ControlFlowGraph& cfg, const isa::Program& p) {
    std::vector<int> out;
    for (const auto& b : cfg.blocks) {
        if (p.instructions[static_cast<std::size_t>(b.last)].is_exit()) out.push_back(b.id);
    }
    return out;
}

std::set<std::int32_t> block_leaders(const std::vector<analysis::BasicBlock>& blocks) {
    std::set<std::int32_t> s;
    for (const auto& b : blocks) s.insert(b.first);
    return s;
}

std::set<int> as_set(const std::vector<int>& v) { return {v.begin(), v.end()}; }

// Registers read before being written on some path from the start of block
// `b` to an exit, by walking every path.
std::uint16_t path_live_in(const ControlFlowGraph& cfg, const isa::Program& p, int b) {
    std::uint16_t live = 0;
    std::vector<int> path;
    std::function<void(int, std::uint16_t)> walk = [&](int x, std::uint16_t written) {
        if (std::find(path.begin(), path.end(), x) != path.end()) return;
        path.push_back(x);
        const auto& blk = cfg.blocks[static_cast<std::size_t>(x)];
        for (std::int32_t i = blk.first; i <= blk.last; ++i) {
            const auto& insn = p.instructions[static_cast<std::size_t>(i)];
            live |= static_cast<std::uint16_t>(isa::io_sets(insn).input_set().registers() & ~written);
            written |= isa::must_writes(insn).registers();
        }
        for (int s : blk.successors) walk(s, written);
        path.pop_back();
    };
    walk(b, 0);
    return live;
}

isa::Program diamond() {
    return isa::parse_asm(
        "if r1 > r2 goto C\n"
        "r3 = 1\n"
        "goto D\n"
        "C:\n"
        "r3 = 2\n"
        "D:\n"
        "r0 = r3\n"
        "exit\n");
}

isa::Program loop_program() {
    return isa::parse_asm(
        "A:\n"
        "r1 += 1\n"
        "goto B\n"
        "B:\n"
        "if r1 < 5 goto A\n"
        "r0 = 2\n"
        "exit\n");
}

isa::Program chain() {
    return isa::parse_asm(
        "r1 = 1\n"
        "goto B\n"
        "B:\n"
        "r2 = 1\n"
        "goto C\n"
        "C:\n"
        "r0 = 2\n"
        "exit\n");
}

std::vector<isa::Program> fuzz_programs(std::size_t n, std::uint64_t seed) {
    std::vector<isa::Program> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(harness::generate_case(harness::case_seed(seed, i)).program);
    return out;
}

}  // namespace

TEST_CASE("basic blocks: straight line") {
    const auto p = isa::parse_asm("r1 = 1\nr2 = 2\nr0 = 1\nexit\n");
    const auto blocks = analysis::find_basic_blocks(p);
    REQUIRE(blocks.size() == 1);
    CHECK(blocks[0].first == 0);
    CHECK(blocks[0].last == 3);
}

TEST_CASE("basic blocks: branch at 3 to 6") {
    const auto p = isa::parse_asm(
        "r0 = 0\nr1 = 1\nr2 = 2\nif r1 > r2 goto L\nr0 = 1\nr0 = 2\nL:\nexit\n");
    REQUIRE(p.size() == 7);
    REQUIRE(p.instructions[3].target == 6);
    const auto blocks = analysis::find_basic_blocks(p);
    CHECK(block_leaders(blocks) == oracles::leaders(p));
    CHECK(block_leaders(blocks) == std::set<std::int32_t>{0, 4, 6});
    CHECK(blocks.size() == 3);
}

TEST_CASE("basic blocks: back edge") {
    const auto p = isa::parse_asm("L:\nr1 += 1\nif r1 < 5 goto L\nr0 = 2\nexit\n");
    const auto cfg = analysis::build_cfg(p);
    CHECK(block_leaders(cfg.blocks) == oracles::leaders(p));
    REQUIRE(cfg.size() == 2);
    CHECK(as_set(cfg.blocks[0].successors).contains(0));
    CHECK(cfg.on_cycle[0]);
    CHECK_FALSE(cfg.on_cycle[1]);
}

TEST_CASE("basic blocks partition generated programs") {
    for (const auto& p : fuzz_programs(200, 21)) {
        const auto blocks = analysis::find_basic_blocks(p);
        REQUIRE(block_leaders(blocks) == oracles::leaders(p));
        std::int32_t next = 0;
        for (const auto& b : blocks) {
            REQUIRE(b.first == next);
            for (std::int32_t i = b.first; i < b.last; ++i) REQUIRE_FALSE(p.instructions[static_cast<std::size_t>(i)].is_control());
            next = b.last + 1;
        }
        REQUIRE(next == static_cast<std::int32_t>(p.size()));
    }
}

TEST_CASE("dominators: single block") {
    const auto cfg = analysis::build_cfg(isa::parse_asm("r0 = 1\nexit\n"));
    REQUIRE(cfg.size() == 1);
    CHECK(cfg.idom[0] == -1);
    CHECK(cfg.dominates(0, 0));
}

TEST_CASE("dominators: diamond") {
    const auto p = diamond();
    const auto cfg = analysis::build_cfg(p);
    REQUIRE(cfg.size() == 4);
    const int A = 0, B = 1, C = 2, D = 3;
    CHECK(cfg.idom[D] == A);
    CHECK(cfg.ipdom[A] == D);
    CHECK_FALSE(cfg.dominates(B, D));
    CHECK_FALSE(cfg.dominates(C, D));
    const auto dom = oracles::dominators(successors(cfg), 0);
    const auto pdom = oracles::post_dominators(successors(cfg), exit_blocks(cfg, p));
    CHECK(cfg.dom_sets == dom);
    CHECK(cfg.pdom_sets == pdom);
    // Path enumeration: every path A->D avoids B or C.
    for (const auto& path : oracles::all_paths(successors(cfg), A, D)) CHECK(path.size() == 3);
}

TEST_CASE("dominators: loop") {
    const auto p = loop_program();
    const auto cfg = analysis::build_cfg(p);
    REQUIRE(cfg.size() == 3);
    CHECK(cfg.idom[1] == 0);
    CHECK(cfg.ipdom[1] == 2);
    CHECK(cfg.dom_sets == oracles::dominators(successors(cfg), 0));
    CHECK(cfg.pdom_sets == oracles::post_dominators(successors(cfg), exit_blocks(cfg, p)));
}

TEST_CASE("dominators agree with the reachability oracle on generated programs") {
    std::size_t small = 0;
    for (const auto& p : fuzz_programs(300, 22)) {
        const auto cfg = analysis::build_cfg(p);
        if (cfg.size() <= 8) ++small;
        REQUIRE(cfg.dom_sets == oracles::dominators(successors(cfg), 0));
        REQUIRE(cfg.pdom_sets == oracles::post_dominators(successors(cfg), exit_blocks(cfg, p)));
    }
    CHECK(small > 20);
}

TEST_CASE("control equivalence") {
    SECTION("chain") {
        const auto cfg = analysis::build_cfg(chain());
        REQUIRE(cfg.size() == 3);
        for (int b = 0; b < 3; ++b) CHECK(as_set(analysis::control_equivalent(cfg, b)) == std::set<int>{0, 1, 2});
        CHECK(as_set(analysis::candidate_blocks(cfg, 0)) == std::set<int>{1, 2});
    }
    SECTION("diamond") {
        const auto p = diamond();
        const auto cfg = analysis::build_cfg(p);
        const auto dom = oracles::dominators(successors(cfg), 0);
        const auto pdom = oracles::post_dominators(successors(cfg), exit_blocks(cfg, p));
        std::set<int> expected;
        for (int c = 0; c < 4; ++c) {
            if (c == 0 || (dom[c][0] && pdom[0][c]) || (dom[0][c] && pdom[c][0])) expected.insert(c);
        }
        CHECK(expected == std::set<int>{0, 3});
        CHECK(as_set(analysis::control_equivalent(cfg, 0)) == expected);
        CHECK(as_set(analysis::candidate_blocks(cfg, 0)) == std::set<int>{3});
    }
    SECTION("loop body with a conditional exit") {
        const auto cfg = analysis::build_cfg(loop_program());
        CHECK_FALSE(as_set(analysis::control_equivalent(cfg, 1)).contains(2));
    }
    SECTION("single block") {
        const auto cfg = analysis::build_cfg(isa::parse_asm("r0 = 1\nexit\n"));
        CHECK(analysis::candidate_blocks(cfg, 0).empty());
    }
}

TEST_CASE("control equivalence matches the two-sided definition on acyclic programs") {
    for (const auto& p : fuzz_programs(150, 23)) {
        const auto cfg = analysis::build_cfg(p);
        const auto dom = oracles::dominators(successors(cfg), 0);
        const auto pdom = oracles::post_dominators(successors(cfg), exit_blocks(cfg, p));
        const int n = static_cast<int>(cfg.size());
        for (int b = 0; b < n; ++b) {
            if (!cfg.reachable[static_cast<std::size_t>(b)]) continue;
            std::set<int> expected{b};
            for (int c = 0; c < n; ++c) {
                if (!cfg.reachable[static_cast<std::size_t>(c)]) continue;
                if ((dom[c][b] && pdom[b][c]) || (dom[b][c] && pdom[c][b])) expected.insert(c);
            }
            REQUIRE(as_set(analysis::control_equivalent(cfg, b)) == expected);
        }
    }
}

TEST_CASE("liveness examples") {
    SECTION("dead after exit") {
        const auto p = isa::parse_asm("r4 = 1\nr0 = 0\nexit\n");
        const auto cfg = analysis::build_cfg(p);
        const auto live = analysis::liveness(cfg, p);
        CHECK_FALSE(live.blocks[0].live_out.contains(isa::R4));
        CHECK_FALSE(live.live_after[0].contains(isa::R4));
    }
    SECTION("diamond") {
        const auto p = isa::parse_asm(
            "if r1 > r2 goto C\n"
            "r3 = 1\n"
            "goto D\n"
            "C:\n"
            "r0 = 2\n"
            "exit\n"
            "D:\n"
            "r0 = r3\n"
            "exit\n");
        const auto cfg = analysis::build_cfg(p);
        const auto live = analysis::liveness(cfg, p);
        const int B = cfg.block_of[1], D = cfg.block_of[5];
        CHECK(live.blocks[B].live_out.contains(isa::R3));
        CHECK(live.blocks[D].live_in.contains(isa::R3));
        CHECK((path_live_in(cfg, p, D) >> 3 & 1) == 1);
    }
    SECTION("loop carried") {
        const auto p = isa::parse_asm(
            "r6 = 5\n"
            "L:\n"
            "r1 = r6\n"
            "r1 += 1\n"
            "r6 -= 1\n"
            "if r6 > 0 goto L\n"
            "r0 = 2\n"
            "exit\n");
        const auto cfg = analysis::build_cfg(p);
        const auto live = analysis::liveness(cfg, p);
        const int body = cfg.block_of[1];
        CHECK(live.blocks[body].live_in.contains(isa::R6));
        CHECK(live.blocks[body].live_out.contains(isa::R6));
    }
}

TEST_CASE("liveness registers match path enumeration and are a fixed point") {
    for (const auto& p : fuzz_programs(120, 24)) {
        const auto cfg = analysis::build_cfg(p);
        const auto live = analysis::liveness(cfg, p);
        const isa::SymbolSet at_exit = analysis::exit_live_set();
        for (const auto& b : cfg.blocks) {
            const auto& bl = live.blocks[static_cast<std::size_t>(b.id)];
            REQUIRE(bl.live_in.registers() == path_live_in(cfg, p, b.id));
            isa::SymbolSet out;
            if (p.instructions[static_cast<std::size_t>(b.last)].is_exit()) out.merge(at_exit);
            for (int s : b.successors) out.merge(live.blocks[static_cast<std::size_t>(s)].live_in);
            isa::SymbolSet in = out;
            in.subtract(bl.def);
            in.merge(bl.use);
            REQUIRE(out == bl.live_out);
            REQUIRE(in == bl.live_in);
        }
    }
}

TEST_CASE("ddg examples") {
    SECTION("mov then add") {
        const auto p = isa::parse_asm("r4 = r1\nr4 += 20\nr0 = r4\nexit\n");
        const auto blocks = analysis::find_basic_blocks(p);
        const auto g = analysis::build_ddg(blocks[0], p);
        bool raw = false, waw = false;
        for (const auto& e : g.edges) {
            if (e.from == 0 && e.to == 1 && e.kind == analysis::DepKind::RAW) raw = true;
            if (e.from == 0 && e.to == 1 && e.kind == analysis::DepKind::WAW) waw = true;
        }
        CHECK(raw);
        CHECK(waw);
    }
    SECTION("independent loads") {
        const auto p = isa::parse_asm("r2 = *(u32 *)(r7 + 0)\nr3 = *(u32 *)(r7 + 4)\n");
        const auto g = analysis::build_ddg(analysis::BasicBlock{0, 0, 1, {}, {}}, p);
        CHECK(g.edges.empty());
    }
    SECTION("stack store then load") {
        const auto p = isa::parse_asm("*(u32 *)(r10 - 8) = r2\nr3 = *(u32 *)(r10 - 8)\n");
        // Tracer: the bytes the store changes overlap the bytes the load result depends on.
        std::mt19937_64 rng(3);
        std::set<int> written, read;
        for (int t = 0; t < 50; ++t) {
            auto s = oracles::random_state(rng);
            for (int o : oracles::changed_stack_bytes(p.instructions[0], s)) written.insert(o);
            const auto base = vm::evaluate(p.instructions[1], s).reg;
            for (int o = -16; o < 0; ++o) {
                auto s2 = s;
                s2.stack[static_cast<std::size_t>(o + isa::kStackSize)] ^= 0xff;
                if (vm::evaluate(p.instructions[1], s2).reg != base) read.insert(o);
            }
        }
        std::vector<int> common;
        std::set_intersection(written.begin(), written.end(), read.begin(), read.end(), std::back_inserter(common));
        REQUIRE_FALSE(common.empty());
        const auto g = analysis::build_ddg(analysis::BasicBlock{0, 0, 1, {}, {}}, p);
        REQUIRE(g.edges.size() == 1);
        CHECK(g.edges[0].kind == analysis::DepKind::RAW);
    }
}

TEST_CASE("ddg completeness: topological reorderings keep the final state") {
    std::mt19937_64 rng(77);
    std::size_t blocks_checked = 0;
    for (std::uint64_t i = 0; i < 150; ++i) {
        const auto c = harness::generate_case(harness::case_seed(31, i));
        const auto& p = c.program;
        for (const auto& b : analysis::find_basic_blocks(p)) {
            const auto g = analysis::build_ddg(b, p);
            const std::int32_t last = p.instructions[static_cast<std::size_t>(b.last)].is_control() ? b.last - 1 : b.last;
            const int n = last - b.first + 1;
            if (n < 2) continue;
            vm::MachineState start(c.packet, harness::build_maps(c.maps));
            start.regs[6] = vm::kCtxBase;
            start.regs[7] = start.data_addr();
            start.regs[8] = start.end_addr();
            for (int r : {0, 1, 2, 3, 4, 5, 9}) start.regs[static_cast<std::size_t>(r)] = rng() % 64;
            auto run_order = [&](const std::vector<int>& order) {
                isa::Program q;
                q.maps = p.maps;
                for (int k : order) q.instructions.push_back(p.instructions[static_cast<std::size_t>(b.first + k)]);
                q.instructions.push_back(isa::exit_insn());
                vm::MachineState s = start;
                auto r = oracles::run_from(q, s);
                return std::make_pair(r, s);
            };
            std::vector<int> program_order(static_cast<std::size_t>(n));
            std::iota(program_order.begin(), program_order.end(), 0);
            const auto [ref, ref_state] = run_order(program_order);
            for (int t = 0; t < 4; ++t) {
                // Random topological order of the DDG restricted to the non-control prefix.
                std::vector<int> indeg(static_cast<std::size_t>(n), 0);
                for (const auto& e : g.edges) {
                    if (e.to < n) ++indeg[static_cast<std::size_t>(e.to)];
                }
                std::vector<int> ready, order;
                for (int k = 0; k < n; ++k) {
                    if (indeg[static_cast<std::size_t>(k)] == 0) ready.push_back(k);
                }
                while (!ready.empty()) {
                    const std::size_t pick = rng() % ready.size();
                    const int k = ready[pick];
                    ready.erase(ready.begin() + static_cast<std::ptrdiff_t>(pick));
                    order.push_back(k);
                    for (const auto& e : g.edges) {
                        if (e.from == k && e.to < n && --indeg[static_cast<std::size_t>(e.to)] == 0) ready.push_back(e.to);
                    }
                }
                REQUIRE(static_cast<int>(order.size()) == n);
                const auto [res, st] = run_order(order);
                REQUIRE(res.trap.has_value() == ref.trap.has_value());
                REQUIRE(st.maps.same_contents(ref_state.maps));
                if (ref.trap) continue;
                REQUIRE(st.regs == ref_state.regs);
                REQUIRE(st.stack == ref_state.stack);
                REQUIRE(st.packet_bytes() == ref_state.packet_bytes());
                REQUIRE(st.redirect == ref_state.redirect);
            }
            ++blocks_checked;
        }
    }
    CHECK(blocks_checked > 200);
}

TEST_CASE("bernstein predicate") {
    using isa::AluOp;
    const auto a = isa::alu3_imm(AluOp::Add, isa::R4, isa::R1, 20);
    const auto b = isa::alu3_imm(AluOp::Add, isa::R5, isa::R2, 8);
    CHECK(analysis::bernstein_ok(a, b));
    CHECK_FALSE(analysis::bernstein_ok(isa::mov_reg(isa::R4, isa::R1), isa::alu_imm(AluOp::Add, isa::R4, 20)));
    CHECK_FALSE(analysis::bernstein_ok(isa::call(1), isa::call(3)));
}

TEST_CASE("bernstein predicate is symmetric and matches the three emptiness tests") {
    std::vector<isa::Instruction> pool;
    for (const auto& p : fuzz_programs(30, 25)) pool.insert(pool.end(), p.instructions.begin(), p.instructions.end());
    std::mt19937_64 rng(8);
    for (int t = 0; t < 5000; ++t) {
        const auto& x = pool[rng() % pool.size()];
        const auto& y = pool[rng() % pool.size()];
        const auto sx = isa::io_sets(x), sy = isa::io_sets(y);
        const bool expected = !sx.input_set().intersects(sy.output_set()) && !sx.output_set().intersects(sy.input_set()) &&
                              !sx.output_set().intersects(sy.output_set());
        REQUIRE(analysis::bernstein_ok(x, y) == expected);
        REQUIRE(analysis::bernstein_ok(x, y) == analysis::bernstein_ok(y, x));
    }
}

TEST_CASE("n_checks") {
    CHECK(analysis::n_checks(1) == 0);
    CHECK(analysis::n_checks(2) == 3);
    CHECK(analysis::n_checks(4) == 18);
    for (std::uint64_t n = 1; n <= 64; ++n) REQUIRE(analysis::n_checks(n) == oracles::count_pair_checks(n));
}

TEST_CASE("dot export") {
    const auto p = diamond();
    const auto cfg = analysis::build_cfg(p);
    const std::string dot = analysis::cfg_to_dot(cfg, p);
    CHECK(dot.starts_with("digraph"));
    CHECK(std::count(dot.begin(), dot.end(), '>') >= 4);
    const auto ddg = analysis::build_ddg(cfg.blocks[0], p);
    CHECK(analysis::ddg_to_dot(ddg, p).starts_with("digraph"));
}
