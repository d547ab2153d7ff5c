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

#include "support/oracles.hpp"
#include "xdpvliw/assembly.hpp"
#include "xdpvliw/sephirot.hpp"

using namespace xdpvliw;
using isa::Kind;

namespace {

using Cells = std::vector<std::optional<isa::Instruction>>;

vliw::VliwProgram build(const std::vector<Cells>& rows, int lanes = 4) {
    vliw::VliwProgram p;
    p.lanes = lanes;
    for (const auto& cells : rows) {
        vliw::Row r;
        r.block = 0;
        r.slots.resize(static_cast<std::size_t>(lanes));
        for (std::size_t l = 0; l < cells.size(); ++l) r.slots[l].insn = cells[l];
        p.rows.push_back(r);
    }
    return p;
}

isa::Instruction I(const char* text) { return isa::parse_instruction(text, [](std::string_view) { return std::nullopt; }); }

vm::Packet packet64() {
    vm::Packet p;
    p.data.assign(64, 0x11);
    return p;
}

std::size_t count_kind(const vliw::VliwProgram& v, Kind k) {
    std::size_t n = 0;
    for (const auto& r : v.rows) {
        for (const auto& s : r.slots) n += s.insn && s.insn->kind == k;
    }
    return n;
}

}  // namespace

TEST_CASE("single early_exit row") {
    const auto prog = build({{isa::early_exit(2)}});
    const auto r = sephirot::run_vliw(prog, packet64(), {});
    CHECK(r.result.action == vm::Action::Pass);
    CHECK(r.rows_executed == 1);
    CHECK(r.cycles == 1);
    CHECK(r.dynamic_ipc == Catch::Approx(1.0));
}

TEST_CASE("cycle model") {
    const auto plain = build({{isa::mov_imm(isa::R0, 2)}, {isa::exit_insn()}});
    const auto r = sephirot::run_vliw(plain, packet64(), {});
    CHECK(r.rows_executed == 2);
    CHECK(r.cycles == 2 + 3);
    // One more (empty) row costs exactly one more cycle.
    const auto padded = build({{isa::mov_imm(isa::R0, 2)}, {}, {isa::exit_insn()}});
    const auto rp = sephirot::run_vliw(padded, packet64(), {});
    CHECK(rp.result.action == vm::Action::Pass);
    CHECK(rp.cycles == r.cycles + 1);
    // Taken branch penalty.
    const auto jumpy = build({{isa::jump(1)}, {isa::mov_imm(isa::R0, 2)}, {isa::exit_insn()}});
    sephirot::RunOptions opt;
    opt.model.branch_penalty = 2;
    const auto rj = sephirot::run_vliw(jumpy, packet64(), {}, nullptr, opt);
    CHECK(rj.taken_branches == 1);
    CHECK(rj.cycles == 3 + 3 + 2);
}

TEST_CASE("parallel branching: lowest taken lane wins") {
    const auto both = build({{isa::branch_imm(isa::JmpOp::Eq, isa::R0, 0, 1), std::nullopt,
                              isa::branch_imm(isa::JmpOp::Eq, isa::R0, 0, 2)},
                             {isa::early_exit(1)},
                             {isa::early_exit(2)}});
    const auto r = sephirot::run_vliw(both, packet64(), {});
    CHECK(r.result.action == vm::Action::Drop);

    const auto second = build({{isa::branch_imm(isa::JmpOp::Ne, isa::R0, 0, 1), std::nullopt,
                                isa::branch_imm(isa::JmpOp::Eq, isa::R0, 0, 2)},
                               {isa::early_exit(1)},
                               {isa::early_exit(2)}});
    CHECK(sephirot::run_vliw(second, packet64(), {}).result.action == vm::Action::Pass);
}

TEST_CASE("control ops behind a taken branch are squashed") {
    const auto prog = build({{isa::branch_imm(isa::JmpOp::Eq, isa::R0, 0, 1), isa::early_exit(2)},
                             {isa::alu_imm(isa::AluOp::Add, isa::R0, 3)},
                             {isa::exit_insn()}});
    const auto r = sephirot::run_vliw(prog, packet64(), {});
    CHECK(r.result.action == vm::Action::Tx);
}

TEST_CASE("row atomicity: lanes read the pre-row state") {
    const auto prog = build({{I("r1 = 5"), I("r2 = 9")},
                             {I("r1 = r2"), I("r2 = r1")},
                             {I("r0 = r1"), I("r3 = r2")},
                             {I("r0 -= r3")},
                             {I("r0 += 2")},
                             {isa::exit_insn()}});
    // After the swap r1 = 9, r2 = 5; r0 = 9 - 5 + 2 = 6 -> out of range action code.
    vm::MachineState st(packet64(), vm::MapStore{});
    sephirot::RunOptions o;
    o.check_forwarding = false;
    const auto r = sephirot::exec_vliw(prog, st, o);
    CHECK(st.regs[1] == 9);
    CHECK(st.regs[2] == 5);
    CHECK(r.result.r0 == 6);
}

TEST_CASE("two lanes writing one register trap") {
    const auto prog = build({{I("r1 = 5"), I("r1 = 6")}, {isa::early_exit(2)}});
    const auto r = sephirot::run_vliw(prog, packet64(), {});
    REQUIRE(r.result.trap);
    CHECK(r.result.trap->kind == vm::Trap::Kind::RowConflict);
}

TEST_CASE("hazard check") {
    SECTION("cross-lane RAW in adjacent rows") {
        const auto prog = build({{I("r1 = 5")}, {std::nullopt, I("r2 = r1")}, {isa::early_exit(2)}});
        const auto v = sephirot::hazard_check(prog);
        REQUIRE(v.size() == 1);
        CHECK(v[0].kind == sephirot::HazardViolation::Kind::CrossLaneRaw);
        CHECK(sephirot::hazard_check(prog, false).empty());
        const auto run = sephirot::run_vliw(prog, packet64(), {});
        CHECK(run.hazard_violations.size() == 1);
    }
    SECTION("two helper calls in one row") {
        const auto prog = build({{isa::call(1), isa::call(3)}, {isa::early_exit(2)}});
        const auto v = sephirot::hazard_check(prog);
        std::size_t multi = 0;
        for (const auto& h : v) multi += h.kind == sephirot::HazardViolation::Kind::MultiHelper;
        CHECK(multi == 1);
    }
    SECTION("same-row Bernstein conflict") {
        const auto prog = build({{I("r1 = 5"), I("r2 = r1")}, {isa::early_exit(2)}});
        const auto v = sephirot::hazard_check(prog);
        REQUIRE(v.size() == 1);
        CHECK(v[0].kind == sephirot::HazardViolation::Kind::Bernstein);
    }
    SECTION("corpus output is clean") {
        for (const auto& e : harness::load_corpus(oracles::corpus_dir())) {
            for (int lanes = 1; lanes <= 8; ++lanes) {
                opt::LaneConstraints lc;
                lc.lanes = lanes;
                INFO(e.name << " lanes " << lanes);
                CHECK(sephirot::hazard_check(opt::compile(e.program, lc).vliw).empty());
            }
        }
    }
}

TEST_CASE("corpus programs agree with the oracle") {
    for (const auto& e : harness::load_corpus(oracles::corpus_dir())) {
        const auto c = opt::compile(e.program);
        vm::MapStore maps = harness::build_maps(e.maps);
        for (std::size_t i = 0; i < e.packets.size(); ++i) {
            vm::MapStore next;
            const auto cmp = harness::compare(e.program, c.vliw, e.packets[i], maps, &next);
            INFO(e.name << " packet " << i);
            for (const auto& m : cmp.mismatches) INFO(m);
            REQUIRE(cmp.equivalent);
            CHECK_FALSE(cmp.oracle.trap);
            if (!e.expected.empty()) CHECK(cmp.oracle.action == e.expected[i]);
            maps = next;
        }
    }
}

TEST_CASE("static and dynamic IPC") {
    SECTION("fully packed") {
        const auto prog = build({{I("r1 = 1"), I("r2 = 2"), I("r3 = 3"), I("r4 = 4")},
                                 {I("r5 = 1"), I("r6 = 2"), I("r7 = 3"), isa::early_exit(2)}});
        const auto m = sephirot::measure_ipc(prog, {packet64()}, {});
        CHECK(m.static_ipc == Catch::Approx(4.0));
        CHECK(m.dynamic_ipc == Catch::Approx(4.0));
    }
    SECTION("one per row") {
        const auto prog = build({{I("r1 = 1")}, {I("r2 = 2")}, {isa::early_exit(2)}});
        CHECK(sephirot::measure_ipc(prog, {packet64()}, {}).static_ipc == Catch::Approx(1.0));
        CHECK(prog.static_ipc() == Catch::Approx(1.0));
    }
    SECTION("firewall at four lanes") {
        const auto fw = harness::load_corpus_entry(oracles::corpus_dir() + "/simple_firewall");
        const auto c = opt::compile(fw.program);
        const auto m = sephirot::measure_ipc(c.vliw, fw.packets, harness::build_maps(fw.maps));
        CHECK(m.packets == fw.packets.size());
        CHECK(m.dynamic_ipc >= 1.5);
        CHECK(m.dynamic_ipc <= 3.5);
        // Mean over packets; map state carries from one packet to the next.
        double sum = 0;
        vm::MapStore maps = harness::build_maps(fw.maps);
        for (const auto& pk : fw.packets) {
            vm::MapStore next;
            sum += sephirot::run_vliw(c.vliw, pk, maps, &next).dynamic_ipc;
            maps = next;
        }
        CHECK(m.dynamic_ipc == Catch::Approx(sum / static_cast<double>(fw.packets.size())));
    }
}

TEST_CASE("early-exit fusion saves 3 cycles plus the rows it removes") {
    const char* programs[] = {
        "r0 = 2\nexit\n",
        "r2 = *(u32 *)(r1 + 0)\nr3 = *(u32 *)(r1 + 4)\nr3 -= r2\nif r3 > 20 goto big\nr0 = 1\nexit\nbig:\nr0 = 2\nexit\n",
        "r2 = *(u32 *)(r1 + 12)\nr2 += 1\nr0 = 3\nexit\n",
    };
    for (const char* text : programs) {
        const auto p = isa::parse_asm(text);
        opt::PassOptions off;
        off.early_exit = false;
        const auto with = opt::compile(p);
        const auto without = opt::compile(p, {}, off);
        REQUIRE(count_kind(with.vliw, Kind::EarlyExit) >= 1);
        REQUIRE(count_kind(without.vliw, Kind::EarlyExit) == 0);
        const auto rw = sephirot::run_vliw(with.vliw, packet64(), {});
        const auto ro = sephirot::run_vliw(without.vliw, packet64(), {});
        INFO(text);
        REQUIRE(rw.result.action == ro.result.action);
        CHECK(ro.cycles - rw.cycles == 3 + (ro.rows_executed - rw.rows_executed));
    }
}

TEST_CASE("trace output") {
    const auto c = opt::compile(isa::parse_asm("r2 = *(u32 *)(r1 + 0)\nif r2 > 5 goto L\nr0 = 1\nexit\nL:\nr0 = 2\nexit\n"));
    sephirot::RunOptions o;
    o.limits.record_trace = true;
    const auto r = sephirot::run_vliw(c.vliw, packet64(), {}, nullptr, o);
    REQUIRE(r.trace.size() == r.rows_executed);
    const auto text = sephirot::format_trace(c.vliw, r);
    CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) >= r.rows_executed);
}

TEST_CASE("schedule dump") {
    const auto c = opt::compile(isa::parse_asm(harness::read_text(oracles::golden_dir() + "/mov_add.s")));
    const std::string dump = vliw::dump_schedule(c.vliw);
    CHECK(dump == harness::read_text(oracles::golden_dir() + "/mov_add.sched"));
    const auto back = vliw::parse_schedule(dump);
    CHECK(vliw::dump_schedule(back) == dump);
    for (const auto& e : harness::load_corpus(oracles::corpus_dir())) {
        const auto v = opt::compile(e.program).vliw;
        const auto text = vliw::dump_schedule(v);
        const auto parsed = vliw::parse_schedule(text);
        REQUIRE(vliw::dump_schedule(parsed) == text);
        for (const auto& pk : e.packets) {
            const auto a = sephirot::run_vliw(v, pk, harness::build_maps(e.maps));
            const auto b = sephirot::run_vliw(parsed, pk, harness::build_maps(e.maps));
            REQUIRE(a.result.action == b.result.action);
            REQUIRE(a.cycles == b.cycles);
        }
    }
}

TEST_CASE("validate rejects malformed programs") {
    auto bad = build({{isa::jump(7)}, {isa::early_exit(2)}});
    CHECK_THROWS_AS(vliw::validate(bad), Error);
    auto uneven = build({{isa::early_exit(2)}});
    uneven.rows[0].slots.pop_back();
    CHECK_THROWS_AS(vliw::validate(uneven), Error);
}
