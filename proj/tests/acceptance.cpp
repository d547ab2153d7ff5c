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

#include <chrono>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>

#include "support/oracles.hpp"
#include "xdpvliw/assembly.hpp"
#include "xdpvliw/sephirot.hpp"

using namespace xdpvliw;

namespace {

int failures = 0;

void verdict(int n, bool ok, const std::string& detail) {
    std::printf("criterion %2d: %s  %s\n", n, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::size_t count_kind(const vliw::VliwProgram& v, isa::Kind k) {
    std::size_t n = 0;
    for (const auto& r : v.rows) {
        for (const auto& s : r.slots) n += s.insn && s.insn->kind == k;
    }
    return n;
}

vm::Packet packet64() {
    vm::Packet p;
    for (int i = 0; i < 64; ++i) p.data.push_back(static_cast<std::uint8_t>(i * 5));
    return p;
}

void criterion_1_2(const std::vector<harness::CorpusEntry>& corpus) {
    harness::FuzzOptions o;
    o.iterations = 10000;
    o.seed = 1;
    o.constraints.lanes = 4;
    const auto t0 = std::chrono::steady_clock::now();
    const auto s = harness::fuzz(o);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream d1;
    d1 << s.equivalent << "/" << s.cases << " equivalent, " << s.trapped << " trapping cases agree, " << secs << " s";
    verdict(1, s.cases == 10000 && s.equivalent == s.cases && secs < 300.0, d1.str());

    std::size_t corpus_violations = 0;
    std::size_t schedules = 0;
    for (const auto& e : corpus) {
        for (int lanes = 1; lanes <= 8; ++lanes) {
            opt::LaneConstraints lc;
            lc.lanes = lanes;
            corpus_violations += sephirot::hazard_check(opt::compile(e.program, lc).vliw).size();
            ++schedules;
        }
    }
    std::ostringstream d2;
    d2 << corpus_violations << " violations over " << schedules << " corpus schedules, " << s.hazard_cases
       << " fuzz cases with violations";
    verdict(2, corpus_violations == 0 && s.hazard_cases == 0, d2.str());
}

void criterion_3() {
    const auto a = opt::compile(isa::parse_asm("r4 = r1\nr4 += 20\nr0 = 2\nexit\n"));
    const auto b = opt::compile(isa::parse_asm("r0 = 1\nexit\n"));
    const auto three = count_kind(a.vliw, isa::Kind::AluThreeOp);
    const auto early = count_kind(b.vliw, isa::Kind::EarlyExit);
    std::ostringstream d;
    d << "AluThreeOp=" << three << ", EarlyExit=" << early;
    verdict(3, three == 1 && early == 1, d.str());
}

void criterion_4(const harness::CorpusEntry& fw) {
    bool ok = true;
    std::ostringstream d;
    for (int k = 1; k <= 3; ++k) {
        opt::PassOptions po;
        po.zeroing = po.three_operand = po.load_store_6b = po.early_exit = false;
        po.max_boundary_removals = k;
        const auto c = opt::compile(fw.program, {}, po);
        const auto shrink = c.report.original_count - c.report.after_reduction_count;
        d << "k=" << k << ": -" << shrink << " ";
        ok = ok && shrink == static_cast<std::size_t>(3 * k);
    }
    verdict(4, ok, d.str());
}

void criterion_5() {
    bool ok = analysis::n_checks(2) == 3 && analysis::n_checks(4) == 18;
    for (std::uint64_t n = 1; n <= 64; ++n) {
        ok = ok && analysis::n_checks(n) == 3 * n * (n - 1) / 2 && analysis::n_checks(n) == oracles::count_pair_checks(n);
    }
    std::ostringstream d;
    d << "n_checks(2)=" << analysis::n_checks(2) << ", n_checks(4)=" << analysis::n_checks(4) << ", N<=64 checked";
    verdict(5, ok, d.str());
}

void criterion_6(const std::vector<harness::CorpusEntry>& corpus) {
    bool ok = true;
    std::ostringstream d;
    for (const auto& e : corpus) {
        const auto s = harness::lane_sweep(e.name, e.program);
        ok = ok && s.non_increasing();
        d << e.name << "[";
        for (std::size_t i = 0; i < s.rows.size(); ++i) d << (i ? "," : "") << s.rows[i];
        d << "] ";
    }
    d << "(L=2..8, " << (ok ? "non-increasing" : "NOT monotone") << ")";
    verdict(6, ok, d.str());
}

void criterion_7(const harness::CorpusEntry& fw) {
    const auto c = opt::compile(fw.program);
    const auto m = sephirot::measure_ipc(c.vliw, fw.packets, harness::build_maps(fw.maps));
    char buf[160];
    std::snprintf(buf, sizeof buf, "dynamic IPC %.2f (static %.2f) over %llu packets; reference 2.66", m.dynamic_ipc,
                  m.static_ipc, static_cast<unsigned long long>(m.packets));
    verdict(7, m.dynamic_ipc >= 1.5 && m.dynamic_ipc <= 3.5, buf);
}

void criterion_8() {
    const char* programs[] = {
        "r0 = 2\nexit\n",
        "r2 = *(u32 *)(r1 + 0)\nr3 = *(u32 *)(r1 + 4)\nr3 -= r2\nif r3 > 20 goto big\nr0 = 1\nexit\nbig:\nr0 = 2\nexit\n",
        "r2 = *(u32 *)(r1 + 12)\nr2 += 1\nr0 = 3\nexit\n",
    };
    bool ok = true;
    std::ostringstream d;
    for (const char* text : programs) {
        const auto p = isa::parse_asm(text);
        opt::PassOptions off;
        off.early_exit = false;
        const auto with = sephirot::run_vliw(opt::compile(p).vliw, packet64(), {});
        const auto without = sephirot::run_vliw(opt::compile(p, {}, off).vliw, packet64(), {});
        const auto saved_rows = without.rows_executed - with.rows_executed;
        const auto delta = without.cycles - with.cycles;
        d << delta << "=3+" << saved_rows << " ";
        ok = ok && delta == 3 + saved_rows && with.result.action == without.result.action;
    }
    verdict(8, ok, d.str());
}

void criterion_9() {
    std::size_t graphs = 0, optimal = 0, worst = 0;
    bool ok = true;
    for (const auto& block : oracles::sample_blocks(2000, 2)) {
        if (block.size() > 6) continue;
        const auto g = opt::build_sched_graph(block, true);
        for (int lanes = 1; lanes <= 4; ++lanes) {
            opt::LaneConstraints lc;
            lc.lanes = lanes;
            const auto s = opt::list_schedule(g, lc);
            const int best = oracles::optimal_rows(g, lc);
            const int got = s.row_count();
            ok = ok && opt::check_block_schedule(g, s, lc).empty() && got <= best + 1;
            optimal += got == best;
            worst = std::max<std::size_t>(worst, static_cast<std::size_t>(std::max(0, got - best)));
            ++graphs;
        }
    }
    std::ostringstream d;
    d << graphs << " (DDG, lanes) pairs, " << optimal << " optimal, max excess " << worst << " row";
    verdict(9, ok && graphs > 0, d.str());
}

void criterion_10() {
    std::mt19937_64 rng(2026);
    bool ok = true;
    std::ostringstream d;
    const std::pair<isa::Kind, const char*> kinds[] = {{isa::Kind::AluThreeOp, "alu3"},
                                                       {isa::Kind::Load48, "load48"},
                                                       {isa::Kind::Store48, "store48"},
                                                       {isa::Kind::EarlyExit, "early_exit"}};
    for (const auto& [kind, name] : kinds) {
        int pass = 0;
        for (int t = 0; t < 1000; ++t) pass += oracles::compare_expansion(oracles::random_extended_case(kind, rng)).empty();
        d << name << " " << pass << "/1000 ";
        ok = ok && pass == 1000;
    }
    verdict(10, ok, d.str());
}

}  // namespace

int main() {
    try {
        const auto corpus = harness::load_corpus(oracles::corpus_dir());
        const auto fw = harness::load_corpus_entry(oracles::corpus_dir() + "/simple_firewall");
        criterion_1_2(corpus);
        criterion_3();
        criterion_4(fw);
        criterion_5();
        criterion_6(corpus);
        criterion_7(fw);
        criterion_8();
        criterion_9();
        criterion_10();
    } catch (const std::exception& e) {
        std::printf("error: %s\n", e.what());
        return 2;
    }
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
