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
#include <array>
#include <sstream>

#include "xdpvliw/analysis.hpp"
#include "xdpvliw/assembly.hpp"
#include "xdpvliw/sephirot.hpp"
#include "xdpvliw/symbols.hpp"

namespace xdpvliw::sephirot {

using isa::Kind;
using vliw::VliwProgram;

const char* hazard_kind_name(HazardViolation::Kind k) {
    switch (k) {
    case HazardViolation::Kind::Bernstein: return "bernstein";
    case HazardViolation::Kind::MultiHelper: return "multi-helper";
    case HazardViolation::Kind::BranchOrder: return "branch-order";
    case HazardViolation::Kind::CrossLaneRaw: return "cross-lane-raw";
    }
    return "?";
}

std::string describe(const HazardViolation& v) {
    std::string s = std::string(hazard_kind_name(v.kind)) + " at row " + std::to_string(v.row);
    if (v.lane_a >= 0) s += " lane " + std::to_string(v.lane_a);
    if (v.lane_b >= 0) s += (v.other_row >= 0 ? " -> row " + std::to_string(v.other_row) + " lane " : " vs lane ") +
                           std::to_string(v.lane_b);
    if (!v.detail.empty()) s += ": " + v.detail;
    return s;
}

namespace {

std::uint16_t reg_mask(const std::vector<isa::Symbol>& syms) {
    std::uint16_t m = 0;
    for (const auto& s : syms) {
        if (s.kind == isa::Symbol::Kind::Reg) m = static_cast<std::uint16_t>(m | (1U << s.reg));
    }
    return m;
}

struct RegUse {
    std::uint16_t reads = 0;
    std::uint16_t writes = 0;
};

RegUse reg_use(const isa::Instruction& insn) {
    const isa::IoSets io = isa::io_sets(insn);
    return {reg_mask(io.inputs), reg_mask(io.outputs)};
}

bool unconditional(const isa::Instruction& insn) { return insn.is_exit() || insn.kind == Kind::JumpAlways; }

}  // namespace

RunReport exec_vliw(const VliwProgram& program, vm::MachineState& st, const RunOptions& options) {
    RunReport rep;
    const auto n = static_cast<std::int32_t>(program.rows.size());
    const auto lanes = static_cast<std::size_t>(program.lanes);
    std::array<int, isa::kNumRegisters> prev_writer{};  // lane that wrote the register in the previous row
    prev_writer.fill(-1);
    std::int32_t row = 0;

    auto stop = [&](vm::XdpResult res) {
        res.instructions = rep.instructions_executed;
        rep.result = std::move(res);
        rep.dynamic_ipc = rep.rows_executed ? static_cast<double>(rep.instructions_executed) /
                                                  static_cast<double>(rep.rows_executed)
                                            : 0.0;
        return rep;
    };
    auto trapped = [&](vm::Trap t) {
        t.pc = row;
        vm::XdpResult res = vm::finish(st, st.regs[0]);
        res.action = vm::Action::Aborted;
        res.trap = std::move(t);
        rep.cycles = rep.rows_executed + static_cast<std::uint64_t>(options.model.pipeline_depth - 1);
        return stop(std::move(res));
    };

    std::vector<vm::Effect> effects(lanes);
    for (;;) {
        if (row < 0 || row >= n) return trapped(vm::Trap{vm::Trap::Kind::FellOffEnd, row, 0, "control left the program"});
        if (rep.rows_executed >= options.limits.max_instructions) {
            return trapped(vm::Trap{vm::Trap::Kind::InstructionLimit, row, 0, "row limit exceeded"});
        }
        ++rep.rows_executed;
        const vliw::Row& r = program.rows[static_cast<std::size_t>(row)];

        std::array<int, isa::kNumRegisters> writer{};
        writer.fill(-1);
        for (std::size_t l = 0; l < lanes; ++l) {
            effects[l] = vm::Effect{};
            const vliw::Slot& slot = r.slots[l];
            if (slot.empty()) continue;
            ++rep.instructions_executed;
            const RegUse use = reg_use(*slot.insn);
            if (options.check_forwarding) {
                for (int reg = 0; reg < isa::kNumRegisters; ++reg) {
                    const int w = prev_writer[static_cast<std::size_t>(reg)];
                    if (((use.reads >> reg) & 1U) && w >= 0 && w != static_cast<int>(l)) {
                        rep.hazard_violations.push_back({HazardViolation::Kind::CrossLaneRaw, row - 1, w,
                                                         static_cast<int>(l), row,
                                                         "r" + std::to_string(reg) + " read from another lane"});
                    }
                }
            }
            for (int reg = 0; reg < isa::kNumRegisters; ++reg) {
                if (!((use.writes >> reg) & 1U)) continue;
                int& w = writer[static_cast<std::size_t>(reg)];
                if (w >= 0) {
                    return trapped(vm::Trap{vm::Trap::Kind::RowConflict, row, 0,
                                            "lanes " + std::to_string(w) + " and " + std::to_string(l) + " write r" +
                                                std::to_string(reg)});
                }
                w = static_cast<int>(l);
            }
            if (slot.insn->kind == Kind::Call) continue;
            effects[l] = vm::evaluate(*slot.insn, st);
            if (effects[l].trap) return trapped(*effects[l].trap);
        }
        // Helpers see the pre-row state; Bernstein keeps them apart from the other lanes.
        std::optional<std::uint64_t> helper_r0;
        for (std::size_t l = 0; l < lanes; ++l) {
            const vliw::Slot& slot = r.slots[l];
            if (slot.empty() || slot.insn->kind != Kind::Call) continue;
            std::optional<vm::Trap> trap;
            helper_r0 = vm::call_helper(slot.insn->imm, st, trap);
            if (trap) return trapped(*trap);
        }
        if (helper_r0) st.regs[0] = *helper_r0;
        int taken = -1;
        bool exits = false;
        bool early = false;
        std::int32_t next = row + 1;
        for (std::size_t l = 0; l < lanes; ++l) {
            const vm::Effect& e = effects[l];
            // Control ops behind the winning one are squashed, including an EarlyExit's r0.
            if (taken >= 0 && e.control != vm::Effect::Control::None) continue;
            if (e.reg) st.regs[e.reg->first] = e.reg->second;
            if (e.mem) (void)st.write(e.mem->addr, e.mem->width, e.mem->value);
            if (taken < 0 && e.control != vm::Effect::Control::None) {
                taken = static_cast<int>(l);
                if (e.control == vm::Effect::Control::Exit) {
                    exits = true;
                    early = r.slots[l].insn->kind == Kind::EarlyExit;
                } else {
                    next = e.target;
                }
            }
        }
        prev_writer = writer;
        if (options.limits.record_trace) rep.trace.push_back({row, taken});
        if (taken >= 0 && !exits) ++rep.taken_branches;
        if (exits) {
            const auto& m = options.model;
            std::int64_t cycles = static_cast<std::int64_t>(rep.rows_executed) + m.pipeline_depth - 1 +
                                  static_cast<std::int64_t>(rep.taken_branches) * m.branch_penalty;
            if (early) cycles -= m.early_exit_savings;
            rep.cycles = static_cast<std::uint64_t>(std::max<std::int64_t>(cycles, 1));
            return stop(vm::finish(st, st.regs[0]));
        }
        row = next;
    }
}

RunReport run_vliw(const VliwProgram& program, const vm::Packet& packet, const vm::MapStore& maps,
                   vm::MapStore* final_maps, const RunOptions& options) {
    vm::MachineState st(packet, maps);
    RunReport rep = exec_vliw(program, st, options);
    if (final_maps) *final_maps = st.maps;
    return rep;
}

std::vector<HazardViolation> hazard_check(const VliwProgram& program, bool forwarding) {
    std::vector<HazardViolation> out;
    const auto n = static_cast<std::int32_t>(program.rows.size());
    for (std::int32_t ri = 0; ri < n; ++ri) {
        const vliw::Row& row = program.rows[static_cast<std::size_t>(ri)];
        const int lanes = static_cast<int>(row.slots.size());
        int calls = 0;
        int last_control = -1;
        bool closed = false;
        bool has_fallthrough = true;
        std::vector<std::int32_t> successors;
        for (int a = 0; a < lanes; ++a) {
            const vliw::Slot& sa = row.slots[static_cast<std::size_t>(a)];
            if (sa.empty()) continue;
            const isa::Instruction& ia = *sa.insn;
            for (int b = a + 1; b < lanes; ++b) {
                const vliw::Slot& sb = row.slots[static_cast<std::size_t>(b)];
                if (!sb.empty() && !analysis::bernstein_ok(ia, *sb.insn)) {
                    out.push_back({HazardViolation::Kind::Bernstein, ri, a, b, -1,
                                   isa::format_instruction(ia) + " / " + isa::format_instruction(*sb.insn)});
                }
            }
            if (ia.kind == Kind::Call) ++calls;
            if (ia.is_control()) {
                if (closed) {
                    out.push_back({HazardViolation::Kind::BranchOrder, ri, last_control, a, -1,
                                   "control op after an unconditional transfer"});
                } else if (last_control >= 0) {
                    const auto& prev = row.slots[static_cast<std::size_t>(last_control)].origin;
                    if (prev.index >= 0 && sa.origin.index >= 0 && sa.origin.index <= prev.index) {
                        out.push_back({HazardViolation::Kind::BranchOrder, ri, last_control, a, -1,
                                       "branches not in program order"});
                    }
                }
                last_control = a;
                if (unconditional(ia)) {
                    closed = true;
                    has_fallthrough = false;
                }
                if (ia.kind == Kind::Branch || ia.kind == Kind::JumpAlways) successors.push_back(ia.target);
            }
        }
        if (calls > 1) {
            out.push_back({HazardViolation::Kind::MultiHelper, ri, -1, -1, -1, std::to_string(calls) + " helper calls"});
        }
        if (!forwarding) continue;
        if (has_fallthrough && ri + 1 < n) successors.push_back(ri + 1);
        std::sort(successors.begin(), successors.end());
        successors.erase(std::unique(successors.begin(), successors.end()), successors.end());
        for (std::int32_t si : successors) {
            if (si < 0 || si >= n) continue;
            const vliw::Row& next = program.rows[static_cast<std::size_t>(si)];
            for (int a = 0; a < lanes; ++a) {
                const vliw::Slot& sa = row.slots[static_cast<std::size_t>(a)];
                if (sa.empty()) continue;
                const std::uint16_t writes = reg_use(*sa.insn).writes;
                for (int b = 0; b < static_cast<int>(next.slots.size()); ++b) {
                    const vliw::Slot& sb = next.slots[static_cast<std::size_t>(b)];
                    if (b == a || sb.empty()) continue;
                    const std::uint16_t hit = writes & reg_use(*sb.insn).reads;
                    if (hit) {
                        out.push_back({HazardViolation::Kind::CrossLaneRaw, ri, a, b, si,
                                       isa::format_instruction(*sa.insn) + " -> " +
                                           isa::format_instruction(*sb.insn)});
                    }
                }
            }
        }
    }
    return out;
}

IpcMeasurement measure_ipc(const VliwProgram& program, const std::vector<vm::Packet>& workload,
                           const vm::MapStore& maps, const RunOptions& options) {
    IpcMeasurement m;
    m.static_ipc = program.static_ipc();
    vm::MapStore state = maps;
    double sum = 0.0;
    for (const auto& p : workload) {
        vm::MapStore after;
        const RunReport rep = run_vliw(program, p, state, &after, options);
        state = std::move(after);
        sum += rep.dynamic_ipc;
        ++m.packets;
    }
    m.dynamic_ipc = m.packets ? sum / static_cast<double>(m.packets) : 0.0;
    return m;
}

std::string format_trace(const VliwProgram& program, const RunReport& report) {
    std::ostringstream os;
    std::uint64_t cycle = 0;
    const auto label = [](std::int32_t t) { return vliw::row_label(t); };
    for (const auto& t : report.trace) {
        os << "cycle " << cycle++ << " row " << t.row << ":";
        const auto& row = program.rows[static_cast<std::size_t>(t.row)];
        for (std::size_t l = 0; l < row.slots.size(); ++l) {
            os << (l ? " | " : " ") << (row.slots[l].empty() ? "---" : isa::format_instruction(*row.slots[l].insn, label));
        }
        os << "  taken=" << t.taken_lane << "\n";
    }
    return os.str();
}

}  // namespace xdpvliw::sephirot
