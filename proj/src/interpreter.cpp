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

#include "xdpvliw/vm.hpp"

namespace xdpvliw::vm {

XdpResult exec_sequential(const isa::Program& program, MachineState& st, const Limits& limits) {
    const auto n = static_cast<std::int32_t>(program.instructions.size());
    std::vector<std::int32_t> trace;
    std::int32_t pc = 0;
    std::uint64_t executed = 0;

    auto trapped = [&](Trap t) {
        t.pc = pc;
        XdpResult res = finish(st, st.regs[0]);
        res.action = Action::Aborted;
        res.trap = std::move(t);
        res.trace = std::move(trace);
        res.instructions = executed;
        return res;
    };

    for (;;) {
        if (pc < 0 || pc >= n) return trapped(Trap{Trap::Kind::FellOffEnd, pc, 0, "control left the program"});
        if (executed >= limits.max_instructions) {
            return trapped(Trap{Trap::Kind::InstructionLimit, pc, 0, "instruction limit exceeded"});
        }
        ++executed;
        if (limits.record_trace) trace.push_back(pc);
        const isa::Instruction& insn = program.instructions[static_cast<std::size_t>(pc)];
        if (insn.kind == isa::Kind::Call) {
            std::optional<Trap> trap;
            const std::uint64_t r0 = call_helper(insn.imm, st, trap);
            if (trap) return trapped(*trap);
            st.regs[0] = r0;
            ++pc;
            continue;
        }
        Effect e = evaluate(insn, st);
        if (e.trap) return trapped(*e.trap);
        if (e.reg) st.regs[e.reg->first] = e.reg->second;
        if (e.mem) (void)st.write(e.mem->addr, e.mem->width, e.mem->value);
        switch (e.control) {
        case Effect::Control::None: ++pc; break;
        case Effect::Control::Jump: pc = e.target; break;
        case Effect::Control::Exit: {
            XdpResult res = finish(st, st.regs[0]);
            res.trace = std::move(trace);
            res.instructions = executed;
            return res;
        }
        }
    }
}

XdpResult run_oracle(const isa::Program& program, const Packet& packet, const MapStore& maps, MapStore* final_maps,
                     const Limits& limits) {
    MachineState st(packet, maps);
    XdpResult res = exec_sequential(program, st, limits);
    if (final_maps) *final_maps = st.maps;
    return res;
}

}  // namespace xdpvliw::vm
