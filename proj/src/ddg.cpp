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

#include "xdpvliw/analysis.hpp"

namespace xdpvliw::analysis {

bool bernstein_ok(const Instruction& a, const Instruction& b) {
    const isa::IoSets x = isa::io_sets(a);
    const isa::IoSets y = isa::io_sets(b);
    const SymbolSet i1 = x.input_set();
    const SymbolSet o1 = x.output_set();
    const SymbolSet i2 = y.input_set();
    const SymbolSet o2 = y.output_set();
    return !i1.intersects(o2) && !o1.intersects(i2) && !o1.intersects(o2);
}

std::uint64_t n_checks(std::uint64_t n) { return 3 * (n * (n - 1) / 2); }

DataDependenceGraph build_ddg(const BasicBlock& block, const Program& program) {
    DataDependenceGraph g;
    std::vector<SymbolSet> ins;
    std::vector<SymbolSet> outs;
    for (std::int32_t i = block.first; i <= block.last; ++i) {
        g.nodes.push_back(i);
        const isa::IoSets io = isa::io_sets(program.instructions[static_cast<std::size_t>(i)]);
        ins.push_back(io.input_set());
        outs.push_back(io.output_set());
    }
    const int n = static_cast<int>(g.nodes.size());
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < j; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            const auto uj = static_cast<std::size_t>(j);
            if (outs[ui].intersects(ins[uj])) g.edges.push_back({i, j, DepKind::RAW});
            if (ins[ui].intersects(outs[uj])) g.edges.push_back({i, j, DepKind::WAR});
            if (outs[ui].intersects(outs[uj])) g.edges.push_back({i, j, DepKind::WAW});
        }
    }
    return g;
}

const char* dep_kind_name(DepKind k) {
    switch (k) {
    case DepKind::RAW: return "RAW";
    case DepKind::WAR: return "WAR";
    case DepKind::WAW: return "WAW";
    }
    return "?";
}

}  // namespace xdpvliw::analysis
