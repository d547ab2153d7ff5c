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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xdpvliw/analysis.hpp"
#include "xdpvliw/isa.hpp"
#include "xdpvliw/vliw.hpp"

namespace xdpvliw::opt {

using isa::Instruction;
using isa::Program;

struct LaneConstraints {
    int lanes = 4;
    bool branch_lane_priority = true;  // control ops of a row ordered by lane
    int helpers_per_row = 1;
    bool forwarding = true;  // back-to-back register dependents must share a lane
};

void validate(const LaneConstraints& c);

struct PassOptions {
    bool boundary_checks = true;
    bool zeroing = true;
    bool three_operand = true;
    bool load_store_6b = true;
    bool early_exit = true;
    bool code_motion = true;
    bool parallel_branching = true;
    bool renaming = true;
    bool row_split = true;
    std::optional<int> max_boundary_removals;  // stop after this many checks
};

// Result of one peephole pass. `removed` lists deleted input indices;
// `rewrites` counts pattern matches (a fused pair is one rewrite).
struct PassResult {
    Program program;
    std::vector<std::int32_t> removed;
    int rewrites = 0;
};

[[nodiscard]] PassResult remove_boundary_checks(const Program& program, std::optional<int> max_removals = {});
[[nodiscard]] PassResult remove_zeroing(const Program& program);
[[nodiscard]] PassResult fuse_three_operand(const Program& program);
[[nodiscard]] PassResult fuse_load_store_6b(const Program& program);
[[nodiscard]] PassResult fuse_early_exit(const Program& program);
[[nodiscard]] PassResult remove_unreachable(const Program& program);

// Deletes flagged instructions; branches to a deleted instruction move to the
// next surviving one.
[[nodiscard]] Program delete_instructions(const Program& program, const std::vector<bool>& remove);

struct PassDelta {
    std::string pass;
    int rewrites = 0;
    int instructions_removed = 0;
};

struct PeepholeResult {
    Program program;
    std::vector<PassDelta> deltas;  // one entry per pass, accumulated over iterations
    int iterations = 0;
};

[[nodiscard]] PeepholeResult peephole(const Program& program, const PassOptions& options = {});

// Scheduling graph: nodes in program order, edges i -> j with i < j.
struct SchedNode {
    bool is_control = false;
    bool is_call = false;
    bool is_terminator = false;  // must be placed in the last row
};

struct SchedEdge {
    int from = 0;
    int to = 0;
    int latency = 1;        // 1: later row; 0: same row allowed
    bool forwarded = false;  // register RAW: back-to-back placement must share the lane
};

struct SchedGraph {
    std::vector<SchedNode> nodes;
    std::vector<SchedEdge> edges;

    [[nodiscard]] int size() const { return static_cast<int>(nodes.size()); }
};

// Builds the scheduling graph of a straight-line instruction sequence from
// its data dependences. With `soft_waw`, output-only register conflicts may
// share a row (resolved later by register assignment).
[[nodiscard]] SchedGraph build_sched_graph(const std::vector<Instruction>& insns, bool soft_waw);
[[nodiscard]] SchedGraph sched_graph_from_ddg(const analysis::DataDependenceGraph& ddg, const Program& program,
                                              bool soft_waw);

struct Placement {
    int row = -1;
    int lane = -1;
};

struct BlockSchedule {
    std::vector<std::vector<int>> rows;  // rows[r][lane] = node or -1
    std::vector<Placement> where;        // per node

    [[nodiscard]] int row_count() const { return static_cast<int>(rows.size()); }
};

[[nodiscard]] BlockSchedule list_schedule(const SchedGraph& graph, const LaneConstraints& constraints);

// Checks every scheduling invariant on one block; returns a reason or empty.
[[nodiscard]] std::string check_block_schedule(const SchedGraph& graph, const BlockSchedule& schedule,
                                               const LaneConstraints& constraints);

struct CompileReport {
    std::size_t original_count = 0;
    std::size_t after_reduction_count = 0;
    std::size_t scheduled_count = 0;
    std::size_t vliw_rows = 0;
    int lanes = 0;
    std::vector<PassDelta> deltas;
    int unreachable_removed = 0;
    int moved = 0;
    int parallel_branches = 0;
    int renamed = 0;
    int split_rows = 0;
    int pad_rows = 0;
    std::map<std::string, std::int32_t> rename_map;  // "b<block>:<index>" -> new register
    std::vector<std::string> diagnostics;

    [[nodiscard]] double static_ipc() const {
        return vliw_rows ? static_cast<double>(scheduled_count) / static_cast<double>(vliw_rows) : 0.0;
    }
    [[nodiscard]] int delta(const std::string& pass) const;
    [[nodiscard]] int rewrites(const std::string& pass) const;
};

class RegisterPressureExceeded : public Error {
  public:
    using Error::Error;
};

struct CompileResult {
    vliw::VliwProgram vliw;
    Program reduced;  // program after peephole reduction
    CompileReport report;
};

[[nodiscard]] CompileResult compile(const Program& program, const LaneConstraints& constraints = {},
                                    const PassOptions& options = {});

[[nodiscard]] std::string format_report_text(const CompileReport& report);
[[nodiscard]] std::string format_report_json(const CompileReport& report);

}  // namespace xdpvliw::opt
