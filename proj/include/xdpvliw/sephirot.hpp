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
#include <string>
#include <vector>

#include "xdpvliw/vliw.hpp"
#include "xdpvliw/vm.hpp"

namespace xdpvliw::sephirot {

struct CycleModel {
    int pipeline_depth = 4;      // IF, ID, IE, commit
    int early_exit_savings = 3;  // drain cycles skipped when an EarlyExit ends the run
    int branch_penalty = 0;      // extra cycles per taken branch
};

struct HazardViolation {
    enum class Kind { Bernstein, MultiHelper, BranchOrder, CrossLaneRaw };
    Kind kind = Kind::Bernstein;
    std::int32_t row = 0;
    int lane_a = -1;
    int lane_b = -1;
    std::int32_t other_row = -1;  // CrossLaneRaw: the reading row
    std::string detail;
};

[[nodiscard]] const char* hazard_kind_name(HazardViolation::Kind k);
[[nodiscard]] std::string describe(const HazardViolation& v);

struct RowTrace {
    std::int32_t row = 0;
    int taken_lane = -1;  // lane whose control op redirected flow, -1 for fallthrough
};

struct RunOptions {
    vm::Limits limits;
    CycleModel model;
    bool check_forwarding = true;  // record cross-lane back-to-back RAW pairs as they execute
};

struct RunReport {
    vm::XdpResult result;
    std::uint64_t rows_executed = 0;
    std::uint64_t instructions_executed = 0;
    std::uint64_t cycles = 0;
    std::uint64_t taken_branches = 0;
    double dynamic_ipc = 0.0;
    std::vector<HazardViolation> hazard_violations;
    std::vector<RowTrace> trace;  // filled when limits.record_trace is set
};

RunReport exec_vliw(const vliw::VliwProgram& program, vm::MachineState& state, const RunOptions& options = {});

RunReport run_vliw(const vliw::VliwProgram& program, const vm::Packet& packet, const vm::MapStore& maps,
                   vm::MapStore* final_maps = nullptr, const RunOptions& options = {});

// Static validation of a schedule: same-row Bernstein pairs, rows with more
// than one helper call, misordered branches and cross-lane RAW pairs between
// a row and any row it can transfer control to.
[[nodiscard]] std::vector<HazardViolation> hazard_check(const vliw::VliwProgram& program, bool forwarding = true);

struct IpcMeasurement {
    double static_ipc = 0.0;
    double dynamic_ipc = 0.0;  // mean over the workload
    std::uint64_t packets = 0;
};

[[nodiscard]] IpcMeasurement measure_ipc(const vliw::VliwProgram& program, const std::vector<vm::Packet>& workload,
                                         const vm::MapStore& maps, const RunOptions& options = {});

// One line per executed row: cycle, row index, lane mnemonics, taken lane.
[[nodiscard]] std::string format_trace(const vliw::VliwProgram& program, const RunReport& report);

}  // namespace xdpvliw::sephirot
