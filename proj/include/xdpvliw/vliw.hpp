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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xdpvliw/isa.hpp"

namespace xdpvliw::vliw {

// Where a scheduled instruction came from in the reduced program.
struct Origin {
    int block = -1;
    std::int32_t index = -1;  // instruction index in the reduced program
    bool moved = false;       // placed in a row of a different block

    friend bool operator==(const Origin&, const Origin&) = default;
};

struct Slot {
    std::optional<isa::Instruction> insn;
    Origin origin;

    [[nodiscard]] bool empty() const { return !insn.has_value(); }
};

struct Row {
    std::vector<Slot> slots;  // exactly `lanes` entries
    int block = -1;           // block whose schedule owns this row
};

// Branch targets inside a VLIW program are row indices.
struct VliwProgram {
    int lanes = 4;
    std::vector<Row> rows;
    std::vector<isa::MapDef> maps;

    [[nodiscard]] std::size_t instruction_count() const;
    [[nodiscard]] double static_ipc() const;
};

// Structural checks: lane count, slot count per row, targets in range,
// an exit reachable at the end. Throws Error.
void validate(const VliwProgram& program);

// One row per line, `lane0 | lane1 | ...`, empty slots as `---`, provenance
// behind `#` as `b<block>:<index>` with a trailing `*` for moved slots.
[[nodiscard]] std::string dump_schedule(const VliwProgram& program);
[[nodiscard]] VliwProgram parse_schedule(std::string_view text);

// Textual name of a row index used as a branch label in dumps.
[[nodiscard]] std::string row_label(std::int32_t row);

}  // namespace xdpvliw::vliw
