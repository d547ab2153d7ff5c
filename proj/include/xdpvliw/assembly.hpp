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

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "xdpvliw/isa.hpp"

namespace xdpvliw::isa {

class AsmError : public Error {
  public:
    enum class Code { SyntaxError, UnknownMnemonic, UndefinedLabel, DuplicateLabel };

    AsmError(Code code, std::size_t line, const std::string& what) : Error(what), code_(code), line_(line) {}

    [[nodiscard]] Code code() const { return code_; }
    [[nodiscard]] std::size_t line() const { return line_; }  // 1-based

  private:
    Code code_;
    std::size_t line_;
};

// Parses one instruction per line. Accepts the infix syntax emitted by
// format_asm (`r4 = r1 + 20`, `r2 = *(u32 *)(r1 + 0)`, `if r4 > r3 goto L`)
// and the classic mnemonic syntax (`mov r4, r1`, `ldxw r2, [r1+0]`,
// `jgt r4, r3, L`). Labels are `name:`; comments start with `;`, `//` or `#`.
[[nodiscard]] Program parse_asm(std::string_view text);

// Canonical infix listing with `L<index>` labels on branch targets.
[[nodiscard]] std::string format_asm(const Program& program);

// Renders one instruction. Branch targets are printed through `label`.
[[nodiscard]] std::string format_instruction(const Instruction& insn,
                                             const std::function<std::string(std::int32_t)>& label);
[[nodiscard]] std::string format_instruction(const Instruction& insn);

// Parses a single instruction; `resolve` maps a label token to a target.
// Throws AsmError with line 0 on failure.
[[nodiscard]] Instruction parse_instruction(std::string_view text,
                                            const std::function<std::optional<std::int32_t>(std::string_view)>& resolve);

}  // namespace xdpvliw::isa
