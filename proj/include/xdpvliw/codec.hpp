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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xdpvliw/isa.hpp"

namespace xdpvliw::isa {

// Extended opcode bytes. These occupy opcode points the base eBPF ISA leaves
// unassigned; see docs/opcodes.md.
inline constexpr std::uint8_t kOpAluThreeOpImm = 0xe7;
inline constexpr std::uint8_t kOpAluThreeOpReg = 0xef;
inline constexpr std::uint8_t kOpLoad48 = 0xe1;
inline constexpr std::uint8_t kOpStore48 = 0xe3;
inline constexpr std::uint8_t kOpEarlyExit = 0x9d;

class DecodeError : public Error {
  public:
    enum class Code { UnknownOpcode, TruncatedStream, DanglingLddwSecondHalf, BadBranchTarget, BadRegister };

    DecodeError(Code code, std::size_t index, const std::string& what)
        : Error(what), code_(code), index_(index) {}

    [[nodiscard]] Code code() const { return code_; }
    // Slot index (8-byte word) where decoding failed.
    [[nodiscard]] std::size_t index() const { return index_; }

  private:
    Code code_;
    std::size_t index_;
};

class EncodeError : public Error {
  public:
    using Error::Error;
};

[[nodiscard]] Program decode(std::span<const std::uint8_t> bytes);
[[nodiscard]] std::vector<std::uint8_t> encode(const Program& program);

// Opcode byte of a single instruction.
[[nodiscard]] std::uint8_t opcode_of(const Instruction& insn);

}  // namespace xdpvliw::isa
