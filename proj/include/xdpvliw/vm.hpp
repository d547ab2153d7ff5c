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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xdpvliw/isa.hpp"

namespace xdpvliw::vm {

enum class Action : std::uint32_t { Aborted = 0, Drop = 1, Pass = 2, Tx = 3, Redirect = 4 };

[[nodiscard]] const char* action_name(Action a);

// Flat 32-bit address map shared by both executors.
inline constexpr std::uint64_t kStackBase = 0x1000'0000;
inline constexpr std::uint64_t kCtxBase = 0x2000'0000;
inline constexpr std::uint64_t kPacketBase = 0x3000'0000;
inline constexpr std::uint64_t kMapBase = 0x4000'0000;
inline constexpr std::uint64_t kMapStride = 0x0100'0000;
inline constexpr std::uint64_t kMapHandleBase = 0x5000'0000;
inline constexpr std::uint32_t kCtxSize = 24;
inline constexpr std::uint32_t kDefaultHeadroom = 256;

// Errors a helper reports through r0.
inline constexpr std::int64_t kEINVAL = -22;
inline constexpr std::int64_t kENOENT = -2;
inline constexpr std::int64_t kEEXIST = -17;
inline constexpr std::int64_t kE2BIG = -7;

// Map update flags.
inline constexpr std::uint64_t kBpfAny = 0;
inline constexpr std::uint64_t kBpfNoExist = 1;
inline constexpr std::uint64_t kBpfExist = 2;

// One map instance. Hash maps place keys with FNV-1a and linear probing over
// max_entries slots, so value addresses stay stable while an entry lives.
class MapInstance {
  public:
    explicit MapInstance(const isa::MapDef& def);

    [[nodiscard]] const isa::MapDef& def() const { return def_; }
    [[nodiscard]] std::optional<std::uint32_t> lookup(const std::uint8_t* key);
    [[nodiscard]] std::int64_t update(const std::uint8_t* key, const std::uint8_t* value, std::uint64_t flags);
    [[nodiscard]] std::int64_t remove(const std::uint8_t* key);

    [[nodiscard]] std::uint8_t* value_at(std::uint32_t slot) { return values_.data() + slot * def_.value_size; }
    [[nodiscard]] std::size_t entry_count() const;

    // Live entries sorted by key (array maps: every index).
    [[nodiscard]] std::vector<std::pair<std::vector<std::uint8_t>, std::vector<std::uint8_t>>> entries() const;

  private:
    enum class SlotState : std::uint8_t { Empty, Used, Deleted };

    [[nodiscard]] std::optional<std::uint32_t> find(const std::uint8_t* key) const;
    void touch(std::uint32_t slot) { stamps_[slot] = ++clock_; }

    isa::MapDef def_;
    std::vector<std::uint8_t> keys_;
    std::vector<std::uint8_t> values_;
    std::vector<SlotState> state_;
    std::vector<std::uint64_t> stamps_;
    std::uint64_t clock_ = 0;
};

[[nodiscard]] std::uint32_t fnv1a(const std::uint8_t* data, std::size_t n);

class MapStore {
  public:
    MapStore() = default;
    explicit MapStore(const std::vector<isa::MapDef>& defs);

    void add(const isa::MapDef& def);
    [[nodiscard]] MapInstance* find(std::uint32_t id);
    [[nodiscard]] const MapInstance* find(std::uint32_t id) const;
    [[nodiscard]] const std::vector<MapInstance>& maps() const { return maps_; }
    [[nodiscard]] std::vector<isa::MapDef> defs() const;

    // Compares live contents; LRU recency is not part of the observable state.
    [[nodiscard]] bool same_contents(const MapStore& other) const;
    [[nodiscard]] std::string describe() const;

  private:
    std::vector<MapInstance> maps_;
};

struct Packet {
    std::vector<std::uint8_t> data;
    std::uint32_t ingress_port = 0;
};

struct Trap {
    enum class Kind { OutOfBounds, InstructionLimit, BadHelperArgs, UnknownHelper, FellOffEnd, RowConflict, BadJump };
    Kind kind = Kind::OutOfBounds;
    std::int64_t pc = 0;  // instruction index (oracle) or row index (VLIW)
    std::uint64_t addr = 0;
    std::string message;
};

[[nodiscard]] const char* trap_kind_name(Trap::Kind k);

class MachineState {
  public:
    MachineState() = default;
    MachineState(const Packet& packet, MapStore maps, std::uint32_t headroom = kDefaultHeadroom);

    std::array<std::uint64_t, isa::kNumRegisters> regs{};
    std::array<std::uint8_t, isa::kStackSize> stack{};
    std::vector<std::uint8_t> buffer;  // headroom followed by the packet
    std::uint32_t data_off = 0;        // current packet start within buffer
    std::uint32_t end_off = 0;
    std::uint32_t ingress_port = 0;
    MapStore maps;
    std::optional<std::pair<std::uint32_t, std::uint32_t>> redirect;  // map id, key

    [[nodiscard]] std::uint64_t data_addr() const { return kPacketBase + data_off; }
    [[nodiscard]] std::uint64_t end_addr() const { return kPacketBase + end_off; }
    [[nodiscard]] std::vector<std::uint8_t> packet_bytes() const;

    // Bounds-checked access. Returns false on a trap (hardware bounds guard).
    [[nodiscard]] bool read(std::uint64_t addr, int width, std::uint64_t& out) const;
    [[nodiscard]] bool write(std::uint64_t addr, int width, std::uint64_t value);
    // Host pointer to `n` readable (or writable) bytes, nullptr if out of bounds.
    [[nodiscard]] const std::uint8_t* span(std::uint64_t addr, std::size_t n) const;
    [[nodiscard]] std::uint8_t* mutable_span(std::uint64_t addr, std::size_t n);
};

struct Limits {
    std::uint64_t max_instructions = 1'000'000;
    bool record_trace = false;
};

struct XdpResult {
    Action action = Action::Aborted;
    std::uint64_t r0 = 0;
    std::optional<std::pair<std::uint32_t, std::uint32_t>> redirect;
    std::vector<std::uint8_t> packet;
    std::optional<Trap> trap;
    std::vector<std::int32_t> trace;
    std::uint64_t instructions = 0;
};

[[nodiscard]] Action action_from_r0(std::uint64_t r0);

// Effects of one instruction computed against a (pre-)state without
// committing them. Calls are executed separately through call_helper.
struct Effect {
    std::optional<std::pair<std::uint8_t, std::uint64_t>> reg;
    struct MemWrite {
        std::uint64_t addr;
        int width;
        std::uint64_t value;
    };
    std::optional<MemWrite> mem;
    enum class Control { None, Jump, Exit } control = Control::None;
    std::int32_t target = -1;
    std::optional<Trap> trap;
};

[[nodiscard]] Effect evaluate(const isa::Instruction& insn, const MachineState& state);

// Runs a helper against the live state; returns the r0 value or sets `trap`.
[[nodiscard]] std::uint64_t call_helper(std::int64_t id, MachineState& state, std::optional<Trap>& trap);

[[nodiscard]] XdpResult finish(const MachineState& state, std::uint64_t r0);

XdpResult exec_sequential(const isa::Program& program, MachineState& state, const Limits& limits = {});

// Convenience: fresh state from a packet and maps.
XdpResult run_oracle(const isa::Program& program, const Packet& packet, const MapStore& maps,
                     MapStore* final_maps = nullptr, const Limits& limits = {});

}  // namespace xdpvliw::vm
