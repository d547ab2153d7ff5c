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
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xdpvliw/optimizer.hpp"
#include "xdpvliw/sephirot.hpp"
#include "xdpvliw/vliw.hpp"
#include "xdpvliw/vm.hpp"

namespace xdpvliw::harness {

// ---- file formats ----

struct MapEntry {
    std::uint32_t map_id = 0;
    std::vector<std::uint8_t> key;
    std::vector<std::uint8_t> value;
};

struct MapConfig {
    std::vector<isa::MapDef> defs;
    std::vector<MapEntry> entries;
};

[[nodiscard]] std::vector<std::uint8_t> parse_hex(std::string_view text);
[[nodiscard]] std::string to_hex(std::span<const std::uint8_t> bytes);

// {"maps": [{"id", "kind", "key_size", "value_size", "max_entries",
//            "entries": [{"key": hex, "value": hex}]}]}
[[nodiscard]] MapConfig parse_map_config(std::string_view json_text);
[[nodiscard]] std::string map_config_to_json(const MapConfig& config, int indent = 2);
[[nodiscard]] MapConfig load_map_config(const std::filesystem::path& path);
// Creates the maps and inserts the initial entries.
[[nodiscard]] vm::MapStore build_maps(const MapConfig& config);

// One packet per line as hex digits (whitespace ignored). A trailing `@N`
// sets the ingress port for that line; otherwise `default_port` applies.
[[nodiscard]] std::vector<vm::Packet> parse_packets_hex(std::string_view text, std::uint32_t default_port = 0);
[[nodiscard]] std::string packets_to_hex(const std::vector<vm::Packet>& packets);
[[nodiscard]] std::vector<vm::Packet> parse_pcap(std::span<const std::uint8_t> bytes, std::uint32_t port = 0);
// Picks pcap or hex text by the file's magic number.
[[nodiscard]] std::vector<vm::Packet> load_packets(const std::filesystem::path& path, std::uint32_t default_port = 0);

[[nodiscard]] std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

// Assembly text, or raw bytecode for .bin/.o/.bpf files.
[[nodiscard]] isa::Program load_program(const std::filesystem::path& path);

// ---- corpus ----

struct CorpusEntry {
    std::string name;
    std::string description;
    std::string source;
    isa::Program program;
    MapConfig maps;
    std::vector<vm::Packet> packets;
    std::vector<vm::Action> expected;  // per packet, may be empty
};

// A corpus entry directory holds program.s, maps.json, packets.hex and
// entry.json ({"description", "expected": ["DROP", ...]}).
[[nodiscard]] CorpusEntry load_corpus_entry(const std::filesystem::path& dir);
[[nodiscard]] std::vector<CorpusEntry> load_corpus(const std::filesystem::path& root);

[[nodiscard]] std::optional<vm::Action> parse_action(std::string_view name);

// ---- differential execution ----

struct Comparison {
    bool equivalent = true;
    std::vector<std::string> mismatches;
    vm::XdpResult oracle;
    sephirot::RunReport vliw;
};

// Runs both engines from the same initial state. `maps` is advanced to the
// oracle's final map state when non-null.
[[nodiscard]] Comparison compare(const isa::Program& source, const vliw::VliwProgram& compiled,
                                 const vm::Packet& packet, const vm::MapStore& maps,
                                 vm::MapStore* final_maps = nullptr,
                                 const sephirot::RunOptions& options = {});

// ---- fuzzing ----

struct FuzzCase {
    std::uint64_t seed = 0;
    isa::Program program;
    vm::Packet packet;
    MapConfig maps;
};

struct FuzzOptions {
    std::uint64_t iterations = 1000;
    std::uint64_t seed = 1;
    opt::LaneConstraints constraints;
    opt::PassOptions passes;
    unsigned jobs = 0;  // 0: hardware concurrency
    std::optional<std::filesystem::path> failure_dir;
    bool minimize = true;
};

enum class Verdict { Equivalent, Divergent, HazardViolation, CompileError };

[[nodiscard]] const char* verdict_name(Verdict v);

struct CaseOutcome {
    Verdict verdict = Verdict::Equivalent;
    std::string detail;
    bool trapped = false;
    std::size_t source_size = 0;
    std::size_t rows = 0;
};

struct FuzzFailure {
    std::uint64_t index = 0;
    FuzzCase original;
    FuzzCase minimized;
    CaseOutcome outcome;
};

struct FuzzSummary {
    std::uint64_t cases = 0;
    std::uint64_t equivalent = 0;
    std::uint64_t divergent = 0;
    std::uint64_t hazard_cases = 0;
    std::uint64_t compile_errors = 0;
    std::uint64_t trapped = 0;
    std::uint64_t total_source_instructions = 0;
    std::uint64_t total_rows = 0;
    std::vector<FuzzFailure> failures;  // in case order
    double seconds = 0.0;
};

// Seed of case `index` in a run started with `seed`.
[[nodiscard]] std::uint64_t case_seed(std::uint64_t seed, std::uint64_t index);
[[nodiscard]] FuzzCase generate_case(std::uint64_t seed);
[[nodiscard]] CaseOutcome run_case(const FuzzCase& c, const opt::LaneConstraints& constraints,
                                   const opt::PassOptions& passes);
// Greedy instruction deletion while `still_fails` holds.
[[nodiscard]] FuzzCase minimize(const FuzzCase& c, const std::function<bool(const FuzzCase&)>& still_fails);
[[nodiscard]] FuzzSummary fuzz(const FuzzOptions& options);
[[nodiscard]] std::string format_fuzz_summary(const FuzzSummary& summary);

// Reproducer text: assembly followed by `;!` lines holding the packet and map config.
[[nodiscard]] std::string serialize_case(const FuzzCase& c);
[[nodiscard]] FuzzCase deserialize_case(std::string_view text);

// ---- reports ----

struct PassReduction {
    std::string pass;
    std::size_t removed = 0;
    double percent = 0.0;
};

struct ReductionRow {
    std::string name;
    std::size_t original = 0;
    std::size_t reduced = 0;
    std::vector<PassReduction> passes;
    std::size_t rows = 0;
    double static_ipc = 0.0;
};

struct LaneSweep {
    std::string name;
    std::vector<int> lanes;
    std::vector<std::size_t> rows;
    [[nodiscard]] bool non_increasing() const;
};

[[nodiscard]] std::vector<std::string> pass_names();
// Turns one pass off by name; false if the name is unknown.
bool disable_pass(opt::PassOptions& options, std::string_view name);

[[nodiscard]] ReductionRow reduction_row(const std::string& name, const isa::Program& program, int lanes = 4);
[[nodiscard]] LaneSweep lane_sweep(const std::string& name, const isa::Program& program,
                                   const opt::PassOptions& passes = {}, int from = 2, int to = 8);

struct ReductionReport {
    std::vector<ReductionRow> programs;
    std::vector<LaneSweep> sweeps;
};

[[nodiscard]] ReductionReport report_reduction(const std::vector<CorpusEntry>& corpus, int lanes = 4);
[[nodiscard]] std::string format_reduction_text(const ReductionReport& report);
[[nodiscard]] std::string format_reduction_json(const ReductionReport& report);

}  // namespace xdpvliw::harness
