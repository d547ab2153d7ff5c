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

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "xdpvliw/analysis.hpp"
#include "xdpvliw/assembly.hpp"
#include "xdpvliw/harness.hpp"

namespace fs = std::filesystem;
using namespace xdpvliw;

namespace {

struct Common {
    int lanes = 4;
    std::vector<std::string> disabled;
    std::optional<int> max_boundary;
    int branch_penalty = 0;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--lanes", c.lanes, "VLIW lanes (1-8)")->check(CLI::Range(1, 8));
    for (const auto& p : harness::pass_names()) {
        std::string flag = p;
        for (auto& ch : flag) {
            if (ch == '_') ch = '-';
        }
        app->add_flag_callback("--no-" + flag, [&c, p] { c.disabled.push_back(p); }, "disable the " + p + " pass");
    }
    app->add_option("--max-boundary-removals", c.max_boundary, "remove at most this many boundary checks");
}

opt::PassOptions pass_options(const Common& c) {
    opt::PassOptions o;
    for (const auto& d : c.disabled) (void)harness::disable_pass(o, d);
    o.max_boundary_removals = c.max_boundary;
    return o;
}

opt::LaneConstraints constraints(const Common& c) {
    opt::LaneConstraints lc;
    lc.lanes = c.lanes;
    return lc;
}

bool is_schedule(const fs::path& p) { return p.extension() == ".vliw"; }

// Program plus whatever a corpus directory brings along.
struct Input {
    isa::Program program;
    harness::MapConfig maps;
    std::vector<vm::Packet> packets;
    std::vector<vm::Action> expected;
    std::optional<vliw::VliwProgram> schedule;
};

Input load_input(const fs::path& path, const std::string& maps_path, const std::string& packets_path,
                 std::optional<std::uint32_t> port) {
    Input in;
    if (fs::is_directory(path)) {
        harness::CorpusEntry e = harness::load_corpus_entry(path);
        in.program = e.program;
        in.maps = e.maps;
        in.packets = e.packets;
        in.expected = e.expected;
    } else if (is_schedule(path)) {
        in.schedule = vliw::parse_schedule(harness::read_text(path));
        in.maps.defs = in.schedule->maps;
    } else {
        in.program = harness::load_program(path);
    }
    if (!maps_path.empty()) {
        in.maps = harness::load_map_config(maps_path);
        in.program.maps = in.maps.defs;
    }
    if (!packets_path.empty()) {
        in.packets = harness::load_packets(packets_path, port.value_or(0));
        in.expected.clear();
    } else if (port) {
        for (auto& p : in.packets) p.ingress_port = *port;
    }
    return in;
}

void write_dot(const isa::Program& program, const std::string& cfg_path, const std::string& ddg_path) {
    if (cfg_path.empty() && ddg_path.empty()) return;
    const analysis::ControlFlowGraph cfg = analysis::build_cfg(program);
    if (!cfg_path.empty()) harness::write_text(cfg_path, analysis::cfg_to_dot(cfg, program));
    if (!ddg_path.empty()) {
        std::string all;
        for (const auto& b : cfg.blocks) all += analysis::ddg_to_dot(analysis::build_ddg(b, program), program);
        harness::write_text(ddg_path, all);
    }
}

int cmd_compile(const fs::path& input, const Common& common, const std::string& maps, bool dump,
                const std::string& report, const std::string& output, const std::string& dot_cfg,
                const std::string& dot_ddg) {
    Input in = load_input(input, maps, "", std::nullopt);
    if (in.schedule) throw Error("compile expects assembly or bytecode, not a schedule dump");
    isa::Program p = in.program;
    write_dot(p, dot_cfg, dot_ddg);
    const opt::CompileResult r = opt::compile(p, constraints(common), pass_options(common));
    const std::string text = vliw::dump_schedule(r.vliw);
    if (!output.empty()) harness::write_text(output, text);
    if (dump) std::cout << text;
    std::cout << (report == "json" ? opt::format_report_json(r.report) : opt::format_report_text(r.report));
    return 0;
}

int cmd_run(const fs::path& input, const Common& common, const std::string& maps, const std::string& packets,
            std::optional<std::uint32_t> port, const std::string& engine, bool trace, const std::string& report) {
    Input in = load_input(input, maps, packets, port);
    if (in.packets.empty()) throw Error("no packets: pass --packets or a corpus directory");
    const bool want_oracle = engine != "vliw";
    const bool want_vliw = engine != "oracle";
    if (in.schedule && want_oracle) throw Error("a schedule dump can only run with --engine=vliw");

    const bool json_out = report == "json";
    nlohmann::json doc{{"engine", engine}, {"hazards", nlohmann::json::array()}, {"packets", nlohmann::json::array()}};
    vliw::VliwProgram compiled;
    if (want_vliw) {
        if (in.schedule) {
            compiled = *in.schedule;
        } else {
            const opt::CompileResult r = opt::compile(in.program, constraints(common), pass_options(common));
            compiled = r.vliw;
            if (json_out) doc["compile"] = nlohmann::json::parse(opt::format_report_json(r.report));
        }
    }
    int status = 0;
    if (want_vliw) {
        const auto hz = sephirot::hazard_check(compiled);
        for (const auto& v : hz) {
            if (json_out) doc["hazards"].push_back(sephirot::describe(v));
            else std::cout << "hazard: " << sephirot::describe(v) << "\n";
        }
        if (!hz.empty()) status = 1;
    }

    vm::MapStore oracle_maps = harness::build_maps(in.maps);
    vm::MapStore vliw_maps = oracle_maps;
    sephirot::RunOptions ro;
    ro.model.branch_penalty = common.branch_penalty;
    ro.limits.record_trace = trace;
    for (std::size_t i = 0; i < in.packets.size(); ++i) {
        const vm::Packet& pkt = in.packets[i];
        std::ostringstream line;
        line << "packet " << i << " (port " << pkt.ingress_port << ", " << pkt.data.size() << " bytes):";
        std::optional<vm::Action> got;
        bool trapped = false;
        nlohmann::json pj{{"index", i}, {"port", pkt.ingress_port}, {"bytes", pkt.data.size()}};
        auto vliw_json = [&pj](const sephirot::RunReport& r) {
            pj["vliw"] = {{"action", vm::action_name(r.result.action)},
                          {"rows", r.rows_executed},
                          {"cycles", r.cycles},
                          {"ipc", r.dynamic_ipc}};
        };
        if (want_oracle && want_vliw) {
            vm::MapStore next;
            const harness::Comparison c = harness::compare(in.program, compiled, pkt, oracle_maps, &next, ro);
            oracle_maps = std::move(next);
            got = c.oracle.action;
            trapped = c.oracle.trap.has_value() || c.vliw.result.trap.has_value();
            line << " oracle " << vm::action_name(c.oracle.action) << ", vliw " << vm::action_name(c.vliw.result.action)
                 << ", " << c.vliw.rows_executed << " rows, " << c.vliw.cycles << " cycles, ipc " << c.vliw.dynamic_ipc;
            line << (c.equivalent ? " | equivalent (action, packet, maps)" : " | MISMATCH");
            for (const auto& m : c.mismatches) line << "\n  " << m;
            if (!c.equivalent) status = 1;
            pj["oracle"] = {{"action", vm::action_name(c.oracle.action)}, {"instructions", c.oracle.instructions}};
            vliw_json(c.vliw);
            pj["equivalent"] = c.equivalent;
            pj["mismatches"] = c.mismatches;
            if (trace) line << "\n" << sephirot::format_trace(compiled, c.vliw);
        } else if (want_oracle) {
            vm::MapStore next;
            const vm::XdpResult r = vm::run_oracle(in.program, pkt, oracle_maps, &next);
            oracle_maps = std::move(next);
            got = r.action;
            trapped = r.trap.has_value();
            line << " oracle " << vm::action_name(r.action) << ", " << r.instructions << " instructions";
            pj["oracle"] = {{"action", vm::action_name(r.action)}, {"instructions", r.instructions}};
        } else {
            vm::MapStore next;
            const sephirot::RunReport r = sephirot::run_vliw(compiled, pkt, vliw_maps, &next, ro);
            vliw_maps = std::move(next);
            got = r.result.action;
            trapped = r.result.trap.has_value();
            line << " vliw " << vm::action_name(r.result.action) << ", " << r.rows_executed << " rows, " << r.cycles
                 << " cycles, ipc " << r.dynamic_ipc;
            vliw_json(r);
            for (const auto& v : r.hazard_violations) {
                line << "\n  hazard: " << sephirot::describe(v);
                doc["hazards"].push_back(sephirot::describe(v));
            }
            if (!r.hazard_violations.empty()) status = 1;
            if (trace) line << "\n" << sephirot::format_trace(compiled, r);
        }
        if (trapped) {
            line << " | trapped";
            status = 1;
        }
        pj["trapped"] = trapped;
        if (i < in.expected.size()) {
            pj["expected"] = vm::action_name(in.expected[i]);
            if (got && *got != in.expected[i]) {
                line << " | expected " << vm::action_name(in.expected[i]);
                status = 1;
            }
        }
        if (json_out) doc["packets"].push_back(std::move(pj));
        else std::cout << line.str() << "\n";
    }
    if (json_out) {
        doc["ok"] = status == 0;
        std::cout << doc.dump(2) << "\n";
    }
    return status;
}

int cmd_disasm(const fs::path& input, const std::string& dot_cfg, const std::string& dot_ddg) {
    if (is_schedule(input)) {
        std::cout << vliw::dump_schedule(vliw::parse_schedule(harness::read_text(input)));
        return 0;
    }
    const isa::Program p = fs::is_directory(input) ? harness::load_corpus_entry(input).program : harness::load_program(input);
    write_dot(p, dot_cfg, dot_ddg);
    std::cout << isa::format_asm(p);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"eBPF/XDP to VLIW compiler and simulator"};
    app.set_config("--config", "", "read options from a TOML/INI file");
    app.require_subcommand(1);

    Common common;
    std::string input;
    std::string maps;
    std::string packets;
    std::string report = "text";
    std::string engine = "both";
    std::string output;
    std::string dot_cfg;
    std::string dot_ddg;
    std::optional<std::uint32_t> port;
    bool dump = false;
    bool trace = false;

    auto* compile = app.add_subcommand("compile", "compile a program to a VLIW schedule");
    compile->add_option("input", input, "assembly, bytecode (.bin/.o) or corpus directory")->required();
    add_common(compile, common);
    compile->add_option("--maps", maps, "map configuration (JSON)");
    compile->add_flag("--dump-schedule", dump, "print the schedule");
    compile->add_option("--report", report, "report format")->check(CLI::IsMember({"text", "json"}));
    compile->add_option("-o,--output", output, "write the schedule to a file");
    compile->add_option("--dot-cfg", dot_cfg, "write the CFG in DOT format");
    compile->add_option("--dot-ddg", dot_ddg, "write per-block DDGs in DOT format");

    auto* run = app.add_subcommand("run", "run packets through the oracle and/or the VLIW simulator");
    run->add_option("input", input, "program, corpus directory or .vliw schedule")->required();
    add_common(run, common);
    run->add_option("--maps", maps, "map configuration (JSON)");
    run->add_option("--packets", packets, "packets (hex lines or pcap)");
    run->add_option("--port", port, "ingress port");
    run->add_option("--engine", engine, "oracle, vliw or both")->check(CLI::IsMember({"oracle", "vliw", "both"}));
    run->add_option("--report", report, "report format")->check(CLI::IsMember({"text", "json"}));
    run->add_option("--branch-penalty", common.branch_penalty, "cycles per taken branch");
    run->add_flag("--trace", trace, "print a per-row trace");

    harness::FuzzOptions fo;
    std::string failures;
    std::string replay;
    auto* fuzz = app.add_subcommand("fuzz", "differential fuzzing of compiler and simulator");
    add_common(fuzz, common);
    fuzz->add_option("--iterations,-n", fo.iterations, "number of cases")->check(CLI::PositiveNumber);
    fuzz->add_option("--seed", fo.seed, "run seed");
    fuzz->add_option("--jobs,-j", fo.jobs, "worker threads (0: all cores)");
    fuzz->add_option("--failures", failures, "directory for failing cases");
    fuzz->add_option("--replay", replay, "re-run one stored case");
    fuzz->add_flag("!--no-minimize", fo.minimize, "keep failing cases unminimized");

    std::string corpus_dir = "corpus";
    auto* report_cmd = app.add_subcommand("report", "instruction reduction and lane sweep over a corpus");
    report_cmd->add_option("corpus", corpus_dir, "corpus directory");
    report_cmd->add_option("--lanes", common.lanes, "lanes for the reduction table")->check(CLI::Range(1, 8));
    report_cmd->add_option("--report", report, "report format")->check(CLI::IsMember({"text", "json"}));

    auto* disasm = app.add_subcommand("disasm", "print a program or schedule");
    disasm->add_option("input", input, "bytecode, assembly, corpus directory or .vliw schedule")->required();
    disasm->add_option("--dot-cfg", dot_cfg, "write the CFG in DOT format");
    disasm->add_option("--dot-ddg", dot_ddg, "write per-block DDGs in DOT format");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*compile) return cmd_compile(input, common, maps, dump, report, output, dot_cfg, dot_ddg);
        if (*run) return cmd_run(input, common, maps, packets, port, engine, trace, report);
        if (*disasm) return cmd_disasm(input, dot_cfg, dot_ddg);
        if (*fuzz) {
            fo.constraints = constraints(common);
            fo.passes = pass_options(common);
            if (!replay.empty()) {
                const harness::FuzzCase c = harness::deserialize_case(harness::read_text(replay));
                const harness::CaseOutcome o = harness::run_case(c, fo.constraints, fo.passes);
                std::cout << harness::verdict_name(o.verdict) << "\n" << o.detail;
                return o.verdict == harness::Verdict::Equivalent ? 0 : 1;
            }
            if (!failures.empty()) fo.failure_dir = failures;
            const harness::FuzzSummary s = harness::fuzz(fo);
            std::cout << harness::format_fuzz_summary(s);
            return s.failures.empty() ? 0 : 1;
        }
        if (*report_cmd) {
            const auto corpus = harness::load_corpus(corpus_dir);
            const auto r = harness::report_reduction(corpus, common.lanes);
            std::cout << (report == "json" ? harness::format_reduction_json(r) : harness::format_reduction_text(r));
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
