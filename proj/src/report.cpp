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

#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "xdpvliw/harness.hpp"

namespace xdpvliw::harness {

namespace {

struct PassFlag {
    const char* name;
    bool opt::PassOptions::*flag;
};

constexpr PassFlag kPasses[] = {
    {"boundary_checks", &opt::PassOptions::boundary_checks},
    {"zeroing", &opt::PassOptions::zeroing},
    {"three_operand", &opt::PassOptions::three_operand},
    {"load_store_6b", &opt::PassOptions::load_store_6b},
    {"early_exit", &opt::PassOptions::early_exit},
    {"code_motion", &opt::PassOptions::code_motion},
    {"parallel_branching", &opt::PassOptions::parallel_branching},
    {"renaming", &opt::PassOptions::renaming},
    {"row_split", &opt::PassOptions::row_split},
};

constexpr int kPeepholePasses = 5;

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace

std::vector<std::string> pass_names() {
    std::vector<std::string> out;
    for (const auto& p : kPasses) out.emplace_back(p.name);
    return out;
}

bool disable_pass(opt::PassOptions& options, std::string_view name) {
    std::string n(name);
    for (auto& c : n) {
        if (c == '-') c = '_';
    }
    for (const auto& p : kPasses) {
        if (n == p.name) {
            options.*(p.flag) = false;
            return true;
        }
    }
    return false;
}

ReductionRow reduction_row(const std::string& name, const isa::Program& program, int lanes) {
    opt::LaneConstraints lc;
    lc.lanes = lanes;
    const opt::CompileResult all = opt::compile(program, lc, {});
    ReductionRow row;
    row.name = name;
    row.original = all.report.original_count;
    row.reduced = all.report.after_reduction_count;
    row.rows = all.report.vliw_rows;
    row.static_ipc = all.report.static_ipc();
    for (int i = 0; i < kPeepholePasses; ++i) {
        PassReduction pr;
        pr.pass = kPasses[i].name;
        pr.removed = static_cast<std::size_t>(all.report.delta(pr.pass));
        pr.percent = row.original ? 100.0 * static_cast<double>(pr.removed) / static_cast<double>(row.original) : 0.0;
        row.passes.push_back(pr);
    }
    return row;
}

bool LaneSweep::non_increasing() const {
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i] > rows[i - 1]) return false;
    }
    return true;
}

LaneSweep lane_sweep(const std::string& name, const isa::Program& program, const opt::PassOptions& passes, int from,
                     int to) {
    LaneSweep s;
    s.name = name;
    for (int l = from; l <= to; ++l) {
        opt::LaneConstraints lc;
        lc.lanes = l;
        s.lanes.push_back(l);
        s.rows.push_back(opt::compile(program, lc, passes).vliw.rows.size());
    }
    return s;
}

ReductionReport report_reduction(const std::vector<CorpusEntry>& corpus, int lanes) {
    ReductionReport r;
    for (const auto& e : corpus) {
        r.programs.push_back(reduction_row(e.name, e.program, lanes));
        r.sweeps.push_back(lane_sweep(e.name, e.program));
    }
    return r;
}

std::string format_reduction_text(const ReductionReport& r) {
    std::ostringstream os;
    os << "instruction reduction relative to the original program\n";
    char line[256];
    std::snprintf(line, sizeof line, "%-18s %5s", "program", "orig");
    os << line;
    for (int i = 0; i < kPeepholePasses; ++i) {
        std::snprintf(line, sizeof line, " %15s", kPasses[i].name);
        os << line;
    }
    std::snprintf(line, sizeof line, " %7s %5s %6s\n", "total", "rows", "ipc");
    os << line;
    for (const auto& p : r.programs) {
        std::snprintf(line, sizeof line, "%-18s %5zu", p.name.c_str(), p.original);
        os << line;
        for (const auto& pr : p.passes) {
            std::snprintf(line, sizeof line, " %14.1f%%", pr.percent);
            os << line;
        }
        const double total = p.original ? 100.0 * static_cast<double>(p.original - p.reduced) / static_cast<double>(p.original) : 0.0;
        std::snprintf(line, sizeof line, " %6.1f%% %5zu %6.2f\n", total, p.rows, p.static_ipc);
        os << line;
    }
    os << "\nrows by lane count\n";
    if (!r.sweeps.empty()) {
        std::snprintf(line, sizeof line, "%-18s", "program");
        os << line;
        for (int l : r.sweeps.front().lanes) {
            std::snprintf(line, sizeof line, " %4s", ("L" + std::to_string(l)).c_str());
            os << line;
        }
        os << "  trend\n";
    }
    for (const auto& s : r.sweeps) {
        std::snprintf(line, sizeof line, "%-18s", s.name.c_str());
        os << line;
        for (auto n : s.rows) {
            std::snprintf(line, sizeof line, " %4zu", n);
            os << line;
        }
        os << "  " << (s.non_increasing() ? "non-increasing" : "NOT monotone");
        // Where the gain from adding lanes flattens out.
        std::size_t best_gain = 0;
        int best_at = -1;
        for (std::size_t i = 1; i < s.rows.size(); ++i) {
            const std::size_t gain = s.rows[i - 1] > s.rows[i] ? s.rows[i - 1] - s.rows[i] : 0;
            if (gain > best_gain) {
                best_gain = gain;
                best_at = s.lanes[i];
            }
        }
        if (best_at > 0) os << ", largest gain at L" << best_at << (best_at <= 3 ? " (<= 3)" : "");
        if (s.rows.size() >= 3 && s.rows[1] > 0) {
            const double marginal = 100.0 * static_cast<double>(s.rows[1] - s.rows[2]) / static_cast<double>(s.rows[1]);
            os << ", L3->L4 " << fixed(marginal, 1) << "%";
        }
        os << "\n";
    }
    return os.str();
}

std::string format_reduction_json(const ReductionReport& r) {
    using nlohmann::json;
    json programs = json::array();
    for (const auto& p : r.programs) {
        json passes = json::object();
        for (const auto& pr : p.passes) passes[pr.pass] = {{"removed", pr.removed}, {"percent", pr.percent}};
        programs.push_back({{"name", p.name},
                            {"original", p.original},
                            {"reduced", p.reduced},
                            {"rows", p.rows},
                            {"static_ipc", p.static_ipc},
                            {"passes", passes}});
    }
    json sweeps = json::array();
    for (const auto& s : r.sweeps) {
        sweeps.push_back({{"name", s.name}, {"lanes", s.lanes}, {"rows", s.rows}, {"non_increasing", s.non_increasing()}});
    }
    return json{{"programs", programs}, {"lane_sweep", sweeps}}.dump(2) + "\n";
}

}  // namespace xdpvliw::harness
