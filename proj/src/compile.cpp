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

#include <algorithm>
#include <cstdio>
#include <deque>
#include <sstream>

#include "json.hpp"

#include "xdpvliw/analysis.hpp"
#include "xdpvliw/optimizer.hpp"
#include "xdpvliw/sephirot.hpp"
#include "xdpvliw/symbols.hpp"

namespace xdpvliw::opt {

using isa::Kind;
using isa::Reg;
using isa::SymbolSet;

int CompileReport::delta(const std::string& pass) const {
    if (pass == "unreachable") return unreachable_removed;
    for (const auto& d : deltas) {
        if (d.pass == pass) return d.instructions_removed;
    }
    return 0;
}

int CompileReport::rewrites(const std::string& pass) const {
    for (const auto& d : deltas) {
        if (d.pass == pass) return d.rewrites;
    }
    return 0;
}

namespace {

struct Item {
    Instruction insn;
    int block = -1;
    std::int32_t index = -1;
    bool moved = false;
    SymbolSet in;
    SymbolSet out;

    void refresh() {
        const auto io = isa::io_sets(insn);
        in = io.input_set();
        out = io.output_set();
    }
};

Item make_item(const Instruction& insn, int block, std::int32_t index) {
    Item it{insn, block, index, false, {}, {}};
    it.refresh();
    return it;
}

bool compatible(const Item& a, const Item& b) {
    return !a.in.intersects(b.out) && !a.out.intersects(b.in) && !a.out.intersects(b.out);
}

using Row = std::vector<std::optional<Item>>;

bool movable(const Instruction& insn) {
    switch (insn.kind) {
    case Kind::AluBinary:
    case Kind::AluUnary:
    case Kind::MovImm:
    case Kind::MovReg:
    case Kind::LoadImm64:
    case Kind::AluThreeOp:
    case Kind::Load:
    case Kind::Load48: return true;
    default: return false;
    }
}

bool renamable(const Instruction& insn) {
    switch (insn.kind) {
    case Kind::MovImm:
    case Kind::MovReg:
    case Kind::LoadImm64:
    case Kind::Load:
    case Kind::Load48:
    case Kind::AluThreeOp: return insn.dst != isa::R10;
    default: return false;
    }
}

std::uint16_t reg_bits(const SymbolSet& s) { return s.registers(); }

class Compiler {
  public:
    Compiler(const Program& reduced, const LaneConstraints& lc, const PassOptions& po, CompileReport& rep)
        : p_(reduced), lc_(lc), po_(po), rep_(rep), cfg_(analysis::build_cfg(p_)), live_(analysis::liveness(cfg_, p_)) {
        const std::size_t nb = cfg_.size();
        remaining_.resize(nb);
        rows_.resize(nb);
        done_.assign(nb, false);
        reserved_.assign(nb, 0);
        for (const auto& b : cfg_.blocks) {
            for (std::int32_t i = b.first; i <= b.last; ++i) {
                remaining_[static_cast<std::size_t>(b.id)].push_back(
                    make_item(p_.instructions[static_cast<std::size_t>(i)], b.id, i));
            }
        }
        reach_ = reach_matrix();
    }

    vliw::VliwProgram run() {
        const int nb = static_cast<int>(cfg_.size());
        for (int b = 0; b < nb; ++b) {
            if (done_[static_cast<std::size_t>(b)]) continue;
            schedule_block(b);
            if (po_.parallel_branching) parallel_branching(b);
            if (po_.code_motion) code_motion(b);
            done_[static_cast<std::size_t>(b)] = true;
        }
        for (int b = 0; b < nb; ++b) assign_registers(b);
        vliw::VliwProgram out = layout();
        legalize(out);
        return out;
    }

  private:
    std::vector<std::vector<bool>> reach_matrix() const {
        const std::size_t n = cfg_.size();
        std::vector<std::vector<bool>> r(n, std::vector<bool>(n, false));
        for (std::size_t s = 0; s < n; ++s) {
            std::deque<int> q{static_cast<int>(s)};
            std::vector<bool> seen(n, false);
            while (!q.empty()) {
                const int x = q.front();
                q.pop_front();
                for (int y : cfg_.blocks[static_cast<std::size_t>(x)].successors) {
                    if (!seen[static_cast<std::size_t>(y)]) {
                        seen[static_cast<std::size_t>(y)] = true;
                        r[s][static_cast<std::size_t>(y)] = true;
                        q.push_back(y);
                    }
                }
            }
        }
        return r;
    }

    void schedule_block(int b) {
        auto& items = remaining_[static_cast<std::size_t>(b)];
        auto& rows = rows_[static_cast<std::size_t>(b)];
        rows.clear();
        if (items.empty()) return;
        std::vector<Instruction> insns;
        for (const auto& it : items) insns.push_back(it.insn);
        const SchedGraph g = build_sched_graph(insns, po_.renaming || po_.row_split);
        const BlockSchedule s = list_schedule(g, lc_);
        for (const auto& r : s.rows) {
            Row row(static_cast<std::size_t>(lc_.lanes));
            for (std::size_t l = 0; l < r.size(); ++l) {
                if (r[l] >= 0) row[l] = items[static_cast<std::size_t>(r[l])];
            }
            rows.push_back(std::move(row));
        }
        items.clear();
    }

    static int free_lane_above(const Row& row, int above, int lanes) {
        for (int l = above + 1; l < lanes; ++l) {
            if (!row[static_cast<std::size_t>(l)]) return l;
        }
        return -1;
    }

    // Lane forced by register producers in `prev`, -1 if none, -2 if conflicting.
    static int pinned_lane(const Row* prev, const Item& x) {
        if (!prev) return -1;
        int pin = -1;
        for (std::size_t l = 0; l < prev->size(); ++l) {
            const auto& y = (*prev)[l];
            if (!y || (reg_bits(y->out) & reg_bits(x.in)) == 0) continue;
            if (pin >= 0 && pin != static_cast<int>(l)) return -2;
            pin = static_cast<int>(l);
        }
        return pin;
    }

    void parallel_branching(int a) {
        auto& rows = rows_[static_cast<std::size_t>(a)];
        if (rows.empty() || cfg_.on_cycle[static_cast<std::size_t>(a)]) return;
        int cur = a;
        for (;;) {
            const auto& cb = cfg_.blocks[static_cast<std::size_t>(cur)];
            const Instruction& term = p_.instructions[static_cast<std::size_t>(cb.last)];
            if (term.kind == Kind::JumpAlways || term.is_exit()) return;
            const int b = cur + 1;
            if (b >= static_cast<int>(cfg_.size()) || done_[static_cast<std::size_t>(b)]) return;
            const auto& bb = cfg_.blocks[static_cast<std::size_t>(b)];
            if (bb.size() != 1 || bb.predecessors.size() != 1 || bb.predecessors[0] != cur) return;
            if (term.kind == Kind::Branch && term.target == bb.first) return;
            if (cfg_.on_cycle[static_cast<std::size_t>(b)]) return;
            auto& items = remaining_[static_cast<std::size_t>(b)];
            if (items.size() != 1 || !items[0].insn.is_control()) return;
            Item x = items[0];
            Row& last = rows.back();
            int top_control = -1;
            for (int l = 0; l < lc_.lanes; ++l) {
                const auto& y = last[static_cast<std::size_t>(l)];
                if (!y) continue;
                if (!compatible(*y, x)) return;
                if (y->insn.is_control()) top_control = l;
            }
            const Row* prev = rows.size() >= 2 ? &rows[rows.size() - 2] : nullptr;
            const int pin = lc_.forwarding ? pinned_lane(prev, x) : -1;
            int lane = -1;
            if (pin == -2) return;
            if (pin >= 0) {
                if (pin > top_control && !last[static_cast<std::size_t>(pin)]) lane = pin;
            } else {
                lane = free_lane_above(last, top_control, lc_.lanes);
            }
            if (lane < 0) return;
            x.moved = true;
            last[static_cast<std::size_t>(lane)] = x;
            items.clear();
            done_[static_cast<std::size_t>(b)] = true;
            ++rep_.parallel_branches;
            if (x.insn.kind != Kind::Branch) return;
            cur = b;
        }
    }

    // All instructions that run between the end of `a` and the start of `c`
    // on some path, or nullopt when some path from `a` avoids `c`.
    std::optional<std::vector<const Item*>> between(int a, int c, std::vector<int>& blocks) {
        const std::size_t n = cfg_.size();
        std::vector<bool> seen(n, false);
        std::deque<int> q;
        for (int s : cfg_.blocks[static_cast<std::size_t>(a)].successors) {
            if (s != c && !seen[static_cast<std::size_t>(s)]) {
                seen[static_cast<std::size_t>(s)] = true;
                q.push_back(s);
            }
        }
        std::vector<const Item*> out;
        while (!q.empty()) {
            const int x = q.front();
            q.pop_front();
            if (x == a || !reach_[static_cast<std::size_t>(x)][static_cast<std::size_t>(c)]) return std::nullopt;
            blocks.push_back(x);
            for (const auto& it : remaining_[static_cast<std::size_t>(x)]) out.push_back(&it);
            for (const auto& row : rows_[static_cast<std::size_t>(x)]) {
                for (const auto& s : row) {
                    if (s) out.push_back(&*s);
                }
            }
            for (const auto& it : original_[static_cast<std::size_t>(x)]) out.push_back(&it);
            for (int s : cfg_.blocks[static_cast<std::size_t>(x)].successors) {
                if (s != c && !seen[static_cast<std::size_t>(s)]) {
                    seen[static_cast<std::size_t>(s)] = true;
                    q.push_back(s);
                }
            }
        }
        return out;
    }

    void code_motion(int a) {
        auto& rows = rows_[static_cast<std::size_t>(a)];
        if (rows.empty() || cfg_.on_cycle[static_cast<std::size_t>(a)]) return;
        if (original_.empty()) {
            original_.resize(cfg_.size());
            for (const auto& b : cfg_.blocks) {
                for (std::int32_t i = b.first; i <= b.last; ++i) {
                    original_[static_cast<std::size_t>(b.id)].push_back(
                        make_item(p_.instructions[static_cast<std::size_t>(i)], b.id, i));
                }
            }
        }
        std::vector<int> cands = analysis::candidate_blocks(cfg_, a);
        std::sort(cands.begin(), cands.end());
        for (int c : cands) {
            const auto uc = static_cast<std::size_t>(c);
            if (done_[uc] || cfg_.on_cycle[uc] || remaining_[uc].empty()) continue;
            if (!cfg_.post_dominates(c, a) || !cfg_.dominates(a, c)) continue;
            std::vector<int> span{a, c};
            const auto mid = between(a, c, span);
            if (!mid) continue;
            auto& items = remaining_[uc];
            std::vector<Item> kept;
            for (auto& x : items) {
                if (movable(x.insn) && try_place(a, x, *mid, kept)) {
                    // the value now lives across these blocks; keep renaming away from it
                    for (int b : span) {
                        reserved_[static_cast<std::size_t>(b)] |= static_cast<std::uint16_t>(reg_bits(x.in) | reg_bits(x.out));
                    }
                } else {
                    kept.push_back(x);
                }
            }
            items = std::move(kept);
        }
    }

    bool try_place(int a, const Item& x, const std::vector<const Item*>& mid, const std::vector<Item>& kept) {
        for (const Item* y : mid) {
            if (!compatible(*y, x)) return false;
        }
        for (const Item& y : kept) {
            if (!compatible(y, x)) return false;
        }
        auto& rows = rows_[static_cast<std::size_t>(a)];
        const int n = static_cast<int>(rows.size());
        int lowest = 0;
        for (int r = 0; r < n; ++r) {
            for (const auto& y : rows[static_cast<std::size_t>(r)]) {
                if (!y || compatible(*y, x)) continue;
                // instructions that precede x in program order only bound it from below
                const bool before = y->block == a || y->block == x.block;
                if (!before) return false;
                lowest = std::max(lowest, r + 1);
            }
        }
        for (int r = lowest; r < n; ++r) {
            Row& row = rows[static_cast<std::size_t>(r)];
            const int pin = lc_.forwarding ? pinned_lane(r > 0 ? &rows[static_cast<std::size_t>(r - 1)] : nullptr, x) : -1;
            if (pin == -2) continue;
            int lane = -1;
            if (pin >= 0) {
                if (!row[static_cast<std::size_t>(pin)]) lane = pin;
            } else {
                for (int l = lc_.lanes - 1; l >= 0 && lane < 0; --l) {
                    if (!row[static_cast<std::size_t>(l)]) lane = l;
                }
            }
            if (lane < 0) continue;
            Item placed = x;
            placed.moved = true;
            row[static_cast<std::size_t>(lane)] = placed;
            ++rep_.moved;
            return true;
        }
        return false;
    }

    std::optional<Reg> free_register(int b, const std::vector<Row>& rows) const {
        std::uint16_t used = 0;
        for (const auto& row : rows) {
            for (const auto& s : row) {
                if (s) used = static_cast<std::uint16_t>(used | reg_bits(s->in) | reg_bits(s->out));
            }
        }
        used = static_cast<std::uint16_t>(used | live_.blocks[static_cast<std::size_t>(b)].live_out.registers() |
                                          reserved_[static_cast<std::size_t>(b)]);
        for (int r : {6, 7, 8, 9, 0, 2, 3, 4, 5, 1}) {
            if (!((used >> r) & 1U)) return Reg(r);
        }
        return std::nullopt;
    }

    static void rename_output(Item& it, Reg f) {
        it.insn.dst = f;
        it.refresh();
    }

    static void rename_input(Item& it, Reg from, Reg to) {
        Instruction& insn = it.insn;
        switch (insn.kind) {
        case Kind::AluBinary:
        case Kind::Branch:
            if (insn.dst == from) insn.dst = to;
            if (insn.src && *insn.src == from) insn.src = to;
            break;
        case Kind::AluUnary:
            if (insn.dst == from) insn.dst = to;
            break;
        case Kind::Store:
        case Kind::Store48:
            if (insn.dst == from) insn.dst = to;
            if (insn.src && *insn.src == from) insn.src = to;
            break;
        case Kind::MovReg:
        case Kind::Load:
        case Kind::Load48:
            if (*insn.src == from) insn.src = to;
            break;
        case Kind::AluThreeOp:
            if (*insn.src == from) insn.src = to;
            if (insn.src2 && *insn.src2 == from) insn.src2 = to;
            break;
        default: break;
        }
        it.refresh();
    }

    // Rename the later writer when its value never leaves the block.
    bool rename_later(int b, std::vector<Row>& rows, Item& j) {
        if (!renamable(j.insn)) return false;
        const Reg r = j.insn.dst;
        std::vector<Item*> own;
        for (auto& row : rows) {
            for (auto& s : row) {
                if (s && s->block == b && !s->moved && s->index > j.index) own.push_back(&*s);
            }
        }
        std::sort(own.begin(), own.end(), [](const Item* x, const Item* y) { return x->index < y->index; });
        std::vector<Item*> readers;
        bool redefined = false;
        for (Item* it : own) {
            if (it->in.contains(r)) {
                // an in-place update reads and writes the register; it cannot take a renamed input alone
                if (it->out.contains(r) && it->insn.kind != Kind::MovReg && it->insn.kind != Kind::Load &&
                    it->insn.kind != Kind::Load48 && it->insn.kind != Kind::AluThreeOp) {
                    return false;
                }
                if (it->insn.kind == Kind::Call || it->insn.is_exit()) return false;
                readers.push_back(it);
            }
            if (it->out.contains(r)) {
                redefined = true;
                break;
            }
        }
        if (!redefined && live_.blocks[static_cast<std::size_t>(b)].live_out.contains(r)) return false;
        const auto f = free_register(b, rows);
        if (!f) return false;
        rename_output(j, *f);
        for (Item* it : readers) rename_input(*it, r, *f);
        record_rename(j, *f);
        return true;
    }

    bool rename_earlier(int b, std::vector<Row>& rows, Item& i) {
        if (!renamable(i.insn)) return false;
        const auto f = free_register(b, rows);
        if (!f) return false;
        rename_output(i, *f);
        record_rename(i, *f);
        return true;
    }

    void record_rename(const Item& it, Reg f) {
        ++rep_.renamed;
        rep_.rename_map["b" + std::to_string(it.block) + ":" + std::to_string(it.index)] = f.index;
    }

    void assign_registers(int b) {
        auto& rows = rows_[static_cast<std::size_t>(b)];
        for (std::size_t r = 0; r < rows.size(); ++r) {
            for (bool again = true; again;) {
                again = false;
                Row& row = rows[r];
                for (std::size_t x = 0; x < row.size() && !again; ++x) {
                    for (std::size_t y = x + 1; y < row.size() && !again; ++y) {
                        if (!row[x] || !row[y] || !row[x]->out.intersects(row[y]->out)) continue;
                        const bool x_first = row[x]->index < row[y]->index;
                        const std::size_t li = x_first ? x : y;
                        const std::size_t lj = x_first ? y : x;
                        if (po_.renaming && (rename_later(b, rows, *rows[r][lj]) || rename_earlier(b, rows, *rows[r][li]))) {
                            again = true;
                            continue;
                        }
                        if (!po_.row_split) throw RegisterPressureExceeded("no free register to resolve a same-row write");
                        Row fresh(static_cast<std::size_t>(lc_.lanes));
                        fresh[li] = rows[r][li];
                        rows[r][li].reset();
                        rows.insert(rows.begin() + static_cast<std::ptrdiff_t>(r), std::move(fresh));
                        ++rep_.split_rows;
                        ++r;
                        again = true;
                    }
                }
            }
        }
    }

    vliw::VliwProgram layout() {
        const std::size_t nb = cfg_.size();
        std::vector<std::int32_t> first_row(nb + 1, -1);
        std::int32_t count = 0;
        for (std::size_t b = 0; b < nb; ++b) {
            first_row[b] = count;
            count += static_cast<std::int32_t>(rows_[b].size());
        }
        first_row[nb] = count;
        // empty blocks fall through to the next block's first row
        vliw::VliwProgram out;
        out.lanes = lc_.lanes;
        out.maps = p_.maps;
        for (std::size_t b = 0; b < nb; ++b) {
            for (auto& row : rows_[b]) {
                vliw::Row vr;
                vr.block = static_cast<int>(b);
                vr.slots.resize(static_cast<std::size_t>(lc_.lanes));
                for (std::size_t l = 0; l < row.size(); ++l) {
                    if (!row[l]) continue;
                    Instruction insn = row[l]->insn;
                    if (insn.kind == Kind::Branch || insn.kind == Kind::JumpAlways) {
                        const int tb = cfg_.block_of[static_cast<std::size_t>(insn.target)];
                        insn.target = first_row[static_cast<std::size_t>(tb)];
                    }
                    vr.slots[l].insn = insn;
                    vr.slots[l].origin = {row[l]->block, row[l]->index, row[l]->moved};
                }
                out.rows.push_back(std::move(vr));
            }
        }
        return out;
    }

    void legalize(vliw::VliwProgram& prog) {
        if (!lc_.forwarding) return;
        for (;;) {
            const auto hz = sephirot::hazard_check(prog, true);
            auto it = std::find_if(hz.begin(), hz.end(), [](const sephirot::HazardViolation& v) {
                return v.kind == sephirot::HazardViolation::Kind::CrossLaneRaw;
            });
            if (it == hz.end()) return;
            const std::int32_t s = it->other_row;
            vliw::Row pad;
            pad.block = prog.rows[static_cast<std::size_t>(s)].block;
            pad.slots.resize(static_cast<std::size_t>(prog.lanes));
            for (auto& row : prog.rows) {
                for (auto& slot : row.slots) {
                    if (slot.insn && (slot.insn->kind == Kind::Branch || slot.insn->kind == Kind::JumpAlways) &&
                        slot.insn->target > s) {
                        ++slot.insn->target;
                    }
                }
            }
            prog.rows.insert(prog.rows.begin() + s, std::move(pad));
            ++rep_.pad_rows;
        }
    }

    const Program& p_;
    LaneConstraints lc_;
    PassOptions po_;
    CompileReport& rep_;
    analysis::ControlFlowGraph cfg_;
    analysis::LivenessInfo live_;
    std::vector<std::vector<Item>> remaining_;
    std::vector<std::vector<Item>> original_;
    std::vector<std::vector<Row>> rows_;
    std::vector<bool> done_;
    std::vector<std::uint16_t> reserved_;  // registers carried across blocks by moved instructions
    std::vector<std::vector<bool>> reach_;
};

}  // namespace

CompileResult compile(const Program& program, const LaneConstraints& constraints, const PassOptions& options) {
    validate(constraints);
    if (program.instructions.empty()) throw Error("empty program");
    isa::validate(program);
    CompileResult res;
    CompileReport& rep = res.report;
    rep.lanes = constraints.lanes;
    rep.original_count = program.instructions.size();

    PeepholeResult ph = peephole(program, options);
    rep.deltas = ph.deltas;
    PassResult unreachable = remove_unreachable(ph.program);
    rep.unreachable_removed = static_cast<int>(unreachable.removed.size());
    if (!unreachable.removed.empty()) {
        rep.diagnostics.push_back("removed " + std::to_string(unreachable.removed.size()) +
                                  " unreachable instruction(s)");
    }
    res.reduced = std::move(unreachable.program);
    analysis::annotate_regions(res.reduced);
    isa::validate(res.reduced);
    rep.after_reduction_count = res.reduced.instructions.size();

    Compiler c(res.reduced, constraints, options, rep);
    res.vliw = c.run();
    vliw::validate(res.vliw);
    rep.vliw_rows = res.vliw.rows.size();
    rep.scheduled_count = res.vliw.instruction_count();
    for (const auto& v : sephirot::hazard_check(res.vliw, constraints.forwarding)) {
        rep.diagnostics.push_back("hazard: " + sephirot::describe(v));
    }
    return res;
}

std::string format_report_text(const CompileReport& r) {
    std::ostringstream os;
    char ipc[32];
    std::snprintf(ipc, sizeof ipc, "%.2f", r.static_ipc());
    os << "instructions: " << r.original_count << " -> " << r.after_reduction_count << "\n";
    os << "rows: " << r.vliw_rows << " at " << r.lanes << " lanes, static IPC " << ipc << "\n";
    os << "removed: " << r.delta("boundary_checks") << " boundary-check, " << r.delta("zeroing") << " zeroing, "
       << r.unreachable_removed << " unreachable\n";
    os << "fused: " << r.rewrites("three_operand") << " three-operand, " << r.rewrites("load_store_6b")
       << " load/store-6B, " << r.rewrites("early_exit") << " early-exit\n";
    os << "scheduling: " << r.moved << " moved, " << r.parallel_branches << " parallel branches, " << r.renamed
       << " renamed, " << r.split_rows << " split rows, " << r.pad_rows << " pad rows\n";
    for (const auto& d : r.diagnostics) os << "note: " << d << "\n";
    return os.str();
}

std::string format_report_json(const CompileReport& r) {
    nlohmann::json j;
    j["original_count"] = r.original_count;
    j["after_reduction_count"] = r.after_reduction_count;
    j["scheduled_count"] = r.scheduled_count;
    j["vliw_rows"] = r.vliw_rows;
    j["lanes"] = r.lanes;
    j["static_ipc"] = r.static_ipc();
    nlohmann::json passes = nlohmann::json::array();
    for (const auto& d : r.deltas) {
        passes.push_back({{"pass", d.pass}, {"rewrites", d.rewrites}, {"instructions_removed", d.instructions_removed}});
    }
    j["passes"] = passes;
    j["unreachable_removed"] = r.unreachable_removed;
    j["moved"] = r.moved;
    j["parallel_branches"] = r.parallel_branches;
    j["renamed"] = r.renamed;
    j["split_rows"] = r.split_rows;
    j["pad_rows"] = r.pad_rows;
    j["rename_map"] = r.rename_map;
    j["diagnostics"] = r.diagnostics;
    return j.dump(2);
}

}  // namespace xdpvliw::opt
