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

#include <cctype>
#include <sstream>

#include "xdpvliw/assembly.hpp"
#include "xdpvliw/vliw.hpp"

namespace xdpvliw::vliw {

std::size_t VliwProgram::instruction_count() const {
    std::size_t n = 0;
    for (const auto& row : rows) {
        for (const auto& s : row.slots) n += s.empty() ? 0 : 1;
    }
    return n;
}

double VliwProgram::static_ipc() const {
    return rows.empty() ? 0.0 : static_cast<double>(instruction_count()) / static_cast<double>(rows.size());
}

std::string row_label(std::int32_t row) { return "R" + std::to_string(row); }

void validate(const VliwProgram& program) {
    if (program.lanes < 1 || program.lanes > 8) throw Error("lane count must be in [1, 8]");
    if (program.rows.empty()) throw Error("VLIW program has no rows");
    const auto n = static_cast<std::int32_t>(program.rows.size());
    for (std::int32_t r = 0; r < n; ++r) {
        const Row& row = program.rows[static_cast<std::size_t>(r)];
        if (static_cast<int>(row.slots.size()) != program.lanes) {
            throw Error("row " + std::to_string(r) + " has " + std::to_string(row.slots.size()) + " slots");
        }
        for (const auto& s : row.slots) {
            if (s.empty()) continue;
            const isa::Instruction& insn = *s.insn;
            if (!insn.dst.valid() || (insn.src && !insn.src->valid()) || (insn.src2 && !insn.src2->valid())) {
                throw Error("row " + std::to_string(r) + ": bad register");
            }
            if ((insn.kind == isa::Kind::Branch || insn.kind == isa::Kind::JumpAlways) &&
                (insn.target < 0 || insn.target >= n)) {
                throw Error("row " + std::to_string(r) + ": branch target out of range");
            }
        }
    }
    bool ends = false;
    for (const auto& s : program.rows.back().slots) {
        ends = ends || (!s.empty() && (s.insn->is_exit() || s.insn->kind == isa::Kind::JumpAlways));
    }
    if (!ends) throw Error("last row does not end control flow");
}

std::string dump_schedule(const VliwProgram& program) {
    std::ostringstream os;
    os << ".lanes " << program.lanes << "\n";
    for (const auto& m : program.maps) {
        os << ".map " << m.id << " " << isa::map_kind_name(m.kind) << " " << m.key_size << " " << m.value_size << " "
           << m.max_entries << "\n";
    }
    const auto label = [](std::int32_t t) { return row_label(t); };
    for (const auto& row : program.rows) {
        std::string text;
        std::string prov = "@" + std::to_string(row.block);
        for (std::size_t l = 0; l < row.slots.size(); ++l) {
            const Slot& s = row.slots[l];
            if (l) text += " | ";
            text += s.empty() ? "---" : isa::format_instruction(*s.insn, label);
            prov += l ? " | " : " ";
            if (s.empty() || s.origin.index < 0) {
                prov += "-";
            } else {
                prov += "b" + std::to_string(s.origin.block) + ":" + std::to_string(s.origin.index);
                if (s.origin.moved) prov += "*";
            }
        }
        os << text << "  # " << prov << "\n";
    }
    return os.str();
}

namespace {

std::string trim(std::string_view s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

std::vector<std::string> split(std::string_view s, std::string_view sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    for (;;) {
        const std::size_t i = s.find(sep, pos);
        if (i == std::string_view::npos) {
            out.push_back(trim(s.substr(pos)));
            return out;
        }
        out.push_back(trim(s.substr(pos, i - pos)));
        pos = i + sep.size();
    }
}

std::optional<std::int32_t> resolve_row(std::string_view tok) {
    if (tok.size() < 2 || tok[0] != 'R') return std::nullopt;
    std::int32_t v = 0;
    for (char c : tok.substr(1)) {
        if (c < '0' || c > '9') return std::nullopt;
        v = v * 10 + (c - '0');
    }
    return v;
}

std::optional<isa::Instruction> try_parse(const std::string& text) {
    try {
        return isa::parse_instruction(text, resolve_row);
    } catch (const Error&) {
        return std::nullopt;
    }
}

// The slot separator also spells the three-operand OR, so pieces are regrouped
// until exactly `left` slots parse.
bool group_slots(const std::vector<std::string>& pieces, std::size_t pos, int left, std::vector<Slot>& out) {
    if (left == 0) return pos == pieces.size();
    const std::size_t remaining = pieces.size() - pos;
    if (remaining < static_cast<std::size_t>(left)) return false;
    for (std::size_t take = remaining - static_cast<std::size_t>(left) + 1; take >= 1; --take) {
        std::string joined = pieces[pos];
        for (std::size_t k = 1; k < take; ++k) joined += " | " + pieces[pos + k];
        Slot slot;
        if (joined != "---") {
            auto insn = try_parse(joined);
            if (!insn) continue;
            slot.insn = *insn;
        }
        out.push_back(slot);
        if (group_slots(pieces, pos + take, left - 1, out)) return true;
        out.pop_back();
    }
    return false;
}

Origin parse_origin(const std::string& s) {
    Origin o;
    if (s == "-" || s.empty() || s[0] != 'b') return o;
    const std::size_t colon = s.find(':');
    if (colon == std::string::npos) throw Error("bad provenance '" + s + "'");
    o.block = std::stoi(s.substr(1, colon - 1));
    std::string idx = s.substr(colon + 1);
    if (!idx.empty() && idx.back() == '*') {
        o.moved = true;
        idx.pop_back();
    }
    o.index = std::stoi(idx);
    return o;
}

}  // namespace

VliwProgram parse_schedule(std::string_view text) {
    VliwProgram prog;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    bool lanes_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == ';') continue;
        const auto where = [&] { return "schedule line " + std::to_string(lineno) + ": "; };
        if (t.rfind(".lanes", 0) == 0) {
            prog.lanes = std::stoi(t.substr(6));
            lanes_seen = true;
            continue;
        }
        if (t.rfind(".map", 0) == 0) {
            std::istringstream ms(t.substr(4));
            isa::MapDef d;
            std::string kind;
            if (!(ms >> d.id >> kind >> d.key_size >> d.value_size >> d.max_entries)) throw Error(where() + "bad .map");
            auto k = isa::parse_map_kind(kind);
            if (!k) throw Error(where() + "unknown map kind '" + kind + "'");
            d.kind = *k;
            prog.maps.push_back(d);
            continue;
        }
        if (!lanes_seen) throw Error(where() + "missing .lanes header");
        const std::size_t hash = t.find('#');
        const std::string body = trim(std::string_view(t).substr(0, hash));
        Row row;
        if (!group_slots(split(body, " | "), 0, prog.lanes, row.slots)) {
            throw Error(where() + "expected " + std::to_string(prog.lanes) + " parsable slots");
        }
        if (hash != std::string::npos) {
            std::string prov = trim(std::string_view(t).substr(hash + 1));
            if (!prov.empty() && prov[0] == '@') {
                const std::size_t sp = prov.find(' ');
                row.block = std::stoi(prov.substr(1, sp == std::string::npos ? std::string::npos : sp - 1));
                prov = sp == std::string::npos ? "" : trim(std::string_view(prov).substr(sp));
            }
            if (!prov.empty()) {
                const auto origins = split(prov, " | ");
                if (origins.size() != row.slots.size()) throw Error(where() + "provenance count mismatch");
                for (std::size_t l = 0; l < origins.size(); ++l) row.slots[l].origin = parse_origin(origins[l]);
            }
        }
        prog.rows.push_back(std::move(row));
    }
    validate(prog);
    return prog;
}

}  // namespace xdpvliw::vliw
