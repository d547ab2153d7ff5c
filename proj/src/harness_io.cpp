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
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "xdpvliw/assembly.hpp"
#include "xdpvliw/codec.hpp"
#include "xdpvliw/harness.hpp"

namespace xdpvliw::harness {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::uint8_t> parse_hex(std::string_view text) {
    std::vector<std::uint8_t> out;
    int hi = -1;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c)) || c == ':' || c == '-') continue;
        if (c == '0' && i + 1 < text.size() && (text[i + 1] == 'x' || text[i + 1] == 'X') && hi < 0) {
            ++i;
            continue;
        }
        int v = 0;
        if (c >= '0' && c <= '9') v = c - '0';
        else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
        else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
        else throw Error(std::string("bad hex digit '") + c + "'");
        if (hi < 0) {
            hi = v;
        } else {
            out.push_back(static_cast<std::uint8_t>(hi << 4 | v));
            hi = -1;
        }
    }
    if (hi >= 0) throw Error("odd number of hex digits");
    return out;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
    static const char* d = "0123456789abcdef";
    std::string s;
    s.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        s += d[b >> 4];
        s += d[b & 15];
    }
    return s;
}

MapConfig parse_map_config(std::string_view json_text) {
    MapConfig cfg;
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw Error(std::string("map config: ") + e.what());
    }
    const json& list = doc.is_array() ? doc : doc.value("maps", json::array());
    try {
        for (const auto& m : list) {
            isa::MapDef d;
            d.id = m.at("id").get<std::uint32_t>();
            const auto kind = isa::parse_map_kind(m.at("kind").get<std::string>());
            if (!kind) throw Error("map config: unknown map kind " + m.at("kind").get<std::string>());
            d.kind = *kind;
            d.key_size = m.value("key_size", 4U);
            d.value_size = m.at("value_size").get<std::uint32_t>();
            d.max_entries = m.at("max_entries").get<std::uint32_t>();
            cfg.defs.push_back(d);
            for (const auto& e : m.value("entries", json::array())) {
                MapEntry me{d.id, parse_hex(e.at("key").get<std::string>()), parse_hex(e.at("value").get<std::string>())};
                if (me.key.size() != d.key_size || me.value.size() != d.value_size) {
                    throw Error("map config: entry size mismatch in map " + std::to_string(d.id));
                }
                cfg.entries.push_back(std::move(me));
            }
        }
    } catch (const json::exception& e) {
        throw Error(std::string("map config: ") + e.what());
    }
    return cfg;
}

std::string map_config_to_json(const MapConfig& config, int indent) {
    json maps = json::array();
    for (const auto& d : config.defs) {
        json m{{"id", d.id},
               {"kind", isa::map_kind_name(d.kind)},
               {"key_size", d.key_size},
               {"value_size", d.value_size},
               {"max_entries", d.max_entries}};
        json entries = json::array();
        for (const auto& e : config.entries) {
            if (e.map_id == d.id) entries.push_back({{"key", to_hex(e.key)}, {"value", to_hex(e.value)}});
        }
        if (!entries.empty()) m["entries"] = entries;
        maps.push_back(m);
    }
    return json{{"maps", maps}}.dump(indent) + "\n";
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, std::string_view text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

MapConfig load_map_config(const fs::path& path) { return parse_map_config(read_text(path)); }

vm::MapStore build_maps(const MapConfig& config) {
    vm::MapStore store(config.defs);
    for (const auto& e : config.entries) {
        vm::MapInstance* m = store.find(e.map_id);
        if (!m) throw Error("map config: entry for unknown map " + std::to_string(e.map_id));
        if (m->update(e.key.data(), e.value.data(), vm::kBpfAny) != 0) {
            throw Error("map config: cannot insert entry into map " + std::to_string(e.map_id));
        }
    }
    return store;
}

std::vector<vm::Packet> parse_packets_hex(std::string_view text, std::uint32_t default_port) {
    std::vector<vm::Packet> out;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (auto c = line.find('#'); c != std::string::npos) line.erase(c);
        vm::Packet p;
        p.ingress_port = default_port;
        if (auto at = line.find('@'); at != std::string::npos) {
            try {
                p.ingress_port = static_cast<std::uint32_t>(std::stoul(line.substr(at + 1)));
            } catch (const std::exception&) {
                throw Error("packets: bad port in line: " + line);
            }
            line.erase(at);
        }
        if (std::all_of(line.begin(), line.end(), [](unsigned char ch) { return std::isspace(ch); })) continue;
        p.data = parse_hex(line);
        out.push_back(std::move(p));
    }
    return out;
}

std::string packets_to_hex(const std::vector<vm::Packet>& packets) {
    std::string s;
    for (const auto& p : packets) {
        s += to_hex(p.data);
        if (p.ingress_port != 0) s += " @" + std::to_string(p.ingress_port);
        s += "\n";
    }
    return s;
}

namespace {

bool pcap_magic(std::span<const std::uint8_t> b, bool& swap) {
    if (b.size() < 4) return false;
    std::uint32_t m = 0;
    std::memcpy(&m, b.data(), 4);
    if (m == 0xa1b2c3d4U || m == 0xa1b23c4dU) {
        swap = false;
        return true;
    }
    if (m == 0xd4c3b2a1U || m == 0x4d3cb2a1U) {
        swap = true;
        return true;
    }
    return false;
}

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at, bool swap) {
    std::uint32_t v = 0;
    std::memcpy(&v, b.data() + at, 4);
    if (swap) v = (v >> 24) | ((v >> 8) & 0xff00U) | ((v << 8) & 0xff0000U) | (v << 24);
    return v;
}

}  // namespace

std::vector<vm::Packet> parse_pcap(std::span<const std::uint8_t> bytes, std::uint32_t port) {
    bool swap = false;
    if (!pcap_magic(bytes, swap) || bytes.size() < 24) throw Error("not a pcap file");
    std::vector<vm::Packet> out;
    std::size_t at = 24;
    while (at + 16 <= bytes.size()) {
        const std::uint32_t incl = read_u32(bytes, at + 8, swap);
        at += 16;
        if (at + incl > bytes.size()) throw Error("pcap: truncated record");
        vm::Packet p;
        p.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(at),
                      bytes.begin() + static_cast<std::ptrdiff_t>(at + incl));
        p.ingress_port = port;
        out.push_back(std::move(p));
        at += incl;
    }
    return out;
}

std::vector<vm::Packet> load_packets(const fs::path& path, std::uint32_t default_port) {
    const std::string raw = read_text(path);
    const std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size());
    bool swap = false;
    if (pcap_magic(bytes, swap)) return parse_pcap(bytes, default_port);
    return parse_packets_hex(raw, default_port);
}

isa::Program load_program(const fs::path& path) {
    const std::string raw = read_text(path);
    const std::string ext = path.extension().string();
    if (ext == ".bin" || ext == ".o" || ext == ".bpf") {
        return isa::decode(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
    }
    return isa::parse_asm(raw);
}

std::optional<vm::Action> parse_action(std::string_view name) {
    std::string s(name);
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (s.starts_with("XDP_")) s.erase(0, 4);
    for (auto a : {vm::Action::Aborted, vm::Action::Drop, vm::Action::Pass, vm::Action::Tx, vm::Action::Redirect}) {
        if (s == vm::action_name(a)) return a;
    }
    return std::nullopt;
}

CorpusEntry load_corpus_entry(const fs::path& dir) {
    CorpusEntry e;
    e.name = dir.filename().string();
    e.source = read_text(dir / "program.s");
    e.program = isa::parse_asm(e.source);
    if (fs::exists(dir / "maps.json")) e.maps = load_map_config(dir / "maps.json");
    e.program.maps = e.maps.defs;
    if (fs::exists(dir / "packets.hex")) e.packets = load_packets(dir / "packets.hex");
    if (fs::exists(dir / "entry.json")) {
        try {
            const json j = json::parse(read_text(dir / "entry.json"));
            e.description = j.value("description", "");
            for (const auto& a : j.value("expected", json::array())) {
                auto act = parse_action(a.get<std::string>());
                if (!act) throw Error("unknown action " + a.get<std::string>());
                e.expected.push_back(*act);
            }
        } catch (const json::exception& ex) {
            throw Error(dir.string() + "/entry.json: " + ex.what());
        }
    }
    if (!e.expected.empty() && e.expected.size() != e.packets.size()) {
        throw Error(e.name + ": expected actions do not match the packet count");
    }
    return e;
}

std::vector<CorpusEntry> load_corpus(const fs::path& root) {
    std::vector<fs::path> dirs;
    for (const auto& d : fs::directory_iterator(root)) {
        if (d.is_directory() && fs::exists(d.path() / "program.s")) dirs.push_back(d.path());
    }
    std::sort(dirs.begin(), dirs.end());
    std::vector<CorpusEntry> out;
    for (const auto& d : dirs) out.push_back(load_corpus_entry(d));
    return out;
}

}  // namespace xdpvliw::harness
