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

#include <catch_amalgamated.hpp>

#include <cstring>
#include <random>

#include "json.hpp"
#include "support/oracles.hpp"
#include "xdpvliw/assembly.hpp"
#include "xdpvliw/helpers.hpp"

using namespace xdpvliw;

namespace {

vm::Packet packet_of(std::size_t len, std::uint8_t seed = 1) {
    vm::Packet p;
    for (std::size_t i = 0; i < len; ++i) p.data.push_back(static_cast<std::uint8_t>(seed + i * 13));
    return p;
}

vm::XdpResult run(const char* text, const vm::Packet& pk, const vm::MapStore& maps = {}, vm::MapStore* out = nullptr) {
    return vm::run_oracle(isa::parse_asm(text), pk, maps, out);
}

isa::MapDef map_def(std::uint32_t id, isa::MapKind kind, std::uint32_t key, std::uint32_t value, std::uint32_t max) {
    isa::MapDef d;
    d.id = id;
    d.kind = kind;
    d.key_size = key;
    d.value_size = value;
    d.max_entries = max;
    return d;
}

std::vector<std::uint8_t> u32le(std::uint32_t v) {
    return {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v >> 16),
            static_cast<std::uint8_t>(v >> 24)};
}

}  // namespace

TEST_CASE("early_exit 1 drops and leaves the packet alone") {
    for (std::size_t len : {14, 64, 200}) {
        const auto pk = packet_of(len);
        const auto r = run("early_exit 1\n", pk);
        CHECK(r.action == vm::Action::Drop);
        CHECK(r.packet == pk.data);
        CHECK_FALSE(r.trap);
    }
}

TEST_CASE("MAC swap program") {
    const auto pk = packet_of(64, 9);
    const auto r = run(
        "r7 = *(u32 *)(r1 + 0)\n"
        "r2 = *(u32 *)(r7 + 0)\n"
        "r3 = *(u16 *)(r7 + 4)\n"
        "r4 = *(u32 *)(r7 + 6)\n"
        "r5 = *(u16 *)(r7 + 10)\n"
        "*(u32 *)(r7 + 0) = r4\n"
        "*(u16 *)(r7 + 4) = r5\n"
        "*(u32 *)(r7 + 6) = r2\n"
        "*(u16 *)(r7 + 10) = r3\n"
        "r0 = 3\n"
        "exit\n",
        pk);
    CHECK(r.action == vm::Action::Tx);
    CHECK(r.packet == oracles::swap_macs(pk.data));
}

TEST_CASE("bare exit returns ABORTED") {
    const auto r = run("exit\n", packet_of(64));
    CHECK(r.action == vm::Action::Aborted);
    CHECK(r.r0 == 0);
    CHECK_FALSE(r.trap);
}

TEST_CASE("zero initialisation of registers and stack") {
    const auto pk = packet_of(64);
    for (int reg : {0, 2, 3, 4, 5, 6, 7, 8, 9}) {
        const std::string text = "r0 = r" + std::to_string(reg) + "\nr0 += 2\nexit\n";
        CHECK(run(text.c_str(), pk).action == vm::Action::Pass);
    }
    CHECK(run("r0 = *(u64 *)(r10 - 512)\nr0 += 2\nexit\n", pk).action == vm::Action::Pass);
    CHECK(run("r0 = *(u64 *)(r10 - 8)\nr0 += 2\nexit\n", pk).action == vm::Action::Pass);
}

TEST_CASE("division by zero yields zero") {
    const auto pk = packet_of(64);
    CHECK(run("r0 = 7\nr1 = 0\nr0 /= r1\nr0 += 1\nexit\n", pk).action == vm::Action::Drop);
    CHECK(run("r0 = 7\nr1 = 0\nr0 %= r1\nr0 += 1\nexit\n", pk).action == vm::Action::Drop);
}

TEST_CASE("hardware bounds guard") {
    const auto pk = packet_of(64);
    vm::MachineState st(pk, vm::MapStore{});
    std::uint64_t v = 0;
    CHECK(st.read(st.end_addr() - 4, 4, v));
    CHECK_FALSE(st.read(st.end_addr() - 2, 4, v));
    CHECK_FALSE(st.read(st.data_addr() - 1, 1, v));
    CHECK(st.write(vm::kStackBase + isa::kStackSize - 512, 8, 1));
    CHECK_FALSE(st.write(vm::kStackBase + isa::kStackSize - 516, 8, 1));
    CHECK_FALSE(st.write(vm::kStackBase + isa::kStackSize - 4, 8, 1));

    const auto r = run("r7 = *(u32 *)(r1 + 0)\nr0 = *(u32 *)(r7 + 62)\nexit\n", pk);
    REQUIRE(r.trap);
    CHECK(r.trap->kind == vm::Trap::Kind::OutOfBounds);
    CHECK(r.action == vm::Action::Aborted);
    CHECK_FALSE(run("r7 = *(u32 *)(r1 + 0)\nr0 = *(u32 *)(r7 + 60)\nexit\n", pk).trap);
}

TEST_CASE("instruction limit") {
    vm::Limits lim;
    lim.max_instructions = 100;
    const auto r = vm::run_oracle(isa::parse_asm("L:\nr1 += 1\nif r1 > 0 goto L\nexit\n"), packet_of(64), {}, nullptr, lim);
    REQUIRE(r.trap);
    CHECK(r.trap->kind == vm::Trap::Kind::InstructionLimit);
}

TEST_CASE("map helpers") {
    const vm::MapStore maps({map_def(0, isa::MapKind::Hash, 4, 8, 4)});
    const char* lookup_then_update =
        "*(u32 *)(r10 - 4) = 77\n"
        "r1 = map[0]\n"
        "r2 = r10\n"
        "r2 += -4\n"
        "call map_lookup_elem\n"
        "if r0 != 0 goto hit\n"
        "r1 = 0x1122334455667788 ll\n"
        "*(u64 *)(r10 - 16) = r1\n"
        "r1 = map[0]\n"
        "r2 = r10\n"
        "r2 += -4\n"
        "r3 = r10\n"
        "r3 += -16\n"
        "r4 = 0\n"
        "call map_update_elem\n"
        "r0 = 1\n"
        "exit\n"
        "hit:\n"
        "r1 = *(u64 *)(r0 + 0)\n"
        "r2 = 0x1122334455667788 ll\n"
        "r0 = 2\n"
        "if r1 == r2 goto out\n"
        "r0 = 0\n"
        "out:\n"
        "exit\n";
    vm::MapStore after;
    const auto first = run(lookup_then_update, packet_of(64), maps, &after);
    REQUIRE_FALSE(first.trap);
    CHECK(first.action == vm::Action::Drop);  // miss
    const auto* m = after.find(0);
    REQUIRE(m->entry_count() == 1);
    const auto entries = m->entries();
    CHECK(entries[0].first == u32le(77));
    const std::vector<std::uint8_t> expected_value{0x88, 0x77, 0x66, 0x55, 0x44, 0x33, 0x22, 0x11};
    CHECK(entries[0].second == expected_value);
    const auto second = run(lookup_then_update, packet_of(64), after);
    CHECK(second.action == vm::Action::Pass);  // hit with the written value
}

TEST_CASE("map kinds") {
    SECTION("array entries start zeroed and reject out-of-range keys") {
        vm::MapInstance a(map_def(0, isa::MapKind::Array, 4, 8, 4));
        CHECK(a.entry_count() == 4);
        const auto k1 = u32le(1), k9 = u32le(9);
        const auto slot = a.lookup(k1.data());
        REQUIRE(slot);
        for (int i = 0; i < 8; ++i) CHECK(a.value_at(*slot)[i] == 0);
        CHECK_FALSE(a.lookup(k9.data()));
        const std::vector<std::uint8_t> v(8, 5);
        CHECK(a.update(k9.data(), v.data(), vm::kBpfAny) == vm::kE2BIG);
        CHECK(a.remove(k1.data()) == vm::kEINVAL);
    }
    SECTION("hash capacity and flags") {
        vm::MapInstance h(map_def(0, isa::MapKind::Hash, 4, 4, 2));
        const std::vector<std::uint8_t> v(4, 1);
        const auto k1 = u32le(1), k2 = u32le(2), k3 = u32le(3);
        CHECK(h.update(k1.data(), v.data(), vm::kBpfAny) == 0);
        CHECK(h.update(k1.data(), v.data(), vm::kBpfNoExist) == vm::kEEXIST);
        CHECK(h.update(k2.data(), v.data(), vm::kBpfExist) == vm::kENOENT);
        CHECK(h.update(k2.data(), v.data(), vm::kBpfAny) == 0);
        CHECK(h.update(k3.data(), v.data(), vm::kBpfAny) == vm::kE2BIG);
        CHECK(h.remove(k1.data()) == 0);
        CHECK(h.remove(k1.data()) == vm::kENOENT);
        CHECK(h.update(k3.data(), v.data(), vm::kBpfAny) == 0);
        CHECK(h.entry_count() == 2);
    }
    SECTION("lru evicts the least recently used entry") {
        vm::MapInstance l(map_def(0, isa::MapKind::LruHash, 4, 4, 2));
        const std::vector<std::uint8_t> v(4, 1);
        const auto k1 = u32le(1), k2 = u32le(2), k3 = u32le(3);
        REQUIRE(l.update(k1.data(), v.data(), vm::kBpfAny) == 0);
        REQUIRE(l.update(k2.data(), v.data(), vm::kBpfAny) == 0);
        REQUIRE(l.lookup(k1.data()));
        CHECK(l.update(k3.data(), v.data(), vm::kBpfAny) == 0);
        CHECK(l.lookup(k1.data()));
        CHECK_FALSE(l.lookup(k2.data()));
        CHECK(l.lookup(k3.data()));
    }
    SECTION("hash placement uses FNV-1a") {
        const std::uint8_t a[] = {'a'};
        CHECK(vm::fnv1a(a, 1) == 0xe40c292cU);
        CHECK(vm::fnv1a(nullptr, 0) == 2166136261U);
    }
}

TEST_CASE("csum_diff matches the RFC 1071 reference") {
    std::mt19937_64 rng(17);
    for (int t = 0; t < 200; ++t) {
        std::vector<std::uint8_t> hdr(20);
        for (auto& b : hdr) b = static_cast<std::uint8_t>(rng());
        hdr[0] = 0x45;
        hdr[10] = hdr[11] = 0;
        const std::uint16_t c = static_cast<std::uint16_t>(~oracles::ones_complement_sum(hdr));
        hdr[10] = static_cast<std::uint8_t>(c >> 8);
        hdr[11] = static_cast<std::uint8_t>(c);
        REQUIRE(oracles::ipv4_header_valid(hdr));

        // Rewrite the destination address through the helper.
        vm::MachineState st(packet_of(64), vm::MapStore{});
        std::vector<std::uint8_t> fresh(4);
        for (auto& b : fresh) b = static_cast<std::uint8_t>(rng());
        std::memcpy(st.stack.data() + isa::kStackSize - 8, hdr.data() + 16, 4);
        std::memcpy(st.stack.data() + isa::kStackSize - 4, fresh.data(), 4);
        std::uint16_t field = 0;
        std::memcpy(&field, hdr.data() + 10, 2);
        st.regs[1] = vm::kStackBase + isa::kStackSize - 8;
        st.regs[2] = 4;
        st.regs[3] = vm::kStackBase + isa::kStackSize - 4;
        st.regs[4] = 4;
        st.regs[5] = static_cast<std::uint16_t>(~field);
        std::optional<vm::Trap> trap;
        std::uint64_t acc = vm::call_helper(static_cast<std::int64_t>(isa::HelperId::CsumDiff), st, trap);
        REQUIRE_FALSE(trap);
        while (acc >> 16) acc = (acc & 0xffff) + (acc >> 16);
        const auto updated = static_cast<std::uint16_t>(~acc);
        std::memcpy(hdr.data() + 16, fresh.data(), 4);
        std::memcpy(hdr.data() + 10, &updated, 2);
        REQUIRE(oracles::ipv4_header_valid(hdr));
    }
}

TEST_CASE("csum_diff argument checks") {
    vm::MachineState st(packet_of(64), vm::MapStore{});
    st.regs[1] = vm::kStackBase;
    st.regs[2] = 3;
    st.regs[4] = 0;
    std::optional<vm::Trap> trap;
    CHECK(static_cast<std::int64_t>(vm::call_helper(28, st, trap)) == vm::kEINVAL);
    st.regs[2] = 4;
    st.regs[1] = 12;
    (void)vm::call_helper(28, st, trap);
    REQUIRE(trap);
    CHECK(trap->kind == vm::Trap::Kind::BadHelperArgs);
}

TEST_CASE("adjust_head and redirect") {
    const auto pk = packet_of(64);
    SECTION("grow the head") {
        const auto r = run("r6 = r1\nr2 = -20\ncall xdp_adjust_head\nr7 = *(u32 *)(r6 + 0)\n*(u8 *)(r7 + 0) = 0xaa\nr0 = 3\nexit\n", pk);
        REQUIRE_FALSE(r.trap);
        REQUIRE(r.packet.size() == 84);
        CHECK(r.packet[0] == 0xaa);
        CHECK(std::equal(pk.data.begin(), pk.data.end(), r.packet.begin() + 20));
    }
    SECTION("shrink too far") {
        const auto r = run("r2 = 60\ncall xdp_adjust_head\nexit\n", pk);
        CHECK(static_cast<std::int64_t>(r.r0) == vm::kEINVAL);
    }
    SECTION("redirect through a device map") {
        const vm::MapStore maps({map_def(0, isa::MapKind::Array, 4, 4, 4)});
        const auto hit = run("r1 = map[0]\nr2 = 2\nr3 = 1\ncall redirect_map\nexit\n", pk, maps);
        CHECK(hit.action == vm::Action::Redirect);
        REQUIRE(hit.redirect);
        CHECK(hit.redirect->second == 2);
        const auto miss = run("r1 = map[0]\nr2 = 9\nr3 = 1\ncall redirect_map\nexit\n", pk, maps);
        CHECK(miss.action == vm::Action::Drop);
        CHECK_FALSE(miss.redirect);
    }
    SECTION("unknown helper traps") {
        const auto r = run("call 999\nexit\n", pk);
        REQUIRE(r.trap);
        CHECK(r.trap->kind == vm::Trap::Kind::UnknownHelper);
    }
}

TEST_CASE("helpers never touch r6-r9 or the stack") {
    std::mt19937_64 rng(23);
    const vm::MapStore maps({map_def(0, isa::MapKind::Hash, 4, 8, 8), map_def(1, isa::MapKind::Array, 4, 4, 4)});
    for (int t = 0; t < 500; ++t) {
        vm::MachineState st(packet_of(64 + rng() % 64), maps);
        for (int r = 2; r <= 9; ++r) st.regs[static_cast<std::size_t>(r)] = rng();
        for (auto& b : st.stack) b = static_cast<std::uint8_t>(rng());
        const std::int64_t ids[] = {1, 2, 3, 28, 44, 51};
        const std::int64_t id = ids[rng() % 6];
        st.regs[1] = id == 44 ? vm::kCtxBase : (id == 28 ? vm::kStackBase + rng() % 256 : vm::kMapHandleBase + rng() % 2);
        st.regs[2] = id == 28 ? 4 * (rng() % 4) : (id == 44 ? rng() % 32 : vm::kStackBase + rng() % 500);
        st.regs[3] = id == 28 ? vm::kStackBase + rng() % 256 : (id == 51 ? rng() % 3 : vm::kStackBase + rng() % 500);
        st.regs[4] = id == 28 ? 4 * (rng() % 4) : rng() % 3;
        const auto before = st;
        std::optional<vm::Trap> trap;
        (void)vm::call_helper(id, st, trap);
        for (int r = 1; r <= 9; ++r) REQUIRE(st.regs[static_cast<std::size_t>(r)] == before.regs[static_cast<std::size_t>(r)]);
        REQUIRE(st.stack == before.stack);
    }
}

TEST_CASE("determinism") {
    for (std::uint64_t i = 0; i < 100; ++i) {
        const auto c = harness::generate_case(harness::case_seed(51, i));
        const auto maps = harness::build_maps(c.maps);
        vm::MapStore m1, m2;
        const auto a = vm::run_oracle(c.program, c.packet, maps, &m1);
        const auto b = vm::run_oracle(c.program, c.packet, maps, &m2);
        REQUIRE(a.action == b.action);
        REQUIRE(a.r0 == b.r0);
        REQUIRE(a.packet == b.packet);
        REQUIRE(a.trap.has_value() == b.trap.has_value());
        REQUIRE(m1.same_contents(m2));
    }
}

TEST_CASE("extended instructions match their base expansions") {
    std::mt19937_64 rng(29);
    for (auto kind : {isa::Kind::AluThreeOp, isa::Kind::Load48, isa::Kind::Store48, isa::Kind::EarlyExit}) {
        int traps = 0;
        for (int t = 0; t < 300; ++t) {
            const auto c = oracles::random_extended_case(kind, rng);
            INFO(isa::format_instruction(c.insn));
            REQUIRE(oracles::compare_expansion(c).empty());
            vm::MachineState s = c.state;
            isa::Program p;
            p.instructions = {c.insn, isa::exit_insn()};
            traps += oracles::run_from(p, s).trap.has_value();
        }
        if (kind == isa::Kind::Load48 || kind == isa::Kind::Store48) {
            CHECK(traps > 0);
            CHECK(traps < 150);
        }
    }
}

TEST_CASE("helper table matches the shipped config") {
    const auto doc = nlohmann::json::parse(harness::read_text(oracles::data_dir() + "/helpers.json"));
    const auto& list = doc.at("helpers");
    REQUIRE(list.size() == isa::helper_table().size());
    for (const auto& h : list) {
        const auto* info = isa::find_helper(h.at("id").get<std::int64_t>());
        REQUIRE(info);
        CHECK(info->name == h.at("name").get<std::string>());
        CHECK(isa::find_helper(info->name) == info);
        CHECK(info->arity == h.at("arity").get<int>());
        CHECK(info->reads_memory == h.at("reads_memory").get<bool>());
        CHECK(info->map_argument == h.at("map_argument").get<bool>());
        CHECK(info->writes_map == h.at("writes_map").get<bool>());
        CHECK(info->writes_packet == h.at("writes_packet").get<bool>());
        CHECK(info->writes_redirect == h.at("writes_redirect").get<bool>());
    }
}
