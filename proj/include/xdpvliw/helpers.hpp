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
#include <span>
#include <string_view>

namespace xdpvliw::isa {

// Helper ids follow the kernel's numbering.
enum class HelperId : std::int64_t {
    MapLookup = 1,
    MapUpdate = 2,
    MapDelete = 3,
    CsumDiff = 28,
    XdpAdjustHead = 44,
    RedirectMap = 51,
};

struct HelperInfo {
    std::int64_t id;
    std::string_view name;
    int arity;               // arguments read from r1..r<arity>
    bool reads_memory;       // dereferences pointer arguments
    bool map_argument;       // r1 is a map handle
    bool writes_map;         // mutates map contents or recency state
    bool writes_packet;      // moves the packet start (adjust_head)
    bool writes_redirect;    // records a redirect target
};

[[nodiscard]] std::span<const HelperInfo> helper_table();
[[nodiscard]] const HelperInfo* find_helper(std::int64_t id);
[[nodiscard]] const HelperInfo* find_helper(std::string_view name);

}  // namespace xdpvliw::isa
