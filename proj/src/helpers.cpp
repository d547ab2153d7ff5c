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

#include "xdpvliw/helpers.hpp"

#include <array>

namespace xdpvliw::isa {

namespace {

// Keep in sync with data/helpers.json (checked by the isa tests).
constexpr std::array<HelperInfo, 6> kHelpers{{
    //  id  name                     arity mem    map    wmap   wpkt   redirect
    {1, "map_lookup_elem", 2, true, true, true, false, false},
    {2, "map_update_elem", 4, true, true, true, false, false},
    {3, "map_delete_elem", 2, true, true, true, false, false},
    {28, "csum_diff", 5, true, false, false, false, false},
    {44, "xdp_adjust_head", 2, false, false, false, true, false},
    {51, "redirect_map", 3, false, true, false, false, true},
}};

}  // namespace

std::span<const HelperInfo> helper_table() { return kHelpers; }

const HelperInfo* find_helper(std::int64_t id) {
    for (const auto& h : kHelpers) {
        if (h.id == id) return &h;
    }
    return nullptr;
}

const HelperInfo* find_helper(std::string_view name) {
    for (const auto& h : kHelpers) {
        if (h.name == name) return &h;
    }
    return nullptr;
}

}  // namespace xdpvliw::isa
