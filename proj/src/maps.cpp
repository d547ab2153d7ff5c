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
#include <cstring>
#include <sstream>

#include "xdpvliw/vm.hpp"

namespace xdpvliw::vm {

std::uint32_t fnv1a(const std::uint8_t* data, std::size_t n) {
    std::uint32_t h = 2166136261U;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 16777619U;
    }
    return h;
}

MapInstance::MapInstance(const isa::MapDef& def) : def_(def) {
    if (def.max_entries == 0 || def.key_size == 0 || def.value_size == 0) {
        throw Error("map " + std::to_string(def.id) + ": sizes and max_entries must be positive");
    }
    if (static_cast<std::uint64_t>(def.value_size) * def.max_entries > kMapStride) {
        throw Error("map " + std::to_string(def.id) + " is too large");
    }
    if (def.kind == isa::MapKind::Array && def.key_size != 4) {
        throw Error("array map " + std::to_string(def.id) + " needs 4-byte keys");
    }
    keys_.assign(static_cast<std::size_t>(def.key_size) * def.max_entries, 0);
    values_.assign(static_cast<std::size_t>(def.value_size) * def.max_entries, 0);
    state_.assign(def.max_entries, def.kind == isa::MapKind::Array ? SlotState::Used : SlotState::Empty);
    stamps_.assign(def.max_entries, 0);
}

std::optional<std::uint32_t> MapInstance::find(const std::uint8_t* key) const {
    if (def_.kind == isa::MapKind::Array) {
        std::uint32_t idx = 0;
        std::memcpy(&idx, key, 4);
        if (idx >= def_.max_entries) return std::nullopt;
        return idx;
    }
    const std::uint32_t h = fnv1a(key, def_.key_size) % def_.max_entries;
    for (std::uint32_t i = 0; i < def_.max_entries; ++i) {
        const std::uint32_t s = (h + i) % def_.max_entries;
        if (state_[s] == SlotState::Empty) return std::nullopt;
        if (state_[s] == SlotState::Used && std::memcmp(keys_.data() + s * def_.key_size, key, def_.key_size) == 0) {
            return s;
        }
    }
    return std::nullopt;
}

std::optional<std::uint32_t> MapInstance::lookup(const std::uint8_t* key) {
    auto slot = find(key);
    if (slot && def_.kind == isa::MapKind::LruHash) touch(*slot);
    return slot;
}

std::int64_t MapInstance::update(const std::uint8_t* key, const std::uint8_t* value, std::uint64_t flags) {
    if (flags > kBpfExist) return kEINVAL;
    if (def_.kind == isa::MapKind::Array) {
        std::uint32_t idx = 0;
        std::memcpy(&idx, key, 4);
        if (idx >= def_.max_entries) return kE2BIG;
        if (flags == kBpfNoExist) return kEEXIST;
        std::memmove(value_at(idx), value, def_.value_size);
        return 0;
    }
    if (auto slot = find(key)) {
        if (flags == kBpfNoExist) return kEEXIST;
        std::memmove(value_at(*slot), value, def_.value_size);
        if (def_.kind == isa::MapKind::LruHash) touch(*slot);
        return 0;
    }
    if (flags == kBpfExist) return kENOENT;
    const std::uint32_t h = fnv1a(key, def_.key_size) % def_.max_entries;
    std::optional<std::uint32_t> free;
    for (std::uint32_t i = 0; i < def_.max_entries && !free; ++i) {
        const std::uint32_t s = (h + i) % def_.max_entries;
        if (state_[s] != SlotState::Used) free = s;
    }
    if (!free) {
        if (def_.kind != isa::MapKind::LruHash) return kE2BIG;
        std::uint32_t victim = 0;
        for (std::uint32_t s = 1; s < def_.max_entries; ++s) {
            if (stamps_[s] < stamps_[victim]) victim = s;
        }
        free = victim;
    }
    // copy the value first: it may alias the slot being reused
    std::vector<std::uint8_t> tmp(value, value + def_.value_size);
    std::memcpy(keys_.data() + *free * def_.key_size, key, def_.key_size);
    std::memcpy(value_at(*free), tmp.data(), def_.value_size);
    state_[*free] = SlotState::Used;
    touch(*free);
    return 0;
}

std::int64_t MapInstance::remove(const std::uint8_t* key) {
    if (def_.kind == isa::MapKind::Array) return kEINVAL;
    auto slot = find(key);
    if (!slot) return kENOENT;
    state_[*slot] = SlotState::Deleted;
    return 0;
}

std::size_t MapInstance::entry_count() const {
    return static_cast<std::size_t>(std::count(state_.begin(), state_.end(), SlotState::Used));
}

std::vector<std::pair<std::vector<std::uint8_t>, std::vector<std::uint8_t>>> MapInstance::entries() const {
    std::vector<std::pair<std::vector<std::uint8_t>, std::vector<std::uint8_t>>> out;
    for (std::uint32_t s = 0; s < def_.max_entries; ++s) {
        if (state_[s] != SlotState::Used) continue;
        std::vector<std::uint8_t> k;
        if (def_.kind == isa::MapKind::Array) {
            k.resize(4);
            std::memcpy(k.data(), &s, 4);
        } else {
            k.assign(keys_.begin() + s * def_.key_size, keys_.begin() + (s + 1) * def_.key_size);
        }
        std::vector<std::uint8_t> v(values_.begin() + s * def_.value_size, values_.begin() + (s + 1) * def_.value_size);
        out.emplace_back(std::move(k), std::move(v));
    }
    std::sort(out.begin(), out.end());
    return out;
}

MapStore::MapStore(const std::vector<isa::MapDef>& defs) {
    for (const auto& d : defs) add(d);
}

void MapStore::add(const isa::MapDef& def) {
    if (def.id >= isa::kMaxMaps) throw Error("map id " + std::to_string(def.id) + " out of range");
    if (find(def.id)) throw Error("duplicate map id " + std::to_string(def.id));
    maps_.emplace_back(def);
}

MapInstance* MapStore::find(std::uint32_t id) {
    for (auto& m : maps_) {
        if (m.def().id == id) return &m;
    }
    return nullptr;
}

const MapInstance* MapStore::find(std::uint32_t id) const {
    for (const auto& m : maps_) {
        if (m.def().id == id) return &m;
    }
    return nullptr;
}

std::vector<isa::MapDef> MapStore::defs() const {
    std::vector<isa::MapDef> out;
    for (const auto& m : maps_) out.push_back(m.def());
    return out;
}

bool MapStore::same_contents(const MapStore& other) const {
    if (maps_.size() != other.maps_.size()) return false;
    for (const auto& m : maps_) {
        const MapInstance* o = other.find(m.def().id);
        if (!o || !(o->def() == m.def()) || o->entries() != m.entries()) return false;
    }
    return true;
}

namespace {

std::string hex(const std::vector<std::uint8_t>& b) {
    static const char* d = "0123456789abcdef";
    std::string s;
    for (auto c : b) {
        s += d[c >> 4];
        s += d[c & 15];
    }
    return s;
}

}  // namespace

std::string MapStore::describe() const {
    std::ostringstream os;
    for (const auto& m : maps_) {
        os << "map " << m.def().id << ":";
        for (const auto& [k, v] : m.entries()) os << " " << hex(k) << "=" << hex(v);
        os << "\n";
    }
    return os.str();
}

}  // namespace xdpvliw::vm
