/*
 * Copyright 2026 The MPU Simulator Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/**
 * @file lsu.hpp
 * @brief Address-side decisions of the hybrid load/store path: local/remote
 *        split, coalescing into bank-IO transactions, and the near-bank
 *        fast-path test.
 */

#ifndef MPU_LSU_HPP
#define MPU_LSU_HPP

#include "mpu/common.hpp"
#include "mpu/memory.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <vector>

namespace mpu::lsu {

inline constexpr unsigned kSegmentBytes = 32;  // 256-bit bank IO

struct MemoryAccess {
    std::array<Addr, kWarpSize> addr{};
    LaneMask mask = 0;
    unsigned width = 4;
    bool store = false;
};

struct Split {
    LaneMask local = 0;
    std::map<std::uint32_t, LaneMask> remote;  // global core -> lanes
};

/// Throws SimulationFault for active lanes beyond DRAM capacity.
Split split_local_remote(const MemoryAccess& acc, const AddressMapping& map, std::uint32_t core);

struct Transaction {
    Addr base = 0;  // 32-byte aligned
    LaneMask lanes = 0;
};

struct Coalesced {
    std::vector<Transaction> transactions;  // ascending addresses
    bool perfectly_coalesced = false;
};

/// Merges the lanes in `lanes` into distinct 32-byte segments. Perfect
/// coalescing needs every lane active and addr[l] == base + l*width with a
/// 32-byte aligned base.
Coalesced coalesce(const MemoryAccess& acc, LaneMask lanes);

/// Near-bank fast path: full mask, no remote lanes, every lane on the warp's
/// NBU of its own core, perfectly coalesced.
bool decide_nearbank_ldst_offload(const MemoryAccess& acc, bool perfectly_coalesced, std::uint32_t reg_nbu,
                                  std::uint32_t core, const AddressMapping& map, bool has_remote);

/// LSU-Extension side: regenerates the 32 lane addresses from the leading one.
/// Throws SimulationFault when they leave the leading address's NBU.
std::array<Addr, kWarpSize> lsu_extension_expand(Addr leading, unsigned width, const AddressMapping& map);

}  // namespace mpu::lsu

#endif  // MPU_LSU_HPP
