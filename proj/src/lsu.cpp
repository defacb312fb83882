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

#include "mpu/lsu.hpp"

#include <algorithm>

namespace mpu::lsu {

Split split_local_remote(const MemoryAccess& acc, const AddressMapping& map, std::uint32_t core) {
    Split s;
    for (int l = 0; l < kWarpSize; ++l) {
        if (!(acc.mask >> l & 1u)) continue;
        if (acc.addr[l] + acc.width > map.capacity())
            throw SimulationFault("lane " + std::to_string(l) + " address beyond DRAM capacity");
        const std::uint32_t c = map.global_core(acc.addr[l]);
        if (c == core) s.local |= 1u << l;
        else s.remote[c] |= 1u << l;
    }
    return s;
}

Coalesced coalesce(const MemoryAccess& acc, LaneMask lanes) {
    Coalesced out;
    std::vector<std::pair<Addr, LaneMask>> segs;
    for (int l = 0; l < kWarpSize; ++l) {
        if (!(lanes >> l & 1u)) continue;
        const Addr first = acc.addr[l] / kSegmentBytes, last = (acc.addr[l] + acc.width - 1) / kSegmentBytes;
        for (Addr s = first; s <= last; ++s) segs.emplace_back(s * kSegmentBytes, 1u << l);
    }
    std::sort(segs.begin(), segs.end());
    for (const auto& [base, m] : segs) {
        if (!out.transactions.empty() && out.transactions.back().base == base) out.transactions.back().lanes |= m;
        else out.transactions.push_back(Transaction{base, m});
    }
    if (lanes == kFullMask && acc.mask == kFullMask && acc.addr[0] % kSegmentBytes == 0) {
        bool run = true;
        for (int l = 1; l < kWarpSize && run; ++l) run = acc.addr[l] == acc.addr[0] + static_cast<Addr>(l) * acc.width;
        out.perfectly_coalesced = run;
    }
    return out;
}

bool decide_nearbank_ldst_offload(const MemoryAccess& acc, bool perfectly_coalesced, std::uint32_t reg_nbu,
                                  std::uint32_t core, const AddressMapping& map, bool has_remote) {
    if (acc.mask != kFullMask || has_remote || !perfectly_coalesced) return false;
    for (int l = 0; l < kWarpSize; ++l) {
        const DramLocation d = map.decode(acc.addr[l]);
        if (map.global_core(d) != core || d.nbu != reg_nbu) return false;
    }
    return true;
}

std::array<Addr, kWarpSize> lsu_extension_expand(Addr leading, unsigned width, const AddressMapping& map) {
    std::array<Addr, kWarpSize> a{};
    const DramLocation first = map.decode(leading);
    for (int l = 0; l < kWarpSize; ++l) {
        a[l] = leading + static_cast<Addr>(l) * width;
        const DramLocation d = map.decode(a[l] + width - 1);
        if (d.nbu != first.nbu || d.core != first.core || d.proc != first.proc)
            throw SimulationFault("near-bank expansion crosses the NBU boundary");
    }
    return a;
}

}  // namespace mpu::lsu
