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
 * @file interconnect.hpp
 * @brief Per-core TSV bus and the on-chip mesh / off-chip links.
 *
 * The TSV bus moves `bits_per_cycle` bits per TSV cycle and runs `ratio` TSV
 * cycles per core cycle. Transfers are non-preemptive; queued classes are
 * granted in weighted round-robin order.
 *
 * The mesh uses XY routing with per-directed-link reservations: a packet
 * spends `router_cycles` in each router, then holds the output link for one
 * link cycle per flit. Times inside the NoC are router cycles.
 */

#ifndef MPU_INTERCONNECT_HPP
#define MPU_INTERCONNECT_HPP

#include "mpu/common.hpp"
#include "mpu/config.hpp"

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <vector>

namespace mpu {

enum class TsvClass : std::uint8_t { Offload, Move, Dram, Smem };
inline constexpr int kTsvClasses = 4;
std::string to_string(TsvClass c);

struct TsvCompletion {
    std::uint64_t tag = 0;
    Cycle done = 0;  // core cycle at which the last bit has arrived
};

class TsvBus {
public:
    TsvBus(std::uint32_t bits_per_cycle, std::uint32_t ratio, std::array<std::uint32_t, kTsvClasses> weights);

    void enqueue(TsvClass c, std::uint64_t bits, std::uint64_t tag);

    /// Grants transfers for every TSV cycle of core cycle `now`.
    void tick(Cycle now, std::vector<TsvCompletion>& out);

    bool idle() const { return queued_ == 0; }
    std::uint64_t occupancy(std::uint64_t bits) const { return (bits + width_ - 1) / width_; }

    std::uint64_t bits(TsvClass c) const { return bits_[static_cast<int>(c)]; }
    std::uint64_t transfers(TsvClass c) const { return transfers_[static_cast<int>(c)]; }
    std::uint64_t total_bits() const;
    std::uint64_t busy_tsv_cycles() const { return busy_cycles_; }
    /// Classes in grant order, for arbitration tests.
    const std::vector<TsvClass>& grant_log() const { return grants_; }
    void keep_grant_log(bool on) { log_grants_ = on; }

private:
    struct Pending {
        std::uint64_t bits;
        std::uint64_t tag;
    };
    int pick();

    std::uint32_t width_, ratio_;
    std::array<std::uint32_t, kTsvClasses> weights_;
    std::array<std::deque<Pending>, kTsvClasses> queues_;
    std::size_t queued_ = 0;
    int rr_ = 0;
    std::uint32_t served_ = 0;
    std::uint64_t free_at_ = 0;  // TSV cycle
    std::array<std::uint64_t, kTsvClasses> bits_{}, transfers_{};
    std::uint64_t busy_cycles_ = 0;
    bool log_grants_ = false;
    std::vector<TsvClass> grants_;
};

struct NocStats {
    std::uint64_t packets = 0;
    std::uint64_t bits_injected = 0;
    std::uint64_t bits_delivered = 0;
    std::uint64_t bit_hops = 0;  // on-chip bits x links traversed
    std::uint64_t offchip_bits = 0;
    std::uint64_t flits = 0;
};

class MeshNoc {
public:
    explicit MeshNoc(const SimConfig& cfg);

    /// Delivery core cycle of a packet injected at core cycle `now` between
    /// two global core indices.
    Cycle send(std::uint32_t src, std::uint32_t dst, std::uint64_t bits, Cycle now);

    /// On-chip XY hops between two cores of one processor.
    std::uint32_t hops(std::uint32_t src_core, std::uint32_t dst_core) const;
    std::uint64_t flits(std::uint64_t bits) const { return (bits + flit_bits_ - 1) / flit_bits_; }
    const NocStats& stats() const { return stats_; }

private:
    std::uint64_t route_mesh(std::uint32_t proc, std::uint32_t from, std::uint32_t to, std::uint64_t flits,
                             std::uint64_t bits, std::uint64_t t);

    std::uint32_t cores_, mesh_x_, router_, link_, flit_bits_, offchip_bits_, offchip_latency_, ratio_;
    // key: (proc, from core, to core) for mesh links; (src proc, dst proc) for off-chip links
    std::map<std::uint64_t, std::uint64_t> link_free_;
    std::map<std::uint64_t, std::uint64_t> offchip_free_;
    NocStats stats_;
};

}  // namespace mpu

#endif  // MPU_INTERCONNECT_HPP
