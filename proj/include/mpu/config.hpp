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
 * @file config.hpp
 * @brief Simulator configuration. Text form is one `dotted.key = value` per
 *        line with `#` comments; docs/config.md lists every key.
 */

#ifndef MPU_CONFIG_HPP
#define MPU_CONFIG_HPP

#include "mpu/common.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace mpu {

enum class OffloadPolicy : std::uint8_t { Annotated, HwDefault, AllNear, AllFar };
enum class SmemLocation : std::uint8_t { Near, Far };
enum class SchedulerPolicy : std::uint8_t { LooseRoundRobin, GreedyThenOldest };

std::string to_string(OffloadPolicy p);
std::string to_string(SmemLocation s);
std::string to_string(SchedulerPolicy s);

struct SimConfig {
    // topology
    std::uint32_t procs = 8;
    std::uint32_t dies = 4;
    std::uint32_t cores_per_proc = 16;
    std::uint32_t subcores = 4;
    std::uint32_t nbus = 4;
    std::uint32_t banks_per_nbu = 4;
    std::uint32_t rowbufs = 4;

    // sizes (bytes)
    std::uint64_t bank_bytes = 16ull << 20;
    std::uint32_t row_bytes = 2048;
    std::uint32_t icache_bytes = 128 << 10;
    std::uint32_t far_rf_bytes = 32 << 10;
    std::uint32_t near_rf_bytes = 16 << 10;
    std::uint32_t smem_bytes = 64 << 10;
    std::uint32_t smem_banks = 32;
    std::uint32_t bank_io_bits = 256;

    // DRAM timing, core cycles
    std::uint32_t tRCD = 14, tCCD = 2, tRTP = 4, tRP = 14, tRAS = 33, tRFC = 350, tREFI = 3900;
    std::uint32_t burst_cycles = 2;
    std::uint32_t refresh_stagger = 16;

    // clocks, GHz
    std::uint32_t f_core = 1, f_tsv = 2, f_router = 2, f_onchip = 2, f_offchip = 2;

    // TSV
    std::uint32_t tsv_bits_per_core = 64;
    std::uint32_t tsv_weight_offload = 1, tsv_weight_move = 1, tsv_weight_dram = 1, tsv_weight_smem = 1;

    // NoC
    std::uint32_t mesh_x = 4, mesh_y = 4;
    std::uint32_t router_cycles = 2, link_cycles = 1;
    std::uint32_t flit_bits = 256;
    std::uint32_t offchip_bits = 128;
    std::uint32_t offchip_latency = 32;

    // pipeline
    std::uint32_t max_warps_per_subcore = 16;
    std::uint32_t max_blocks_per_core = 16;
    std::uint32_t alu_latency = 4;
    std::uint32_t div_latency = 16;
    std::uint32_t smem_latency = 2;
    std::uint32_t lsu_ext_latency = 1;
    std::uint32_t offload_packet_bits = 128;
    std::uint32_t ack_bits = 32;
    std::uint32_t dram_header_bits = 64;
    std::uint32_t fastpath_header_bits = 128;
    std::uint32_t remote_header_bits = 128;
    bool lsu_fastpath = true;

    // policies
    OffloadPolicy offload = OffloadPolicy::Annotated;
    SmemLocation smem = SmemLocation::Near;
    SchedulerPolicy scheduler = SchedulerPolicy::LooseRoundRobin;
    bool ponb = false;

    // energy, femtojoules per event (per bit where noted)
    std::uint64_t e_rd_wr = 150000, e_act_pre = 270000, e_ref = 1130000;
    std::uint64_t e_rf = 40000, e_smem = 22200, e_opc = 41490, e_lsu_ext = 39670;
    std::uint64_t e_tsv_bit = 4530, e_onchip_bit = 720, e_offchip_bit = 4500;
    std::uint64_t e_icache = 8000, e_scheduler = 1500;
    std::map<std::string, std::uint64_t> e_alu;  // opcode mnemonic -> fJ per warp instruction

    // simulation control
    std::uint64_t max_cycles = 200'000'000;
    bool check_shadow = false;
    bool record_commands = false;

    SimConfig();

    /// Default topology cut down to a single processor; what the bundled experiments use.
    static SimConfig desk();

    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;
    static std::vector<std::string> keys();

    /// Parses `key = value` lines on top of `base`.
    static SimConfig parse(const std::string& text, SimConfig base = SimConfig());
    static SimConfig load(const std::string& path, SimConfig base = SimConfig());

    /// Canonical sorted `key=value` dump of every key.
    std::string dump() const;
    /// FNV-1a 64 of dump().
    std::uint64_t hash() const;
    std::string hash_hex() const;

    /// Throws ConfigError on inconsistent values.
    void validate() const;

    // Derived quantities.
    std::uint32_t cores_total() const { return procs * cores_per_proc; }
    std::uint32_t banks_per_core() const { return nbus * banks_per_nbu; }
    std::uint64_t capacity_bytes() const;
    std::uint32_t tsv_ratio() const { return f_tsv / f_core; }
    std::uint32_t noc_ratio() const { return f_router / f_core; }
    std::uint32_t far_rf_units() const { return far_rf_bytes / 128; }
    std::uint32_t near_rf_units() const { return near_rf_bytes / 128; }
};

}  // namespace mpu

#endif  // MPU_CONFIG_HPP
