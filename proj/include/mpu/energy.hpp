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
 * @file energy.hpp
 * @brief Event energy accounting and the per-run report.
 *
 * Energies are integer femtojoules so category sums are exact.
 */

#ifndef MPU_ENERGY_HPP
#define MPU_ENERGY_HPP

#include "mpu/config.hpp"
#include "mpu/isa.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace mpu {

enum class EnergyEvent : std::uint8_t {
    DramRdWr,
    DramActPre,
    DramRef,
    RfAccess,
    OperandCollector,
    SmemAccess,
    LsuExtension,
    TsvBit,
    OnChipBitHop,
    OffChipBit,
    ICacheFetch,
    SchedulerIssue,
    Alu,  // cost depends on the opcode
};
inline constexpr int kEnergyEvents = 13;

enum class EnergyCategory : std::uint8_t { Alu, RfOpc, Dram, Tsv, Network, Other };
inline constexpr int kEnergyCategories = 6;

std::string to_string(EnergyEvent e);
std::string to_string(EnergyCategory c);
EnergyCategory category_of(EnergyEvent e);

class EnergyModel {
public:
    /// Keys: event names (see to_string(EnergyEvent)) and "alu.<opcode>".
    /// Every event other than Alu must be present; so must every ALU opcode.
    static EnergyModel from_table(const std::map<std::string, std::uint64_t>& fj);
    static EnergyModel from_config(const SimConfig& cfg);

    std::uint64_t cost(EnergyEvent e) const;
    /// Throws ConfigError for opcodes without an ALU energy.
    std::uint64_t alu_cost(isa::Opcode op) const;

private:
    std::array<std::uint64_t, kEnergyEvents> cost_{};
    std::array<std::optional<std::uint64_t>, isa::kOpcodeCount> alu_{};
};

class EnergyAccount {
public:
    explicit EnergyAccount(EnergyModel m) : model_(std::move(m)) {}

    /// `amount` is an access count, or a bit count for per-bit events.
    void record(EnergyEvent e, std::uint64_t amount = 1);
    void record_alu(isa::Opcode op, std::uint64_t count = 1);

    std::uint64_t category_fj(EnergyCategory c) const { return category_[static_cast<int>(c)]; }
    std::uint64_t total_fj() const;
    std::uint64_t events(EnergyEvent e) const { return counts_[static_cast<int>(e)]; }
    const EnergyModel& model() const { return model_; }

private:
    EnergyModel model_;
    std::array<std::uint64_t, kEnergyEvents> counts_{};
    std::array<std::uint64_t, kEnergyCategories> category_{};
};

inline constexpr int kReportSchemaVersion = 1;

struct RunReport {
    std::string kernel;
    std::string config_hash;
    std::string policy;
    std::string smem;
    std::uint32_t rowbufs = 0;
    bool ponb = false;

    std::uint64_t cycles = 0;
    std::array<std::uint64_t, 4> tsv_bits{};  // by TsvClass
    std::uint64_t tsv_bits_total = 0;

    std::uint64_t row_hits = 0, row_misses = 0;
    std::uint64_t dram_reads = 0, dram_writes = 0, dram_acts = 0, dram_pres = 0, dram_refs = 0;

    std::array<std::uint64_t, kEnergyCategories> energy_fj{};
    std::uint64_t energy_total_fj = 0;

    std::uint64_t warp_instructions = 0, instr_near = 0, instr_far = 0;
    std::uint64_t register_moves = 0;
    std::uint64_t offloaded_ldst = 0;

    std::uint64_t lanes_requested = 0, lanes_fastpath = 0, lanes_local = 0, lanes_remote = 0;
    std::uint64_t noc_packets = 0, noc_bits = 0, noc_bit_hops = 0;
    std::uint64_t smem_accesses = 0, smem_cycles = 0;

    double miss_rate() const {
        const auto n = row_hits + row_misses;
        return n ? static_cast<double>(row_misses) / static_cast<double>(n) : 0.0;
    }
    std::uint64_t tsv_bytes_total() const { return tsv_bits_total / 8; }

    static std::string csv_header();
    std::string csv_row() const;
    std::string to_json() const;

    friend bool operator==(const RunReport&, const RunReport&) = default;
};

}  // namespace mpu

#endif  // MPU_ENERGY_HPP
