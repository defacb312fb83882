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
 * @file memory.hpp
 * @brief DRAM address mapping, per-bank FR-FCFS open-page controller with
 *        multiple activatable subarrays, command traces and their offline
 *        legality checker, and shared-memory bank conflicts.
 *
 * Address bits, low to high:
 *
 *     | col (log2 row_bytes) | nbu | bank | core | row_logical | proc |
 *
 * subarray = row_logical % S, physical_row = row_logical / S.
 */

#ifndef MPU_MEMORY_HPP
#define MPU_MEMORY_HPP

#include "mpu/common.hpp"
#include "mpu/config.hpp"

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

namespace mpu {

struct DramLocation {
    std::uint32_t proc = 0;
    std::uint32_t core = 0;  // within the processor
    std::uint32_t nbu = 0;
    std::uint32_t bank = 0;  // within the NBU
    std::uint32_t row_logical = 0;
    std::uint32_t subarray = 0;
    std::uint32_t physical_row = 0;
    std::uint32_t col = 0;  // byte offset within the row

    friend bool operator==(const DramLocation&, const DramLocation&) = default;
};

class AddressMapping {
public:
    explicit AddressMapping(const SimConfig& cfg);

    /// Throws SimulationFault for addresses at or beyond capacity.
    DramLocation decode(Addr a) const;
    Addr encode(const DramLocation& l) const;

    Addr capacity() const { return capacity_; }
    std::uint32_t subarrays() const { return subarrays_; }
    std::uint32_t global_core(const DramLocation& l) const { return l.proc * cores_ + l.core; }
    std::uint32_t global_core(Addr a) const { return global_core(decode(a)); }
    /// Dense index over every bank in the system.
    std::uint32_t global_bank(const DramLocation& l) const;

    unsigned col_bits() const { return col_bits_; }
    unsigned nbu_shift() const { return col_bits_; }
    unsigned bank_shift() const { return col_bits_ + nbu_bits_; }
    unsigned core_shift() const { return col_bits_ + nbu_bits_ + bank_bits_; }
    unsigned row_shift() const { return core_shift() + core_bits_; }
    unsigned proc_shift() const { return row_shift() + row_bits_; }

private:
    unsigned col_bits_, nbu_bits_, bank_bits_, core_bits_, row_bits_, proc_bits_;
    std::uint32_t cores_, nbus_, banks_, subarrays_;
    Addr capacity_;
};

enum class DramCmd : std::uint8_t { ACT, PRE, RD, WR, REF };
std::string to_string(DramCmd c);

struct CommandRecord {
    Cycle cycle = 0;
    std::uint32_t bank = 0;  // global bank index
    DramCmd cmd = DramCmd::ACT;
    std::uint32_t subarray = 0;
    std::uint32_t row = 0;  // physical row
    std::uint32_t col = 0;
};

struct DramTiming {
    std::uint32_t tRCD = 14, tCCD = 2, tRTP = 4, tRP = 14, tRAS = 33, tRFC = 350, tREFI = 3900;
    std::uint32_t burst = 2;
    static DramTiming from(const SimConfig& c);
};

struct DramRequest {
    std::uint64_t id = 0;
    bool write = false;
    std::uint32_t subarray = 0;
    std::uint32_t row = 0;
    std::uint32_t col = 0;
    Cycle arrival = 0;
    bool caused_act = false;
};

struct BankStats {
    std::uint64_t reads = 0, writes = 0, acts = 0, pres = 0, refs = 0;
    std::uint64_t hits = 0, misses = 0;
};

/// One DRAM bank with S independently activatable subarrays.
class BankController {
public:
    BankController(const DramTiming& t, std::uint32_t subarrays, std::uint32_t global_id, Cycle first_refresh);

    void enqueue(DramRequest r);

    struct Issued {
        DramCmd cmd;
        std::optional<std::uint64_t> completed;  // request id served by RD/WR
        Cycle data_ready = 0;
        bool miss = false;
    };

    /// Issues at most one command this cycle.
    std::optional<Issued> tick(Cycle now);

    bool has_work(Cycle now) const { return !queue_.empty() || now >= next_refresh_; }
    bool queue_empty() const { return queue_.empty(); }
    std::size_t queue_size() const { return queue_.size(); }
    Cycle next_refresh() const { return next_refresh_; }
    std::optional<std::uint32_t> open_row(std::uint32_t subarray) const;
    const BankStats& stats() const { return stats_; }
    std::uint32_t id() const { return id_; }

    void set_trace(std::vector<CommandRecord>* sink) { trace_ = sink; }

private:
    static constexpr Cycle kNever = ~Cycle{0} >> 2;

    bool can_rdwr(std::uint32_t s, Cycle now) const;
    bool can_pre(std::uint32_t s, Cycle now) const;
    bool can_act(std::uint32_t s, Cycle now) const;
    bool has_hit_for(std::uint32_t s, std::uint32_t row) const;
    void record(Cycle now, DramCmd c, std::uint32_t s, std::uint32_t row, std::uint32_t col);
    static bool after(Cycle last, std::uint32_t gap, Cycle now) { return last == kNever || now >= last + gap; }

    DramTiming t_;
    std::uint32_t id_;
    std::vector<std::optional<std::uint32_t>> open_;
    std::vector<Cycle> act_at_, pre_at_, rdwr_at_;
    Cycle bank_rdwr_at_ = kNever;
    Cycle busy_until_ = 0;
    Cycle next_refresh_;
    std::deque<DramRequest> queue_;
    BankStats stats_;
    std::vector<CommandRecord>* trace_ = nullptr;
};

struct LegalityReport {
    std::uint64_t commands = 0;
    std::uint64_t refreshes = 0;
    std::vector<std::string> violations;  // capped at 100 messages
    std::uint64_t violation_count = 0;
    bool ok() const { return violation_count == 0; }
};

/// Replays a command stream and checks every DRAM timing and state rule.
LegalityReport check_command_trace(const std::vector<CommandRecord>& trace, const DramTiming& t, std::uint32_t subarrays);

std::string command_trace_csv(const std::vector<CommandRecord>& trace);
std::vector<CommandRecord> parse_command_trace_csv(const std::string& text);

/// Serialization degree of a warp shared-memory access: the largest number of
/// distinct 4-byte words that fall into one bank. Lanes reading the same word
/// are served together.
unsigned smem_conflict_degree(const std::array<std::uint64_t, kWarpSize>& addrs, LaneMask mask, unsigned width_bytes,
                              unsigned banks);

}  // namespace mpu

#endif  // MPU_MEMORY_HPP
