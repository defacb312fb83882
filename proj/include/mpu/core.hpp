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
 * @file core.hpp
 * @brief Subcore front-end pieces: the offload decision, per-operand location
 *        requirements, register move planning over the track table, the SIMT
 *        stack and the warp scheduler.
 */

#ifndef MPU_CORE_HPP
#define MPU_CORE_HPP

#include "mpu/common.hpp"
#include "mpu/config.hpp"
#include "mpu/isa.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace mpu::core {

using isa::Instruction;
using isa::Location;
using isa::RegisterId;

/// ld/st.global, bra, setp, bar.sync, exit: always executed by the subcore.
bool in_far_set(const Instruction& i);

/// Dense numbering of a kernel's non-special registers.
class RegisterIndex {
public:
    explicit RegisterIndex(const isa::Kernel& k);
    /// -1 for special registers; throws std::out_of_range for unknown ones.
    int of(const RegisterId& r) const;
    std::size_t size() const { return regs_.size(); }
    const RegisterId& reg(std::size_t i) const { return regs_[i]; }

private:
    std::vector<RegisterId> regs_;
    std::map<RegisterId, int> index_;
};

struct TrackEntry {
    bool fb = false;
    bool nb = false;
    bool valid_at(Location l) const { return l == Location::F ? fb : nb; }
    friend bool operator==(const TrackEntry&, const TrackEntry&) = default;
};

/// Per-warp record of which register file holds the latest copy.
class TrackTable {
public:
    explicit TrackTable(const RegisterIndex& idx) : idx_(&idx), e_(idx.size()) {}

    /// Special registers read as valid everywhere.
    TrackEntry get(const RegisterId& r) const;
    TrackEntry& at(int i) { return e_[static_cast<std::size_t>(i)]; }
    const TrackEntry& at(int i) const { return e_[static_cast<std::size_t>(i)]; }
    int index_of(const RegisterId& r) const { return idx_->of(r); }

    /// Completed write at `l`: only that copy stays valid.
    void on_write(const RegisterId& r, Location l);
    /// Completed move: both copies valid.
    void on_move(const RegisterId& r);

private:
    const RegisterIndex* idx_;
    std::vector<TrackEntry> e_;
};

/// Hardware far set, then compiler hint (annotated policy only), then N iff
/// the instruction reads at least one register and every register it reads
/// has a valid near-bank copy. Base-die mode runs everything at F.
Location decide_instruction_location(const Instruction& i, const TrackTable& tt, OffloadPolicy policy,
                                     bool ponb = false);

struct OperandLocation {
    RegisterId reg;
    Location loc = Location::F;
    bool dest = false;
    friend bool operator==(const OperandLocation&, const OperandLocation&) = default;
};

/// Where every register operand must live for `i` executing at `instr_loc`.
/// Global ld/st: address F, data N (F on the base die). Shared ld/st: all N
/// (all F on the base die). Guards are evaluated by the subcore and need F.
/// Special registers are omitted.
std::vector<OperandLocation> decide_register_locations(const Instruction& i, Location instr_loc, bool ponb = false);

struct MoveRequest {
    RegisterId reg;
    Location from = Location::F;
    Location to = Location::N;
    friend bool operator==(const MoveRequest&, const MoveRequest&) = default;
};

/// One move per source register lacking a valid copy at its required
/// location. With `partial_write`, a destination valid only at the other
/// location is moved too so that inactive lanes survive the write. Throws
/// SimulationFault "read of uninitialized register" for a source with no
/// valid copy.
std::vector<MoveRequest> plan_register_moves(const std::vector<OperandLocation>& req, const TrackTable& tt,
                                             bool partial_write = false);

inline constexpr std::uint32_t kNoReconvergence = 0xFFFFFFFFu;

struct SimtEntry {
    std::uint32_t pc = 0;
    LaneMask mask = 0;
    std::uint32_t rpc = kNoReconvergence;
    friend bool operator==(const SimtEntry&, const SimtEntry&) = default;
};

class SimtStack {
public:
    explicit SimtStack(LaneMask initial = kFullMask);

    bool done() const { return s_.empty(); }
    const SimtEntry& top() const { return s_.back(); }
    std::uint32_t pc() const { return s_.back().pc; }
    LaneMask mask() const { return s_.back().mask; }
    const std::vector<SimtEntry>& entries() const { return s_; }

    /// Falls through to pc+1.
    void advance();
    /// Branch at the current pc. `taken` must be a subset of the top mask.
    void branch(std::uint32_t target, LaneMask taken, std::uint32_t reconvergence);
    /// `lanes` finish; remaining lanes of the top entry fall through.
    void exit(LaneMask lanes);

private:
    void reconverge();
    std::vector<SimtEntry> s_;
};

/// Picks one warp id among the ready ones. Loose round-robin starts after the
/// last pick; greedy-then-oldest keeps the last pick while it stays ready and
/// otherwise takes the smallest (oldest) id.
class WarpScheduler {
public:
    explicit WarpScheduler(SchedulerPolicy p = SchedulerPolicy::LooseRoundRobin) : policy_(p) {}
    std::optional<std::uint32_t> schedule_warp(const std::vector<std::uint32_t>& ready_sorted);

private:
    SchedulerPolicy policy_;
    std::optional<std::uint32_t> last_;
};

}  // namespace mpu::core

#endif  // MPU_CORE_HPP
