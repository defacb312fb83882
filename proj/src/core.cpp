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

#include "mpu/core.hpp"

#include <algorithm>
#include <stdexcept>

namespace mpu::core {

using isa::Opcode;

bool in_far_set(const Instruction& i) {
    switch (i.op) {
    case Opcode::LdGlobal:
    case Opcode::StGlobal:
    case Opcode::Bra:
    case Opcode::Setp:
    case Opcode::BarSync:
    case Opcode::Exit: return true;
    default: return false;
    }
}

RegisterIndex::RegisterIndex(const isa::Kernel& k) : regs_(isa::collect_registers(k)) {
    for (std::size_t i = 0; i < regs_.size(); ++i) index_[regs_[i]] = static_cast<int>(i);
}

int RegisterIndex::of(const RegisterId& r) const {
    if (r.is_special()) return -1;
    auto it = index_.find(r);
    if (it == index_.end()) throw std::out_of_range("register " + isa::to_string(r) + " not in kernel");
    return it->second;
}

TrackEntry TrackTable::get(const RegisterId& r) const {
    const int i = idx_->of(r);
    return i < 0 ? TrackEntry{true, true} : at(i);
}

void TrackTable::on_write(const RegisterId& r, Location l) {
    const int i = idx_->of(r);
    if (i < 0) throw SimulationFault("write to read-only special register " + isa::to_string(r));
    at(i) = TrackEntry{l == Location::F, l == Location::N};
}

void TrackTable::on_move(const RegisterId& r) {
    const int i = idx_->of(r);
    if (i >= 0) at(i) = TrackEntry{true, true};
}

Location decide_instruction_location(const Instruction& i, const TrackTable& tt, OffloadPolicy policy, bool ponb) {
    if (ponb || in_far_set(i)) return Location::F;
    // Shared-memory traffic is served by the LSU-Extension next to the banks.
    if (isa::is_shared_mem(i.op)) return Location::N;
    switch (policy) {
    case OffloadPolicy::AllFar: return Location::F;
    case OffloadPolicy::AllNear: return Location::N;
    case OffloadPolicy::Annotated:
        if (i.hint == isa::LocHint::Near) return Location::N;
        if (i.hint == isa::LocHint::Far) return Location::F;
        break;
    case OffloadPolicy::HwDefault: break;
    }
    // Offload only when some register operand already lives near the banks.
    bool any = false;
    for (const auto& r : isa::source_registers(i)) {
        if (r.is_special()) continue;
        if (!tt.get(r).nb) return Location::F;
        any = true;
    }
    return any ? Location::N : Location::F;
}

std::vector<OperandLocation> decide_register_locations(const Instruction& i, Location instr_loc, bool ponb) {
    std::vector<OperandLocation> out;
    auto add = [&](const RegisterId& r, Location l, bool dest) {
        if (!r.is_special()) out.push_back(OperandLocation{r, l, dest});
    };
    if (i.guard) add(i.guard->reg, Location::F, false);
    const Location data = ponb ? Location::F : Location::N;
    if (isa::is_global_mem(i.op)) {
        if (auto a = isa::address_register(i)) add(*a, Location::F, false);
        if (auto d = isa::data_register(i)) add(*d, data, i.op == Opcode::LdGlobal);
        return out;
    }
    if (isa::is_shared_mem(i.op)) {
        if (auto a = isa::address_register(i)) add(*a, data, false);
        if (auto d = isa::data_register(i)) add(*d, data, i.op == Opcode::LdShared);
        return out;
    }
    for (const auto& r : isa::source_registers(i)) add(r, instr_loc, false);
    if (i.dst) add(*i.dst, instr_loc, true);
    return out;
}

std::vector<MoveRequest> plan_register_moves(const std::vector<OperandLocation>& req, const TrackTable& tt,
                                             bool partial_write) {
    std::vector<MoveRequest> moves;
    auto plan = [&](const RegisterId& r, Location to, bool source) {
        const TrackEntry e = tt.get(r);
        if (e.valid_at(to)) return;
        const Location other = to == Location::F ? Location::N : Location::F;
        if (!e.valid_at(other)) {
            if (source) throw SimulationFault("read of uninitialized register " + isa::to_string(r));
            return;
        }
        MoveRequest m{r, other, to};
        if (std::find(moves.begin(), moves.end(), m) == moves.end()) moves.push_back(m);
    };
    for (const auto& o : req)
        if (!o.dest) plan(o.reg, o.loc, true);
    if (partial_write)
        for (const auto& o : req)
            if (o.dest) plan(o.reg, o.loc, false);
    return moves;
}

SimtStack::SimtStack(LaneMask initial) {
    if (initial) s_.push_back(SimtEntry{0, initial, kNoReconvergence});
}

void SimtStack::reconverge() {
    while (!s_.empty() && (s_.back().mask == 0 || s_.back().pc == s_.back().rpc)) s_.pop_back();
}

void SimtStack::advance() {
    ++s_.back().pc;
    reconverge();
}

void SimtStack::branch(std::uint32_t target, LaneMask taken, std::uint32_t reconvergence) {
    SimtEntry& t = s_.back();
    taken &= t.mask;
    if (taken == t.mask) {
        t.pc = target;
    } else if (taken == 0) {
        ++t.pc;
    } else {
        const SimtEntry not_taken{t.pc + 1, t.mask & ~taken, reconvergence};
        t.pc = reconvergence;
        s_.push_back(not_taken);
        s_.push_back(SimtEntry{target, taken, reconvergence});
    }
    reconverge();
}

void SimtStack::exit(LaneMask lanes) {
    for (auto& e : s_) e.mask &= ~lanes;
    if (!s_.empty() && s_.back().mask) ++s_.back().pc;
    reconverge();
}

std::optional<std::uint32_t> WarpScheduler::schedule_warp(const std::vector<std::uint32_t>& ready) {
    if (ready.empty()) return std::nullopt;
    std::uint32_t pick = ready.front();
    if (policy_ == SchedulerPolicy::GreedyThenOldest) {
        if (last_ && std::binary_search(ready.begin(), ready.end(), *last_)) pick = *last_;
    } else if (last_) {
        auto it = std::upper_bound(ready.begin(), ready.end(), *last_);
        if (it != ready.end()) pick = *it;
    }
    last_ = pick;
    return pick;
}

}  // namespace mpu::core
