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

#include "mpu/memory.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <map>
#include <sstream>

namespace mpu {

namespace {

unsigned log2u(std::uint64_t x) { return static_cast<unsigned>(std::countr_zero(x)); }

}  // namespace

AddressMapping::AddressMapping(const SimConfig& cfg)
    : col_bits_(log2u(cfg.row_bytes)),
      nbu_bits_(log2u(cfg.nbus)),
      bank_bits_(log2u(cfg.banks_per_nbu)),
      core_bits_(log2u(cfg.cores_per_proc)),
      row_bits_(log2u(cfg.bank_bytes / cfg.row_bytes)),
      proc_bits_(log2u(cfg.procs)),
      cores_(cfg.cores_per_proc),
      nbus_(cfg.nbus),
      banks_(cfg.banks_per_nbu),
      subarrays_(cfg.rowbufs),
      capacity_(cfg.capacity_bytes()) {}

DramLocation AddressMapping::decode(Addr a) const {
    if (a >= capacity_) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "address 0x%llx beyond DRAM capacity 0x%llx", static_cast<unsigned long long>(a),
                      static_cast<unsigned long long>(capacity_));
        throw SimulationFault(buf);
    }
    auto field = [a](unsigned shift, unsigned bits) {
        return static_cast<std::uint32_t>((a >> shift) & ((Addr{1} << bits) - 1));
    };
    DramLocation l;
    l.col = field(0, col_bits_);
    l.nbu = field(nbu_shift(), nbu_bits_);
    l.bank = field(bank_shift(), bank_bits_);
    l.core = field(core_shift(), core_bits_);
    l.row_logical = field(row_shift(), row_bits_);
    l.proc = field(proc_shift(), proc_bits_);
    l.subarray = l.row_logical % subarrays_;
    l.physical_row = l.row_logical / subarrays_;
    return l;
}

Addr AddressMapping::encode(const DramLocation& l) const {
    return Addr{l.col} | (Addr{l.nbu} << nbu_shift()) | (Addr{l.bank} << bank_shift()) |
           (Addr{l.core} << core_shift()) | (Addr{l.row_logical} << row_shift()) | (Addr{l.proc} << proc_shift());
}

std::uint32_t AddressMapping::global_bank(const DramLocation& l) const {
    return ((l.proc * cores_ + l.core) * nbus_ + l.nbu) * banks_ + l.bank;
}

std::string to_string(DramCmd c) {
    switch (c) {
    case DramCmd::ACT: return "ACT";
    case DramCmd::PRE: return "PRE";
    case DramCmd::RD: return "RD";
    case DramCmd::WR: return "WR";
    case DramCmd::REF: return "REF";
    }
    return "?";
}

DramTiming DramTiming::from(const SimConfig& c) {
    return DramTiming{c.tRCD, c.tCCD, c.tRTP, c.tRP, c.tRAS, c.tRFC, c.tREFI, c.burst_cycles};
}

BankController::BankController(const DramTiming& t, std::uint32_t subarrays, std::uint32_t global_id,
                               Cycle first_refresh)
    : t_(t),
      id_(global_id),
      open_(subarrays),
      act_at_(subarrays, kNever),
      pre_at_(subarrays, kNever),
      rdwr_at_(subarrays, kNever),
      next_refresh_(first_refresh) {}

void BankController::enqueue(DramRequest r) { queue_.push_back(r); }

std::optional<std::uint32_t> BankController::open_row(std::uint32_t s) const { return open_.at(s); }

bool BankController::can_rdwr(std::uint32_t s, Cycle now) const {
    return after(act_at_[s], t_.tRCD, now) && after(bank_rdwr_at_, t_.tCCD, now);
}

bool BankController::can_pre(std::uint32_t s, Cycle now) const {
    return after(act_at_[s], t_.tRAS, now) && after(rdwr_at_[s], t_.tRTP, now);
}

bool BankController::can_act(std::uint32_t s, Cycle now) const { return after(pre_at_[s], t_.tRP, now); }

bool BankController::has_hit_for(std::uint32_t s, std::uint32_t row) const {
    for (const auto& r : queue_)
        if (r.subarray == s && r.row == row) return true;
    return false;
}

void BankController::record(Cycle now, DramCmd c, std::uint32_t s, std::uint32_t row, std::uint32_t col) {
    if (trace_) trace_->push_back(CommandRecord{now, id_, c, s, row, col});
}

std::optional<BankController::Issued> BankController::tick(Cycle now) {
    if (now < busy_until_) return std::nullopt;

    if (now >= next_refresh_) {
        // Close every open subarray, then refresh once tRP has elapsed.
        bool any_open = false;
        for (std::uint32_t s = 0; s < open_.size(); ++s) {
            if (!open_[s]) continue;
            any_open = true;
            if (can_pre(s, now)) {
                record(now, DramCmd::PRE, s, *open_[s], 0);
                open_[s].reset();
                pre_at_[s] = now;
                ++stats_.pres;
                return Issued{DramCmd::PRE, std::nullopt, 0, false};
            }
        }
        if (any_open) return std::nullopt;
        for (std::uint32_t s = 0; s < open_.size(); ++s)
            if (!can_act(s, now)) return std::nullopt;
        record(now, DramCmd::REF, 0, 0, 0);
        busy_until_ = now + t_.tRFC;
        next_refresh_ += t_.tREFI;
        ++stats_.refs;
        return Issued{DramCmd::REF, std::nullopt, 0, false};
    }

    if (queue_.empty()) return std::nullopt;

    // First ready: the oldest request hitting an open row whose column command can go now.
    for (auto it = queue_.begin(); it != queue_.end(); ++it) {
        if (open_[it->subarray] != it->row || !can_rdwr(it->subarray, now)) continue;
        const DramRequest r = *it;
        queue_.erase(it);
        const DramCmd c = r.write ? DramCmd::WR : DramCmd::RD;
        record(now, c, r.subarray, r.row, r.col);
        rdwr_at_[r.subarray] = now;
        bank_rdwr_at_ = now;
        (r.write ? stats_.writes : stats_.reads)++;
        (r.caused_act ? stats_.misses : stats_.hits)++;
        return Issued{c, r.id, now + t_.burst, r.caused_act};
    }

    // Otherwise open the row of the oldest request that can make progress.
    for (auto& r : queue_) {
        const std::uint32_t s = r.subarray;
        if (open_[s] == r.row) continue;
        if (open_[s]) {
            if (has_hit_for(s, *open_[s]) || !can_pre(s, now)) continue;
            record(now, DramCmd::PRE, s, *open_[s], 0);
            open_[s].reset();
            pre_at_[s] = now;
            ++stats_.pres;
            return Issued{DramCmd::PRE, std::nullopt, 0, false};
        }
        if (!can_act(s, now)) continue;
        record(now, DramCmd::ACT, s, r.row, 0);
        open_[s] = r.row;
        act_at_[s] = now;
        r.caused_act = true;
        ++stats_.acts;
        return Issued{DramCmd::ACT, std::nullopt, 0, false};
    }
    return std::nullopt;
}

LegalityReport check_command_trace(const std::vector<CommandRecord>& trace, const DramTiming& t,
                                   std::uint32_t subarrays) {
    struct State {
        std::vector<std::optional<std::uint32_t>> open;
        std::vector<std::optional<Cycle>> act, pre, col;
        std::optional<Cycle> last_col, last_ref, last_cmd;
    };
    LegalityReport rep;
    std::map<std::uint32_t, State> banks;
    auto fail = [&](const CommandRecord& c, const std::string& what) {
        ++rep.violation_count;
        if (rep.violations.size() < 100)
            rep.violations.push_back("cycle " + std::to_string(c.cycle) + " bank " + std::to_string(c.bank) + " " +
                                     to_string(c.cmd) + ": " + what);
    };
    auto gap_ok = [](const std::optional<Cycle>& from, Cycle now, std::uint32_t gap) {
        return !from || now >= *from + gap;
    };
    const Cycle slack = t.tRAS + t.tRP + subarrays;

    std::vector<CommandRecord> sorted = trace;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const CommandRecord& a, const CommandRecord& b) { return a.cycle < b.cycle; });
    for (const auto& c : sorted) {
        ++rep.commands;
        State& b = banks[c.bank];
        if (b.open.empty()) {
            b.open.resize(subarrays);
            b.act.resize(subarrays);
            b.pre.resize(subarrays);
            b.col.resize(subarrays);
        }
        if (c.cmd != DramCmd::REF && c.subarray >= subarrays) {
            fail(c, "subarray out of range");
            continue;
        }
        if (b.last_cmd && *b.last_cmd == c.cycle) fail(c, "two commands in one cycle");
        if (b.last_ref && c.cycle < *b.last_ref + t.tRFC) fail(c, "issued within tRFC of REF");
        b.last_cmd = c.cycle;
        const auto s = c.subarray;
        switch (c.cmd) {
        case DramCmd::ACT:
            if (b.open[s]) fail(c, "ACT to a subarray with an open row");
            if (!gap_ok(b.pre[s], c.cycle, t.tRP)) fail(c, "PRE->ACT < tRP");
            b.open[s] = c.row;
            b.act[s] = c.cycle;
            break;
        case DramCmd::PRE:
            if (!b.open[s]) fail(c, "PRE to a closed subarray");
            if (!gap_ok(b.act[s], c.cycle, t.tRAS)) fail(c, "ACT->PRE < tRAS");
            if (!gap_ok(b.col[s], c.cycle, t.tRTP)) fail(c, "RD/WR->PRE < tRTP");
            b.open[s].reset();
            b.pre[s] = c.cycle;
            break;
        case DramCmd::RD:
        case DramCmd::WR:
            if (b.open[s] != c.row) fail(c, "column command to a row that is not open");
            if (!gap_ok(b.act[s], c.cycle, t.tRCD)) fail(c, "ACT->RD/WR < tRCD");
            if (!gap_ok(b.last_col, c.cycle, t.tCCD)) fail(c, "RD/WR->RD/WR < tCCD");
            b.col[s] = c.cycle;
            b.last_col = c.cycle;
            break;
        case DramCmd::REF:
            ++rep.refreshes;
            for (std::uint32_t k = 0; k < subarrays; ++k) {
                if (b.open[k]) fail(c, "REF with an open row");
                if (!gap_ok(b.pre[k], c.cycle, t.tRP)) fail(c, "PRE->REF < tRP");
            }
            if (b.last_ref) {
                const Cycle gap = c.cycle - *b.last_ref;
                if (gap + slack < t.tREFI || gap > t.tREFI + slack)
                    fail(c, "refresh interval " + std::to_string(gap) + " outside tREFI +/- " + std::to_string(slack));
            }
            b.last_ref = c.cycle;
            break;
        }
    }
    return rep;
}

std::string command_trace_csv(const std::vector<CommandRecord>& trace) {
    std::string out = "cycle,bank,cmd,subarray,row,col\n";
    char buf[96];
    for (const auto& c : trace) {
        std::snprintf(buf, sizeof buf, "%llu,%u,%s,%u,%u,%u\n", static_cast<unsigned long long>(c.cycle), c.bank,
                      to_string(c.cmd).c_str(), c.subarray, c.row, c.col);
        out += buf;
    }
    return out;
}

std::vector<CommandRecord> parse_command_trace_csv(const std::string& text) {
    std::vector<CommandRecord> out;
    std::istringstream is(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(is, line)) {
        ++n;
        if (line.empty() || line.rfind("cycle", 0) == 0) continue;
        unsigned long long cycle = 0;
        unsigned bank = 0, s = 0, row = 0, col = 0;
        char cmd[8] = {};
        if (std::sscanf(line.c_str(), "%llu,%u,%7[A-Z],%u,%u,%u", &cycle, &bank, cmd, &s, &row, &col) != 6)
            throw std::invalid_argument("command trace line " + std::to_string(n) + ": malformed");
        CommandRecord r{cycle, bank, DramCmd::ACT, s, row, col};
        const std::string c = cmd;
        if (c == "ACT") r.cmd = DramCmd::ACT;
        else if (c == "PRE") r.cmd = DramCmd::PRE;
        else if (c == "RD") r.cmd = DramCmd::RD;
        else if (c == "WR") r.cmd = DramCmd::WR;
        else if (c == "REF") r.cmd = DramCmd::REF;
        else throw std::invalid_argument("command trace line " + std::to_string(n) + ": unknown command " + c);
        out.push_back(r);
    }
    return out;
}

unsigned smem_conflict_degree(const std::array<std::uint64_t, kWarpSize>& addrs, LaneMask mask, unsigned width_bytes,
                              unsigned banks) {
    std::vector<std::vector<std::uint64_t>> words(banks);
    for (int l = 0; l < kWarpSize; ++l) {
        if (!(mask >> l & 1u)) continue;
        for (unsigned w = 0; w < width_bytes; w += 4) {
            const std::uint64_t word = (addrs[l] + w) / 4;
            auto& v = words[word % banks];
            if (std::find(v.begin(), v.end(), word) == v.end()) v.push_back(word);
        }
    }
    unsigned degree = 0;
    for (const auto& v : words) degree = std::max(degree, static_cast<unsigned>(v.size()));
    return degree;
}

}  // namespace mpu
