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

#include "mpu/compiler.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

namespace mpu::compiler {

using isa::Instruction;
using isa::Opcode;

namespace {

// Dense bitset over a fixed universe; the kernels are small enough that the
// textbook O(n^2) dataflow formulations are fine.
class Bits {
public:
    explicit Bits(std::size_t n = 0, bool fill = false) : words_((n + 63) / 64, fill ? ~0ull : 0ull), n_(n) {
        trim();
    }
    void set(std::size_t i) { words_[i / 64] |= 1ull << (i % 64); }
    void reset(std::size_t i) { words_[i / 64] &= ~(1ull << (i % 64)); }
    bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1ull; }
    Bits& operator&=(const Bits& o) {
        for (std::size_t w = 0; w < words_.size(); ++w) words_[w] &= o.words_[w];
        return *this;
    }
    Bits& operator|=(const Bits& o) {
        for (std::size_t w = 0; w < words_.size(); ++w) words_[w] |= o.words_[w];
        return *this;
    }
    std::size_t count() const {
        std::size_t c = 0;
        for (auto w : words_) c += static_cast<std::size_t>(__builtin_popcountll(w));
        return c;
    }
    friend bool operator==(const Bits&, const Bits&) = default;

private:
    void trim() {
        if (n_ % 64 && !words_.empty()) words_.back() &= (1ull << (n_ % 64)) - 1;
    }
    std::vector<std::uint64_t> words_;
    std::size_t n_;
};

bool seeds_locations(Opcode op) {
    return isa::is_memory(op) || isa::is_control(op);
}

void widen(Location& slot, Location incoming) {
    if (incoming == Location::U) return;
    if (slot == Location::U) slot = incoming;
    else if (slot != incoming) slot = Location::B;
}

std::uint32_t last_exit_index(const Kernel& k) {
    for (std::size_t i = k.instructions.size(); i-- > 0;)
        if (k.instructions[i].op == Opcode::Exit && !k.instructions[i].guard) return static_cast<std::uint32_t>(i);
    return static_cast<std::uint32_t>(k.instructions.size() - 1);
}

}  // namespace

Location LocationTable::of(const RegisterId& r) const {
    auto it = reg_loc.find(r);
    return it == reg_loc.end() ? Location::U : it->second;
}

std::vector<std::vector<std::uint32_t>> successors(const Kernel& k) {
    const auto n = static_cast<std::uint32_t>(k.instructions.size());
    std::vector<std::vector<std::uint32_t>> succ(n + 1);
    for (std::uint32_t i = 0; i < n; ++i) {
        const Instruction& ins = k.instructions[i];
        const std::uint32_t next = i + 1 < n ? i + 1 : n;
        if (ins.op == Opcode::Exit) {
            succ[i].push_back(n);
            if (ins.guard && next != n) succ[i].push_back(next);
        } else if (ins.op == Opcode::Bra) {
            const std::uint32_t t = ins.target_index < n ? ins.target_index : n;
            succ[i].push_back(t);
            if (ins.guard && next != t) succ[i].push_back(next);
        } else {
            succ[i].push_back(next);
        }
    }
    return succ;
}

std::vector<std::uint32_t> immediate_post_dominators(const Kernel& k) {
    const auto n = static_cast<std::uint32_t>(k.instructions.size());
    const auto succ = successors(k);
    std::vector<Bits> pdom(n + 1, Bits(n + 1, true));
    pdom[n] = Bits(n + 1);
    pdom[n].set(n);
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::uint32_t i = n; i-- > 0;) {
            Bits b(n + 1, true);
            for (auto s : succ[i]) b &= pdom[s];
            b.set(i);
            if (!(b == pdom[i])) {
                pdom[i] = std::move(b);
                changed = true;
            }
        }
    }
    std::vector<std::uint32_t> ipdom(n + 1, n);
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::size_t target = pdom[i].count() - 1;
        std::uint32_t best = n;
        for (std::uint32_t d = 0; d <= n; ++d) {
            if (d == i || !pdom[i].test(d)) continue;
            if (pdom[d].count() == target) {
                best = d;
                break;
            }
        }
        ipdom[i] = best;
    }
    return ipdom;
}

ReconvergenceMap analyze_branches(const Kernel& k) {
    ReconvergenceMap out;
    const auto n = static_cast<std::uint32_t>(k.instructions.size());
    if (n == 0) return out;
    std::vector<std::uint32_t> ipdom;
    for (std::uint32_t i = 0; i < n; ++i) {
        const Instruction& ins = k.instructions[i];
        if (ins.op != Opcode::Bra || !ins.guard) continue;
        if (ipdom.empty()) ipdom = immediate_post_dominators(k);
        out[i] = ipdom[i] < n ? ipdom[i] : last_exit_index(k);
    }
    return out;
}

LocationTable annotate_locations(const Kernel& k) {
    LocationTable t;
    auto& L = t.reg_loc;
    for (const auto& r : isa::collect_registers(k)) L[r] = Location::U;

    auto seed = [&](const std::optional<RegisterId>& r, Location l) {
        if (r && !r->is_special()) widen(L[*r], l);
    };

    // Seeds. Control registers (branch and guard predicates, setp results) are
    // far-bank; global ld/st split address (far) from value (near); shared
    // ld/st operands are near-bank.
    for (const auto& ins : k.instructions) {
        if (ins.guard) seed(ins.guard->reg, Location::F);
        switch (ins.op) {
        case Opcode::Setp:
            seed(ins.dst, Location::F);
            break;
        case Opcode::LdGlobal:
            seed(isa::address_register(ins), Location::F);
            seed(ins.dst, Location::N);
            break;
        case Opcode::StGlobal:
            seed(isa::address_register(ins), Location::F);
            seed(isa::data_register(ins), Location::N);
            break;
        case Opcode::LdShared:
        case Opcode::StShared:
            seed(isa::address_register(ins), Location::N);
            seed(isa::data_register(ins), Location::N);
            break;
        default:
            break;
        }
    }

    // Propagate destination locations to sources until nothing changes.
    auto propagate = [&] {
        bool changed = true;
        while (changed) {
            changed = false;
            ++t.passes;
            for (const auto& ins : k.instructions) {
                if (seeds_locations(ins.op) || !ins.dst || ins.dst->is_special()) continue;
                const Location d = L[*ins.dst];
                if (d == Location::U) continue;
                for (const auto& src : isa::source_registers(ins)) {
                    if (src.is_special()) continue;
                    Location& s = L[src];
                    const Location before = s;
                    widen(s, d);
                    changed |= s != before;
                }
            }
        }
    };
    propagate();

    // Registers nothing constrains (dead values and their producers) stay in
    // the far-bank file; their sources must then be readable there too.
    bool defaulted = false;
    for (auto& [r, l] : L)
        if (l == Location::U) {
            l = Location::F;
            defaulted = true;
        }
    if (defaulted) propagate();

    t.instr_loc.reserve(k.instructions.size());
    for (const auto& ins : k.instructions) {
        std::optional<RegisterId> dst;
        switch (ins.op) {
        case Opcode::StGlobal:
        case Opcode::StShared:
            dst = isa::address_register(ins);
            break;
        default:
            dst = ins.dst;
            break;
        }
        Location l = Location::F;
        if (dst && !dst->is_special()) l = L[*dst];
        t.instr_loc.push_back(l == Location::N ? Location::N : Location::F);
    }
    return t;
}

LocationTable unannotated_locations(const Kernel& k, Location fill) {
    LocationTable t;
    for (const auto& r : isa::collect_registers(k)) t.reg_loc[r] = fill;
    t.instr_loc.assign(k.instructions.size(), Location::F);
    return t;
}

std::uint32_t slot_units(const RegisterId& r) { return r.cls == isa::RegClass::Int64 ? 2u : 1u; }

std::map<RegisterId, LiveInterval> live_intervals(const Kernel& k, const ReconvergenceMap& reconv) {
    const auto n = static_cast<std::uint32_t>(k.instructions.size());
    const auto regs = isa::collect_registers(k);
    std::map<RegisterId, std::size_t> id;
    for (std::size_t i = 0; i < regs.size(); ++i) id[regs[i]] = i;
    const std::size_t R = regs.size();
    const auto succ = successors(k);

    std::vector<std::vector<std::size_t>> uses(n), defs(n);
    std::vector<char> kills(n, 0);
    for (std::uint32_t i = 0; i < n; ++i) {
        const Instruction& ins = k.instructions[i];
        for (const auto& r : isa::source_registers(ins))
            if (!r.is_special()) uses[i].push_back(id[r]);
        if (ins.guard) uses[i].push_back(id[ins.guard->reg]);
        if (ins.dst && !ins.dst->is_special()) {
            defs[i].push_back(id[*ins.dst]);
            kills[i] = !ins.guard;
        }
    }

    // Use-before-def: must-defined forward dataflow over reachable nodes.
    {
        std::vector<std::vector<std::uint32_t>> preds(n + 1);
        for (std::uint32_t i = 0; i < n; ++i)
            for (auto s : succ[i]) preds[s].push_back(i);
        std::vector<char> reach(n + 1, 0);
        std::vector<std::uint32_t> work{0};
        while (!work.empty()) {
            auto v = work.back();
            work.pop_back();
            if (v >= n || reach[v]) continue;
            reach[v] = 1;
            for (auto s : succ[v]) work.push_back(s);
        }
        std::vector<Bits> out(n, Bits(R, true));
        auto in_of = [&](std::uint32_t i) {
            if (i == 0) return Bits(R);
            Bits b(R, true);
            for (auto p : preds[i])
                if (reach[p]) b &= out[p];
            return b;
        };
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::uint32_t i = 0; i < n; ++i) {
                if (!reach[i]) continue;
                Bits b = in_of(i);
                for (auto d : defs[i]) b.set(d);
                if (!(b == out[i])) {
                    out[i] = std::move(b);
                    changed = true;
                }
            }
        }
        for (std::uint32_t i = 0; i < n; ++i) {
            if (!reach[i]) continue;
            Bits in = in_of(i);
            for (auto u : uses[i])
                if (!in.test(u))
                    throw CompileError("register " + isa::to_string(regs[u]) + " read before definition at instruction " +
                                       std::to_string(i) + " (" + isa::print_instruction(k.instructions[i]) + ")");
        }
    }

    // Backward liveness.
    std::vector<Bits> live_in(n + 1, Bits(R)), live_out(n + 1, Bits(R));
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::uint32_t i = n; i-- > 0;) {
            Bits out(R);
            for (auto s : succ[i]) out |= live_in[s];
            Bits in = out;
            if (kills[i])
                for (auto d : defs[i]) in.reset(d);
            for (auto u : uses[i]) in.set(u);
            if (!(in == live_in[i]) || !(out == live_out[i])) {
                live_in[i] = std::move(in);
                live_out[i] = std::move(out);
                changed = true;
            }
        }
    }

    std::vector<LiveInterval> iv(R, LiveInterval{n, 0});
    std::vector<char> seen(R, 0);
    auto touch = [&](std::size_t r, std::uint32_t p) {
        if (!seen[r]) {
            iv[r] = LiveInterval{p, p};
            seen[r] = 1;
        } else {
            iv[r].start = std::min(iv[r].start, p);
            iv[r].end = std::max(iv[r].end, p);
        }
    };
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::size_t r = 0; r < R; ++r)
            if (live_in[i].test(r)) touch(r, i);
        for (auto d : defs[i]) touch(d, i);
        for (auto u : uses[i]) touch(u, i);
    }

    // Divergent regions: everything reachable from a conditional branch before
    // its reconvergence point. Register moves copy whole warp registers, so two
    // registers touching the same region must not share a slot.
    std::vector<LiveInterval> regions;
    for (const auto& [b, rpc] : reconv) {
        std::vector<char> in(n + 1, 0);
        std::vector<std::uint32_t> work(succ[b].begin(), succ[b].end());
        LiveInterval span{b, b};
        while (!work.empty()) {
            auto v = work.back();
            work.pop_back();
            if (v >= n || v == rpc || in[v]) continue;
            in[v] = 1;
            span.start = std::min(span.start, v);
            span.end = std::max(span.end, v);
            for (auto s : succ[v]) work.push_back(s);
        }
        regions.push_back(span);
    }
    changed = true;
    while (changed) {
        changed = false;
        for (std::size_t r = 0; r < R; ++r) {
            if (!seen[r]) continue;
            for (const auto& g : regions) {
                if (iv[r].end < g.start || iv[r].start > g.end) continue;
                if (iv[r].start > g.start || iv[r].end < g.end) {
                    iv[r].start = std::min(iv[r].start, g.start);
                    iv[r].end = std::max(iv[r].end, g.end);
                    changed = true;
                }
            }
        }
    }

    std::map<RegisterId, LiveInterval> result;
    for (std::size_t r = 0; r < R; ++r)
        if (seen[r]) result[regs[r]] = iv[r];
    return result;
}

namespace {

struct FileAllocation {
    std::map<RegisterId, std::uint32_t> slot;
    std::uint32_t used = 0;
};

FileAllocation linear_scan(const std::vector<RegisterId>& regs, const std::map<RegisterId, LiveInterval>& iv) {
    std::vector<RegisterId> order = regs;
    std::sort(order.begin(), order.end(), [&](const RegisterId& a, const RegisterId& b) {
        const auto& ia = iv.at(a);
        const auto& ib = iv.at(b);
        if (ia.start != ib.start) return ia.start < ib.start;
        return a < b;
    });
    FileAllocation fa;
    std::vector<char> busy;
    std::vector<std::pair<std::uint32_t, RegisterId>> active;  // end, reg
    for (const auto& r : order) {
        const auto& cur = iv.at(r);
        for (auto it = active.begin(); it != active.end();) {
            if (it->first < cur.start) {
                const std::uint32_t s = fa.slot[it->second];
                for (std::uint32_t u = 0; u < slot_units(it->second); ++u) busy[s + u] = 0;
                it = active.erase(it);
            } else {
                ++it;
            }
        }
        const std::uint32_t units = slot_units(r);
        std::uint32_t s = 0;
        for (;; s += units) {
            if (busy.size() < s + units) busy.resize(s + units, 0);
            bool free = true;
            for (std::uint32_t u = 0; u < units; ++u) free &= !busy[s + u];
            if (free) break;
        }
        for (std::uint32_t u = 0; u < units; ++u) busy[s + u] = 1;
        fa.slot[r] = s;
        fa.used = std::max(fa.used, s + units);
        active.emplace_back(cur.end, r);
    }
    return fa;
}

}  // namespace

AllocatedKernel allocate_registers(const Kernel& k, const LocationTable& loc, RfCapacity cap) {
    AllocatedKernel out;
    out.kernel = k;
    out.loc = loc;
    out.reconv = analyze_branches(k);
    out.intervals = live_intervals(k, out.reconv);

    std::vector<RegisterId> far_regs, near_regs;
    for (const auto& r : isa::collect_registers(k)) {
        const Location l = loc.of(r);
        if (l == Location::U) throw CompileError("register " + isa::to_string(r) + " has no location");
        if (!out.intervals.count(r)) out.intervals[r] = LiveInterval{0, 0};
        if (l == Location::F || l == Location::B) far_regs.push_back(r);
        if (l == Location::N || l == Location::B) near_regs.push_back(r);
    }
    auto far = linear_scan(far_regs, out.intervals);
    auto near = linear_scan(near_regs, out.intervals);
    if (far.used > cap.far_units)
        throw CompileError("far-bank register demand " + std::to_string(far.used) + " slots exceeds capacity " +
                           std::to_string(cap.far_units));
    if (near.used > cap.near_units)
        throw CompileError("near-bank register demand " + std::to_string(near.used) + " slots exceeds capacity " +
                           std::to_string(cap.near_units));
    out.phys_far = std::move(far.slot);
    out.phys_near = std::move(near.slot);
    out.far_slots_used = far.used;
    out.near_slots_used = near.used;
    return out;
}

LocationBreakdown location_report(const LocationTable& loc) {
    LocationBreakdown b;
    for (const auto& [r, l] : loc.reg_loc) {
        if (r.is_special()) continue;
        if (l == Location::N) ++b.near;
        else if (l == Location::B) ++b.both;
        else ++b.far;
    }
    const std::size_t total = b.near + b.far + b.both;
    if (total > 0) {
        b.pct_n = 100.0 * static_cast<double>(b.near) / static_cast<double>(total);
        b.pct_f = 100.0 * static_cast<double>(b.far) / static_cast<double>(total);
        b.pct_b = 100.0 * static_cast<double>(b.both) / static_cast<double>(total);
    }
    return b;
}

std::string location_report_csv(const std::string& kernel_name, const LocationBreakdown& b) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "kernel,regs_n,regs_f,regs_b,pct_n,pct_f,pct_b\n%s,%zu,%zu,%zu,%.2f,%.2f,%.2f\n",
                  kernel_name.c_str(), b.near, b.far, b.both, b.pct_n, b.pct_f, b.pct_b);
    return buf;
}

Kernel apply_annotation(Kernel k, const LocationTable& loc) {
    for (std::size_t i = 0; i < k.instructions.size() && i < loc.instr_loc.size(); ++i)
        k.instructions[i].hint = loc.instr_loc[i] == Location::N ? isa::LocHint::Near : isa::LocHint::Far;
    k.reg_locations = loc.reg_loc;
    return k;
}

AllocatedKernel compile(const Kernel& k, bool annotated, RfCapacity cap) {
    isa::require_valid(k);
    const LocationTable loc = annotated ? annotate_locations(k) : unannotated_locations(k);
    return allocate_registers(annotated ? apply_annotation(k, loc) : k, loc, cap);
}

AllocatedKernel compile_far_only(const Kernel& k, RfCapacity cap) {
    isa::require_valid(k);
    return allocate_registers(k, unannotated_locations(k, Location::F), cap);
}

}  // namespace mpu::compiler
