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

#include "mpu/experiment.hpp"

#include "mpu/interpreter.hpp"

#include <cstdio>
#include <random>
#include <set>
#include <sstream>

namespace mpu::experiment {

std::string to_string(SweepMode m) {
    switch (m) {
    case SweepMode::RowBuffers: return "rowbuf";
    case SweepMode::Policy: return "policy";
    case SweepMode::Smem: return "smem";
    case SweepMode::PonB: return "ponb";
    case SweepMode::All: return "all";
    }
    return "?";
}

SweepMode parse_sweep_mode(const std::string& s) {
    for (auto m : {SweepMode::RowBuffers, SweepMode::Policy, SweepMode::Smem, SweepMode::PonB, SweepMode::All})
        if (to_string(m) == s) return m;
    throw std::invalid_argument("unknown sweep mode '" + s + "' (rowbuf, policy, smem, ponb, all)");
}

std::vector<Leg> sweep_legs(SweepMode m, const SimConfig& base) {
    std::vector<Leg> legs;
    auto add = [&](const std::string& label, SimConfig c) { legs.push_back(Leg{label, std::move(c)}); };
    if (m == SweepMode::RowBuffers || m == SweepMode::All)
        for (std::uint32_t s : {1u, 2u, 4u}) {
            SimConfig c = base;
            c.rowbufs = s;
            add("rowbuf=" + std::to_string(s), c);
        }
    if (m == SweepMode::Policy || m == SweepMode::All)
        for (auto p : {OffloadPolicy::Annotated, OffloadPolicy::HwDefault, OffloadPolicy::AllNear, OffloadPolicy::AllFar}) {
            SimConfig c = base;
            c.offload = p;
            add("policy=" + to_string(p), c);
        }
    if (m == SweepMode::Smem || m == SweepMode::All)
        for (auto s : {SmemLocation::Near, SmemLocation::Far}) {
            SimConfig c = base;
            c.smem = s;
            add("smem=" + to_string(s), c);
        }
    if (m == SweepMode::PonB || m == SweepMode::All)
        for (bool p : {false, true}) {
            SimConfig c = base;
            c.ponb = p;
            if (p) c.offload = OffloadPolicy::AllFar;
            add(p ? "ponb" : "hybrid", c);
        }
    if (m == SweepMode::All) {
        std::set<std::string> seen;
        std::vector<Leg> unique;
        for (auto& l : legs)
            if (seen.insert(l.cfg.hash_hex()).second) unique.push_back(std::move(l));
        legs = std::move(unique);
    }
    return legs;
}

MemoryImage reference_memory(const Workload& w) {
    MemoryImage m = w.memory;
    for (const auto& k : w.kernels) interpret_reference(k, m);
    return m;
}

RunOutput run_workload(const Workload& w, const SimConfig& cfg, const MemoryImage& reference, const RunOptions& opt) {
    SimConfig c = cfg;
    c.record_commands = c.record_commands || opt.check_legality;
    std::vector<compiler::AllocatedKernel> launches;
    for (const auto& k : w.kernels) launches.push_back(compile_for(c, k));

    RunOutput out;
    out.sim = simulate(c, launches, w.memory, SimOptions{opt.trace});
    const RunReport& r = out.sim.report;

    for (const auto& region : w.outputs) {
        if (auto a = out.sim.memory.first_difference(reference, region.base, region.length)) {
            char buf[200];
            std::snprintf(buf, sizeof buf, "%s [%s]: output '%s' diverges from the reference at 0x%llx", w.name.c_str(),
                          c.hash_hex().c_str(), region.name.c_str(), static_cast<unsigned long long>(*a));
            throw OracleMismatch(buf);
        }
    }
    if (out.sim.lanes_serviced != r.lanes_requested)
        throw SimulationFault(w.name + ": " + std::to_string(out.sim.lanes_serviced) + " lanes serviced for " +
                              std::to_string(r.lanes_requested) + " requested");
    if (opt.check_legality) {
        out.legality = check_command_trace(out.sim.commands, DramTiming::from(c), c.rowbufs);
        if (!out.legality.ok())
            throw SimulationFault(w.name + ": DRAM command stream violates timing: " + out.legality.violations.front());
    }
    return out;
}

std::vector<LegResult> run_sweep(const Workload& w, SweepMode m, const SimConfig& base) {
    const MemoryImage reference = reference_memory(w);
    std::vector<LegResult> rows;
    for (const auto& leg : sweep_legs(m, base)) {
        RunOutput o = run_workload(w, leg.cfg, reference);
        rows.push_back(LegResult{w.name, leg.label, o.sim.report, o.legality.commands});
    }
    return rows;
}

std::string sweep_csv_header() { return "workload,leg," + RunReport::csv_header(); }

std::string sweep_csv(const std::vector<LegResult>& rows) {
    std::ostringstream os;
    os << sweep_csv_header() << "\n";
    for (const auto& r : rows) os << r.workload << "," << r.leg << "," << r.report.csv_row() << "\n";
    return os.str();
}

DramTraceResult random_dram_trace(const SimConfig& cfg, std::uint64_t seed, std::uint64_t requests, std::uint32_t banks) {
    const DramTiming t = DramTiming::from(cfg);
    const std::uint32_t S = cfg.rowbufs;
    std::mt19937_64 rng(seed);
    DramTraceResult out;
    out.requests = requests;

    std::vector<BankController> ctl;
    ctl.reserve(banks);
    for (std::uint32_t b = 0; b < banks; ++b) {
        ctl.emplace_back(t, S, b, static_cast<Cycle>(t.tREFI) + static_cast<Cycle>(cfg.refresh_stagger) * b);
        ctl.back().set_trace(&out.commands);
    }

    // A handful of hot rows per bank keeps the hit rate realistic.
    const std::uint32_t hot = 3 + static_cast<std::uint32_t>(rng() % 6);
    std::vector<std::vector<std::uint32_t>> rows(banks);
    for (auto& v : rows)
        for (std::uint32_t i = 0; i < hot; ++i) v.push_back(static_cast<std::uint32_t>(rng() % 8192));
    const std::uint32_t max_queue = 4 + static_cast<std::uint32_t>(rng() % 29);
    std::geometric_distribution<int> gap(0.3 + 0.6 * std::uniform_real_distribution<double>(0, 1)(rng));

    std::uint64_t issued = 0;
    Cycle now = 0, next_arrival = 0;
    while (out.completed < requests) {
        while (issued < requests && now >= next_arrival) {
            const std::uint32_t b = static_cast<std::uint32_t>(rng() % banks);
            if (ctl[b].queue_size() >= max_queue) break;
            DramRequest r;
            r.id = issued++;
            r.write = rng() % 3 == 0;
            const std::uint32_t logical = rows[b][rng() % rows[b].size()];
            r.subarray = logical % S;
            r.row = logical / S;
            r.col = static_cast<std::uint32_t>(rng() % 64) * 32;
            r.arrival = now;
            ctl[b].enqueue(r);
            next_arrival = now + static_cast<Cycle>(gap(rng));
        }
        for (auto& c : ctl) {
            if (auto i = c.tick(now)) {
                if (i->completed) {
                    ++out.completed;
                    (i->miss ? out.misses : out.hits)++;
                }
            }
        }
        ++now;
        if (now > requests * 2000 + 100000) throw SimulationFault("random DRAM trace did not drain");
    }
    out.cycles = now;
    return out;
}

}  // namespace mpu::experiment
