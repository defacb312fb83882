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

#include "mpu/energy.hpp"

#include "mpu/interconnect.hpp"

#include <cstdio>
#include <json.hpp>

namespace mpu {

namespace {

constexpr isa::Opcode kAluOpcodes[] = {isa::Opcode::Add, isa::Opcode::Sub, isa::Opcode::Mul, isa::Opcode::Mad,
                                       isa::Opcode::Div, isa::Opcode::Min, isa::Opcode::Max, isa::Opcode::Mov,
                                       isa::Opcode::Cvt, isa::Opcode::Setp};

const char* const kCategoryKeys[] = {"alu", "rf_opc", "dram", "tsv", "network", "other"};

}  // namespace

std::string to_string(EnergyEvent e) {
    switch (e) {
    case EnergyEvent::DramRdWr: return "dram_rd_wr";
    case EnergyEvent::DramActPre: return "dram_act_pre";
    case EnergyEvent::DramRef: return "dram_ref";
    case EnergyEvent::RfAccess: return "rf_access";
    case EnergyEvent::OperandCollector: return "operand_collector";
    case EnergyEvent::SmemAccess: return "smem_access";
    case EnergyEvent::LsuExtension: return "lsu_extension";
    case EnergyEvent::TsvBit: return "tsv_bit";
    case EnergyEvent::OnChipBitHop: return "onchip_bit_hop";
    case EnergyEvent::OffChipBit: return "offchip_bit";
    case EnergyEvent::ICacheFetch: return "icache_fetch";
    case EnergyEvent::SchedulerIssue: return "scheduler_issue";
    case EnergyEvent::Alu: return "alu";
    }
    return "?";
}

std::string to_string(EnergyCategory c) { return kCategoryKeys[static_cast<int>(c)]; }

EnergyCategory category_of(EnergyEvent e) {
    switch (e) {
    case EnergyEvent::Alu: return EnergyCategory::Alu;
    case EnergyEvent::RfAccess:
    case EnergyEvent::OperandCollector: return EnergyCategory::RfOpc;
    case EnergyEvent::DramRdWr:
    case EnergyEvent::DramActPre:
    case EnergyEvent::DramRef: return EnergyCategory::Dram;
    case EnergyEvent::TsvBit: return EnergyCategory::Tsv;
    case EnergyEvent::OnChipBitHop:
    case EnergyEvent::OffChipBit: return EnergyCategory::Network;
    case EnergyEvent::SmemAccess:
    case EnergyEvent::LsuExtension:
    case EnergyEvent::ICacheFetch:
    case EnergyEvent::SchedulerIssue: return EnergyCategory::Other;
    }
    return EnergyCategory::Other;
}

EnergyModel EnergyModel::from_table(const std::map<std::string, std::uint64_t>& fj) {
    EnergyModel m;
    for (int e = 0; e < kEnergyEvents; ++e) {
        const auto ev = static_cast<EnergyEvent>(e);
        if (ev == EnergyEvent::Alu) continue;
        auto it = fj.find(to_string(ev));
        if (it == fj.end()) throw ConfigError("energy model has no cost for event '" + to_string(ev) + "'");
        m.cost_[e] = it->second;
    }
    for (auto op : kAluOpcodes) {
        const std::string key = "alu." + std::string(isa::to_string(op));
        auto it = fj.find(key);
        if (it == fj.end()) throw ConfigError("energy model has no cost for '" + key + "'");
        m.alu_[static_cast<int>(op)] = it->second;
    }
    for (const auto& [k, v] : fj) {
        bool known = k.rfind("alu.", 0) == 0;
        for (int e = 0; e < kEnergyEvents && !known; ++e) known = to_string(static_cast<EnergyEvent>(e)) == k;
        if (!known) throw ConfigError("unknown energy event '" + k + "'");
    }
    return m;
}

EnergyModel EnergyModel::from_config(const SimConfig& c) {
    std::map<std::string, std::uint64_t> t = {
        {"dram_rd_wr", c.e_rd_wr},      {"dram_act_pre", c.e_act_pre},
        {"dram_ref", c.e_ref},          {"rf_access", c.e_rf},
        {"operand_collector", c.e_opc}, {"smem_access", c.e_smem},
        {"lsu_extension", c.e_lsu_ext}, {"tsv_bit", c.e_tsv_bit},
        {"onchip_bit_hop", c.e_onchip_bit}, {"offchip_bit", c.e_offchip_bit},
        {"icache_fetch", c.e_icache},   {"scheduler_issue", c.e_scheduler},
    };
    for (const auto& [op, v] : c.e_alu) t["alu." + op] = v;
    return from_table(t);
}

std::uint64_t EnergyModel::cost(EnergyEvent e) const { return cost_[static_cast<int>(e)]; }

std::uint64_t EnergyModel::alu_cost(isa::Opcode op) const {
    const auto& c = alu_[static_cast<int>(op)];
    if (!c) throw ConfigError("no ALU energy for opcode '" + std::string(isa::to_string(op)) + "'");
    return *c;
}

void EnergyAccount::record(EnergyEvent e, std::uint64_t amount) {
    counts_[static_cast<int>(e)] += amount;
    category_[static_cast<int>(category_of(e))] += amount * model_.cost(e);
}

void EnergyAccount::record_alu(isa::Opcode op, std::uint64_t count) {
    const std::uint64_t c = model_.alu_cost(op);
    counts_[static_cast<int>(EnergyEvent::Alu)] += count;
    category_[static_cast<int>(EnergyCategory::Alu)] += count * c;
}

std::uint64_t EnergyAccount::total_fj() const {
    std::uint64_t t = 0;
    for (auto v : category_) t += v;
    return t;
}

namespace {

struct Column {
    const char* name;
    std::string (*get)(const RunReport&);
};

std::string u(std::uint64_t v) { return std::to_string(v); }

std::string fmt_rate(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

const std::vector<Column>& columns() {
    static const std::vector<Column> c = {
        {"schema", [](const RunReport&) { return u(kReportSchemaVersion); }},
        {"kernel", [](const RunReport& r) { return r.kernel; }},
        {"config_hash", [](const RunReport& r) { return r.config_hash; }},
        {"policy", [](const RunReport& r) { return r.policy; }},
        {"smem", [](const RunReport& r) { return r.smem; }},
        {"rowbufs", [](const RunReport& r) { return u(r.rowbufs); }},
        {"ponb", [](const RunReport& r) { return u(r.ponb); }},
        {"cycles", [](const RunReport& r) { return u(r.cycles); }},
        {"tsv_bytes_offload", [](const RunReport& r) { return u(r.tsv_bits[0] / 8); }},
        {"tsv_bytes_move", [](const RunReport& r) { return u(r.tsv_bits[1] / 8); }},
        {"tsv_bytes_dram", [](const RunReport& r) { return u(r.tsv_bits[2] / 8); }},
        {"tsv_bytes_smem", [](const RunReport& r) { return u(r.tsv_bits[3] / 8); }},
        {"tsv_bytes_total", [](const RunReport& r) { return u(r.tsv_bytes_total()); }},
        {"row_hits", [](const RunReport& r) { return u(r.row_hits); }},
        {"row_misses", [](const RunReport& r) { return u(r.row_misses); }},
        {"miss_rate", [](const RunReport& r) { return fmt_rate(r.miss_rate()); }},
        {"dram_rd", [](const RunReport& r) { return u(r.dram_reads); }},
        {"dram_wr", [](const RunReport& r) { return u(r.dram_writes); }},
        {"dram_act", [](const RunReport& r) { return u(r.dram_acts); }},
        {"dram_pre", [](const RunReport& r) { return u(r.dram_pres); }},
        {"dram_ref", [](const RunReport& r) { return u(r.dram_refs); }},
        {"energy_alu_fj", [](const RunReport& r) { return u(r.energy_fj[0]); }},
        {"energy_rf_opc_fj", [](const RunReport& r) { return u(r.energy_fj[1]); }},
        {"energy_dram_fj", [](const RunReport& r) { return u(r.energy_fj[2]); }},
        {"energy_tsv_fj", [](const RunReport& r) { return u(r.energy_fj[3]); }},
        {"energy_network_fj", [](const RunReport& r) { return u(r.energy_fj[4]); }},
        {"energy_other_fj", [](const RunReport& r) { return u(r.energy_fj[5]); }},
        {"energy_total_fj", [](const RunReport& r) { return u(r.energy_total_fj); }},
        {"warp_instructions", [](const RunReport& r) { return u(r.warp_instructions); }},
        {"instr_near", [](const RunReport& r) { return u(r.instr_near); }},
        {"instr_far", [](const RunReport& r) { return u(r.instr_far); }},
        {"register_moves", [](const RunReport& r) { return u(r.register_moves); }},
        {"offloaded_ldst", [](const RunReport& r) { return u(r.offloaded_ldst); }},
        {"lanes_requested", [](const RunReport& r) { return u(r.lanes_requested); }},
        {"lanes_fastpath", [](const RunReport& r) { return u(r.lanes_fastpath); }},
        {"lanes_local", [](const RunReport& r) { return u(r.lanes_local); }},
        {"lanes_remote", [](const RunReport& r) { return u(r.lanes_remote); }},
        {"noc_packets", [](const RunReport& r) { return u(r.noc_packets); }},
        {"noc_bits", [](const RunReport& r) { return u(r.noc_bits); }},
        {"noc_bit_hops", [](const RunReport& r) { return u(r.noc_bit_hops); }},
        {"smem_accesses", [](const RunReport& r) { return u(r.smem_accesses); }},
        {"smem_cycles", [](const RunReport& r) { return u(r.smem_cycles); }},
    };
    return c;
}

}  // namespace

std::string RunReport::csv_header() {
    std::string out;
    for (const auto& c : columns()) out += (out.empty() ? "" : ",") + std::string(c.name);
    return out;
}

std::string RunReport::csv_row() const {
    std::string out;
    bool first = true;
    for (const auto& c : columns()) {
        if (!first) out += ",";
        out += c.get(*this);
        first = false;
    }
    return out + "\n";
}

std::string RunReport::to_json() const {
    nlohmann::ordered_json j;
    j["schema"] = kReportSchemaVersion;
    j["kernel"] = kernel;
    j["config_hash"] = config_hash;
    j["policy"] = policy;
    j["rowbufs"] = rowbufs;
    j["ponb"] = ponb;
    j["cycles"] = cycles;
    auto& tsv = j["tsv_bytes"];
    for (int c = 0; c < kTsvClasses; ++c) tsv[to_string(static_cast<TsvClass>(c))] = tsv_bits[c] / 8;
    tsv["total"] = tsv_bytes_total();
    j["dram"] = {{"row_hits", row_hits},   {"row_misses", row_misses}, {"miss_rate", miss_rate()},
                 {"rd", dram_reads},       {"wr", dram_writes},        {"act", dram_acts},
                 {"pre", dram_pres},       {"ref", dram_refs}};
    auto& e = j["energy_fj"];
    for (int c = 0; c < kEnergyCategories; ++c) e[kCategoryKeys[c]] = energy_fj[c];
    e["total"] = energy_total_fj;
    j["instructions"] = {{"warp", warp_instructions}, {"near", instr_near}, {"far", instr_far},
                         {"register_moves", register_moves}, {"offloaded_ldst", offloaded_ldst}};
    j["lanes"] = {{"requested", lanes_requested}, {"fastpath", lanes_fastpath}, {"local", lanes_local},
                  {"remote", lanes_remote}};
    j["noc"] = {{"packets", noc_packets}, {"bits", noc_bits}, {"bit_hops", noc_bit_hops}};
    j["smem"] = {{"location", smem}, {"accesses", smem_accesses}, {"cycles", smem_cycles}};
    return j.dump(2) + "\n";
}

}  // namespace mpu
