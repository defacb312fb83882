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

#include "mpu/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace mpu {

namespace {

const char* const kAluOps[] = {"add", "sub", "mul", "mad", "div", "min", "max", "mov", "cvt", "setp"};

// Estimated per-warp-instruction ALU energies (fJ). Placeholders in the range
// of published per-PTX-instruction measurements; override per deployment.
const std::uint64_t kAluDefaults[] = {30000, 30000, 36000, 42000, 180000, 30000, 30000, 12000, 25000, 28000};

struct Field {
    std::string key;
    std::function<std::string(const SimConfig&)> get;
    std::function<void(SimConfig&, const std::string&)> set;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t x = 0;
    std::string body = v;
    std::uint64_t scale = 1;
    if (!body.empty() && (body.back() == 'K' || body.back() == 'M' || body.back() == 'G')) {
        scale = body.back() == 'K' ? 1ull << 10 : body.back() == 'M' ? 1ull << 20 : 1ull << 30;
        body.pop_back();
    }
    int base = 10;
    const char* first = body.data();
    if (body.size() > 2 && body[0] == '0' && (body[1] == 'x' || body[1] == 'X')) {
        base = 16;
        first += 2;
    }
    auto [p, ec] = std::from_chars(first, body.data() + body.size(), x, base);
    if (body.empty() || ec != std::errc{} || p != body.data() + body.size())
        throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
    return x * scale;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "on") return true;
    if (v == "0" || v == "false" || v == "off") return false;
    throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

template <typename T>
Field num(std::string key, T SimConfig::*m) {
    return Field{key, [m](const SimConfig& c) { return std::to_string(c.*m); },
                 [m, key](SimConfig& c, const std::string& v) {
                     const std::uint64_t x = parse_u64(key, v);
                     if (x > static_cast<std::uint64_t>(static_cast<T>(~T{0})))
                         throw ConfigError("config key '" + key + "': value out of range");
                     c.*m = static_cast<T>(x);
                 }};
}

Field flag(std::string key, bool SimConfig::*m) {
    return Field{key, [m](const SimConfig& c) { return std::string(c.*m ? "1" : "0"); },
                 [m, key](SimConfig& c, const std::string& v) { c.*m = parse_bool(key, v); }};
}

template <typename E>
Field choice(std::string key, E SimConfig::*m, std::vector<std::pair<std::string, E>> names) {
    return Field{key,
                 [m, names](const SimConfig& c) {
                     for (const auto& [n, e] : names)
                         if (e == c.*m) return n;
                     return std::string("?");
                 },
                 [m, key, names](SimConfig& c, const std::string& v) {
                     for (const auto& [n, e] : names)
                         if (n == v) {
                             c.*m = e;
                             return;
                         }
                     std::string opts;
                     for (const auto& [n, e] : names) opts += (opts.empty() ? "" : "|") + n;
                     throw ConfigError("config key '" + key + "': expected one of " + opts + ", got '" + v + "'");
                 }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> f = [] {
        std::vector<Field> v = {
            num("topology.procs", &SimConfig::procs),
            num("topology.dies", &SimConfig::dies),
            num("topology.cores_per_proc", &SimConfig::cores_per_proc),
            num("topology.subcores", &SimConfig::subcores),
            num("topology.nbus", &SimConfig::nbus),
            num("topology.banks_per_nbu", &SimConfig::banks_per_nbu),
            num("topology.rowbufs", &SimConfig::rowbufs),
            num("size.bank_bytes", &SimConfig::bank_bytes),
            num("size.row_bytes", &SimConfig::row_bytes),
            num("size.icache_bytes", &SimConfig::icache_bytes),
            num("size.far_rf_bytes", &SimConfig::far_rf_bytes),
            num("size.near_rf_bytes", &SimConfig::near_rf_bytes),
            num("size.smem_bytes", &SimConfig::smem_bytes),
            num("smem.banks", &SimConfig::smem_banks),
            num("dram.bank_io_bits", &SimConfig::bank_io_bits),
            num("timing.tRCD", &SimConfig::tRCD),
            num("timing.tCCD", &SimConfig::tCCD),
            num("timing.tRTP", &SimConfig::tRTP),
            num("timing.tRP", &SimConfig::tRP),
            num("timing.tRAS", &SimConfig::tRAS),
            num("timing.tRFC", &SimConfig::tRFC),
            num("timing.tREFI", &SimConfig::tREFI),
            num("timing.burst_cycles", &SimConfig::burst_cycles),
            num("timing.refresh_stagger", &SimConfig::refresh_stagger),
            num("freq.core_ghz", &SimConfig::f_core),
            num("freq.tsv_ghz", &SimConfig::f_tsv),
            num("freq.router_ghz", &SimConfig::f_router),
            num("freq.onchip_ghz", &SimConfig::f_onchip),
            num("freq.offchip_ghz", &SimConfig::f_offchip),
            num("tsv.bits_per_core", &SimConfig::tsv_bits_per_core),
            num("tsv.weight.offload", &SimConfig::tsv_weight_offload),
            num("tsv.weight.move", &SimConfig::tsv_weight_move),
            num("tsv.weight.dram", &SimConfig::tsv_weight_dram),
            num("tsv.weight.smem", &SimConfig::tsv_weight_smem),
            num("noc.mesh_x", &SimConfig::mesh_x),
            num("noc.mesh_y", &SimConfig::mesh_y),
            num("noc.router_cycles", &SimConfig::router_cycles),
            num("noc.link_cycles", &SimConfig::link_cycles),
            num("noc.flit_bits", &SimConfig::flit_bits),
            num("noc.offchip_bits", &SimConfig::offchip_bits),
            num("noc.offchip_latency", &SimConfig::offchip_latency),
            num("core.max_warps_per_subcore", &SimConfig::max_warps_per_subcore),
            num("core.max_blocks_per_core", &SimConfig::max_blocks_per_core),
            num("core.alu_latency", &SimConfig::alu_latency),
            num("core.div_latency", &SimConfig::div_latency),
            num("core.smem_latency", &SimConfig::smem_latency),
            num("core.lsu_ext_latency", &SimConfig::lsu_ext_latency),
            num("core.offload_packet_bits", &SimConfig::offload_packet_bits),
            num("core.ack_bits", &SimConfig::ack_bits),
            num("lsu.dram_header_bits", &SimConfig::dram_header_bits),
            num("lsu.fastpath_header_bits", &SimConfig::fastpath_header_bits),
            num("lsu.remote_header_bits", &SimConfig::remote_header_bits),
            flag("lsu.fastpath", &SimConfig::lsu_fastpath),
            choice<OffloadPolicy>("policy.offload", &SimConfig::offload,
                                  {{"annotated", OffloadPolicy::Annotated},
                                   {"hw-default", OffloadPolicy::HwDefault},
                                   {"all-near", OffloadPolicy::AllNear},
                                   {"all-far", OffloadPolicy::AllFar}}),
            choice<SmemLocation>("policy.smem", &SimConfig::smem,
                                 {{"near", SmemLocation::Near}, {"far", SmemLocation::Far}}),
            choice<SchedulerPolicy>("policy.scheduler", &SimConfig::scheduler,
                                    {{"lrr", SchedulerPolicy::LooseRoundRobin}, {"gto", SchedulerPolicy::GreedyThenOldest}}),
            flag("policy.ponb", &SimConfig::ponb),
            num("energy.rd_wr_fj", &SimConfig::e_rd_wr),
            num("energy.act_pre_fj", &SimConfig::e_act_pre),
            num("energy.ref_fj", &SimConfig::e_ref),
            num("energy.rf_fj", &SimConfig::e_rf),
            num("energy.smem_fj", &SimConfig::e_smem),
            num("energy.opc_fj", &SimConfig::e_opc),
            num("energy.lsu_ext_fj", &SimConfig::e_lsu_ext),
            num("energy.tsv_bit_fj", &SimConfig::e_tsv_bit),
            num("energy.onchip_bit_fj", &SimConfig::e_onchip_bit),
            num("energy.offchip_bit_fj", &SimConfig::e_offchip_bit),
            num("energy.icache_fj", &SimConfig::e_icache),
            num("energy.scheduler_fj", &SimConfig::e_scheduler),
            num("sim.max_cycles", &SimConfig::max_cycles),
            flag("sim.check_shadow", &SimConfig::check_shadow),
            flag("sim.record_commands", &SimConfig::record_commands),
        };
        for (const char* op : kAluOps) {
            const std::string key = std::string("energy.alu.") + op + "_fj";
            const std::string name = op;
            v.push_back(Field{key,
                              [name](const SimConfig& c) {
                                  auto it = c.e_alu.find(name);
                                  return it == c.e_alu.end() ? std::string("unset") : std::to_string(it->second);
                              },
                              [name, key](SimConfig& c, const std::string& val) { c.e_alu[name] = parse_u64(key, val); }});
        }
        std::sort(v.begin(), v.end(), [](const Field& a, const Field& b) { return a.key < b.key; });
        return v;
    }();
    return f;
}

const Field& field(const std::string& key) {
    for (const auto& f : fields())
        if (f.key == key) return f;
    throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

std::string to_string(OffloadPolicy p) {
    switch (p) {
    case OffloadPolicy::Annotated: return "annotated";
    case OffloadPolicy::HwDefault: return "hw-default";
    case OffloadPolicy::AllNear: return "all-near";
    case OffloadPolicy::AllFar: return "all-far";
    }
    return "?";
}

std::string to_string(SmemLocation s) { return s == SmemLocation::Near ? "near" : "far"; }

std::string to_string(SchedulerPolicy s) { return s == SchedulerPolicy::LooseRoundRobin ? "lrr" : "gto"; }

SimConfig::SimConfig() {
    for (std::size_t i = 0; i < std::size(kAluOps); ++i) e_alu[kAluOps[i]] = kAluDefaults[i];
}

SimConfig SimConfig::desk() {
    SimConfig c;
    c.procs = 1;
    return c;
}

void SimConfig::set(const std::string& key, const std::string& value) { field(key).set(*this, trim(value)); }

std::string SimConfig::get(const std::string& key) const { return field(key).get(*this); }

std::vector<std::string> SimConfig::keys() {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.push_back(f.key);
    return out;
}

SimConfig SimConfig::parse(const std::string& text, SimConfig base) {
    std::istringstream is(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(is, line)) {
        ++n;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(n) + ": expected key = value");
        try {
            base.set(trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(n) + ": " + e.what());
        }
    }
    base.validate();
    return base;
}

SimConfig SimConfig::load(const std::string& path, SimConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), std::move(base));
}

std::string SimConfig::dump() const {
    std::string out;
    for (const auto& f : fields()) out += f.key + "=" + f.get(*this) + "\n";
    return out;
}

std::uint64_t SimConfig::hash() const {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : dump()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string SimConfig::hash_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
}

std::uint64_t SimConfig::capacity_bytes() const {
    return static_cast<std::uint64_t>(procs) * cores_per_proc * nbus * banks_per_nbu * bank_bytes;
}

void SimConfig::validate() const {
    auto pow2 = [](std::uint64_t x) { return x != 0 && (x & (x - 1)) == 0; };
    auto need = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    need(pow2(procs) && pow2(cores_per_proc) && pow2(nbus) && pow2(banks_per_nbu),
         "topology counts (procs, cores_per_proc, nbus, banks_per_nbu) must be powers of two");
    need(subcores == nbus, "each subcore pairs with one NBU: topology.subcores must equal topology.nbus");
    need(rowbufs == 1 || rowbufs == 2 || rowbufs == 4 || rowbufs == 8, "topology.rowbufs must be 1, 2, 4 or 8");
    need(pow2(row_bytes) && row_bytes >= 128, "size.row_bytes must be a power of two >= 128");
    need(pow2(bank_bytes) && bank_bytes >= row_bytes * rowbufs, "size.bank_bytes must be a power of two");
    need(bank_bytes / row_bytes % rowbufs == 0, "rows per bank must divide evenly into subarrays");
    need(mesh_x * mesh_y == cores_per_proc, "noc.mesh_x * noc.mesh_y must equal topology.cores_per_proc");
    need(f_core > 0 && f_tsv % f_core == 0 && f_router % f_core == 0,
         "TSV and router clocks must be integer multiples of the core clock");
    need(tsv_bits_per_core > 0 && flit_bits > 0 && offchip_bits > 0, "link widths must be positive");
    need(bank_io_bits == 256, "dram.bank_io_bits other than 256 is not modeled");
    need(smem_banks > 0 && smem_bytes > 0, "shared memory size and bank count must be positive");
    need(far_rf_bytes >= 128 && near_rf_bytes >= 128, "register files must hold at least one warp register");
    need(max_warps_per_subcore > 0 && max_blocks_per_core > 0, "occupancy limits must be positive");
    need(tREFI > tRFC, "timing.tREFI must exceed timing.tRFC");
    need(burst_cycles > 0 && tCCD > 0, "burst_cycles and tCCD must be positive");
    need(tsv_weight_offload > 0 && tsv_weight_move > 0 && tsv_weight_dram > 0 && tsv_weight_smem > 0,
         "TSV class weights must be positive");
    for (const char* op : kAluOps)
        need(e_alu.count(op) == 1, std::string("missing ALU energy for '") + op + "'");
}

}  // namespace mpu
