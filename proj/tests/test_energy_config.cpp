// Copyright 2026 The MPU Simulator Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mpu/config.hpp"
#include "mpu/energy.hpp"

#include <json.hpp>

#include <random>

using namespace mpu;

TEST_CASE("defaults are the full MPU configuration") {
    const SimConfig c;
    CHECK(c.procs == 8);
    CHECK(c.dies == 4);
    CHECK(c.cores_per_proc == 16);
    CHECK(c.subcores == 4);
    CHECK(c.nbus == 4);
    CHECK(c.banks_per_nbu == 4);
    CHECK(c.rowbufs == 4);
    CHECK(c.bank_bytes == 16u << 20);
    CHECK(c.icache_bytes == 128u << 10);
    CHECK(c.far_rf_bytes == 32u << 10);
    CHECK(c.near_rf_bytes == 16u << 10);
    CHECK(c.smem_bytes == 64u << 10);
    CHECK(c.tRCD == 14);
    CHECK(c.tCCD == 2);
    CHECK(c.tRTP == 4);
    CHECK(c.tRP == 14);
    CHECK(c.tRAS == 33);
    CHECK(c.tRFC == 350);
    CHECK(c.tREFI == 3900);
    CHECK(c.capacity_bytes() == 32ull << 30);
    CHECK_NOTHROW(c.validate());

    const SimConfig d = SimConfig::desk();
    CHECK(d.procs == 1);
    CHECK(d.capacity_bytes() == 4ull << 30);
    CHECK(d.hash() != c.hash());
}

TEST_CASE("text round trip preserves the hash; overrides change it") {
    SimConfig c = SimConfig::desk();
    const SimConfig back = SimConfig::parse(c.dump(), SimConfig());
    CHECK(back.hash() == c.hash());
    CHECK(back.dump() == c.dump());

    const SimConfig o = SimConfig::parse("# ablation\ntopology.rowbufs = 2\npolicy.offload = all-far\n", c);
    CHECK(o.rowbufs == 2);
    CHECK(o.offload == OffloadPolicy::AllFar);
    CHECK(o.hash_hex() != c.hash_hex());
    CHECK(o.hash_hex().size() == 16);
    CHECK(o.get("topology.rowbufs") == "2");
}

TEST_CASE("config errors") {
    SimConfig c;
    CHECK_THROWS_AS(c.set("topology.nope", "1"), ConfigError);
    CHECK_THROWS_AS(c.set("topology.rowbufs", "four"), ConfigError);
    CHECK_THROWS_AS(c.set("policy.offload", "sideways"), ConfigError);
    CHECK_THROWS_AS(SimConfig::parse("topology.rowbufs\n"), ConfigError);
    c.rowbufs = 3;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = SimConfig();
    c.subcores = 2;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = SimConfig();
    c.mesh_x = 8;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    for (const auto& k : SimConfig::keys()) CHECK_NOTHROW(SimConfig().get(k));
}

TEST_CASE("per-event energies") {
    const SimConfig cfg;
    EnergyAccount acc(EnergyModel::from_config(cfg));
    acc.record(EnergyEvent::DramActPre);
    CHECK(acc.category_fj(EnergyCategory::Dram) == 270000);
    acc.record(EnergyEvent::TsvBit, 64);
    CHECK(acc.category_fj(EnergyCategory::Tsv) == 64ull * 4530);
    acc.record(EnergyEvent::RfAccess, 3);
    acc.record(EnergyEvent::OperandCollector, 2);
    CHECK(acc.category_fj(EnergyCategory::RfOpc) == 3ull * 40000 + 2ull * 41490);
    acc.record_alu(isa::Opcode::Mad, 2);
    CHECK(acc.category_fj(EnergyCategory::Alu) == 2 * cfg.e_alu.at("mad"));
    acc.record(EnergyEvent::ICacheFetch);
    acc.record(EnergyEvent::SchedulerIssue);
    CHECK(acc.category_fj(EnergyCategory::Other) == 8000 + 1500);
    CHECK(acc.events(EnergyEvent::TsvBit) == 64);
}

TEST_CASE("category sum equals total for random event mixes") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        EnergyAccount acc(EnergyModel::from_config(SimConfig()));
        std::uint64_t expect = 0;
        for (int i = 0; i < 50; ++i) {
            const auto e = static_cast<EnergyEvent>(rng() % (kEnergyEvents - 1));
            const std::uint64_t n = rng() % 100000;
            acc.record(e, n);
            expect += n * acc.model().cost(e);
        }
        std::uint64_t sum = 0;
        for (int c = 0; c < kEnergyCategories; ++c) sum += acc.category_fj(static_cast<EnergyCategory>(c));
        CHECK(sum == acc.total_fj());
        CHECK(sum == expect);
    }
}

TEST_CASE("energy table must be complete") {
    std::map<std::string, std::uint64_t> t;
    CHECK_THROWS_AS(EnergyModel::from_table(t), ConfigError);
    SimConfig c;
    c.e_alu.erase("div");
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("report CSV and JSON carry the same fields") {
    RunReport r;
    r.kernel = "k";
    r.config_hash = SimConfig().hash_hex();
    r.policy = "annotated";
    r.smem = "near";
    r.rowbufs = 4;
    r.cycles = 1234;
    r.tsv_bits = {8, 16, 24, 32};
    r.tsv_bits_total = 80;
    r.row_hits = 3;
    r.row_misses = 1;
    r.energy_fj = {1, 2, 3, 4, 5, 6};
    r.energy_total_fj = 21;
    const auto j = nlohmann::json::parse(r.to_json());
    CHECK(j.at("schema") == kReportSchemaVersion);
    CHECK(j.at("cycles") == 1234);
    CHECK(j.at("tsv_bytes").at("total") == 10);
    CHECK(j.at("dram").at("miss_rate") == doctest::Approx(0.25));

    auto split = [](const std::string& s) {
        std::vector<std::string> out(1);
        for (char ch : s) {
            if (ch == ',') out.emplace_back();
            else out.back() += ch;
        }
        return out;
    };
    CHECK(RunReport::csv_header().find('\n') == std::string::npos);
    const auto head = split(RunReport::csv_header());
    const auto row = split(r.csv_row());
    REQUIRE(head.size() == row.size());
    for (std::size_t i = 0; i < head.size(); ++i) {
        if (head[i] == "cycles") CHECK(row[i] == "1234");
        if (head[i] == "config_hash") CHECK(row[i] == r.config_hash);
    }
}
