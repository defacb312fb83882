// Copyright 2026 The MPU Simulator Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mpu/interconnect.hpp"

using namespace mpu;

namespace {

std::vector<TsvCompletion> run_until_idle(TsvBus& bus, Cycle& now) {
    std::vector<TsvCompletion> out;
    while (!bus.idle()) bus.tick(now++, out);
    return out;
}

}  // namespace

TEST_CASE("TSV occupancy is ceil(bits / width) TSV cycles") {
    TsvBus bus(64, 2, {1, 1, 1, 1});
    CHECK(bus.occupancy(1024) == 16);
    CHECK(bus.occupancy(2048) == 32);
    CHECK(bus.occupancy(32) == 1);
    CHECK(bus.occupancy(65) == 2);

    Cycle now = 10;
    bus.enqueue(TsvClass::Move, 1024, 1);
    auto done = run_until_idle(bus, now);
    REQUIRE(done.size() == 1);
    CHECK(done[0].done == 10 + 16 / 2);
    CHECK(bus.bits(TsvClass::Move) == 1024);
    CHECK(bus.busy_tsv_cycles() == 16);
}

TEST_CASE("back-to-back TSV transfers serialize") {
    TsvBus bus(64, 2, {1, 1, 1, 1});
    Cycle now = 0;
    for (std::uint64_t i = 0; i < 4; ++i) bus.enqueue(TsvClass::Offload, 128, i);
    auto done = run_until_idle(bus, now);
    REQUIRE(done.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(done[i].done == i + 1);  // 2 TSV cycles each
    while (now < 8) bus.tick(now++, done);
    CHECK(bus.total_bits() == 512);
}

TEST_CASE("equal weights alternate between busy classes") {
    TsvBus bus(64, 2, {1, 1, 1, 1});
    bus.keep_grant_log(true);
    for (int i = 0; i < 3; ++i) {
        bus.enqueue(TsvClass::Offload, 64, 0);
        bus.enqueue(TsvClass::Move, 64, 0);
    }
    Cycle now = 0;
    run_until_idle(bus, now);
    const std::vector<TsvClass> want{TsvClass::Offload, TsvClass::Move, TsvClass::Offload,
                                     TsvClass::Move,    TsvClass::Offload, TsvClass::Move};
    CHECK(bus.grant_log() == want);
}

TEST_CASE("weights give a class consecutive grants") {
    TsvBus bus(64, 1, {2, 1, 1, 1});
    bus.keep_grant_log(true);
    for (int i = 0; i < 4; ++i) bus.enqueue(TsvClass::Offload, 64, 0);
    for (int i = 0; i < 2; ++i) bus.enqueue(TsvClass::Dram, 64, 0);
    Cycle now = 0;
    run_until_idle(bus, now);
    const std::vector<TsvClass> want{TsvClass::Offload, TsvClass::Offload, TsvClass::Dram,
                                     TsvClass::Offload, TsvClass::Offload, TsvClass::Dram};
    CHECK(bus.grant_log() == want);
}

TEST_CASE("mesh hop counts") {
    MeshNoc noc(SimConfig::desk());
    CHECK(noc.hops(0, 15) == 6);
    CHECK(noc.hops(3, 12) == 6);
    CHECK(noc.hops(5, 6) == 1);
    CHECK(noc.hops(7, 7) == 0);
    CHECK(noc.flits(128) == 1);
    CHECK(noc.flits(257) == 2);
}

TEST_CASE("uncontended latency: hops x (router + link) plus tail flits, in core cycles") {
    const SimConfig cfg = SimConfig::desk();
    auto expect = [&](std::uint32_t hops, std::uint64_t flits) {
        const std::uint64_t router_cycles = hops * (cfg.router_cycles + cfg.link_cycles) + (flits - 1) * cfg.link_cycles;
        return std::max<Cycle>(1, (router_cycles + cfg.noc_ratio() - 1) / cfg.noc_ratio());
    };
    for (auto [src, dst, bits] : std::vector<std::tuple<int, int, int>>{{0, 1, 128}, {0, 15, 128}, {5, 9, 1024}, {2, 2, 64}}) {
        MeshNoc noc(cfg);
        const auto f = noc.flits(bits);
        CHECK(noc.send(src, dst, bits, 100) == 100 + expect(noc.hops(src, dst), f));
        CHECK(noc.stats().bit_hops == static_cast<std::uint64_t>(bits) * noc.hops(src, dst));
    }
}

TEST_CASE("two packets on one link queue behind each other") {
    const SimConfig cfg = SimConfig::desk();
    const std::uint64_t R = cfg.router_cycles, L = cfg.link_cycles, ratio = cfg.noc_ratio();
    MeshNoc noc(cfg);
    const Cycle a = noc.send(0, 1, 256 * 8, 0);  // 8 flits hold the link for 8 link cycles
    const Cycle b = noc.send(0, 1, 256, 0);
    CHECK(a == (R + L + 7 * L + ratio - 1) / ratio);
    // The second head waits until the link frees at R + 8L, then crosses it.
    CHECK(b == (R + 8 * L + L + ratio - 1) / ratio);
    // A disjoint link is unaffected.
    CHECK(noc.send(4, 5, 256, 0) == (R + L + ratio - 1) / ratio);
}

TEST_CASE("cross-processor packets use the off-chip link") {
    SimConfig cfg;
    cfg.procs = 2;
    MeshNoc noc(cfg);
    const Cycle t = noc.send(5, 16 + 5, 128, 0);
    CHECK(noc.stats().offchip_bits == 128);
    CHECK(t >= cfg.offchip_latency);
}
