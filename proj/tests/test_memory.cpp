// Copyright 2026 The MPU Simulator Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mpu/experiment.hpp"
#include "mpu/memory.hpp"

#include <random>

using namespace mpu;

namespace {

// Field extraction straight from the documented bit layout of the desk
// config: col 11 | nbu 2 | bank 2 | core 4 | row 13.
DramLocation slice(Addr a, std::uint32_t S) {
    DramLocation l;
    l.col = static_cast<std::uint32_t>(a & 0x7FF);
    l.nbu = static_cast<std::uint32_t>(a >> 11 & 3);
    l.bank = static_cast<std::uint32_t>(a >> 13 & 3);
    l.core = static_cast<std::uint32_t>(a >> 15 & 15);
    l.row_logical = static_cast<std::uint32_t>(a >> 19 & 0x1FFF);
    l.subarray = l.row_logical % S;
    l.physical_row = l.row_logical / S;
    return l;
}

struct Served {
    std::uint64_t id;
    Cycle at;
};

// Ticks until `n` requests complete; returns them in completion order.
std::vector<Served> drain(BankController& b, Cycle& now, std::size_t n) {
    std::vector<Served> out;
    while (out.size() < n) {
        if (auto i = b.tick(now))
            if (i->completed) out.push_back({*i->completed, now});
        ++now;
        REQUIRE(now < 100000);
    }
    return out;
}

DramTiming table() { return DramTiming::from(SimConfig::desk()); }

}  // namespace

TEST_CASE("address mapping round-trips a million random addresses") {
    SimConfig cfg = SimConfig::desk();
    cfg.rowbufs = 4;
    AddressMapping map(cfg);
    CHECK(map.capacity() == (Addr{1} << 32));
    std::mt19937_64 rng(7);
    for (int i = 0; i < 1'000'000; ++i) {
        const Addr a = rng() % map.capacity();
        const DramLocation l = map.decode(a);
        REQUIRE(l == slice(a, 4));
        REQUIRE(map.encode(l) == a);
    }
    CHECK_THROWS_AS(map.decode(map.capacity()), SimulationFault);
}

TEST_CASE("S=4 puts consecutive logical rows of a bank in distinct subarrays") {
    SimConfig cfg = SimConfig::desk();
    cfg.rowbufs = 4;
    AddressMapping map(cfg);
    const Addr row = Addr{1} << map.row_shift();
    for (std::uint32_t r = 0; r < 8; ++r) {
        const auto l = map.decode(r * row);
        CHECK(l.subarray == r % 4);
        CHECK(l.physical_row == r / 4);
        CHECK(map.global_bank(l) == map.global_bank(map.decode(0)));
    }
}

TEST_CASE("closed-bank read: ACT then RD after tRCD") {
    std::vector<CommandRecord> trace;
    BankController b(table(), 1, 0, 1'000'000);
    b.set_trace(&trace);
    b.enqueue(DramRequest{1, false, 0, 5, 64, 0, false});
    Cycle now = 0;
    auto s = drain(b, now, 1);
    REQUIRE(trace.size() == 2);
    CHECK(trace[0].cmd == DramCmd::ACT);
    CHECK(trace[0].cycle == 0);
    CHECK(trace[1].cmd == DramCmd::RD);
    CHECK(trace[1].cycle == 14);
    CHECK(b.stats().misses == 1);
}

TEST_CASE("FR-FCFS serves a younger row hit before an older miss") {
    BankController b(table(), 1, 0, 1'000'000);
    b.enqueue(DramRequest{1, false, 0, 5, 0, 0, false});
    Cycle now = 0;
    drain(b, now, 1);
    b.enqueue(DramRequest{2, false, 0, 7, 0, now, false});  // older, conflicts
    b.enqueue(DramRequest{3, false, 0, 5, 32, now, false});  // younger, hits
    auto s = drain(b, now, 2);
    CHECK(s[0].id == 3);
    CHECK(s[1].id == 2);
    CHECK(b.stats().hits == 1);
    CHECK(b.stats().misses == 2);
}

TEST_CASE("row conflict needs PRE and a fresh ACT; other subarrays stay open") {
    std::vector<CommandRecord> trace;
    BankController b(table(), 2, 0, 1'000'000);
    b.set_trace(&trace);
    b.enqueue(DramRequest{1, false, 0, 3, 0, 0, false});
    b.enqueue(DramRequest{2, false, 1, 9, 0, 0, false});
    Cycle now = 0;
    drain(b, now, 2);
    CHECK(b.open_row(0) == 3u);
    CHECK(b.open_row(1) == 9u);
    b.enqueue(DramRequest{3, false, 0, 4, 0, now, false});
    drain(b, now, 1);
    CHECK(b.open_row(0) == 4u);
    CHECK(b.open_row(1) == 9u);
    CHECK(b.stats().pres == 1);
    CHECK(check_command_trace(trace, table(), 2).ok());
}

TEST_CASE("idle bank refreshes floor(T / tREFI) times") {
    const DramTiming t = table();
    std::vector<CommandRecord> trace;
    BankController b(t, 4, 0, t.tREFI);
    b.set_trace(&trace);
    const Cycle T = 10ull * t.tREFI + 5;
    for (Cycle now = 0; now < T; ++now) b.tick(now);
    CHECK(b.stats().refs == T / t.tREFI);
    const auto rep = check_command_trace(trace, t, 4);
    CHECK(rep.ok());
    CHECK(rep.refreshes == 10);
}

TEST_CASE("legality checker flags each timing rule") {
    const DramTiming t = table();
    auto bad = [&](std::vector<CommandRecord> tr) { return !check_command_trace(tr, t, 1).ok(); };
    using C = DramCmd;
    CHECK_FALSE(bad({{0, 0, C::ACT, 0, 1, 0}, {14, 0, C::RD, 0, 1, 0}, {33, 0, C::PRE, 0, 1, 0}}));
    CHECK(bad({{0, 0, C::ACT, 0, 1, 0}, {13, 0, C::RD, 0, 1, 0}}));                              // tRCD
    CHECK(bad({{0, 0, C::ACT, 0, 1, 0}, {14, 0, C::RD, 0, 1, 0}, {15, 0, C::RD, 0, 1, 32}}));   // tCCD
    CHECK(bad({{0, 0, C::ACT, 0, 1, 0}, {32, 0, C::PRE, 0, 1, 0}}));                             // tRAS
    CHECK(bad({{0, 0, C::ACT, 0, 1, 0}, {40, 0, C::RD, 0, 1, 0}, {43, 0, C::PRE, 0, 1, 0}}));   // tRTP
    CHECK(bad({{0, 0, C::ACT, 0, 1, 0}, {33, 0, C::PRE, 0, 1, 0}, {46, 0, C::ACT, 0, 2, 0}}));  // tRP
    CHECK(bad({{0, 0, C::ACT, 0, 1, 0}, {20, 0, C::RD, 0, 2, 0}}));                              // wrong row
    CHECK(bad({{0, 0, C::RD, 0, 1, 0}}));                                                         // closed bank
    CHECK(bad({{0, 0, C::ACT, 0, 1, 0}, {5, 0, C::ACT, 0, 2, 0}}));                              // double ACT
}

TEST_CASE("command trace CSV round-trips") {
    auto r = experiment::random_dram_trace(SimConfig::desk(), 3, 2000);
    const auto back = parse_command_trace_csv(command_trace_csv(r.commands));
    REQUIRE(back.size() == r.commands.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].cycle == r.commands[i].cycle);
        CHECK(back[i].cmd == r.commands[i].cmd);
        CHECK(back[i].row == r.commands[i].row);
    }
}

TEST_CASE("random traces drain legally for every row-buffer count") {
    for (std::uint32_t S : {1u, 2u, 4u}) {
        SimConfig cfg = SimConfig::desk();
        cfg.rowbufs = S;
        auto r = experiment::random_dram_trace(cfg, 100 + S, 20000);
        CHECK(r.completed == 20000);
        CHECK(r.hits + r.misses == 20000);
        const auto rep = check_command_trace(r.commands, DramTiming::from(cfg), S);
        CHECK_MESSAGE(rep.ok(), (rep.violations.empty() ? "" : rep.violations.front()));
        CHECK(rep.refreshes > 0);
    }
}

TEST_CASE("shared-memory conflict degree") {
    std::array<std::uint64_t, kWarpSize> a{};
    for (int l = 0; l < kWarpSize; ++l) a[l] = 4u * l;
    CHECK(smem_conflict_degree(a, kFullMask, 4, 32) == 1);
    for (int l = 0; l < kWarpSize; ++l) a[l] = 8u * l;
    CHECK(smem_conflict_degree(a, kFullMask, 4, 32) == 2);
    for (int l = 0; l < kWarpSize; ++l) a[l] = 128u * l;
    CHECK(smem_conflict_degree(a, kFullMask, 4, 32) == 32);
    CHECK(smem_conflict_degree(a, 0x3u, 4, 32) == 2);
    for (int l = 0; l < kWarpSize; ++l) a[l] = 64;  // broadcast
    CHECK(smem_conflict_degree(a, kFullMask, 4, 32) == 1);
    for (int l = 0; l < kWarpSize; ++l) a[l] = 4u * (l * 129 % 4096);
    CHECK(smem_conflict_degree(a, kFullMask, 4, 32) == 1);
}
