// Copyright 2026 The MPU Simulator Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mpu/alu.hpp"
#include "mpu/core.hpp"
#include "mpu/interpreter.hpp"
#include "mpu/lsu.hpp"

#include <bit>
#include <random>
#include <set>

using namespace mpu;
using namespace mpu::isa;
using namespace mpu::core;

namespace {

RegisterId R(const char* t) { return *parse_register(t); }

std::uint64_t f(float v) { return std::bit_cast<std::uint32_t>(v); }

const char* kAxpy = R"(.kernel axpy .smem 0
.grid 8 128
    mov.u32 %r1, %ctaid.x
    mov.u32 %r2, %ntid.x
    mov.u32 %r3, %tid.x
    mad.u32 %r4, %r1, %r2, %r3
    mul.u32 %r4, %r4, 4
    cvt.u64.u32 %rd1, %r4
    add.u64 %rd2, %rd1, 65536
    ld.global.f32 %f1, [%rd1]
    ld.global.f32 %f2, [%rd2]
    mad.f32 %f3, %f1, 2.0, %f2
    st.global.f32 [%rd2], %f3
    exit
)";

const char* kReduce = R"(.kernel reduce .smem 1024
.grid 1 256
    mov.u32 %r1, %tid.x
    add.u32 %r2, %r1, 1
    mul.u32 %r3, %r1, 4
    st.shared.u32 [%r3], %r2
    bar.sync 0
    mov.u32 %r4, 128
loop:
    setp.lt.u32 %p1, %r1, %r4
@!%p1 bra skip
    mad.u32 %r5, %r4, 4, %r3
    ld.shared.u32 %r6, [%r5]
    ld.shared.u32 %r7, [%r3]
    add.u32 %r7, %r7, %r6
    st.shared.u32 [%r3], %r7
skip:
    bar.sync 0
    div.u32 %r4, %r4, 2
    setp.gt.u32 %p2, %r4, 0
@%p2 bra loop
    setp.eq.u32 %p3, %r1, 0
@!%p3 bra done
    ld.shared.u32 %r8, [%r3]
    mov.u64 %rd1, 4096
    st.global.u32 [%rd1], %r8
done:
    exit
)";

const char* kGemv = R"(.kernel gemv .smem 0
.grid 1 32
    mov.u32 %r1, %tid.x
    mul.u32 %r2, %r1, 128
    mov.u32 %r3, 0
    mov.f32 %f1, 0.0
loop:
    mad.u32 %r4, %r3, 4, %r2
    cvt.u64.u32 %rd1, %r4
    ld.global.f32 %f2, [%rd1]
    mad.u32 %r5, %r3, 4, 8192
    cvt.u64.u32 %rd2, %r5
    ld.global.f32 %f3, [%rd2]
    mad.f32 %f1, %f2, %f3, %f1
    add.u32 %r3, %r3, 1
    setp.lt.u32 %p1, %r3, 32
@%p1 bra loop
    mad.u32 %r6, %r1, 4, 16384
    cvt.u64.u32 %rd3, %r6
    st.global.f32 [%rd3], %f1
    exit
)";

}  // namespace

TEST_CASE("ALU lane semantics") {
    auto run = [](const char* text, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
        return alu::execute(parse_instruction(text), a, b, c);
    };
    CHECK(run("add.s32 %r1, %r2, %r3", 5, static_cast<std::uint32_t>(-7)) == static_cast<std::uint32_t>(-2));
    CHECK(run("add.u32 %r1, %r2, %r3", 0xFFFFFFFFu, 2) == 1);
    CHECK(run("div.s32 %r1, %r2, %r3", static_cast<std::uint32_t>(-7), 2) == static_cast<std::uint32_t>(-3));
    CHECK(run("min.s32 %r1, %r2, %r3", static_cast<std::uint32_t>(-1), 3) == static_cast<std::uint32_t>(-1));
    CHECK(run("min.u32 %r1, %r2, %r3", static_cast<std::uint32_t>(-1), 3) == 3);
    CHECK(run("mad.f32 %f1, %f2, %f3, %f4", f(1.5f), f(2.0f), f(0.25f)) == f(3.25f));
    CHECK(run("setp.lt.s32 %p1, %r1, %r2", static_cast<std::uint32_t>(-1), 0) == 1);
    CHECK(run("setp.lt.u32 %p1, %r1, %r2", static_cast<std::uint32_t>(-1), 0) == 0);
    CHECK(run("cvt.u64.u32 %rd1, %r1", 0xFFFFFFFFu) == 0xFFFFFFFFull);
    CHECK(run("cvt.f32.s32 %f1, %r1", static_cast<std::uint32_t>(-3)) == f(-3.0f));
    CHECK(run("cvt.s32.f32 %r1, %f1", f(-2.75f)) == static_cast<std::uint32_t>(-2));
    CHECK(run("add.u64 %rd1, %rd2, %rd3", 1ull << 40, 1) == (1ull << 40) + 1);
    CHECK_THROWS_AS(run("div.u32 %r1, %r2, %r3", 4, 0), SimulationFault);
    CHECK_THROWS_AS(run("div.s32 %r1, %r2, %r3", 4, 0), SimulationFault);
}

TEST_CASE("interpreter: axpy") {
    MemoryImage m;
    std::vector<float> x(1024);
    for (int i = 0; i < 1024; ++i) x[static_cast<std::size_t>(i)] = static_cast<float>(i);
    m.write_f32(0, x);
    const auto st = interpret_reference(parse_kernel(kAxpy), m);
    const auto y = m.read_f32(65536, 1024);
    for (int i = 0; i < 1024; ++i) REQUIRE(y[static_cast<std::size_t>(i)] == 2.0f * static_cast<float>(i));
    CHECK(st.global_loads == 2048);
    CHECK(st.global_stores == 1024);
}

TEST_CASE("interpreter: shared-memory tree reduction") {
    MemoryImage m;
    interpret_reference(parse_kernel(kReduce), m);
    CHECK(m.read32(4096) == 256 * 257 / 2);
}

TEST_CASE("interpreter: identity GEMV") {
    MemoryImage m;
    std::vector<float> a(32 * 32, 0.0f), x(32);
    for (int i = 0; i < 32; ++i) {
        a[static_cast<std::size_t>(i * 33)] = 1.0f;
        x[static_cast<std::size_t>(i)] = 0.5f * static_cast<float>(i) - 3.0f;
    }
    m.write_f32(0, a);
    m.write_f32(8192, x);
    interpret_reference(parse_kernel(kGemv), m);
    CHECK(m.read_f32(16384, 32) == x);
}

TEST_CASE("interpreter faults") {
    MemoryImage m;
    CHECK_THROWS_AS(interpret_reference(parse_kernel(".kernel k .smem 0\n.grid 1 32\n mov.u32 %r1, 0\n div.u32 %r2, %r1, %r1\n exit\n"), m),
                    SimulationFault);
    CHECK_THROWS_AS(interpret_reference(parse_kernel(".kernel k .smem 0\n.grid 1 32\n add.u32 %r2, %r1, 1\n exit\n"), m),
                    SimulationFault);
    CHECK_THROWS_AS(
        interpret_reference(parse_kernel(".kernel k .smem 0\n.grid 1 32\n mov.u64 %rd1, 2\n ld.global.f32 %f1, [%rd1]\n exit\n"), m),
        SimulationFault);
    CHECK_THROWS_AS(
        interpret_reference(parse_kernel(".kernel k .smem 64\n.grid 1 32\n mov.u32 %r1, 64\n ld.shared.u32 %r2, [%r1]\n exit\n"), m),
        SimulationFault);
}

TEST_CASE("far set") {
    CHECK(in_far_set(parse_instruction("ld.global.f32 %f1, [%rd1]")));
    CHECK(in_far_set(parse_instruction("st.global.f32 [%rd1], %f1")));
    CHECK(in_far_set(parse_instruction("setp.lt.s32 %p1, %r1, %r2")));
    CHECK(in_far_set(parse_instruction("bar.sync 0")));
    CHECK(in_far_set(parse_instruction("exit")));
    CHECK_FALSE(in_far_set(parse_instruction("add.f32 %f1, %f2, %f3")));
    CHECK_FALSE(in_far_set(parse_instruction("ld.shared.f32 %f1, [%r1]")));
}

TEST_CASE("instruction location decisions") {
    const Kernel k = parse_kernel(".kernel k .smem 0\n.grid 1 32\n add.f32 %f1, %f2, %f3\n mov.u32 %r1, %tid.x\n exit\n");
    RegisterIndex idx(k);
    TrackTable tt(idx);
    const auto add = parse_instruction("add.f32 %f1, %f2, %f3");
    auto set = [&](const char* r, bool fb, bool nb) { tt.at(idx.of(R(r))) = TrackEntry{fb, nb}; };

    CHECK(decide_instruction_location(parse_instruction("ld.global.f32 %f1, [%rd1] @N"), tt, OffloadPolicy::Annotated) ==
          Location::F);
    set("%f2", true, true);
    set("%f3", true, true);
    CHECK(decide_instruction_location(add, tt, OffloadPolicy::HwDefault) == Location::N);
    set("%f3", true, false);
    CHECK(decide_instruction_location(add, tt, OffloadPolicy::HwDefault) == Location::F);
    CHECK(decide_instruction_location(add, tt, OffloadPolicy::AllNear) == Location::N);
    CHECK(decide_instruction_location(add, tt, OffloadPolicy::AllNear, true) == Location::F);
    CHECK(decide_instruction_location(parse_instruction("add.f32 %f1, %f2, %f3 @N"), tt, OffloadPolicy::Annotated) ==
          Location::N);
    CHECK(decide_instruction_location(parse_instruction("add.f32 %f1, %f2, %f3 @F"), tt, OffloadPolicy::Annotated) ==
          Location::F);
    // No register sources: nothing argues for offloading.
    CHECK(decide_instruction_location(parse_instruction("mov.u32 %r1, %tid.x"), tt, OffloadPolicy::HwDefault) ==
          Location::F);
    CHECK(decide_instruction_location(parse_instruction("mov.u32 %r1, 7"), tt, OffloadPolicy::HwDefault) == Location::F);
    CHECK(decide_instruction_location(parse_instruction("ld.shared.f32 %f1, [%r1]"), tt, OffloadPolicy::AllFar) ==
          Location::N);
    CHECK(decide_instruction_location(parse_instruction("ld.shared.f32 %f1, [%r1]"), tt, OffloadPolicy::AllFar, true) ==
          Location::F);
}

TEST_CASE("register locations and moves") {
    using O = OperandLocation;
    const auto ld = parse_instruction("@%p1 ld.global.f32 %f1, [%rd1]");
    CHECK(decide_register_locations(ld, Location::F) ==
          std::vector<O>{{R("%p1"), Location::F, false}, {R("%rd1"), Location::F, false}, {R("%f1"), Location::N, true}});
    CHECK(decide_register_locations(ld, Location::F, true)[2].loc == Location::F);
    const auto st = parse_instruction("st.shared.u32 [%r1], %r2");
    CHECK(decide_register_locations(st, Location::N) ==
          std::vector<O>{{R("%r1"), Location::N, false}, {R("%r2"), Location::N, false}});
    const auto mad = parse_instruction("mad.f32 %f1, %f2, 2.0, %f1");
    CHECK(decide_register_locations(mad, Location::N) ==
          std::vector<O>{{R("%f2"), Location::N, false}, {R("%f1"), Location::N, false}, {R("%f1"), Location::N, true}});
    CHECK(decide_register_locations(parse_instruction("mov.u32 %r1, %tid.x"), Location::F) ==
          std::vector<O>{{R("%r1"), Location::F, true}});

    const Kernel k = parse_kernel(".kernel k .smem 0\n.grid 1 32\n add.f32 %f1, %f2, %f3\n exit\n");
    RegisterIndex idx(k);
    TrackTable tt(idx);
    tt.on_write(R("%f2"), Location::F);
    tt.on_write(R("%f3"), Location::N);
    const auto req = decide_register_locations(parse_instruction("add.f32 %f1, %f2, %f3"), Location::N);
    CHECK(plan_register_moves(req, tt) == std::vector<MoveRequest>{{R("%f2"), Location::F, Location::N}});
    tt.on_write(R("%f1"), Location::F);
    CHECK(plan_register_moves(req, tt, true).size() == 2);
    tt.on_move(R("%f2"));
    CHECK(tt.get(R("%f2")) == TrackEntry{true, true});
    tt.on_write(R("%f2"), Location::N);
    CHECK(tt.get(R("%f2")) == TrackEntry{false, true});
    CHECK(tt.get(special_reg(Special::TidX)) == TrackEntry{true, true});

    TrackTable fresh(idx);
    CHECK_THROWS_AS(plan_register_moves(req, fresh), SimulationFault);
    CHECK_THROWS_AS(fresh.on_write(special_reg(Special::TidX), Location::F), SimulationFault);
}

TEST_CASE("SIMT stack: diamond reconverges") {
    // 0: @p bra 3   1: a   2: bra 5   3: b   4: c   5: join
    SimtStack s;
    s.branch(3, 0x0000FFFFu, 5);
    CHECK(s.entries().size() == 3);
    CHECK(s.pc() == 3);
    CHECK(s.mask() == 0x0000FFFFu);
    s.advance();
    s.advance();
    CHECK(s.pc() == 1);
    CHECK(s.mask() == 0xFFFF0000u);
    s.advance();
    s.branch(5, s.mask(), kNoReconvergence);
    CHECK(s.entries().size() == 1);
    CHECK(s.pc() == 5);
    CHECK(s.mask() == kFullMask);

    SimtStack u;
    u.branch(7, kFullMask, 9);
    CHECK(u.entries().size() == 1);
    CHECK(u.pc() == 7);
    u.branch(2, 0, 4);
    CHECK(u.pc() == 8);

    SimtStack e;
    e.branch(3, 0x1u, 5);
    e.exit(0x1u);
    CHECK(e.pc() == 1);
    CHECK(e.mask() == kFullMask - 1);
    e.exit(e.mask());
    CHECK(e.done());
}

TEST_CASE("warp schedulers") {
    WarpScheduler lrr(SchedulerPolicy::LooseRoundRobin);
    CHECK(lrr.schedule_warp({0, 1, 2}) == 0u);
    CHECK(lrr.schedule_warp({0, 1, 2}) == 1u);
    CHECK(lrr.schedule_warp({0, 2}) == 2u);
    CHECK(lrr.schedule_warp({0, 1}) == 0u);
    CHECK_FALSE(lrr.schedule_warp({}).has_value());

    WarpScheduler gto(SchedulerPolicy::GreedyThenOldest);
    CHECK(gto.schedule_warp({0, 1, 2}) == 0u);
    CHECK(gto.schedule_warp({0, 1, 2}) == 0u);
    CHECK(gto.schedule_warp({1, 2}) == 1u);
    CHECK(gto.schedule_warp({0, 1}) == 1u);
    CHECK(gto.schedule_warp({0, 2}) == 0u);
}

TEST_CASE("coalescing matches a brute-force segment oracle") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 5000; ++trial) {
        lsu::MemoryAccess a;
        a.width = rng() % 2 ? 4 : 8;
        const Addr base = (rng() % 4096) * a.width;
        const int shape = static_cast<int>(rng() % 3);
        for (int l = 0; l < kWarpSize; ++l) {
            const Addr off = shape == 0 ? l * a.width : shape == 1 ? (rng() % 64) * a.width : (l ^ 1) * a.width;
            a.addr[static_cast<std::size_t>(l)] = base + off;
        }
        a.mask = rng() % 2 ? kFullMask : static_cast<LaneMask>(rng());
        const auto c = lsu::coalesce(a, a.mask);

        std::map<Addr, LaneMask> want;
        bool perfect = a.mask == kFullMask && a.addr[0] % 32 == 0;
        for (int l = 0; l < kWarpSize; ++l) {
            const Addr x = a.addr[static_cast<std::size_t>(l)];
            if (x != a.addr[0] + static_cast<Addr>(l) * a.width) perfect = false;
            if (a.mask >> l & 1) want[x / 32 * 32] |= LaneMask{1} << l;
        }
        REQUIRE(c.transactions.size() == want.size());
        std::size_t i = 0;
        for (const auto& [seg, lanes] : want) {
            CHECK(c.transactions[i].base == seg);
            CHECK(c.transactions[i].lanes == lanes);
            ++i;
        }
        CHECK(c.perfectly_coalesced == perfect);
    }
}

TEST_CASE("local/remote split and near-bank fast path") {
    const AddressMapping map(SimConfig::desk());
    constexpr Addr kCore = Addr{1} << 15, kNbu = Addr{1} << 11;
    lsu::MemoryAccess a;
    a.mask = kFullMask;
    for (int l = 0; l < kWarpSize; ++l) a.addr[static_cast<std::size_t>(l)] = 3 * kCore + 2 * kNbu + 4u * l;

    auto s = lsu::split_local_remote(a, map, 3);
    CHECK(s.local == kFullMask);
    CHECK(s.remote.empty());
    const auto c = lsu::coalesce(a, a.mask);
    CHECK(c.perfectly_coalesced);
    CHECK(c.transactions.size() == 4);
    CHECK(lsu::decide_nearbank_ldst_offload(a, true, 2, 3, map, false));
    CHECK_FALSE(lsu::decide_nearbank_ldst_offload(a, true, 1, 3, map, false));
    CHECK_FALSE(lsu::decide_nearbank_ldst_offload(a, false, 2, 3, map, false));

    s = lsu::split_local_remote(a, map, 5);
    CHECK(s.local == 0);
    REQUIRE(s.remote.size() == 1);
    CHECK(s.remote.at(3) == kFullMask);

    for (int l = 16; l < kWarpSize; ++l) a.addr[static_cast<std::size_t>(l)] = 7 * kCore + 4u * l;
    s = lsu::split_local_remote(a, map, 3);
    CHECK(s.local == 0x0000FFFFu);
    CHECK(s.remote.at(7) == 0xFFFF0000u);
    CHECK_FALSE(lsu::decide_nearbank_ldst_offload(a, false, 2, 3, map, true));

    a.addr[0] = map.capacity();
    CHECK_THROWS_AS(lsu::split_local_remote(a, map, 3), SimulationFault);
    a.mask = kFullMask - 1;
    CHECK_NOTHROW(lsu::split_local_remote(a, map, 3));
}

TEST_CASE("LSU extension regenerates lane addresses inside one NBU") {
    const AddressMapping map(SimConfig::desk());
    const auto v = lsu::lsu_extension_expand(4096 + 256, 4, map);
    for (int l = 0; l < kWarpSize; ++l) CHECK(v[static_cast<std::size_t>(l)] == 4096 + 256 + 4u * l);
    CHECK_NOTHROW(lsu::lsu_extension_expand(2048 - 128, 4, map));
    CHECK_THROWS_AS(lsu::lsu_extension_expand(2048 - 64, 4, map), SimulationFault);
    CHECK_THROWS_AS(lsu::lsu_extension_expand(2048 - 128, 8, map), SimulationFault);
}
