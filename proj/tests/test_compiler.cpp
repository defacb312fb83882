// Copyright 2026 The MPU Simulator Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mpu/compiler.hpp"
#include "support/random_kernels.hpp"

#include <random>
#include <set>

using namespace mpu;
using namespace mpu::isa;
using namespace mpu::compiler;

namespace {

RegisterId R(const char* t) { return *parse_register(t); }

// d post-dominates i iff the virtual exit is unreachable from i once d is removed.
bool brute_postdominates(const Kernel& k, std::uint32_t d, std::uint32_t i) {
    const auto succ = successors(k);
    const auto n = static_cast<std::uint32_t>(k.instructions.size());
    if (d == i) return true;
    std::vector<char> seen(n + 1, 0);
    std::vector<std::uint32_t> work{i};
    while (!work.empty()) {
        auto v = work.back();
        work.pop_back();
        if (v == d || seen[v]) continue;
        seen[v] = 1;
        if (v == n) return false;
        for (auto s : succ[v]) work.push_back(s);
    }
    return true;
}

std::uint32_t brute_ipdom(const Kernel& k, std::uint32_t i) {
    const auto n = static_cast<std::uint32_t>(k.instructions.size());
    std::vector<std::uint32_t> strict;
    for (std::uint32_t d = 0; d <= n; ++d)
        if (d != i && brute_postdominates(k, d, i)) strict.push_back(d);
    for (auto c : strict) {
        bool closest = true;
        for (auto o : strict)
            if (o != c && !brute_postdominates(k, o, c)) closest = false;
        if (closest) return c;
    }
    return n;
}

bool reaches_exit(const Kernel& k, std::uint32_t i) { return !brute_postdominates(k, static_cast<std::uint32_t>(-2), i); }

// Live at i: some path from i reaches a use of r before an unguarded write of r.
bool brute_live_in(const Kernel& k, const RegisterId& r, std::uint32_t i) {
    const auto succ = successors(k);
    const auto n = static_cast<std::uint32_t>(k.instructions.size());
    std::vector<char> seen(n + 1, 0);
    std::vector<std::uint32_t> work{i};
    while (!work.empty()) {
        auto v = work.back();
        work.pop_back();
        if (v >= n || seen[v]) continue;
        seen[v] = 1;
        const Instruction& ins = k.instructions[v];
        auto srcs = source_registers(ins);
        if (std::find(srcs.begin(), srcs.end(), r) != srcs.end()) return true;
        if (ins.guard && ins.guard->reg == r) return true;
        if (ins.dst && *ins.dst == r && !ins.guard) continue;
        for (auto s : succ[v]) work.push_back(s);
    }
    return false;
}

const char* kAxpyChain = R"(.kernel axpy .smem 0
.grid 1 32
    cvt.u64.u32 %rd1, %tid.x
    mul.u64 %rd2, %rd1, 4
    add.u64 %rd3, %rd2, 4096
    ld.global.f32 %f1, [%rd3]
    mul.f32 %f2, %f1, 2.0
    add.u64 %rd4, %rd2, 1048576
    st.global.f32 [%rd4], %f2
    exit
)";

const char* kAxpyLoop = R"(.kernel axpy_loop .smem 0
.grid 1 32
    cvt.u64.u32 %rd1, %tid.x
    mul.u64 %rd2, %rd1, 4
    mov.u32 %r1, 0
loop:
    ld.global.f32 %f1, [%rd2]
    mul.f32 %f2, %f1, 2.0
    st.global.f32 [%rd2], %f2
    add.u64 %rd2, %rd2, 128
    add.s32 %r1, %r1, 1
    setp.lt.s32 %p1, %r1, 8
@%p1 bra loop
    exit
)";

}  // namespace

TEST_CASE("branch analysis examples") {
    SUBCASE("straight line") {
        CHECK(analyze_branches(parse_kernel(kAxpyChain)).empty());
    }
    SUBCASE("diamond") {
        Kernel k = parse_kernel(R"(.kernel d .smem 0
    setp.lt.s32 %p1, %tid.x, 16
@%p1 bra else
    mov.u32 %r1, 1
    bra join
else:
    mov.u32 %r1, 2
join:
    add.s32 %r2, %r1, 1
    exit
)");
        auto m = analyze_branches(k);
        REQUIRE(m.size() == 1);
        CHECK(m.at(1) == 5);
        CHECK(brute_ipdom(k, 1) == 5);
    }
    SUBCASE("counted loop") {
        Kernel k = parse_kernel(kAxpyLoop);
        auto m = analyze_branches(k);
        REQUIRE(m.size() == 1);
        CHECK(m.at(9) == 10);
    }
    SUBCASE("no post-dominator before exit") {
        Kernel k = parse_kernel(R"(.kernel x .smem 0
    setp.lt.s32 %p1, %tid.x, 16
@%p1 bra other
    exit
other:
    exit
)");
        auto m = analyze_branches(k);
        CHECK(m.at(1) == 3);  // the last exit
    }
}

TEST_CASE("post-dominators match brute force on random kernels") {
    std::mt19937_64 rng(mpu::testing::test_seed() + 1);
    for (int n = 0; n < 150; ++n) {
        Kernel k = mpu::testing::random_kernel(rng, {4, 30, 4, true});
        const auto ip = immediate_post_dominators(k);
        const auto sz = static_cast<std::uint32_t>(k.instructions.size());
        for (std::uint32_t i = 0; i < sz; ++i) {
            if (!reaches_exit(k, i)) continue;
            CHECK(ip[i] == brute_ipdom(k, i));
        }
        for (auto [b, rpc] : analyze_branches(k)) {
            CHECK(k.instructions[b].guard.has_value());
            CHECK(brute_postdominates(k, rpc, b));
        }
    }
}

TEST_CASE("annotation examples") {
    SUBCASE("store only") {
        Kernel k = parse_kernel(".kernel s .smem 0\n    st.global.f32 [%rd1], %f1\n    exit\n");
        auto t = annotate_locations(k);
        CHECK(t.of(R("%rd1")) == Location::F);
        CHECK(t.of(R("%f1")) == Location::N);
    }
    SUBCASE("exit only") {
        auto t = annotate_locations(parse_kernel(".kernel e .smem 0\n    exit\n"));
        CHECK(t.reg_loc.empty());
        CHECK(t.instr_loc == std::vector<Location>{Location::F});
    }
    SUBCASE("axpy chain") {
        Kernel k = parse_kernel(kAxpyLoop);
        auto t = annotate_locations(k);
        CHECK(t.of(R("%f1")) == Location::N);
        CHECK(t.of(R("%f2")) == Location::N);
        CHECK(t.of(R("%rd1")) == Location::F);
        CHECK(t.of(R("%rd2")) == Location::F);
        CHECK(t.of(R("%r1")) == Location::F);
        CHECK(t.of(R("%p1")) == Location::F);
        CHECK(t.instr_loc[4] == Location::N);  // mul.f32
        CHECK(t.instr_loc[3] == Location::N);  // ld.global takes its destination's location
        CHECK(t.instr_loc[5] == Location::F);
        auto b = location_report(t);
        CHECK(b.near == 2);
        CHECK(b.far == 4);
        CHECK(b.both == 0);
        CHECK(b.pct_n == doctest::Approx(100.0 * 2 / 6));
    }
    SUBCASE("value used for both address and data becomes B") {
        Kernel k = parse_kernel(R"(.kernel b .smem 0
    cvt.u64.u32 %rd1, %tid.x
    st.global.u64 [%rd1], %rd1
    exit
)");
        auto t = annotate_locations(k);
        CHECK(t.of(R("%rd1")) == Location::B);
        CHECK(t.instr_loc[0] == Location::F);
    }
    SUBCASE("shared memory operands are near") {
        Kernel k = parse_kernel(R"(.kernel sm .smem 128
    mul.s32 %r1, %tid.x, 4
    ld.shared.f32 %f1, [%r1]
    add.f32 %f2, %f1, %f1
    st.shared.f32 [%r1], %f2
    exit
)");
        auto t = annotate_locations(k);
        CHECK(t.of(R("%r1")) == Location::N);
        CHECK(t.of(R("%f1")) == Location::N);
        CHECK(t.of(R("%f2")) == Location::N);
        CHECK(t.instr_loc[0] == Location::N);
    }
    SUBCASE("a dead destination defaults to F and pulls its sources along") {
        Kernel k = parse_kernel(R"(.kernel d .smem 128
    mov.u32 %r1, 4
    st.shared.u32 [%r1], %r1
    cvt.u64.u32 %rd1, %r1
    exit
)");
        auto t = annotate_locations(k);
        CHECK(t.of(R("%rd1")) == Location::F);
        CHECK(t.of(R("%r1")) == Location::B);
        CHECK(t.instr_loc[2] == Location::F);
    }
    SUBCASE("all-far kernel report") {
        Kernel k = parse_kernel(".kernel f .smem 0\n    mov.u32 %r1, 3\n    setp.eq.s32 %p1, %r1, 3\n    exit\n");
        auto b = location_report(annotate_locations(k));
        CHECK(b.pct_n == 0.0);
        CHECK(b.pct_f == 100.0);
        CHECK(b.pct_b == 0.0);
    }
}

TEST_CASE("annotation properties on random kernels") {
    std::mt19937_64 rng(mpu::testing::test_seed() + 2);
    for (int n = 0; n < 300; ++n) {
        Kernel k = mpu::testing::random_kernel(rng);
        auto t = annotate_locations(k);
        const auto regs = collect_registers(k);
        CHECK(t.passes <= regs.size() + 1);
        for (const auto& [r, l] : t.reg_loc) CHECK(l != Location::U);
        CHECK(annotate_locations(k) == t);
        CHECK(annotate_locations(apply_annotation(k, t)) == t);
        for (const auto& ins : k.instructions) {
            if (ins.op == Opcode::LdGlobal) {
                auto a = t.of(*address_register(ins));
                CHECK((a == Location::F || a == Location::B));
                auto d = t.of(*ins.dst);
                CHECK((d == Location::N || d == Location::B));
            }
        }
        auto b = location_report(t);
        if (!regs.empty()) CHECK(b.pct_n + b.pct_f + b.pct_b == doctest::Approx(100.0));
    }
}

TEST_CASE("allocation examples") {
    SUBCASE("disjoint far registers share a slot") {
        Kernel k = parse_kernel(R"(.kernel a .smem 0
    mov.u32 %r1, 1
    setp.eq.s32 %p1, %r1, 1
    mov.u32 %r2, 2
    setp.eq.s32 %p2, %r2, 2
    exit
)");
        auto a = compile(k);
        CHECK(a.phys_far.at(R("%r1")) == a.phys_far.at(R("%r2")));
        CHECK(a.near_slots_used == 0);
        CHECK(a.phys_near.empty());
    }
    SUBCASE("B register gets both slots") {
        Kernel k = parse_kernel(".kernel b .smem 0\n    cvt.u64.u32 %rd1, %tid.x\n    st.global.u64 [%rd1], %rd1\n    exit\n");
        auto a = compile(k);
        CHECK(a.phys_far.count(R("%rd1")) == 1);
        CHECK(a.phys_near.count(R("%rd1")) == 1);
        CHECK(a.far_slots_used == 2);
        CHECK(a.near_slots_used == 2);
    }
    SUBCASE("axpy chain") {
        auto a = compile(parse_kernel(kAxpyChain));
        CHECK(a.near_slots_used == 2);  // %f1 and %f2 overlap at the mul
        CHECK(a.phys_near.size() == 2);
        CHECK(a.phys_far.count(R("%f1")) == 0);
        CHECK(a.phys_near.count(R("%rd2")) == 0);
    }
    SUBCASE("use before definition") {
        Kernel k = parse_kernel(".kernel u .smem 0\n    add.s32 %r1, %r2, 1\n    setp.eq.s32 %p1, %r1, 0\n    exit\n");
        try {
            compile(k);
            FAIL("expected CompileError");
        } catch (const CompileError& e) {
            CHECK(std::string(e.what()).find("%r2") != std::string::npos);
            CHECK(std::string(e.what()).find("instruction 0") != std::string::npos);
        }
    }
    SUBCASE("use defined on one path only") {
        Kernel k = parse_kernel(R"(.kernel u .smem 0
    setp.lt.s32 %p1, %tid.x, 3
@%p1 bra skip
    mov.u32 %r1, 4
skip:
    add.s32 %r2, %r1, 1
    exit
)");
        CHECK_THROWS_AS(compile(k), CompileError);
    }
    SUBCASE("capacity") {
        Kernel k = parse_kernel(R"(.kernel c .smem 0
    mov.u32 %r1, 1
    mov.u32 %r2, 2
    mov.u32 %r3, 3
    add.s32 %r4, %r1, %r2
    add.s32 %r5, %r4, %r3
    setp.eq.s32 %p1, %r5, 0
    exit
)");
        CHECK_THROWS_AS(compile(k, true, RfCapacity{3, 2}), CompileError);
        CHECK_NOTHROW(compile(k, true, RfCapacity{4, 2}));
    }
}

TEST_CASE("allocation soundness against path-based liveness") {
    std::mt19937_64 rng(mpu::testing::test_seed() + 3);
    for (int n = 0; n < 120; ++n) {
        Kernel k = mpu::testing::random_kernel(rng, {4, 25, 4, true});
        for (bool annotated : {true, false}) {
            AllocatedKernel a = compile(k, annotated);
            const auto regs = collect_registers(k);
            const auto nins = static_cast<std::uint32_t>(k.instructions.size());
            for (std::uint32_t i = 0; i < nins; ++i) {
                std::vector<RegisterId> live;
                for (const auto& r : regs)
                    if (brute_live_in(k, r, i) || (k.instructions[i].dst && *k.instructions[i].dst == r)) live.push_back(r);
                for (auto* file : {&a.phys_far, &a.phys_near}) {
                    std::set<std::uint32_t> used;
                    for (const auto& r : live) {
                        auto it = file->find(r);
                        if (it == file->end()) continue;
                        for (std::uint32_t u = 0; u < slot_units(r); ++u) {
                            CHECK_MESSAGE(used.insert(it->second + u).second, "slot clash at " << i << " for " << to_string(r));
                        }
                    }
                }
            }
            for (const auto& r : regs) {
                const Location l = a.loc.of(r);
                CHECK(a.phys_far.count(r) == (l != Location::N ? 1u : 0u));
                CHECK(a.phys_near.count(r) == (l != Location::F ? 1u : 0u));
            }
        }
    }
}
