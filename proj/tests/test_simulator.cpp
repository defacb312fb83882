// Copyright 2026 The MPU Simulator Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mpu/experiment.hpp"
#include "mpu/interpreter.hpp"
#include "mpu/simulator.hpp"
#include "mpu/workloads.hpp"
#include "support/random_kernels.hpp"

#include <numeric>

using namespace mpu;

namespace {

struct Variant {
    const char* name;
    OffloadPolicy policy;
    bool ponb;
    SmemLocation smem;
};

const Variant kVariants[] = {
    {"annotated", OffloadPolicy::Annotated, false, SmemLocation::Near},
    {"hw-default", OffloadPolicy::HwDefault, false, SmemLocation::Near},
    {"all-near", OffloadPolicy::AllNear, false, SmemLocation::Near},
    {"all-far", OffloadPolicy::AllFar, false, SmemLocation::Far},
    {"ponb", OffloadPolicy::AllFar, true, SmemLocation::Near},
};

SimConfig variant(const Variant& v) {
    SimConfig c = SimConfig::desk();
    c.offload = v.policy;
    c.ponb = v.ponb;
    c.smem = v.smem;
    c.check_shadow = true;
    return c;
}

SimResult run(const SimConfig& c, const isa::Kernel& k, MemoryImage mem = {}) {
    return simulate(c, {compile_for(c, k)}, std::move(mem));
}

const char* kReduce = R"(.kernel reduce .smem 1024
.grid 2 256
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
    mov.u32 %r9, %ctaid.x
    mul.u32 %r9, %r9, 4
    cvt.u64.u32 %rd1, %r9
    add.u64 %rd1, %rd1, 4096
    st.global.u32 [%rd1], %r8
done:
    exit
)";

}  // namespace

TEST_CASE("random kernels match the interpreter under every execution mode") {
    std::mt19937_64 rng(mpu::testing::test_seed() + 9);
    mpu::testing::RandomKernelOptions opt;
    opt.safe_memory = true;
    for (int n = 0; n < 300; ++n) {
        const auto text = mpu::testing::random_kernel_text(rng, opt);
        const isa::Kernel k = isa::parse_kernel(text);
        MemoryImage ref;
        interpret_reference(k, ref);
        for (const auto& v : kVariants) {
            CAPTURE(v.name);
            CAPTURE(text);
            SimResult r;
            REQUIRE_NOTHROW(r = run(variant(v), k));
            REQUIRE(r.memory.same_contents(ref));
            CHECK(r.lanes_serviced == r.report.lanes_requested);
        }
    }
}

TEST_CASE("barrier-synchronised shared-memory reduction") {
    for (const auto& v : kVariants) {
        CAPTURE(v.name);
        const auto r = run(variant(v), isa::parse_kernel(kReduce));
        CHECK(r.memory.read32(4096) == 32896);
        CHECK(r.memory.read32(4100) == 32896);
        CHECK(r.report.smem_accesses > 0);
    }
}

TEST_CASE("architectural faults surface from the timing model") {
    const SimConfig c = SimConfig::desk();
    CHECK_THROWS_AS(run(c, isa::parse_kernel(".kernel k .smem 0\n.grid 1 32\n mov.u32 %r1, 0\n div.u32 %r2, %r1, %r1\n exit\n")),
                    SimulationFault);
    CHECK_THROWS_AS(
        run(c, isa::parse_kernel(".kernel k .smem 0\n.grid 1 32\n mov.u64 %rd1, 8589934592\n ld.global.f32 %f1, [%rd1]\n exit\n")),
        SimulationFault);
    SimConfig tight = c;
    tight.max_cycles = 50;
    CHECK_THROWS_AS(run(tight, isa::parse_kernel(kReduce)), SimulationFault);
}

TEST_CASE("bundled workloads reproduce their expected outputs") {
    for (const auto& name : workload_names()) {
        CAPTURE(name);
        const Workload w = make_workload(name);
        const MemoryImage ref = experiment::reference_memory(w);
        CHECK(check_expected(w, ref).empty());
        for (auto mode : {experiment::SweepMode::Policy, experiment::SweepMode::PonB}) {
            for (const auto& leg : experiment::sweep_legs(mode, SimConfig::desk())) {
                CAPTURE(leg.label);
                experiment::RunOutput o;
                REQUIRE_NOTHROW(o = experiment::run_workload(w, leg.cfg, ref));
                CHECK(check_expected(w, o.sim.memory).empty());
                CHECK(o.legality.ok());
            }
        }
    }
}

TEST_CASE("simulation is deterministic") {
    const Workload w = make_workload("gemv");
    const MemoryImage ref = experiment::reference_memory(w);
    const SimConfig c = SimConfig::desk();
    const auto a = experiment::run_workload(w, c, ref);
    const auto b = experiment::run_workload(w, c, ref);
    CHECK(a.sim.report == b.sim.report);
    CHECK(a.sim.report.to_json() == b.sim.report.to_json());
    CHECK(a.sim.commands.size() == b.sim.commands.size());
    CHECK(command_trace_csv(a.sim.commands) == command_trace_csv(b.sim.commands));
}

TEST_CASE("energy categories add up to the total") {
    for (const auto& name : {"axpy", "pr", "hist"}) {
        const Workload w = make_workload(name);
        const auto o = experiment::run_workload(w, SimConfig::desk(), experiment::reference_memory(w));
        const auto& r = o.sim.report;
        CHECK(std::accumulate(r.energy_fj.begin(), r.energy_fj.end(), std::uint64_t{0}) == r.energy_total_fj);
        CHECK(std::accumulate(r.tsv_bits.begin(), r.tsv_bits.end(), std::uint64_t{0}) == r.tsv_bits_total);
        CHECK(r.energy_total_fj > 0);
        // DRAM energy covers at least every ACT and PRE issued.
        CHECK(r.energy_fj[static_cast<std::size_t>(EnergyCategory::Dram)] >= (r.dram_acts + r.dram_pres) * SimConfig().e_act_pre);
    }
}

TEST_CASE("near-bank load/store fast path cuts TSV traffic") {
    const Workload w = make_workload("axpy");
    const MemoryImage ref = experiment::reference_memory(w);
    SimConfig on = SimConfig::desk();
    SimConfig off = on;
    off.lsu_fastpath = false;
    const auto a = experiment::run_workload(w, on, ref).sim.report;
    const auto b = experiment::run_workload(w, off, ref).sim.report;
    CHECK(a.lanes_fastpath == a.lanes_requested);
    CHECK(b.lanes_fastpath == 0);
    CHECK(a.tsv_bits_total * 4 < b.tsv_bits_total);
    CHECK(a.cycles < b.cycles);
}

TEST_CASE("kernels without shared memory ignore the shared-memory placement") {
    const Workload w = make_workload("axpy");
    const MemoryImage ref = experiment::reference_memory(w);
    SimConfig near = SimConfig::desk(), far = near;
    far.smem = SmemLocation::Far;
    auto a = experiment::run_workload(w, near, ref).sim.report;
    auto b = experiment::run_workload(w, far, ref).sim.report;
    CHECK(a.cycles == b.cycles);
    CHECK(a.tsv_bits == b.tsv_bits);
    CHECK(a.energy_total_fj == b.energy_total_fj);
}

TEST_CASE("row ping-pong thrashes one row buffer but not two") {
    const Workload w = row_pingpong();
    const MemoryImage ref = experiment::reference_memory(w);
    double miss[3];
    int i = 0;
    for (const auto& leg : experiment::sweep_legs(experiment::SweepMode::RowBuffers, SimConfig::desk()))
        miss[i++] = experiment::run_workload(w, leg.cfg, ref).sim.report.miss_rate();
    CHECK(miss[0] >= 0.8);
    CHECK(miss[1] <= 0.2);
    CHECK(miss[2] <= miss[1]);
}
