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

/**
 * @file compiler.hpp
 * @brief Backend passes run on a validated kernel:
 *
 *   1. branch analysis   - immediate post-dominator of every conditional branch
 *                          (the SIMT reconvergence point);
 *   2. location annotation - iterative near/far/both labelling of registers,
 *                          instructions take their destination's location;
 *   3. register allocation - liveness + linear-scan coloring into separate
 *                          far-bank and near-bank register files.
 */

#ifndef MPU_COMPILER_HPP
#define MPU_COMPILER_HPP

#include "mpu/isa.hpp"

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpu::compiler {

using isa::Kernel;
using isa::Location;
using isa::RegisterId;

class CompileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Conditional branch index -> reconvergence instruction index.
using ReconvergenceMap = std::map<std::uint32_t, std::uint32_t>;

struct LocationTable {
    std::map<RegisterId, Location> reg_loc;
    std::vector<Location> instr_loc;  // N or F per instruction
    /// Full propagation passes executed, including the final unchanged one.
    std::size_t passes = 0;

    Location of(const RegisterId& r) const;

    friend bool operator==(const LocationTable& a, const LocationTable& b) {
        return a.reg_loc == b.reg_loc && a.instr_loc == b.instr_loc;
    }
};

/// Instruction-level CFG. Node n == instructions.size() is the virtual exit.
std::vector<std::vector<std::uint32_t>> successors(const Kernel& k);

/// Immediate post-dominator of every node (virtual exit maps to itself).
std::vector<std::uint32_t> immediate_post_dominators(const Kernel& k);

ReconvergenceMap analyze_branches(const Kernel& k);

LocationTable annotate_locations(const Kernel& k);

/// Every register `fill` (default B: one slot in each file). Used when the
/// hardware runs without compiler location information.
LocationTable unannotated_locations(const Kernel& k, Location fill = Location::B);

struct RfCapacity {
    std::uint32_t far_units = 256;   // 32 KB / (32 lanes * 4 B)
    std::uint32_t near_units = 128;  // 16 KB / (32 lanes * 4 B)
};

/// Register file footprint of one register, in 128-byte warp slots.
std::uint32_t slot_units(const RegisterId& r);

struct LiveInterval {
    std::uint32_t start = 0;
    std::uint32_t end = 0;
    friend bool operator==(const LiveInterval&, const LiveInterval&) = default;
};

/// Live intervals in program order, widened over every divergent region they
/// touch. Throws CompileError on a use that is not dominated by a definition.
std::map<RegisterId, LiveInterval> live_intervals(const Kernel& k, const ReconvergenceMap& reconv);

struct AllocatedKernel {
    Kernel kernel;
    LocationTable loc;
    ReconvergenceMap reconv;
    std::map<RegisterId, std::uint32_t> phys_far;
    std::map<RegisterId, std::uint32_t> phys_near;
    std::map<RegisterId, LiveInterval> intervals;
    std::uint32_t far_slots_used = 0;
    std::uint32_t near_slots_used = 0;
};

AllocatedKernel allocate_registers(const Kernel& k, const LocationTable& loc, RfCapacity cap = {});

struct LocationBreakdown {
    std::size_t near = 0, far = 0, both = 0;
    double pct_n = 0.0, pct_f = 0.0, pct_b = 0.0;
};

LocationBreakdown location_report(const LocationTable& loc);
std::string location_report_csv(const std::string& kernel_name, const LocationBreakdown& b);

/// Copies instruction locations into @N/@F hints and the register table into
/// the kernel's .regloc header.
Kernel apply_annotation(Kernel k, const LocationTable& loc);

/// annotate + allocate. `annotated == false` gives every register both slots.
AllocatedKernel compile(const Kernel& k, bool annotated = true, RfCapacity cap = {});

/// Every register lives in the far-bank file only (base-die execution).
AllocatedKernel compile_far_only(const Kernel& k, RfCapacity cap = {});

}  // namespace mpu::compiler

#endif  // MPU_COMPILER_HPP
