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
 * @file simulator.hpp
 * @brief Cycle-level simulation of kernel launches on the configured system.
 *
 * One deterministic loop advances core cycles. Each cycle it runs due events,
 * ticks DRAM banks with work, ticks TSV buses with queued transfers, and lets
 * every subcore issue at most one instruction. Idle stretches are skipped.
 */

#ifndef MPU_SIMULATOR_HPP
#define MPU_SIMULATOR_HPP

#include "mpu/compiler.hpp"
#include "mpu/config.hpp"
#include "mpu/energy.hpp"
#include "mpu/memory.hpp"
#include "mpu/memory_image.hpp"

#include <string>
#include <vector>

namespace mpu {

struct SimOptions {
    /// Collect `cycle,warp,pc,opcode,loc,event` lines.
    bool trace = false;
};

struct SimResult {
    RunReport report;
    MemoryImage memory;
    std::vector<CommandRecord> commands;  // filled when sim.record_commands is set
    std::vector<std::string> trace;
    std::uint64_t lanes_serviced = 0;
    std::uint64_t memory_instructions = 0;
};

/// Compiles the kernel the way the configured hardware expects: annotated
/// for the annotated policy, every register in both files for the other
/// hybrid policies, far-bank only for base-die execution.
compiler::AllocatedKernel compile_for(const SimConfig& cfg, const isa::Kernel& k);

/// Runs the launches back to back on one memory image. Throws
/// SimulationFault on architectural faults, deadlock or budget exhaustion.
SimResult simulate(const SimConfig& cfg, const std::vector<compiler::AllocatedKernel>& launches, MemoryImage mem,
                   const SimOptions& opt = {});

}  // namespace mpu

#endif  // MPU_SIMULATOR_HPP
