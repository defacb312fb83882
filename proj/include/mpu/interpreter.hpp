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
 * @file interpreter.hpp
 * @brief Functional reference interpreter, the correctness oracle for the
 *        timing simulator.
 *
 * Threads run as independent scalar programs in a fixed order: blocks in
 * index order; inside a block, threads in (warp, lane) order, each running
 * until its next bar.sync or exit. A barrier phase ends once every live thread
 * of the block has arrived. For race-free kernels this yields exactly the
 * final state of any SIMT execution, without sharing reconvergence logic with
 * the simulator.
 */

#ifndef MPU_INTERPRETER_HPP
#define MPU_INTERPRETER_HPP

#include "mpu/isa.hpp"
#include "mpu/memory_image.hpp"

#include <cstdint>

namespace mpu {

struct InterpreterOptions {
    Addr capacity_bytes = Addr{1} << 32;
    std::uint64_t max_thread_steps = 4'000'000'000ull;
};

struct InterpreterStats {
    std::uint64_t thread_instructions = 0;
    std::uint64_t global_loads = 0;
    std::uint64_t global_stores = 0;
};

/// Runs the kernel over its grid, updating `mem` in place.
InterpreterStats interpret_reference(const isa::Kernel& k, MemoryImage& mem, const InterpreterOptions& opt = {});

}  // namespace mpu

#endif  // MPU_INTERPRETER_HPP
