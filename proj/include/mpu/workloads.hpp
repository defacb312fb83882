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
 * @file workloads.hpp
 * @brief Bundled benchmark kernels with their input images and independently
 *        computed expected outputs.
 *
 * Data is laid out for the single-processor desk configuration: a warp on
 * core c, subcore s finds its slice in DRAM rows of core c, NBU s, so
 * contiguous warp accesses can take the near-bank fast path. TTRANS reads
 * and writes across cores on purpose.
 */

#ifndef MPU_WORKLOADS_HPP
#define MPU_WORKLOADS_HPP

#include "mpu/isa.hpp"
#include "mpu/memory_image.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mpu {

struct Region {
    std::string name;
    Addr base = 0;
    std::uint64_t length = 0;  // bytes
};

struct Workload {
    std::string name;
    std::vector<isa::Kernel> kernels;  // launched in order
    MemoryImage memory;                // initial device memory
    std::vector<Region> inputs;
    std::vector<Region> outputs;
    MemoryImage expected;  // expected bytes of every output region
};

/// axpy, gemv, pr, ttrans, hist.
std::vector<std::string> workload_names();

/// Throws std::invalid_argument for unknown names.
Workload make_workload(const std::string& name, std::uint64_t seed = 1);

/// Two warps of one block take turns issuing dependent broadcast loads to two
/// adjacent logical rows of one bank, `iterations` loads each.
Workload row_pingpong(std::uint32_t iterations = 32);

/// Empty string when every output region of `mem` matches `w.expected`,
/// otherwise a description of the first differing address.
std::string check_expected(const Workload& w, const MemoryImage& mem);

}  // namespace mpu

#endif  // MPU_WORKLOADS_HPP
