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

#ifndef MPU_COMMON_HPP
#define MPU_COMMON_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mpu {

using Cycle = std::uint64_t;
using Addr = std::uint64_t;

inline constexpr int kWarpSize = 32;
using LaneMask = std::uint32_t;
inline constexpr LaneMask kFullMask = 0xFFFFFFFFu;

/// Raised for malformed simulator or experiment configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Architectural faults: uninitialized register reads, out-of-range addresses,
/// cycle budget exhaustion. Both the timing simulator and the reference
/// interpreter raise these.
class SimulationFault : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mpu

#endif  // MPU_COMMON_HPP
