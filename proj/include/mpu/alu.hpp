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
 * @file alu.hpp
 * @brief Per-lane semantics of the arithmetic, conversion and compare
 *        instructions, shared by the timing simulator and the interpreter.
 *
 * Lane values are raw bit patterns: 32-bit classes use the low word, 64-bit
 * registers the full word, predicates 0 or 1.
 */

#ifndef MPU_ALU_HPP
#define MPU_ALU_HPP

#include "mpu/isa.hpp"

#include <cstdint>

namespace mpu::alu {

/// Result bits of one lane. Integer division by zero raises SimulationFault.
std::uint64_t execute(const isa::Instruction& ins, std::uint64_t a, std::uint64_t b, std::uint64_t c);

/// Bits of an immediate as seen by a lane (truncated to the operand width).
std::uint64_t immediate_bits(const isa::Instruction& ins, const isa::Immediate& imm);

/// Mask a raw value to the register class width.
std::uint64_t truncate(isa::RegClass cls, std::uint64_t v);

}  // namespace mpu::alu

#endif  // MPU_ALU_HPP
