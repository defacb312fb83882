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
 * @file isa.hpp
 * @brief The PTX-like mini-ISA: registers, instructions, kernels, the textual
 *        kernel format and static validation.
 *
 * Kernel text is line oriented (see docs/kernel_grammar.md):
 *
 *     .kernel axpy .smem 0
 *     .grid 16 128
 *     loop:
 *         ld.global.f32 %f1, [%rd1]
 *         mul.f32 %f2, %f1, 2.0 @N
 *     @%p1 bra loop
 *         exit
 */

#ifndef MPU_ISA_HPP
#define MPU_ISA_HPP

#include "mpu/common.hpp"

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mpu::isa {

enum class RegClass : std::uint8_t { Int32, Int64, Float32, Pred };

enum class Special : std::uint8_t { None, TidX, NtidX, CtaidX, NctaidX };

struct RegisterId {
    RegClass cls = RegClass::Int32;
    std::uint32_t index = 0;
    Special special = Special::None;

    bool is_special() const noexcept { return special != Special::None; }

    friend auto operator<=>(const RegisterId&, const RegisterId&) = default;
};

RegisterId reg(RegClass cls, std::uint32_t index);
RegisterId special_reg(Special s);

std::string to_string(const RegisterId& r);
std::optional<RegisterId> parse_register(std::string_view text);

enum class Opcode : std::uint8_t {
    Add, Sub, Mul, Mad, Div, Min, Max, Mov, Cvt, Setp, Bra,
    LdGlobal, StGlobal, LdShared, StShared, BarSync, Exit,
};
inline constexpr int kOpcodeCount = 17;

enum class DataType : std::uint8_t { None, S32, U32, F32, U64, S64 };

enum class CmpOp : std::uint8_t { None, Eq, Ne, Lt, Le, Gt, Ge };

enum class LocHint : std::uint8_t { None, Near, Far };

/// Register/instruction location in the location table.
enum class Location : std::uint8_t { U, N, F, B };

std::string_view to_string(Opcode op);
std::string_view to_string(DataType t);
std::string_view to_string(CmpOp c);
char to_char(Location l);

/// Raw bit pattern of an immediate; interpretation follows the operand's type.
struct Immediate {
    std::uint64_t bits = 0;
    friend bool operator==(const Immediate&, const Immediate&) = default;
};

Immediate imm_int(std::int64_t v);
Immediate imm_f32(float v);

using Operand = std::variant<RegisterId, Immediate>;

struct Guard {
    RegisterId reg;
    bool negate = false;
    friend bool operator==(const Guard&, const Guard&) = default;
};

struct Instruction {
    Opcode op = Opcode::Exit;
    DataType type = DataType::None;
    DataType src_type = DataType::None;  // cvt
    CmpOp cmp = CmpOp::None;             // setp
    std::optional<RegisterId> dst;
    std::vector<Operand> srcs;           // ld: {addr}; st: {addr, data}
    std::optional<Guard> guard;
    LocHint hint = LocHint::None;
    std::string target;                  // bra
    std::uint32_t target_index = kUnresolved;
    std::uint32_t barrier_id = 0;

    static constexpr std::uint32_t kUnresolved = 0xFFFFFFFFu;

    friend bool operator==(const Instruction&, const Instruction&) = default;
};

bool is_global_mem(Opcode op) noexcept;
bool is_shared_mem(Opcode op) noexcept;
bool is_memory(Opcode op) noexcept;
bool is_load(Opcode op) noexcept;
bool is_store(Opcode op) noexcept;
bool is_control(Opcode op) noexcept;  // bra, bar.sync, exit

RegClass class_of(DataType t);
/// Bytes moved per lane by a memory instruction of this type.
unsigned width_bytes(DataType t);

/// Register operands read by the instruction (the guard is not included).
std::vector<RegisterId> source_registers(const Instruction& i);
/// Address register of a ld/st, if it is a register.
std::optional<RegisterId> address_register(const Instruction& i);
/// Data register of a st (the value stored) or ld (the destination).
std::optional<RegisterId> data_register(const Instruction& i);

struct GridConfig {
    std::uint32_t blocks = 1;
    std::uint32_t threads_per_block = kWarpSize;
    friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

struct Kernel {
    std::string name;
    std::vector<Instruction> instructions;
    std::map<std::string, std::uint32_t> labels;
    std::uint32_t smem_bytes = 0;
    GridConfig grid;
    /// Register-location header of an annotated (.mpu) kernel; empty otherwise.
    std::map<RegisterId, Location> reg_locations;

    friend bool operator==(const Kernel&, const Kernel&) = default;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, std::size_t column, const std::string& what);
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

Kernel parse_kernel(std::string_view text);
Instruction parse_instruction(std::string_view text);

std::string print_instruction(const Instruction& i);
std::string print_kernel(const Kernel& k);

struct Diagnostic {
    std::optional<std::size_t> index;  // offending instruction, if any
    std::string message;
    friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

std::vector<Diagnostic> validate_kernel(const Kernel& k);

/// Throws std::invalid_argument listing every diagnostic when the kernel is invalid.
void require_valid(const Kernel& k);

/// Every distinct non-special register mentioned by the kernel, sorted.
std::vector<RegisterId> collect_registers(const Kernel& k);

}  // namespace mpu::isa

#endif  // MPU_ISA_HPP
