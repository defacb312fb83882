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

#include "mpu/alu.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace mpu::alu {

using isa::CmpOp;
using isa::DataType;
using isa::Opcode;

namespace {

float as_f(std::uint64_t v) { return std::bit_cast<float>(static_cast<std::uint32_t>(v)); }
std::uint64_t from_f(float f) { return std::bit_cast<std::uint32_t>(f); }
std::int32_t as_s(std::uint64_t v) { return static_cast<std::int32_t>(static_cast<std::uint32_t>(v)); }
std::uint32_t as_u(std::uint64_t v) { return static_cast<std::uint32_t>(v); }
std::uint64_t from_s(std::int32_t v) { return static_cast<std::uint32_t>(v); }

template <typename T>
bool compare(CmpOp c, T a, T b) {
    switch (c) {
    case CmpOp::Eq: return a == b;
    case CmpOp::Ne: return a != b;
    case CmpOp::Lt: return a < b;
    case CmpOp::Le: return a <= b;
    case CmpOp::Gt: return a > b;
    case CmpOp::Ge: return a >= b;
    case CmpOp::None: break;
    }
    return false;
}

std::int32_t f32_to_s32(float f) {
    if (std::isnan(f)) return 0;
    if (f >= 2147483648.0f) return std::numeric_limits<std::int32_t>::max();
    if (f < -2147483648.0f) return std::numeric_limits<std::int32_t>::min();
    return static_cast<std::int32_t>(f);
}

std::uint32_t f32_to_u32(float f) {
    if (std::isnan(f) || f <= 0.0f) return 0;
    if (f >= 4294967296.0f) return std::numeric_limits<std::uint32_t>::max();
    return static_cast<std::uint32_t>(f);
}

std::uint64_t convert(DataType to, DataType from, std::uint64_t v) {
    // Widen the source to a signed or unsigned 64-bit value, or a float.
    const bool src_float = from == DataType::F32;
    std::int64_t iv = 0;
    switch (from) {
    case DataType::S32: iv = as_s(v); break;
    case DataType::U32: iv = static_cast<std::int64_t>(as_u(v)); break;
    case DataType::U64:
    case DataType::S64: iv = static_cast<std::int64_t>(v); break;
    default: break;
    }
    switch (to) {
    case DataType::F32:
        if (src_float) return v & 0xFFFFFFFFu;
        if (from == DataType::U64) return from_f(static_cast<float>(v));
        return from_f(static_cast<float>(iv));
    case DataType::S32:
        if (src_float) return from_s(f32_to_s32(as_f(v)));
        return static_cast<std::uint32_t>(iv);
    case DataType::U32:
        if (src_float) return f32_to_u32(as_f(v));
        return static_cast<std::uint32_t>(iv);
    case DataType::U64:
    case DataType::S64:
        if (src_float) return static_cast<std::uint64_t>(static_cast<std::int64_t>(f32_to_s32(as_f(v))));
        return static_cast<std::uint64_t>(iv);
    default: break;
    }
    return 0;
}

}  // namespace

std::uint64_t truncate(isa::RegClass cls, std::uint64_t v) {
    switch (cls) {
    case isa::RegClass::Int64: return v;
    case isa::RegClass::Pred: return v & 1u;
    default: return v & 0xFFFFFFFFu;
    }
}

std::uint64_t immediate_bits(const isa::Instruction& ins, const isa::Immediate& imm) {
    const DataType t = ins.op == Opcode::Cvt ? ins.src_type : ins.type;
    return truncate(isa::class_of(t), imm.bits);
}

std::uint64_t execute(const isa::Instruction& ins, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    const DataType t = ins.type;
    switch (ins.op) {
    case Opcode::Mov: return truncate(isa::class_of(t), a);
    case Opcode::Cvt: return convert(t, ins.src_type, a);
    default: break;
    }

    if (t == DataType::F32) {
        const float x = as_f(a), y = as_f(b);
        switch (ins.op) {
        case Opcode::Add: return from_f(x + y);
        case Opcode::Sub: return from_f(x - y);
        case Opcode::Mul: return from_f(x * y);
        case Opcode::Mad: return from_f(std::fma(x, y, as_f(c)));
        case Opcode::Div: return from_f(x / y);
        case Opcode::Min: return from_f(std::fmin(x, y));
        case Opcode::Max: return from_f(std::fmax(x, y));
        case Opcode::Setp: return compare(ins.cmp, x, y) ? 1u : 0u;
        default: break;
        }
    } else if (t == DataType::U64 || t == DataType::S64) {
        switch (ins.op) {
        case Opcode::Add: return a + b;
        case Opcode::Mul: return a * b;
        case Opcode::Setp:
            return (t == DataType::U64 ? compare(ins.cmp, a, b)
                                       : compare(ins.cmp, static_cast<std::int64_t>(a), static_cast<std::int64_t>(b)))
                       ? 1u
                       : 0u;
        default: break;
        }
    } else if (t == DataType::S32) {
        const std::int32_t x = as_s(a), y = as_s(b);
        switch (ins.op) {
        case Opcode::Add: return as_u(a + b);
        case Opcode::Sub: return as_u(a - b);
        case Opcode::Mul: return as_u(a * b);
        case Opcode::Mad: return as_u(a * b + c);
        case Opcode::Div:
            if (y == 0) throw SimulationFault("integer division by zero");
            if (x == std::numeric_limits<std::int32_t>::min() && y == -1) return from_s(x);
            return from_s(x / y);
        case Opcode::Min: return from_s(std::min(x, y));
        case Opcode::Max: return from_s(std::max(x, y));
        case Opcode::Setp: return compare(ins.cmp, x, y) ? 1u : 0u;
        default: break;
        }
    } else if (t == DataType::U32) {
        const std::uint32_t x = as_u(a), y = as_u(b);
        switch (ins.op) {
        case Opcode::Add: return as_u(a + b);
        case Opcode::Sub: return as_u(a - b);
        case Opcode::Mul: return as_u(a * b);
        case Opcode::Mad: return as_u(a * b + c);
        case Opcode::Div:
            if (y == 0) throw SimulationFault("integer division by zero");
            return x / y;
        case Opcode::Min: return std::min(x, y);
        case Opcode::Max: return std::max(x, y);
        case Opcode::Setp: return compare(ins.cmp, x, y) ? 1u : 0u;
        default: break;
        }
    }
    throw SimulationFault("unsupported ALU operation " + isa::print_instruction(ins));
}

}  // namespace mpu::alu
