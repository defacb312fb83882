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

#include "mpu/interpreter.hpp"

#include "mpu/alu.hpp"

#include <map>
#include <vector>

namespace mpu {

using isa::Instruction;
using isa::Opcode;
using isa::RegisterId;

namespace {

// Pre-decoded operand: dense register index, special register, or immediate.
struct Src {
    enum Kind : std::uint8_t { Reg, Special, Imm } kind = Imm;
    std::uint32_t index = 0;
    isa::Special special = isa::Special::None;
    std::uint64_t imm = 0;
};

struct Decoded {
    const Instruction* ins = nullptr;
    std::vector<Src> srcs;
    std::int64_t dst = -1;
    std::int64_t guard = -1;
    bool guard_negate = false;
};

struct Thread {
    std::uint32_t pc = 0;
    bool done = false;
    bool at_barrier = false;
};

std::string where(const isa::Kernel& k, std::uint32_t block, std::uint32_t tid, std::uint32_t pc) {
    return " (block " + std::to_string(block) + ", thread " + std::to_string(tid) + ", pc " + std::to_string(pc) +
           ": " + isa::print_instruction(k.instructions[pc]) + ")";
}

}  // namespace

InterpreterStats interpret_reference(const isa::Kernel& k, MemoryImage& mem, const InterpreterOptions& opt) {
    isa::require_valid(k);
    const auto regs = isa::collect_registers(k);
    std::map<RegisterId, std::uint32_t> dense;
    for (std::size_t i = 0; i < regs.size(); ++i) dense[regs[i]] = static_cast<std::uint32_t>(i);

    std::vector<Decoded> code;
    code.reserve(k.instructions.size());
    for (const auto& ins : k.instructions) {
        Decoded d;
        d.ins = &ins;
        for (const auto& s : ins.srcs) {
            Src src;
            if (auto* r = std::get_if<RegisterId>(&s)) {
                if (r->is_special()) {
                    src.kind = Src::Special;
                    src.special = r->special;
                } else {
                    src.kind = Src::Reg;
                    src.index = dense.at(*r);
                }
            } else {
                src.imm = alu::immediate_bits(ins, std::get<isa::Immediate>(s));
            }
            d.srcs.push_back(src);
        }
        if (ins.dst) d.dst = dense.at(*ins.dst);
        if (ins.guard) {
            d.guard = dense.at(ins.guard->reg);
            d.guard_negate = ins.guard->negate;
        }
        code.push_back(std::move(d));
    }

    InterpreterStats stats;
    const std::uint32_t T = k.grid.threads_per_block;
    const std::size_t R = regs.size();
    std::vector<std::uint64_t> values(static_cast<std::size_t>(T) * R);
    std::vector<std::uint8_t> init(static_cast<std::size_t>(T) * R);
    std::vector<std::uint8_t> smem(k.smem_bytes);
    std::vector<Thread> threads(T);

    for (std::uint32_t block = 0; block < k.grid.blocks; ++block) {
        std::fill(values.begin(), values.end(), 0);
        std::fill(init.begin(), init.end(), 0);
        std::fill(smem.begin(), smem.end(), 0);
        std::fill(threads.begin(), threads.end(), Thread{});

        std::uint32_t live = T;
        while (live > 0) {
            for (std::uint32_t tid = 0; tid < T; ++tid) {
                Thread& th = threads[tid];
                if (th.done) continue;
                th.at_barrier = false;
                std::uint64_t* v = values.data() + static_cast<std::size_t>(tid) * R;
                std::uint8_t* ok = init.data() + static_cast<std::size_t>(tid) * R;

                auto read = [&](const Src& s) -> std::uint64_t {
                    switch (s.kind) {
                    case Src::Reg:
                        if (!ok[s.index])
                            throw SimulationFault("read of uninitialized register " + isa::to_string(regs[s.index]) +
                                                  where(k, block, tid, th.pc));
                        return v[s.index];
                    case Src::Special:
                        switch (s.special) {
                        case isa::Special::TidX: return tid;
                        case isa::Special::NtidX: return T;
                        case isa::Special::CtaidX: return block;
                        case isa::Special::NctaidX: return k.grid.blocks;
                        default: return 0;
                        }
                    case Src::Imm: return s.imm;
                    }
                    return 0;
                };

                while (true) {
                    if (++stats.thread_instructions > opt.max_thread_steps)
                        throw SimulationFault("interpreter step budget exhausted");
                    const Decoded& d = code[th.pc];
                    const Instruction& ins = *d.ins;
                    if (d.guard >= 0) {
                        if (!ok[d.guard])
                            throw SimulationFault("read of uninitialized register " + isa::to_string(regs[d.guard]) +
                                                  where(k, block, tid, th.pc));
                        const bool p = v[d.guard] != 0;
                        if (p == d.guard_negate) {
                            ++th.pc;
                            continue;
                        }
                    }
                    bool stop = false;
                    switch (ins.op) {
                    case Opcode::Exit:
                        th.done = true;
                        --live;
                        stop = true;
                        break;
                    case Opcode::BarSync:
                        th.at_barrier = true;
                        ++th.pc;
                        stop = true;
                        break;
                    case Opcode::Bra:
                        th.pc = ins.target_index;
                        break;
                    case Opcode::LdGlobal:
                    case Opcode::StGlobal: {
                        const Addr a = read(d.srcs[0]);
                        const unsigned w = isa::width_bytes(ins.type);
                        if (a % w != 0) throw SimulationFault("misaligned global access" + where(k, block, tid, th.pc));
                        if (a + w > opt.capacity_bytes || a + w < a)
                            throw SimulationFault("global address out of range" + where(k, block, tid, th.pc));
                        if (ins.op == Opcode::LdGlobal) {
                            v[d.dst] = mem.read(a, w);
                            ok[d.dst] = 1;
                            ++stats.global_loads;
                        } else {
                            mem.write(a, w, alu::truncate(isa::class_of(ins.type), read(d.srcs[1])));
                            ++stats.global_stores;
                        }
                        ++th.pc;
                        break;
                    }
                    case Opcode::LdShared:
                    case Opcode::StShared: {
                        const std::uint64_t a = read(d.srcs[0]);
                        const unsigned w = isa::width_bytes(ins.type);
                        if (a % w != 0) throw SimulationFault("misaligned shared access" + where(k, block, tid, th.pc));
                        if (a + w > k.smem_bytes)
                            throw SimulationFault("shared address out of range" + where(k, block, tid, th.pc));
                        if (ins.op == Opcode::LdShared) {
                            std::uint64_t x = 0;
                            for (unsigned b = 0; b < w; ++b) x |= static_cast<std::uint64_t>(smem[a + b]) << (8 * b);
                            v[d.dst] = x;
                            ok[d.dst] = 1;
                        } else {
                            const std::uint64_t x = read(d.srcs[1]);
                            for (unsigned b = 0; b < w; ++b) smem[a + b] = static_cast<std::uint8_t>(x >> (8 * b));
                        }
                        ++th.pc;
                        break;
                    }
                    default: {
                        std::uint64_t ops[3] = {0, 0, 0};
                        for (std::size_t s = 0; s < d.srcs.size(); ++s) ops[s] = read(d.srcs[s]);
                        std::uint64_t r;
                        try {
                            r = alu::execute(ins, ops[0], ops[1], ops[2]);
                        } catch (const SimulationFault& e) {
                            throw SimulationFault(e.what() + where(k, block, tid, th.pc));
                        }
                        v[d.dst] = r;
                        ok[d.dst] = 1;
                        ++th.pc;
                        break;
                    }
                    }
                    if (stop) break;
                }
            }
        }
    }
    return stats;
}

}  // namespace mpu
