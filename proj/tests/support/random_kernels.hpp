// Copyright 2026 The MPU Simulator Authors
// SPDX-License-Identifier: Apache-2.0
//
// Random valid kernels for property tests. Every register is initialised in a
// prologue, so the kernels also satisfy the allocator's def-before-use rule.

#ifndef MPU_TESTS_RANDOM_KERNELS_HPP
#define MPU_TESTS_RANDOM_KERNELS_HPP

#include "mpu/isa.hpp"

#include <cstdint>
#include <cstdlib>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace mpu::testing {

struct RandomKernelOptions {
    int body_min = 4;
    int body_max = 40;
    int regs_per_class = 6;
    bool control_flow = true;
    // Memory operands use reserved per-lane address registers, so every
    // access is aligned, in range and lane-private.
    bool safe_memory = false;
};

inline std::string random_kernel_text(std::mt19937_64& rng, const RandomKernelOptions& opt = {}) {
    auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); };
    const int R = opt.regs_per_class;
    auto r = [&] { return "%r" + std::to_string(pick(R)); };
    auto rd = [&] { return "%rd" + std::to_string(pick(R)); };
    auto f = [&] { return "%f" + std::to_string(pick(R)); };
    auto p = [&] { return "%p" + std::to_string(pick(2)); };

    std::ostringstream os;
    os << ".kernel rnd .smem 1024\n.grid 1 32\n";
    for (int i = 0; i < R; ++i) {
        os << "    mov.u32 %r" << i << ", " << pick(100) << "\n";
        os << "    cvt.u64.u32 %rd" << i << ", %tid.x\n";
        os << "    mov.f32 %f" << i << ", " << pick(10) << ".5\n";
    }
    os << "    setp.lt.s32 %p0, %r0, 50\n    setp.gt.s32 %p1, %r1, 10\n";
    // %rd{R}, %rd{R+1}: global slots at tid*4 and 4096 + tid*4; %r{R+1}: shared slot.
    const std::string ga = "%rd" + std::to_string(R), gb = "%rd" + std::to_string(R + 1);
    const std::string sa = "%r" + std::to_string(R + 1);
    if (opt.safe_memory) {
        os << "    mov.u32 " << sa << ", %tid.x\n    mul.u32 " << sa << ", " << sa << ", 4\n";
        os << "    cvt.u64.u32 " << ga << ", " << sa << "\n    add.u64 " << gb << ", " << ga << ", 4096\n";
    }
    auto gaddr = [&] { return opt.safe_memory ? (pick(2) ? ga : gb) : rd(); };
    auto saddr = [&] { return opt.safe_memory ? sa : r(); };

    const int body = opt.body_min + pick(opt.body_max - opt.body_min + 1);
    int label = 0;
    std::vector<std::string> open_labels;  // forward branch targets still to place
    for (int i = 0; i < body; ++i) {
        const int kind = pick(opt.control_flow ? 14 : 11);
        switch (kind) {
        case 0: os << "    add.f32 " << f() << ", " << f() << ", " << f() << "\n"; break;
        case 1: os << "    mul.f32 " << f() << ", " << f() << ", 1.5\n"; break;
        case 2: os << "    mad.f32 " << f() << ", " << f() << ", " << f() << ", " << f() << "\n"; break;
        case 3: os << "    add.s32 " << r() << ", " << r() << ", " << r() << "\n"; break;
        case 4: os << "    add.u64 " << rd() << ", " << rd() << ", " << rd() << "\n"; break;
        case 5: os << "    cvt.u64.u32 " << rd() << ", " << r() << "\n"; break;
        case 6: os << "    ld.global.f32 " << f() << ", [" << gaddr() << "]\n"; break;
        case 7: os << "    st.global.f32 [" << gaddr() << "], " << f() << "\n"; break;
        case 8: os << "    ld.shared.f32 " << f() << ", [" << saddr() << "]\n"; break;
        case 9: os << "    st.shared.u32 [" << saddr() << "], " << r() << "\n"; break;
        case 10: os << "    setp.ne.f32 " << p() << ", " << f() << ", " << f() << "\n"; break;
        case 11: {
            std::string l = "L" + std::to_string(label++);
            os << "    @" << (pick(2) ? "!" : "") << p() << " bra " << l << "\n";
            open_labels.push_back(l);
            break;
        }
        case 12:
            if (!open_labels.empty()) {
                os << open_labels.back() << ":\n";
                open_labels.pop_back();
            }
            break;
        case 13: {
            // Counted loop around a small body.
            std::string l = "L" + std::to_string(label++);
            const std::string c = "%r" + std::to_string(R);
            os << "    mov.u32 " << c << ", 0\n" << l << ":\n";
            os << "    add.f32 " << f() << ", " << f() << ", " << f() << "\n";
            os << "    add.s32 " << c << ", " << c << ", 1\n";
            os << "    setp.lt.s32 %p2, " << c << ", 3\n";
            os << "    @%p2 bra " << l << "\n";
            break;
        }
        default: break;
        }
    }
    while (!open_labels.empty()) {
        os << open_labels.back() << ":\n";
        open_labels.pop_back();
    }
    os << "    exit\n";
    return os.str();
}

inline isa::Kernel random_kernel(std::mt19937_64& rng, const RandomKernelOptions& opt = {}) {
    return isa::parse_kernel(random_kernel_text(rng, opt));
}

inline std::uint64_t test_seed() {
    if (const char* s = std::getenv("MPU_SEED")) return std::strtoull(s, nullptr, 0);
    return 20260101;
}

}  // namespace mpu::testing

#endif  // MPU_TESTS_RANDOM_KERNELS_HPP
