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

#include "mpu/workloads.hpp"

#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

namespace mpu {

namespace {

// Desk address geometry: 2 KB columns, then NBU, bank, core, logical row.
constexpr Addr kNbu = Addr{1} << 11;
constexpr Addr kBank = Addr{1} << 13;
constexpr Addr kCore = Addr{1} << 15;
constexpr Addr kRow = Addr{1} << 19;

std::string subst(std::string text, const std::map<std::string, Addr>& values) {
    for (const auto& [key, v] : values) {
        const std::string token = "$" + key;
        for (std::size_t p = text.find(token); p != std::string::npos; p = text.find(token, p))
            text.replace(p, token.size(), std::to_string(v));
    }
    return text;
}

float uniform(std::mt19937_64& rng) { return std::uniform_real_distribution<float>(-1.0f, 1.0f)(rng); }

const char* kAxpy = R"(.kernel axpy .smem 0
.grid 32 128
    mov.u32 %r1, %ctaid.x
    div.u32 %r2, %r1, 16              // half: which pair of banks
    mul.u32 %r3, %r2, 16
    sub.u32 %r3, %r1, %r3             // core
    mov.u32 %r4, %tid.x
    div.u32 %r5, %r4, 32              // warp, also its NBU
    mul.u32 %r6, %r5, 32
    sub.u32 %r6, %r4, %r6             // lane
    mul.u32 %r7, %r3, 32768
    mad.u32 %r7, %r2, 16384, %r7
    mad.u32 %r7, %r5, 2048, %r7
    mad.u32 %r7, %r6, 4, %r7
    mov.u32 %r8, 0
row:
    mov.u32 %r9, 0
bank:
    mad.u32 %r10, %r8, 524288, %r7
    mad.u32 %r10, %r9, 8192, %r10
    mov.u32 %r11, 0
step:
    cvt.u64.u32 %rd1, %r10
    add.u64 %rd2, %rd1, $Y
    ld.global.f32 %f1, [%rd1]
    ld.global.f32 %f2, [%rd2]
    mad.f32 %f3, %f1, 2.5, %f2
    st.global.f32 [%rd2], %f3
    add.u32 %r10, %r10, 128
    add.u32 %r11, %r11, 1
    setp.lt.u32 %p1, %r11, 16
@%p1 bra step
    add.u32 %r9, %r9, 1
    setp.lt.u32 %p1, %r9, 2
@%p1 bra bank
    add.u32 %r8, %r8, 1
    setp.lt.u32 %p1, %r8, 2
@%p1 bra row
    exit
)";

const char* kGemv = R"(.kernel gemv .smem 256
.grid 32 128
    mov.u32 %r1, %ctaid.x
    div.u32 %r2, %r1, 16              // half
    mul.u32 %r3, %r2, 16
    sub.u32 %r3, %r1, %r3             // core
    mov.u32 %r4, %tid.x
    div.u32 %r5, %r4, 32              // warp, also its NBU
    mul.u32 %r6, %r5, 32
    sub.u32 %r6, %r4, %r6             // lane
    mul.u32 %r7, %r3, 32768
    mad.u32 %r7, %r5, 2048, %r7
    mad.u32 %r8, %r6, 4, %r7
    setp.lt.u32 %p1, %r5, 2
@!%p1 bra staged
    mad.u32 %r9, %r5, 128, %r8        // x[32*warp + lane] from this NBU's replica
    add.u32 %r9, %r9, $X
    cvt.u64.u32 %rd1, %r9
    ld.global.f32 %f1, [%rd1]
    mul.u32 %r10, %r4, 4
    st.shared.f32 [%r10], %f1
staged:
    bar.sync 0
    mad.u32 %r11, %r2, 524288, %r8
    add.u32 %r11, %r11, $A
    mov.f32 %f2, 0.0
    mov.u32 %r12, 0
    mov.u32 %r13, 0
bank:
    mad.u32 %r14, %r13, 8192, %r11
    mov.u32 %r15, 0
col:
    cvt.u64.u32 %rd2, %r14
    ld.global.f32 %f3, [%rd2]
    ld.shared.f32 %f4, [%r12]
    mad.f32 %f2, %f3, %f4, %f2
    add.u32 %r14, %r14, 128
    add.u32 %r12, %r12, 4
    add.u32 %r15, %r15, 1
    setp.lt.u32 %p2, %r15, 16
@%p2 bra col
    add.u32 %r13, %r13, 1
    setp.lt.u32 %p2, %r13, 4
@%p2 bra bank
    mad.u32 %r16, %r2, 128, %r8
    add.u32 %r16, %r16, $Y
    cvt.u64.u32 %rd3, %r16
    st.global.f32 [%rd3], %f2
    exit
)";

const char* kPrPartial = R"(.kernel pr_partial .smem 1024
.grid 16 256
    mov.u32 %r1, %ctaid.x             // core
    mov.u32 %r2, %tid.x
    div.u32 %r3, %r2, 32              // warp
    div.u32 %r4, %r3, 4               // bank pair
    mul.u32 %r5, %r4, 4
    sub.u32 %r5, %r3, %r5             // NBU
    mul.u32 %r6, %r3, 32
    sub.u32 %r6, %r2, %r6             // lane
    mul.u32 %r7, %r1, 32768
    mad.u32 %r7, %r4, 16384, %r7
    mad.u32 %r7, %r5, 2048, %r7
    mad.u32 %r7, %r6, 4, %r7
    add.u32 %r7, %r7, $V
    mov.f32 %f1, 0.0
    mov.u32 %r8, 0
bank:
    mad.u32 %r9, %r8, 8192, %r7
    mov.u32 %r10, 0
step:
    cvt.u64.u32 %rd1, %r9
    ld.global.f32 %f2, [%rd1]
    add.f32 %f1, %f1, %f2
    add.u32 %r9, %r9, 128
    add.u32 %r10, %r10, 1
    setp.lt.u32 %p1, %r10, 16
@%p1 bra step
    add.u32 %r8, %r8, 1
    setp.lt.u32 %p1, %r8, 2
@%p1 bra bank
    mul.u32 %r11, %r2, 4
    st.shared.f32 [%r11], %f1
    bar.sync 0
    mov.u32 %r12, 128
tree:
    setp.lt.u32 %p2, %r2, %r12
@!%p2 bra skip
    mad.u32 %r13, %r12, 4, %r11
    ld.shared.f32 %f3, [%r11]
    ld.shared.f32 %f4, [%r13]
    add.f32 %f5, %f3, %f4
    st.shared.f32 [%r11], %f5
skip:
    bar.sync 0
    div.u32 %r12, %r12, 2
    setp.gt.u32 %p3, %r12, 0
@%p3 bra tree
    setp.eq.u32 %p4, %r2, 0
@!%p4 bra done
    ld.shared.f32 %f6, [%r11]
    mul.u32 %r14, %r1, 4
    add.u32 %r14, %r14, $P
    cvt.u64.u32 %rd2, %r14
    st.global.f32 [%rd2], %f6
done:
    exit
)";

const char* kPrFinal = R"(.kernel pr_final .smem 128
.grid 1 32
    mov.u32 %r1, %tid.x
    mul.u32 %r2, %r1, 4
    mov.f32 %f1, 0.0
    setp.lt.u32 %p1, %r1, 16
@!%p1 bra stage
    add.u32 %r3, %r2, $P
    cvt.u64.u32 %rd1, %r3
    ld.global.f32 %f1, [%rd1]
stage:
    st.shared.f32 [%r2], %f1
    bar.sync 0
    mov.u32 %r4, 16
tree:
    setp.lt.u32 %p2, %r1, %r4
@!%p2 bra skip
    mad.u32 %r5, %r4, 4, %r2
    ld.shared.f32 %f2, [%r2]
    ld.shared.f32 %f3, [%r5]
    add.f32 %f4, %f2, %f3
    st.shared.f32 [%r2], %f4
skip:
    bar.sync 0
    div.u32 %r4, %r4, 2
    setp.gt.u32 %p3, %r4, 0
@%p3 bra tree
    setp.eq.u32 %p4, %r1, 0
@!%p4 bra done
    ld.shared.f32 %f5, [%r2]
    mov.u32 %r6, $R
    cvt.u64.u32 %rd2, %r6
    st.global.f32 [%rd2], %f5
done:
    exit
)";

const char* kTtrans = R"(.kernel ttrans .smem 4224
.grid 64 128
    mov.u32 %r1, %ctaid.x
    div.u32 %r2, %r1, 8               // tile row
    mul.u32 %r3, %r2, 8
    sub.u32 %r3, %r1, %r3             // tile column
    mov.u32 %r4, %tid.x
    div.u32 %r5, %r4, 32              // warp: tile rows 8w..8w+7
    mul.u32 %r6, %r5, 32
    sub.u32 %r6, %r4, %r6             // lane
    mul.u32 %r7, %r2, 32
    mad.u32 %r7, %r5, 8, %r7
    mul.u32 %r8, %r7, 1024
    mad.u32 %r8, %r3, 128, %r8
    mad.u32 %r8, %r6, 4, %r8
    add.u32 %r8, %r8, $IN
    mul.u32 %r9, %r5, 8
    mul.u32 %r10, %r9, 132
    mad.u32 %r10, %r6, 4, %r10        // tile[r][lane], rows padded to 33 words
    mov.u32 %r11, 0
load:
    cvt.u64.u32 %rd1, %r8
    ld.global.f32 %f1, [%rd1]
    st.shared.f32 [%r10], %f1
    add.u32 %r8, %r8, 1024
    add.u32 %r10, %r10, 132
    add.u32 %r11, %r11, 1
    setp.lt.u32 %p1, %r11, 8
@%p1 bra load
    bar.sync 0
    mul.u32 %r12, %r3, 32
    mad.u32 %r12, %r5, 8, %r12
    mul.u32 %r13, %r12, 1024
    mad.u32 %r13, %r2, 128, %r13
    mad.u32 %r13, %r6, 4, %r13
    add.u32 %r13, %r13, $OUT
    mul.u32 %r14, %r6, 132
    mad.u32 %r14, %r9, 4, %r14        // tile[lane][r]
    mov.u32 %r15, 0
store:
    ld.shared.f32 %f2, [%r14]
    cvt.u64.u32 %rd2, %r13
    st.global.f32 [%rd2], %f2
    add.u32 %r13, %r13, 1024
    add.u32 %r14, %r14, 4
    add.u32 %r15, %r15, 1
    setp.lt.u32 %p2, %r15, 8
@%p2 bra store
    exit
)";

const char* kHist = R"(.kernel hist .smem 8768
.grid 112 128
    mov.u32 %r1, %ctaid.x
    div.u32 %r19, %r1, 16             // DRAM row of this block's slice
    mul.u32 %r20, %r19, 16
    sub.u32 %r1, %r1, %r20            // core
    mov.u32 %r2, %tid.x
    div.u32 %r3, %r2, 32              // NBU
    mul.u32 %r4, %r3, 32
    sub.u32 %r4, %r2, %r4             // lane
    mul.u32 %r5, %r2, 4               // counter (bin, tid) at (bin*129 + tid)*4
    mov.u32 %r6, 0
    mov.u32 %r7, 0
zero:
    st.shared.u32 [%r5], %r7
    add.u32 %r5, %r5, 516
    add.u32 %r6, %r6, 1
    setp.lt.u32 %p1, %r6, 16
@%p1 bra zero
    mul.u32 %r8, %r1, 32768
    mad.u32 %r8, %r19, 524288, %r8
    mad.u32 %r8, %r3, 2048, %r8
    mad.u32 %r8, %r4, 4, %r8
    add.u32 %r8, %r8, $V
    mul.u32 %r9, %r2, 4
    div.u32 %r29, %r19, 4
    mul.u32 %r29, %r29, 2             // first bank: blocks 4..6 start two banks over
    mov.u32 %r21, 0
bank:
    add.u32 %r30, %r21, %r29
    setp.ge.u32 %p6, %r30, 4
@%p6 sub.u32 %r30, %r30, 4
    mad.u32 %r22, %r30, 8192, %r8
    mov.u32 %r10, 0
count:
    cvt.u64.u32 %rd1, %r22
    ld.global.u32 %r11, [%rd1]
    mad.u32 %r12, %r11, 516, %r9
    ld.shared.u32 %r13, [%r12]
    add.u32 %r13, %r13, 1
    st.shared.u32 [%r12], %r13
    add.u32 %r22, %r22, 128
    add.u32 %r10, %r10, 1
    setp.lt.u32 %p2, %r10, 16
@%p2 bra count
    add.u32 %r21, %r21, 1
    setp.lt.u32 %p2, %r21, 4
@%p2 bra bank
    bar.sync 0
    div.u32 %r23, %r2, 16             // part: counters 16p..16p+15
    mul.u32 %r24, %r23, 16
    sub.u32 %r24, %r2, %r24           // bin
    mul.u32 %r14, %r24, 129
    mad.u32 %r14, %r23, 16, %r14
    mul.u32 %r14, %r14, 4
    mov.u32 %r15, 0
    mov.u32 %r16, 0
merge:
    ld.shared.u32 %r17, [%r14]
    add.u32 %r15, %r15, %r17
    add.u32 %r14, %r14, 4
    add.u32 %r16, %r16, 1
    setp.lt.u32 %p4, %r16, 16
@%p4 bra merge
    add.u32 %r28, %r9, 8256
    st.shared.u32 [%r28], %r15
    bar.sync 0
    setp.lt.u32 %p3, %r2, 16
@!%p3 bra done
    mov.u32 %r25, 0
    mov.u32 %r26, 0
    add.u32 %r27, %r9, 8256
fold:
    ld.shared.u32 %r17, [%r27]
    add.u32 %r25, %r25, %r17
    add.u32 %r27, %r27, 64
    add.u32 %r26, %r26, 1
    setp.lt.u32 %p5, %r26, 8
@%p5 bra fold
    mul.u32 %r18, %r1, 32768
    mad.u32 %r18, %r19, 64, %r18
    add.u32 %r18, %r18, %r9
    add.u32 %r18, %r18, $O
    cvt.u64.u32 %rd2, %r18
    st.global.u32 [%rd2], %r25
done:
    exit
)";

const char* kHistMerge = R"(.kernel hist_merge .smem 0
.grid 1 32
    mov.u32 %r1, %tid.x
    setp.lt.u32 %p3, %r1, 16
@!%p3 bra done
    mul.u32 %r2, %r1, 4
    add.u32 %r2, %r2, $O
    mov.u32 %r3, 0
    mov.u32 %r4, 0
core:
    mov.u32 %r7, 0
    mov.u32 %r8, %r2
part:
    cvt.u64.u32 %rd1, %r8
    ld.global.u32 %r5, [%rd1]
    add.u32 %r3, %r3, %r5
    add.u32 %r8, %r8, 64
    add.u32 %r7, %r7, 1
    setp.lt.u32 %p2, %r7, 7
@%p2 bra part
    add.u32 %r2, %r2, 32768
    add.u32 %r4, %r4, 1
    setp.lt.u32 %p1, %r4, 16
@%p1 bra core
    mov.u32 %r6, $H
    mad.u32 %r6, %r1, 4, %r6
    cvt.u64.u32 %rd2, %r6
    st.global.u32 [%rd2], %r3
done:
    exit
)";

const char* kPingPong = R"(.kernel pingpong .smem 0
.grid 1 64
    mov.u32 %r1, %tid.x
    div.u32 %r2, %r1, 32              // warp w reads logical row base+w
    setp.eq.u32 %p1, %r2, 0
    setp.eq.u32 %p2, %r2, 1
    mul.u32 %r3, %r2, 524288
    add.u32 %r3, %r3, $BASE
    mov.u32 %r4, 0
loop:
@!%p1 bra first_done
    cvt.u64.u32 %rd1, %r3
    ld.global.u32 %r5, [%rd1]
    add.u32 %r3, %r3, %r5
first_done:
    bar.sync 0
@!%p2 bra second_done
    cvt.u64.u32 %rd1, %r3
    ld.global.u32 %r5, [%rd1]
    add.u32 %r3, %r3, %r5
second_done:
    bar.sync 0
    add.u32 %r4, %r4, 1
    setp.lt.u32 %p3, %r4, $ITER
@%p3 bra loop
    mul.u32 %r6, %r1, 4
    add.u32 %r6, %r6, $OUT
    cvt.u64.u32 %rd2, %r6
    st.global.u32 [%rd2], %r3
    exit
)";

Workload axpy(std::uint64_t seed) {
    constexpr std::uint32_t n = 1u << 18;
    constexpr Addr X = 0, Y = 3 * kRow;
    std::mt19937_64 rng(seed);
    Workload w;
    w.name = "axpy";
    w.kernels.push_back(isa::parse_kernel(subst(kAxpy, {{"Y", Y}})));
    std::vector<float> x(n), y(n), out(n);
    for (auto& v : x) v = uniform(rng);
    for (auto& v : y) v = uniform(rng);
    for (std::uint32_t i = 0; i < n; ++i) out[i] = std::fma(x[i], 2.5f, y[i]);
    w.memory.write_f32(X, x);
    w.memory.write_f32(Y, y);
    w.expected.write_f32(Y, out);
    w.inputs = {{"x", X, n * 4ull}, {"y", Y, n * 4ull}};
    w.outputs = {{"y", Y, n * 4ull}};
    return w;
}

Workload gemv(std::uint64_t seed) {
    constexpr std::uint32_t M = 4096, N = 64;
    constexpr Addr A = 0, X = 8 * kRow, Y = 9 * kRow;
    std::mt19937_64 rng(seed);
    Workload w;
    w.name = "gemv";
    w.kernels.push_back(isa::parse_kernel(subst(kGemv, {{"A", A}, {"X", X}, {"Y", Y}})));
    std::vector<float> x(N);
    for (auto& v : x) v = uniform(rng);
    // Row i = 32*(4*block + warp) + lane; column j = 16*bank + step.
    for (std::uint32_t i = 0; i < M; ++i) {
        const std::uint32_t lane = i % 32, warp = (i / 32) % 4, block = i / 128;
        const Addr h = block / 16, c = block % 16;
        float acc = 0.0f;
        for (std::uint32_t j = 0; j < N; ++j) {
            const float a = uniform(rng);
            w.memory.write_f32(A + h * kRow + c * kCore + (j / 16) * kBank + warp * kNbu + (j % 16) * 128 + lane * 4, {a});
            acc = std::fma(a, x[j], acc);
        }
        w.expected.write_f32(Y + c * kCore + warp * kNbu + h * 128 + lane * 4, {acc});
    }
    for (Addr c = 0; c < 16; ++c)
        for (Addr s = 0; s < 4; ++s) w.memory.write_f32(X + c * kCore + s * kNbu, x);
    w.inputs = {{"a", A, 2 * kRow}, {"x", X, 16 * kCore}};
    w.outputs = {{"y", Y, 16 * kCore}};
    return w;
}

Workload pr(std::uint64_t seed) {
    constexpr Addr V = 0, P = kRow, R = kRow + 64;
    std::mt19937_64 rng(seed);
    Workload w;
    w.name = "pr";
    w.kernels.push_back(isa::parse_kernel(subst(kPrPartial, {{"V", V}, {"P", P}})));
    w.kernels.push_back(isa::parse_kernel(subst(kPrFinal, {{"P", P}, {"R", R}})));
    std::vector<float> v(1u << 17);
    for (auto& e : v) e = uniform(rng);
    w.memory.write_f32(V, v);

    auto value_at = [&](Addr a) { return v[(a - V) / 4]; };
    std::vector<float> partial(16);
    for (Addr b = 0; b < 16; ++b) {
        std::vector<float> sm(256);
        for (Addr tid = 0; tid < 256; ++tid) {
            const Addr warp = tid / 32, pair = warp / 4, nbu = warp % 4, lane = tid % 32;
            float acc = 0.0f;
            for (Addr k = 0; k < 2; ++k)
                for (Addr t = 0; t < 16; ++t)
                    acc = acc + value_at(V + b * kCore + (2 * pair + k) * kBank + nbu * kNbu + t * 128 + lane * 4);
            sm[tid] = acc;
        }
        for (std::size_t s = 128; s > 0; s /= 2)
            for (std::size_t t = 0; t < s; ++t) sm[t] = sm[t] + sm[t + s];
        partial[b] = sm[0];
    }
    std::vector<float> fin(32, 0.0f);
    for (std::size_t l = 0; l < 16; ++l) fin[l] = partial[l];
    for (std::size_t s = 16; s > 0; s /= 2)
        for (std::size_t t = 0; t < s; ++t) fin[t] = fin[t] + fin[t + s];
    w.expected.write_f32(P, partial);
    w.expected.write_f32(R, {fin[0]});
    w.inputs = {{"v", V, v.size() * 4ull}};
    w.outputs = {{"partial", P, 64}, {"result", R, 4}};
    return w;
}

Workload ttrans(std::uint64_t seed) {
    constexpr std::uint32_t n = 256;
    constexpr Addr IN = 0, OUT = 2 * kRow;
    std::mt19937_64 rng(seed);
    Workload w;
    w.name = "ttrans";
    w.kernels.push_back(isa::parse_kernel(subst(kTtrans, {{"IN", IN}, {"OUT", OUT}})));
    std::vector<float> in(n * n), out(n * n);
    for (auto& e : in) e = uniform(rng);
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = 0; j < n; ++j) out[j * n + i] = in[i * n + j];
    w.memory.write_f32(IN, in);
    w.expected.write_f32(OUT, out);
    w.inputs = {{"in", IN, n * n * 4ull}};
    w.outputs = {{"out", OUT, n * n * 4ull}};
    return w;
}

Workload hist(std::uint64_t seed) {
    constexpr Addr blocks_per_core = 7, bins = 16;
    constexpr Addr V = 0, O = blocks_per_core * kRow, H = O + kRow;
    std::mt19937_64 rng(seed);
    Workload w;
    w.name = "hist";
    w.kernels.push_back(isa::parse_kernel(subst(kHist, {{"V", V}, {"O", O}})));
    w.kernels.push_back(isa::parse_kernel(subst(kHistMerge, {{"O", O}, {"H", H}})));
    std::vector<std::uint32_t> total(bins, 0);
    for (Addr c = 0; c < 16; ++c)
        for (Addr q = 0; q < blocks_per_core; ++q) {
            std::vector<std::uint32_t> block(bins, 0);
            for (Addr bank = 0; bank < 4; ++bank)
                for (Addr s = 0; s < 4; ++s) {
                    std::vector<std::uint32_t> vals(512);
                    for (auto& e : vals) {
                        e = static_cast<std::uint32_t>(rng() % bins);
                        ++block[e];
                        ++total[e];
                    }
                    w.memory.write_u32(V + q * kRow + c * kCore + bank * kBank + s * kNbu, vals);
                }
            w.expected.write_u32(O + c * kCore + q * 64, block);
        }
    w.expected.write_u32(H, total);
    w.inputs = {{"values", V, blocks_per_core * kRow}};
    w.outputs = {{"block_hist", O, 16 * kCore}, {"hist", H, bins * 4}};
    return w;
}

}  // namespace

std::vector<std::string> workload_names() { return {"axpy", "gemv", "pr", "ttrans", "hist"}; }

Workload make_workload(const std::string& name, std::uint64_t seed) {
    if (name == "axpy") return axpy(seed);
    if (name == "gemv") return gemv(seed);
    if (name == "pr") return pr(seed);
    if (name == "ttrans") return ttrans(seed);
    if (name == "hist") return hist(seed);
    if (name == "pingpong") return row_pingpong();
    throw std::invalid_argument("unknown workload '" + name + "'");
}

Workload row_pingpong(std::uint32_t iterations) {
    constexpr Addr BASE = 4 * kRow, OUT = 6 * kRow + kBank;
    Workload w;
    w.name = "pingpong";
    w.kernels.push_back(isa::parse_kernel(subst(kPingPong, {{"BASE", BASE}, {"OUT", OUT}, {"ITER", iterations}})));
    w.memory.write_u32(BASE, {0});
    w.memory.write_u32(BASE + kRow, {0});
    std::vector<std::uint32_t> out(64);
    for (std::uint32_t t = 0; t < 64; ++t) out[t] = static_cast<std::uint32_t>(BASE + (t / 32) * kRow);
    w.expected.write_u32(OUT, out);
    w.inputs = {{"rows", BASE, kRow + 4}};
    w.outputs = {{"out", OUT, 256}};
    return w;
}

std::string check_expected(const Workload& w, const MemoryImage& mem) {
    for (const auto& r : w.outputs) {
        if (auto a = mem.first_difference(w.expected, r.base, r.length)) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "%s: first difference at 0x%llx (got 0x%02x, expected 0x%02x)",
                          r.name.c_str(), static_cast<unsigned long long>(*a), mem.read8(*a), w.expected.read8(*a));
            return buf;
        }
    }
    return {};
}

}  // namespace mpu
