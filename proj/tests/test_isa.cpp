// Copyright 2026 The MPU Simulator Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mpu/isa.hpp"
#include "support/random_kernels.hpp"

#include <algorithm>
#include <random>

using namespace mpu;
using namespace mpu::isa;

namespace {

const char* kAxpy = R"(.kernel axpy .smem 0
.grid 4 128
    mov.u32 %r1, %ctaid.x
    mul.s32 %r2, %r1, %ntid.x
    add.s32 %r3, %r2, %tid.x          // global thread index
    cvt.u64.u32 %rd1, %r3
    mul.u64 %rd2, %rd1, 4
    add.u64 %rd3, %rd2, 1048576
    ld.global.f32 %f1, [%rd2]
    ld.global.f32 %f2, [%rd3]
    mad.f32 %f3, %f1, 2.0, %f2
    st.global.f32 [%rd3], %f3
    exit
)";

bool has_message(const std::vector<Diagnostic>& d, const std::string& text) {
    return std::any_of(d.begin(), d.end(), [&](const Diagnostic& x) { return x.message.find(text) != std::string::npos; });
}

}  // namespace

TEST_CASE("single instruction parse") {
    Instruction i = parse_instruction("mul.f32 %f3, %f1, %f2");
    CHECK(i.op == Opcode::Mul);
    CHECK(i.type == DataType::F32);
    REQUIRE(i.dst);
    CHECK(*i.dst == reg(RegClass::Float32, 3));
    REQUIRE(i.srcs.size() == 2);
    CHECK(std::get<RegisterId>(i.srcs[0]) == reg(RegClass::Float32, 1));
    CHECK(std::get<RegisterId>(i.srcs[1]) == reg(RegClass::Float32, 2));
    CHECK(i.hint == LocHint::None);
}

TEST_CASE("ld.global address operand") {
    Instruction i = parse_instruction("ld.global.f32 %f1, [%rd1]");
    CHECK(i.op == Opcode::LdGlobal);
    CHECK(*i.dst == reg(RegClass::Float32, 1));
    REQUIRE(address_register(i));
    CHECK(address_register(i)->cls == RegClass::Int64);
    CHECK(address_register(i)->index == 1);
}

TEST_CASE("exit-only kernel") {
    Kernel k = parse_kernel(".kernel empty .smem 0\n    exit\n");
    CHECK(k.instructions.size() == 1);
    CHECK(k.instructions[0].op == Opcode::Exit);
    CHECK(validate_kernel(k).empty());
}

TEST_CASE("guards, hints, labels and immediates") {
    Kernel k = parse_kernel(R"(.kernel g .smem 256
top:
    setp.ge.s32 %p1, %r1, -3
@!%p1 bra top
    add.f32 %f1, %f1, 0f7FC00000 @N
    bar.sync 0
    exit @F
)");
    REQUIRE(k.instructions.size() == 5);
    CHECK(k.labels.at("top") == 0);
    CHECK(k.instructions[1].guard->negate);
    CHECK(k.instructions[1].target_index == 0);
    CHECK(k.instructions[2].hint == LocHint::Near);
    CHECK(std::get<Immediate>(k.instructions[2].srcs[1]).bits == 0x7FC00000u);
    CHECK(static_cast<std::int64_t>(std::get<Immediate>(k.instructions[0].srcs[1]).bits) == -3);
    CHECK(k.instructions[4].hint == LocHint::Far);
    CHECK(k.smem_bytes == 256);
}

TEST_CASE("syntax errors carry line and column") {
    try {
        parse_kernel(".kernel k .smem 0\n    add.f32 %f1, %f2, %f3\n    frob.u32 %r1, %r2\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(e.column() == 5);
        CHECK(std::string(e.what()).find("unknown opcode") != std::string::npos);
    }
    try {
        parse_kernel(".kernel k .smem 0\n    add.f32 %f1, %q2, %f3\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(e.column() == 18);
        CHECK(std::string(e.what()).find("malformed register") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_kernel("    exit\n"), ParseError);
}

TEST_CASE("validation diagnostics") {
    SUBCASE("write to special register") {
        Kernel k = parse_kernel(".kernel k .smem 0\n    mov.u32 %tid.x, 1\n    exit\n");
        auto d = validate_kernel(k);
        REQUIRE(has_message(d, "write to read-only special register"));
        CHECK(d[0].index == 0u);
    }
    SUBCASE("unresolved label") {
        Kernel k = parse_kernel(".kernel k .smem 0\n    bra nowhere\n    exit\n");
        auto d = validate_kernel(k);
        REQUIRE(has_message(d, "unresolved label"));
        CHECK(d[0].index == 0u);
    }
    SUBCASE("falls off the end") {
        Kernel k = parse_kernel(".kernel k .smem 0\n    add.s32 %r1, %r1, 1\n");
        CHECK(has_message(validate_kernel(k), "falls off the end"));
    }
    SUBCASE("class mismatches") {
        Kernel k = parse_kernel(".kernel k .smem 0\n    add.f32 %r1, %f1, %f2\n    ld.global.f32 %f1, [%f2]\n"
                                "    div.u64 %rd1, %rd1, 2\n    exit\n");
        auto d = validate_kernel(k);
        CHECK(has_message(d, "destination register class"));
        CHECK(has_message(d, "address register must be integer"));
        CHECK(has_message(d, "64-bit type only supported"));
    }
    SUBCASE("block size") {
        Kernel k = parse_kernel(".kernel k .smem 0\n.grid 1 48\n    exit\n");
        CHECK(has_message(validate_kernel(k), "multiple of 32"));
    }
    SUBCASE("valid axpy") {
        CHECK(validate_kernel(parse_kernel(kAxpy)).empty());
        CHECK_NOTHROW(require_valid(parse_kernel(kAxpy)));
    }
}

TEST_CASE("validation is deterministic") {
    Kernel k = parse_kernel(".kernel k .smem 0\n.grid 0 33\n    mov.u32 %tid.x, 1\n    bra x\n    add.f32 %r1, %f1, %f1\n");
    auto a = validate_kernel(k);
    auto b = validate_kernel(k);
    CHECK(a == b);
    CHECK(a.size() >= 4);
    CHECK_THROWS_AS(require_valid(k), std::invalid_argument);
}

TEST_CASE("print/parse round trip") {
    Kernel a = parse_kernel(kAxpy);
    CHECK(parse_kernel(print_kernel(a)) == a);

    std::mt19937_64 rng(mpu::testing::test_seed());
    for (int n = 0; n < 300; ++n) {
        Kernel k = mpu::testing::random_kernel(rng);
        REQUIRE(validate_kernel(k).empty());
        const std::string text = print_kernel(k);
        Kernel back = parse_kernel(text);
        CHECK(back == k);
        CHECK(print_kernel(back) == text);
    }
}

TEST_CASE("float immediates print exactly") {
    for (float v : {0.1f, 1.0f, -2.5e-7f, 3.4028235e38f, 1e-45f}) {
        Instruction i;
        i.op = Opcode::Mov;
        i.type = DataType::F32;
        i.dst = reg(RegClass::Float32, 0);
        i.srcs = {imm_f32(v)};
        Instruction back = parse_instruction(print_instruction(i));
        CHECK(back == i);
    }
}
