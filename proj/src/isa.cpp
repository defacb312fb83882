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

#include "mpu/isa.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <set>
#include <sstream>

namespace mpu::isa {

namespace {

constexpr std::string_view kOpcodeNames[] = {
    "add", "sub", "mul", "mad", "div", "min", "max", "mov", "cvt", "setp", "bra",
    "ld.global", "st.global", "ld.shared", "st.shared", "bar.sync", "exit",
};

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

bool is_ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}
bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}
bool is_identifier(std::string_view s) {
    if (s.empty() || !is_ident_start(s.front())) return false;
    return std::all_of(s.begin(), s.end(), is_ident_char);
}

std::optional<DataType> parse_type(std::string_view s) {
    if (s == "s32") return DataType::S32;
    if (s == "u32") return DataType::U32;
    if (s == "f32") return DataType::F32;
    if (s == "u64") return DataType::U64;
    if (s == "s64") return DataType::S64;
    return std::nullopt;
}

std::optional<CmpOp> parse_cmp(std::string_view s) {
    if (s == "eq") return CmpOp::Eq;
    if (s == "ne") return CmpOp::Ne;
    if (s == "lt") return CmpOp::Lt;
    if (s == "le") return CmpOp::Le;
    if (s == "gt") return CmpOp::Gt;
    if (s == "ge") return CmpOp::Ge;
    return std::nullopt;
}

// Parse failures inside a single line are reported relative to that line and
// re-based by parse_kernel.
struct LineError {
    std::size_t column;
    std::string message;
};

std::optional<Immediate> parse_immediate(std::string_view s, DataType t) {
    if (s.empty()) return std::nullopt;
    if (t == DataType::F32) {
        if (s.size() == 10 && (s.substr(0, 2) == "0f" || s.substr(0, 2) == "0F")) {
            std::uint32_t bits = 0;
            auto [p, ec] = std::from_chars(s.data() + 2, s.data() + s.size(), bits, 16);
            if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
            return Immediate{bits};
        }
        float v = 0.0f;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
        return imm_f32(v);
    }
    bool neg = false;
    std::string_view body = s;
    if (body.front() == '-') {
        neg = true;
        body.remove_prefix(1);
    }
    int base = 10;
    if (body.size() > 2 && body[0] == '0' && (body[1] == 'x' || body[1] == 'X')) {
        base = 16;
        body.remove_prefix(2);
    }
    std::uint64_t mag = 0;
    auto [p, ec] = std::from_chars(body.data(), body.data() + body.size(), mag, base);
    if (body.empty() || ec != std::errc{} || p != body.data() + body.size()) return std::nullopt;
    return Immediate{neg ? (~mag + 1) : mag};
}

std::string print_immediate(Immediate imm, DataType t) {
    if (t == DataType::F32) {
        const float v = std::bit_cast<float>(static_cast<std::uint32_t>(imm.bits));
        char buf[32];
        if (!std::isfinite(v)) {
            std::snprintf(buf, sizeof buf, "0f%08X", static_cast<unsigned>(imm.bits & 0xFFFFFFFFu));
            return buf;
        }
        auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
        std::string out(buf, p);
        // keep the literal visibly floating point
        if (out.find_first_of(".eE") == std::string::npos) out += ".0";
        return out;
    }
    return std::to_string(static_cast<std::int64_t>(imm.bits));
}

DataType operand_type(const Instruction& i) {
    return i.op == Opcode::Cvt ? i.src_type : i.type;
}

struct Cursor {
    std::string_view line;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    }
    bool done() {
        skip_ws();
        return pos >= line.size();
    }
    std::string_view token() {
        skip_ws();
        std::size_t start = pos;
        while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
        return line.substr(start, pos - start);
    }
};

Instruction parse_instruction_line(std::string_view line, std::size_t base_col) {
    Instruction ins;
    Cursor cur{line};
    auto fail = [&](std::size_t col, std::string msg) -> LineError {
        return LineError{base_col + col, std::move(msg)};
    };

    cur.skip_ws();
    if (cur.pos < line.size() && line[cur.pos] == '@') {
        const std::size_t col = cur.pos;
        std::string_view g = cur.token();
        g.remove_prefix(1);
        bool negate = false;
        if (!g.empty() && g.front() == '!') {
            negate = true;
            g.remove_prefix(1);
        }
        auto r = parse_register(g);
        if (!r) throw fail(col, "malformed guard register '" + std::string(g) + "'");
        ins.guard = Guard{*r, negate};
    }

    cur.skip_ws();
    const std::size_t op_col = cur.pos;
    std::string_view optok = cur.token();
    if (optok.empty()) throw fail(op_col, "expected opcode");
    auto parts = split(optok, '.');
    const std::string_view head = parts[0];
    auto need_type = [&](std::size_t idx) -> DataType {
        if (idx >= parts.size()) throw fail(op_col, "missing data type in '" + std::string(optok) + "'");
        auto t = parse_type(parts[idx]);
        if (!t) throw fail(op_col, "unknown data type '" + std::string(parts[idx]) + "'");
        return *t;
    };
    std::size_t expected_parts = 2;
    if (head == "add" || head == "sub" || head == "mul" || head == "mad" || head == "div" ||
        head == "min" || head == "max" || head == "mov") {
        static const std::pair<std::string_view, Opcode> table[] = {
            {"add", Opcode::Add}, {"sub", Opcode::Sub}, {"mul", Opcode::Mul}, {"mad", Opcode::Mad},
            {"div", Opcode::Div}, {"min", Opcode::Min}, {"max", Opcode::Max}, {"mov", Opcode::Mov},
        };
        for (auto& [n, o] : table)
            if (n == head) ins.op = o;
        ins.type = need_type(1);
    } else if (head == "cvt") {
        ins.op = Opcode::Cvt;
        ins.type = need_type(1);
        ins.src_type = need_type(2);
        expected_parts = 3;
    } else if (head == "setp") {
        ins.op = Opcode::Setp;
        if (parts.size() < 2) throw fail(op_col, "setp needs a comparison");
        auto c = parse_cmp(parts[1]);
        if (!c) throw fail(op_col, "unknown comparison '" + std::string(parts[1]) + "'");
        ins.cmp = *c;
        ins.type = need_type(2);
        expected_parts = 3;
    } else if (head == "ld" || head == "st") {
        if (parts.size() < 2 || (parts[1] != "global" && parts[1] != "shared"))
            throw fail(op_col, "unknown opcode '" + std::string(optok) + "'");
        const bool global = parts[1] == "global";
        ins.op = head == "ld" ? (global ? Opcode::LdGlobal : Opcode::LdShared)
                              : (global ? Opcode::StGlobal : Opcode::StShared);
        ins.type = need_type(2);
        expected_parts = 3;
    } else if (optok == "bra") {
        ins.op = Opcode::Bra;
        expected_parts = 1;
    } else if (optok == "bar.sync") {
        ins.op = Opcode::BarSync;
    } else if (optok == "exit") {
        ins.op = Opcode::Exit;
        expected_parts = 1;
    } else {
        throw fail(op_col, "unknown opcode '" + std::string(optok) + "'");
    }
    if (parts.size() != expected_parts)
        throw fail(op_col, "unknown opcode '" + std::string(optok) + "'");

    // Remaining text: operands, then an optional location suffix.
    std::string_view rest = line.substr(cur.pos);
    std::size_t rest_col = cur.pos;
    {
        std::string_view t = trim(rest);
        if (t.size() >= 2 && (t.substr(t.size() - 2) == "@N" || t.substr(t.size() - 2) == "@F")) {
            const bool at_boundary = t.size() == 2 || std::isspace(static_cast<unsigned char>(t[t.size() - 3]));
            if (at_boundary) {
                ins.hint = t.back() == 'N' ? LocHint::Near : LocHint::Far;
                const std::size_t cut = rest.rfind('@');
                rest = rest.substr(0, cut);
            }
        }
    }

    std::vector<std::pair<std::string_view, std::size_t>> ops;
    if (!trim(rest).empty()) {
        std::size_t start = 0;
        for (std::size_t i = 0; i <= rest.size(); ++i) {
            if (i == rest.size() || rest[i] == ',') {
                std::string_view piece = rest.substr(start, i - start);
                std::size_t lead = 0;
                while (lead < piece.size() && std::isspace(static_cast<unsigned char>(piece[lead]))) ++lead;
                ops.emplace_back(trim(piece), rest_col + start + lead);
                start = i + 1;
            }
        }
    }
    for (auto& [t, c] : ops)
        if (t.empty()) throw fail(c, "empty operand");

    auto reg_operand = [&](std::size_t k) -> RegisterId {
        auto r = parse_register(ops[k].first);
        if (!r) throw fail(ops[k].second, "malformed register '" + std::string(ops[k].first) + "'");
        return *r;
    };
    auto mem_operand = [&](std::size_t k) -> RegisterId {
        std::string_view t = ops[k].first;
        if (t.size() < 3 || t.front() != '[' || t.back() != ']')
            throw fail(ops[k].second, "expected [register] address operand");
        auto r = parse_register(trim(t.substr(1, t.size() - 2)));
        if (!r) throw fail(ops[k].second + 1, "malformed register '" + std::string(t) + "'");
        return *r;
    };
    auto value_operand = [&](std::size_t k) -> Operand {
        std::string_view t = ops[k].first;
        if (t.front() == '%') return reg_operand(k);
        auto imm = parse_immediate(t, operand_type(ins));
        if (!imm) throw fail(ops[k].second, "malformed immediate '" + std::string(t) + "'");
        return *imm;
    };
    auto expect_count = [&](std::size_t n) {
        if (ops.size() != n)
            throw fail(op_col, std::string(optok) + " expects " + std::to_string(n) + " operand(s), got " +
                                   std::to_string(ops.size()));
    };

    switch (ins.op) {
    case Opcode::Add: case Opcode::Sub: case Opcode::Mul: case Opcode::Div:
    case Opcode::Min: case Opcode::Max: case Opcode::Setp:
        expect_count(3);
        ins.dst = reg_operand(0);
        ins.srcs = {value_operand(1), value_operand(2)};
        break;
    case Opcode::Mad:
        expect_count(4);
        ins.dst = reg_operand(0);
        ins.srcs = {value_operand(1), value_operand(2), value_operand(3)};
        break;
    case Opcode::Mov: case Opcode::Cvt:
        expect_count(2);
        ins.dst = reg_operand(0);
        ins.srcs = {value_operand(1)};
        break;
    case Opcode::LdGlobal: case Opcode::LdShared:
        expect_count(2);
        ins.dst = reg_operand(0);
        ins.srcs = {mem_operand(1)};
        break;
    case Opcode::StGlobal: case Opcode::StShared:
        expect_count(2);
        ins.srcs = {mem_operand(0), value_operand(1)};
        break;
    case Opcode::Bra:
        expect_count(1);
        if (!is_identifier(ops[0].first)) throw fail(ops[0].second, "malformed label '" + std::string(ops[0].first) + "'");
        ins.target = std::string(ops[0].first);
        break;
    case Opcode::BarSync:
        if (ops.size() > 1) expect_count(1);
        if (ops.size() == 1) {
            auto imm = parse_immediate(ops[0].first, DataType::U32);
            if (!imm) throw fail(ops[0].second, "malformed barrier id");
            ins.barrier_id = static_cast<std::uint32_t>(imm->bits);
        }
        break;
    case Opcode::Exit:
        expect_count(0);
        break;
    }
    return ins;
}

}  // namespace

RegisterId reg(RegClass cls, std::uint32_t index) { return RegisterId{cls, index, Special::None}; }

RegisterId special_reg(Special s) { return RegisterId{RegClass::Int32, 0, s}; }

std::string to_string(const RegisterId& r) {
    switch (r.special) {
    case Special::TidX: return "%tid.x";
    case Special::NtidX: return "%ntid.x";
    case Special::CtaidX: return "%ctaid.x";
    case Special::NctaidX: return "%nctaid.x";
    case Special::None: break;
    }
    const char* prefix = "%r";
    switch (r.cls) {
    case RegClass::Int32: prefix = "%r"; break;
    case RegClass::Int64: prefix = "%rd"; break;
    case RegClass::Float32: prefix = "%f"; break;
    case RegClass::Pred: prefix = "%p"; break;
    }
    return prefix + std::to_string(r.index);
}

std::optional<RegisterId> parse_register(std::string_view t) {
    if (t == "%tid.x") return special_reg(Special::TidX);
    if (t == "%ntid.x") return special_reg(Special::NtidX);
    if (t == "%ctaid.x") return special_reg(Special::CtaidX);
    if (t == "%nctaid.x") return special_reg(Special::NctaidX);
    if (t.size() < 3 || t.front() != '%') return std::nullopt;
    t.remove_prefix(1);
    RegClass cls;
    if (t.substr(0, 2) == "rd") {
        cls = RegClass::Int64;
        t.remove_prefix(2);
    } else if (t.front() == 'r') {
        cls = RegClass::Int32;
        t.remove_prefix(1);
    } else if (t.front() == 'f') {
        cls = RegClass::Float32;
        t.remove_prefix(1);
    } else if (t.front() == 'p') {
        cls = RegClass::Pred;
        t.remove_prefix(1);
    } else {
        return std::nullopt;
    }
    if (t.empty() || !std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
        return std::nullopt;
    std::uint32_t idx = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), idx);
    if (ec != std::errc{}) return std::nullopt;
    return reg(cls, idx);
}

std::string_view to_string(Opcode op) { return kOpcodeNames[static_cast<int>(op)]; }

std::string_view to_string(DataType t) {
    switch (t) {
    case DataType::S32: return "s32";
    case DataType::U32: return "u32";
    case DataType::F32: return "f32";
    case DataType::U64: return "u64";
    case DataType::S64: return "s64";
    case DataType::None: break;
    }
    return "";
}

std::string_view to_string(CmpOp c) {
    switch (c) {
    case CmpOp::Eq: return "eq";
    case CmpOp::Ne: return "ne";
    case CmpOp::Lt: return "lt";
    case CmpOp::Le: return "le";
    case CmpOp::Gt: return "gt";
    case CmpOp::Ge: return "ge";
    case CmpOp::None: break;
    }
    return "";
}

char to_char(Location l) {
    switch (l) {
    case Location::U: return 'U';
    case Location::N: return 'N';
    case Location::F: return 'F';
    case Location::B: return 'B';
    }
    return '?';
}

Immediate imm_int(std::int64_t v) { return Immediate{static_cast<std::uint64_t>(v)}; }

Immediate imm_f32(float v) { return Immediate{std::bit_cast<std::uint32_t>(v)}; }

bool is_global_mem(Opcode op) noexcept { return op == Opcode::LdGlobal || op == Opcode::StGlobal; }
bool is_shared_mem(Opcode op) noexcept { return op == Opcode::LdShared || op == Opcode::StShared; }
bool is_memory(Opcode op) noexcept { return is_global_mem(op) || is_shared_mem(op); }
bool is_load(Opcode op) noexcept { return op == Opcode::LdGlobal || op == Opcode::LdShared; }
bool is_store(Opcode op) noexcept { return op == Opcode::StGlobal || op == Opcode::StShared; }
bool is_control(Opcode op) noexcept {
    return op == Opcode::Bra || op == Opcode::BarSync || op == Opcode::Exit;
}

RegClass class_of(DataType t) {
    switch (t) {
    case DataType::S32:
    case DataType::U32: return RegClass::Int32;
    case DataType::F32: return RegClass::Float32;
    case DataType::U64:
    case DataType::S64: return RegClass::Int64;
    case DataType::None: break;
    }
    return RegClass::Pred;
}

unsigned width_bytes(DataType t) {
    return (t == DataType::U64 || t == DataType::S64) ? 8u : 4u;
}

std::vector<RegisterId> source_registers(const Instruction& i) {
    std::vector<RegisterId> out;
    for (const auto& s : i.srcs)
        if (auto* r = std::get_if<RegisterId>(&s)) out.push_back(*r);
    return out;
}

std::optional<RegisterId> address_register(const Instruction& i) {
    if (!is_memory(i.op) || i.srcs.empty()) return std::nullopt;
    if (auto* r = std::get_if<RegisterId>(&i.srcs[0])) return *r;
    return std::nullopt;
}

std::optional<RegisterId> data_register(const Instruction& i) {
    if (is_load(i.op)) return i.dst;
    if (is_store(i.op) && i.srcs.size() > 1)
        if (auto* r = std::get_if<RegisterId>(&i.srcs[1])) return *r;
    return std::nullopt;
}

ParseError::ParseError(std::size_t line, std::size_t column, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
      line_(line), column_(column) {}

Instruction parse_instruction(std::string_view text) {
    try {
        return parse_instruction_line(text, 1);
    } catch (const LineError& e) {
        throw ParseError(1, e.column, e.message);
    }
}

Kernel parse_kernel(std::string_view text) {
    Kernel k;
    bool have_header = false;
    std::vector<std::pair<std::string, std::size_t>> pending_labels;  // label, line
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view raw = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
        if (auto c = raw.find("//"); c != std::string_view::npos) raw = raw.substr(0, c);
        std::size_t lead = 0;
        while (lead < raw.size() && std::isspace(static_cast<unsigned char>(raw[lead]))) ++lead;
        std::string_view line = trim(raw);
        if (line.empty()) {
            if (end == text.size()) break;
            continue;
        }
        const std::size_t col0 = lead + 1;

        if (line.front() == '.') {
            Cursor cur{line};
            std::string_view d = cur.token();
            if (d == ".kernel") {
                if (have_header) throw ParseError(line_no, col0, "duplicate .kernel header");
                std::string_view name = cur.token();
                if (!is_identifier(name)) throw ParseError(line_no, col0 + cur.pos - name.size(), "malformed kernel name");
                k.name = std::string(name);
                std::string_view sm = cur.token();
                if (sm != ".smem") throw ParseError(line_no, col0 + cur.pos - sm.size(), "expected .smem <bytes>");
                std::string_view bytes = cur.token();
                auto v = parse_immediate(bytes, DataType::U32);
                if (!v || static_cast<std::int64_t>(v->bits) < 0)
                    throw ParseError(line_no, col0 + cur.pos - bytes.size(), "malformed .smem size");
                k.smem_bytes = static_cast<std::uint32_t>(v->bits);
                if (!cur.done()) throw ParseError(line_no, col0 + cur.pos, "trailing text after header");
                have_header = true;
            } else if (!have_header) {
                throw ParseError(line_no, col0, "expected .kernel header");
            } else if (d == ".grid") {
                std::string_view b = cur.token();
                std::string_view t = cur.token();
                auto bv = parse_immediate(b, DataType::U32);
                auto tv = parse_immediate(t, DataType::U32);
                if (!bv || !tv || !cur.done()) throw ParseError(line_no, col0, "expected .grid <blocks> <threads>");
                k.grid = GridConfig{static_cast<std::uint32_t>(bv->bits), static_cast<std::uint32_t>(tv->bits)};
            } else if (d == ".regloc") {
                std::string_view r = cur.token();
                std::string_view l = cur.token();
                auto rid = parse_register(r);
                if (!rid) throw ParseError(line_no, col0 + cur.pos - l.size() - 1 - r.size(), "malformed register '" + std::string(r) + "'");
                Location loc;
                if (l == "N") loc = Location::N;
                else if (l == "F") loc = Location::F;
                else if (l == "B") loc = Location::B;
                else if (l == "U") loc = Location::U;
                else throw ParseError(line_no, col0 + cur.pos - l.size(), "location must be N, F, B or U");
                if (!cur.done()) throw ParseError(line_no, col0 + cur.pos, "trailing text after .regloc");
                k.reg_locations[*rid] = loc;
            } else {
                throw ParseError(line_no, col0, "unknown directive '" + std::string(d) + "'");
            }
            continue;
        }
        if (!have_header) throw ParseError(line_no, col0, "expected .kernel header");

        // leading label
        std::size_t colon = line.find(':');
        if (colon != std::string_view::npos && is_identifier(trim(line.substr(0, colon)))) {
            std::string label(trim(line.substr(0, colon)));
            if (k.labels.count(label) || std::any_of(pending_labels.begin(), pending_labels.end(),
                                                     [&](auto& p) { return p.first == label; }))
                throw ParseError(line_no, col0, "duplicate label '" + label + "'");
            k.labels[label] = static_cast<std::uint32_t>(k.instructions.size());
            std::string_view after = line.substr(colon + 1);
            std::size_t skip = colon + 1;
            while (skip < line.size() && std::isspace(static_cast<unsigned char>(line[skip]))) ++skip;
            after = trim(after);
            if (after.empty()) continue;
            try {
                k.instructions.push_back(parse_instruction_line(after, col0 + skip));
            } catch (const LineError& e) {
                throw ParseError(line_no, e.column, e.message);
            }
            continue;
        }
        try {
            k.instructions.push_back(parse_instruction_line(line, col0));
        } catch (const LineError& e) {
            throw ParseError(line_no, e.column, e.message);
        }
    }
    if (!have_header) throw ParseError(line_no == 0 ? 1 : line_no, 1, "expected .kernel header");
    for (auto& ins : k.instructions) {
        if (ins.op != Opcode::Bra) continue;
        if (auto it = k.labels.find(ins.target); it != k.labels.end()) ins.target_index = it->second;
    }
    return k;
}

std::string print_instruction(const Instruction& i) {
    std::string out;
    if (i.guard) out += std::string("@") + (i.guard->negate ? "!" : "") + to_string(i.guard->reg) + " ";
    switch (i.op) {
    case Opcode::Cvt:
        out += "cvt." + std::string(to_string(i.type)) + "." + std::string(to_string(i.src_type));
        break;
    case Opcode::Setp:
        out += "setp." + std::string(to_string(i.cmp)) + "." + std::string(to_string(i.type));
        break;
    case Opcode::Bra:
    case Opcode::BarSync:
    case Opcode::Exit:
        out += to_string(i.op);
        break;
    default:
        out += std::string(to_string(i.op)) + "." + std::string(to_string(i.type));
        break;
    }
    auto operand = [&](const Operand& o) {
        if (auto* r = std::get_if<RegisterId>(&o)) return to_string(*r);
        return print_immediate(std::get<Immediate>(o), operand_type(i));
    };
    std::vector<std::string> ops;
    switch (i.op) {
    case Opcode::LdGlobal:
    case Opcode::LdShared:
        if (i.dst) ops.push_back(to_string(*i.dst));
        if (!i.srcs.empty()) ops.push_back("[" + operand(i.srcs[0]) + "]");
        break;
    case Opcode::StGlobal:
    case Opcode::StShared:
        if (!i.srcs.empty()) ops.push_back("[" + operand(i.srcs[0]) + "]");
        for (std::size_t s = 1; s < i.srcs.size(); ++s) ops.push_back(operand(i.srcs[s]));
        break;
    case Opcode::Bra:
        ops.push_back(i.target);
        break;
    case Opcode::BarSync:
        ops.push_back(std::to_string(i.barrier_id));
        break;
    default:
        if (i.dst) ops.push_back(to_string(*i.dst));
        for (const auto& s : i.srcs) ops.push_back(operand(s));
        break;
    }
    for (std::size_t k = 0; k < ops.size(); ++k) out += (k == 0 ? " " : ", ") + ops[k];
    if (i.hint == LocHint::Near) out += " @N";
    if (i.hint == LocHint::Far) out += " @F";
    return out;
}

std::string print_kernel(const Kernel& k) {
    std::ostringstream os;
    os << ".kernel " << k.name << " .smem " << k.smem_bytes << "\n";
    os << ".grid " << k.grid.blocks << " " << k.grid.threads_per_block << "\n";
    for (const auto& [r, l] : k.reg_locations) os << ".regloc " << to_string(r) << " " << to_char(l) << "\n";
    std::multimap<std::uint32_t, std::string> at;
    for (const auto& [name, idx] : k.labels) at.emplace(idx, name);
    for (std::size_t i = 0; i <= k.instructions.size(); ++i) {
        auto [lo, hi] = at.equal_range(static_cast<std::uint32_t>(i));
        for (auto it = lo; it != hi; ++it) os << it->second << ":\n";
        if (i < k.instructions.size()) os << "    " << print_instruction(k.instructions[i]) << "\n";
    }
    return os.str();
}

std::vector<RegisterId> collect_registers(const Kernel& k) {
    std::set<RegisterId> regs;
    for (const auto& i : k.instructions) {
        if (i.dst && !i.dst->is_special()) regs.insert(*i.dst);
        for (const auto& r : source_registers(i))
            if (!r.is_special()) regs.insert(r);
        if (i.guard && !i.guard->reg.is_special()) regs.insert(i.guard->reg);
    }
    return {regs.begin(), regs.end()};
}

std::vector<Diagnostic> validate_kernel(const Kernel& k) {
    std::vector<Diagnostic> diags;
    auto add = [&](std::optional<std::size_t> idx, std::string msg) { diags.push_back({idx, std::move(msg)}); };

    if (k.grid.blocks == 0) add(std::nullopt, "grid has zero blocks");
    if (k.grid.threads_per_block == 0 || k.grid.threads_per_block % kWarpSize != 0)
        add(std::nullopt, "threads per block must be a positive multiple of 32");
    if (k.instructions.empty()) add(std::nullopt, "kernel has no instructions");

    for (std::size_t idx = 0; idx < k.instructions.size(); ++idx) {
        const Instruction& i = k.instructions[idx];
        auto bad = [&](const std::string& msg) { add(idx, msg); };

        if (i.guard && i.guard->reg.cls != RegClass::Pred) bad("guard must be a predicate register");
        if (i.guard && i.guard->reg.is_special()) bad("guard must be a predicate register");
        if (i.dst && i.dst->is_special()) bad("write to read-only special register");

        const bool needs_dst = !(is_store(i.op) || is_control(i.op));
        if (needs_dst && !i.dst) bad("missing destination register");
        if (!needs_dst && i.dst) bad("instruction cannot have a destination");

        std::size_t want_srcs = 0;
        switch (i.op) {
        case Opcode::Add: case Opcode::Sub: case Opcode::Mul: case Opcode::Div:
        case Opcode::Min: case Opcode::Max: case Opcode::Setp:
        case Opcode::StGlobal: case Opcode::StShared: want_srcs = 2; break;
        case Opcode::Mad: want_srcs = 3; break;
        case Opcode::Mov: case Opcode::Cvt: case Opcode::LdGlobal: case Opcode::LdShared: want_srcs = 1; break;
        default: want_srcs = 0; break;
        }
        if (i.srcs.size() != want_srcs) {
            bad("wrong number of source operands");
            continue;
        }

        const bool typed = !(i.op == Opcode::Bra || i.op == Opcode::BarSync || i.op == Opcode::Exit);
        if (typed && i.type == DataType::None) {
            bad("missing data type");
            continue;
        }
        if (i.op == Opcode::Cvt && i.src_type == DataType::None) {
            bad("cvt needs a source type");
            continue;
        }

        const bool wide = typed && class_of(i.type) == RegClass::Int64;
        if (wide && !(i.op == Opcode::Add || i.op == Opcode::Mul || i.op == Opcode::Mov || i.op == Opcode::Cvt ||
                      is_memory(i.op)))
            bad("64-bit type only supported by add, mul, mov, cvt, ld and st");

        if (i.dst && !i.dst->is_special()) {
            const RegClass want = i.op == Opcode::Setp ? RegClass::Pred : class_of(i.type);
            if (i.dst->cls != want) bad("destination register class does not match instruction type");
        }
        if (i.op == Opcode::Setp && i.cmp == CmpOp::None) bad("setp needs a comparison");

        auto check_value = [&](const Operand& o, DataType t) {
            if (auto* r = std::get_if<RegisterId>(&o)) {
                if (r->cls != class_of(t)) bad("source register " + to_string(*r) + " has the wrong class");
            }
        };
        if (is_memory(i.op)) {
            auto* a = std::get_if<RegisterId>(&i.srcs[0]);
            if (!a) bad("address operand must be a register");
            else if (a->cls != RegClass::Int32 && a->cls != RegClass::Int64)
                bad("address register must be integer class");
            if (is_store(i.op)) check_value(i.srcs[1], i.type);
        } else if (i.op == Opcode::Cvt) {
            check_value(i.srcs[0], i.src_type);
        } else {
            for (const auto& s : i.srcs) check_value(s, i.type);
        }

        if (i.op == Opcode::Bra) {
            if (i.target_index == Instruction::kUnresolved) bad("unresolved label '" + i.target + "'");
            else if (i.target_index >= k.instructions.size()) bad("branch target past end of kernel");
        }
    }

    // Every reachable path must end at exit.
    if (!k.instructions.empty()) {
        std::vector<char> seen(k.instructions.size(), 0);
        std::vector<std::size_t> work{0};
        std::set<std::size_t> fall_off;
        while (!work.empty()) {
            std::size_t n = work.back();
            work.pop_back();
            if (seen[n]) continue;
            seen[n] = 1;
            const Instruction& i = k.instructions[n];
            if (i.op == Opcode::Exit && !i.guard) continue;
            if (i.op == Opcode::Bra && i.target_index < k.instructions.size()) {
                work.push_back(i.target_index);
                if (!i.guard) continue;
            }
            if (n + 1 < k.instructions.size()) work.push_back(n + 1);
            else fall_off.insert(n);
        }
        for (std::size_t n : fall_off) add(n, "control falls off the end of the kernel without exit");
    }

    std::stable_sort(diags.begin(), diags.end(), [](const Diagnostic& a, const Diagnostic& b) {
        const std::size_t ia = a.index.value_or(0), ib = b.index.value_or(0);
        if (a.index.has_value() != b.index.has_value()) return !a.index.has_value();
        if (ia != ib) return ia < ib;
        return a.message < b.message;
    });
    return diags;
}

void require_valid(const Kernel& k) {
    auto diags = validate_kernel(k);
    if (diags.empty()) return;
    std::string msg = "invalid kernel '" + k.name + "':";
    for (const auto& d : diags) {
        msg += "\n  ";
        if (d.index) msg += "[" + std::to_string(*d.index) + "] ";
        msg += d.message;
    }
    throw std::invalid_argument(msg);
}

}  // namespace mpu::isa
