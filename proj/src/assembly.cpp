// Copyright 2026 The xdpvliw Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "xdpvliw/assembly.hpp"

#include <cctype>
#include <map>
#include <sstream>
#include <vector>

#include "xdpvliw/helpers.hpp"

namespace xdpvliw::isa {

namespace {

enum class Tok { Word, Number, Punct, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
};

std::vector<Token> lex(std::string_view s) {
    static const char* kPuncts[] = {"<<=", ">>=", "+=", "-=", "*=", "/=", "|=", "&=", "%=", "^=", "==", "!=",
                                    ">=", "<=", "<<", ">>", "=", "+", "-", "*", "/", "|", "&", "%", "^",
                                    "(", ")", "[", "]", ",", ":", ">", "<"};
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < s.size() && std::isalnum(static_cast<unsigned char>(s[j]))) ++j;
            out.push_back({Tok::Number, std::string(s.substr(i, j - i))});
            i = j;
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.') {
            std::size_t j = i;
            while (j < s.size() &&
                   (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_' || s[j] == '.')) {
                ++j;
            }
            out.push_back({Tok::Word, std::string(s.substr(i, j - i))});
            i = j;
            continue;
        }
        bool matched = false;
        for (const char* p : kPuncts) {
            const std::string_view pv(p);
            if (s.substr(i, pv.size()) == pv) {
                out.push_back({Tok::Punct, std::string(pv)});
                i += pv.size();
                matched = true;
                break;
            }
        }
        if (!matched) throw AsmError(AsmError::Code::SyntaxError, 0, std::string("unexpected character '") + c + "'");
    }
    return out;
}

std::string strip_comment(std::string_view line) {
    std::size_t cut = line.size();
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == ';' || line[i] == '#' || (line[i] == '/' && i + 1 < line.size() && line[i + 1] == '/')) {
            cut = i;
            break;
        }
    }
    return std::string(line.substr(0, cut));
}

struct RegTok {
    Reg reg;
    bool wide;  // r (64-bit) vs w (32-bit)
};

std::optional<RegTok> as_reg(const Token& t) {
    if (t.kind != Tok::Word || t.text.size() < 2 || (t.text[0] != 'r' && t.text[0] != 'w')) return std::nullopt;
    int v = 0;
    for (std::size_t i = 1; i < t.text.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(t.text[i]))) return std::nullopt;
        v = v * 10 + (t.text[i] - '0');
        if (v > 99) return std::nullopt;
    }
    if (v >= kNumRegisters) return std::nullopt;
    return RegTok{Reg(v), t.text[0] == 'r'};
}

const std::map<std::string, AluOp, std::less<>>& infix_alu_ops() {
    static const std::map<std::string, AluOp, std::less<>> m{
        {"+", AluOp::Add}, {"-", AluOp::Sub},  {"*", AluOp::Mul}, {"/", AluOp::Div},
        {"|", AluOp::Or},  {"&", AluOp::And},  {"<<", AluOp::Lsh}, {">>", AluOp::Rsh},
        {"%", AluOp::Mod}, {"^", AluOp::Xor},  {"s>>", AluOp::Arsh}};
    return m;
}

const std::map<std::string, JmpOp, std::less<>>& infix_jmp_ops() {
    static const std::map<std::string, JmpOp, std::less<>> m{
        {"==", JmpOp::Eq}, {"!=", JmpOp::Ne}, {">", JmpOp::Gt},    {">=", JmpOp::Ge},
        {"<", JmpOp::Lt},  {"<=", JmpOp::Le}, {"s>", JmpOp::Sgt},  {"s>=", JmpOp::Sge},
        {"s<", JmpOp::Slt}, {"s<=", JmpOp::Sle}, {"&", JmpOp::Set}};
    return m;
}

const std::map<std::string, AluOp, std::less<>>& mnemonic_alu_ops() {
    static const std::map<std::string, AluOp, std::less<>> m{
        {"add", AluOp::Add}, {"sub", AluOp::Sub}, {"mul", AluOp::Mul}, {"div", AluOp::Div},
        {"or", AluOp::Or},   {"and", AluOp::And}, {"lsh", AluOp::Lsh}, {"rsh", AluOp::Rsh},
        {"mod", AluOp::Mod}, {"xor", AluOp::Xor}, {"arsh", AluOp::Arsh}};
    return m;
}

const std::map<std::string, JmpOp, std::less<>>& mnemonic_jmp_ops() {
    static const std::map<std::string, JmpOp, std::less<>> m{
        {"jeq", JmpOp::Eq},   {"jne", JmpOp::Ne},   {"jgt", JmpOp::Gt},   {"jge", JmpOp::Ge},
        {"jlt", JmpOp::Lt},   {"jle", JmpOp::Le},   {"jsgt", JmpOp::Sgt}, {"jsge", JmpOp::Sge},
        {"jslt", JmpOp::Slt}, {"jsle", JmpOp::Sle}, {"jset", JmpOp::Set}};
    return m;
}

int type_width(std::string_view t) {
    if (t == "u8") return 1;
    if (t == "u16") return 2;
    if (t == "u32") return 4;
    if (t == "u48") return 6;
    if (t == "u64") return 8;
    return 0;
}

const char* type_name(int w) {
    switch (w) {
    case 1: return "u8";
    case 2: return "u16";
    case 4: return "u32";
    case 6: return "u48";
    default: return "u64";
    }
}

int suffix_width(std::string_view s) {
    if (s == "b") return 1;
    if (s == "h") return 2;
    if (s == "w") return 4;
    if (s == "dw") return 8;
    if (s == "48") return 6;
    return 0;
}

class Parser {
  public:
    Parser(std::vector<Token> toks, const std::function<std::optional<std::int32_t>(std::string_view)>& resolve)
        : toks_(std::move(toks)), resolve_(resolve) {}

    Instruction parse() {
        const Token& first = peek();
        if (first.kind != Tok::Word && !is("*")) fail("expected an instruction");
        Instruction insn;
        if (is("*")) {
            insn = parse_infix_store();
        } else if (as_reg(first)) {
            insn = parse_infix_reg();
        } else {
            insn = parse_keyword();
        }
        if (peek().kind != Tok::End) fail("trailing tokens after instruction: '" + peek().text + "'");
        return insn;
    }

  private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    const std::function<std::optional<std::int32_t>(std::string_view)>& resolve_;
    Token end_;

    [[noreturn]] static void fail(const std::string& msg) { throw AsmError(AsmError::Code::SyntaxError, 0, msg); }

    const Token& peek(std::size_t k = 0) const { return pos_ + k < toks_.size() ? toks_[pos_ + k] : end_; }
    bool is(std::string_view text, std::size_t k = 0) const {
        const Token& t = peek(k);
        return t.kind != Tok::End && t.text == text;
    }
    Token next() {
        if (pos_ >= toks_.size()) fail("unexpected end of line");
        return toks_[pos_++];
    }
    bool accept(std::string_view text) {
        if (is(text)) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(std::string_view text) {
        if (!accept(text)) fail("expected '" + std::string(text) + "'");
    }

    RegTok reg() {
        auto r = as_reg(peek());
        if (!r) fail("expected a register, got '" + peek().text + "'");
        ++pos_;
        return *r;
    }

    bool at_number() const {
        return peek().kind == Tok::Number || ((is("-") || is("+")) && peek(1).kind == Tok::Number);
    }

    std::int64_t number() {
        bool neg = false;
        if (accept("-")) {
            neg = true;
        } else {
            accept("+");
        }
        const Token t = next();
        if (t.kind != Tok::Number) fail("expected a number, got '" + t.text + "'");
        std::uint64_t v = 0;
        try {
            std::size_t used = 0;
            v = std::stoull(t.text, &used, 0);
            if (used != t.text.size()) fail("bad number '" + t.text + "'");
        } catch (const std::logic_error&) {
            fail("bad number '" + t.text + "'");
        }
        const auto s = static_cast<std::int64_t>(v);
        return neg ? -s : s;
    }

    std::int32_t label() {
        const Token t = next();
        if (t.kind != Tok::Word && t.kind != Tok::Number) fail("expected a label");
        auto target = resolve_(t.text);
        if (!target) throw AsmError(AsmError::Code::UndefinedLabel, 0, "undefined label '" + t.text + "'");
        return *target;
    }

    // Signed operator spelled as the word `s` followed by punctuation.
    std::optional<std::string> signed_op() {
        if (is("s") && peek(1).kind == Tok::Punct) {
            const std::string op = "s" + peek(1).text;
            pos_ += 2;
            return op;
        }
        return std::nullopt;
    }

    std::pair<Reg, std::int16_t> mem_operand_parens() {
        expect("(");
        const RegTok base = reg();
        std::int64_t off = 0;
        if (is("+") || is("-")) off = number();
        expect(")");
        return {base.reg, static_cast<std::int16_t>(off)};
    }

    std::pair<Reg, std::int16_t> mem_operand_brackets() {
        expect("[");
        const RegTok base = reg();
        std::int64_t off = 0;
        if (is("+") || is("-")) off = number();
        expect("]");
        return {base.reg, static_cast<std::int16_t>(off)};
    }

    int type_cast() {
        expect("*");
        expect("(");
        const Token t = next();
        const int w = type_width(t.text);
        if (w == 0) fail("unknown access type '" + t.text + "'");
        expect("*");
        expect(")");
        return w;
    }

    Instruction parse_infix_store() {
        const int w = type_cast();
        auto [base, off] = mem_operand_parens();
        expect("=");
        if (at_number()) {
            if (w == 6) fail("u48 stores need a register source");
            return store_imm(w, base, off, number());
        }
        const RegTok src = reg();
        return w == 6 ? store48(base, off, src.reg) : store_reg(w, base, off, src.reg);
    }

    Instruction parse_infix_reg() {
        const RegTok dst = reg();
        const int width = dst.wide ? 64 : 32;
        std::string op;
        if (auto s = signed_op()) {
            op = *s;
        } else {
            op = next().text;
        }
        if (op != "=") {
            if (op.size() < 2 || op.back() != '=') fail("expected an assignment operator");
            const std::string bin = op.substr(0, op.size() - 1);
            auto it = infix_alu_ops().find(bin);
            if (it == infix_alu_ops().end()) fail("unknown operator '" + op + "'");
            if (at_number()) return alu_imm(it->second, dst.reg, number(), width);
            return alu_reg(it->second, dst.reg, reg().reg, width);
        }
        if (is("-") && as_reg(peek(1))) {
            ++pos_;
            const RegTok src = reg();
            if (src.reg != dst.reg) fail("negation must be in place");
            return alu_imm(AluOp::Neg, dst.reg, 0, width);
        }
        if (peek().kind == Tok::Word) {
            const std::string& w = peek().text;
            if (w == "be16" || w == "be32" || w == "be64" || w == "le16" || w == "le32" || w == "le64") {
                ++pos_;
                const RegTok src = reg();
                if (src.reg != dst.reg) fail("byte swap must be in place");
                return alu_imm(w[0] == 'b' ? AluOp::Be : AluOp::Le, dst.reg, std::stoi(w.substr(2)), 32);
            }
            if (w == "map") {
                ++pos_;
                expect("[");
                const std::int64_t id = number();
                expect("]");
                return load_map(dst.reg, static_cast<std::uint32_t>(id));
            }
        }
        if (is("*")) {
            const int w = type_cast();
            auto [base, off] = mem_operand_parens();
            return w == 6 ? load48(dst.reg, base, off) : load(w, dst.reg, base, off);
        }
        if (at_number()) {
            const std::int64_t v = number();
            if (peek().kind == Tok::Word && peek().text == "ll") {
                ++pos_;
                return load_imm64(dst.reg, v);
            }
            return mov_imm(dst.reg, v, width);
        }
        const RegTok src = reg();
        if (peek().kind == Tok::End) return mov_reg(dst.reg, src.reg, width);
        std::string bop;
        if (auto s = signed_op()) {
            bop = *s;
        } else {
            bop = next().text;
        }
        auto it = infix_alu_ops().find(bop);
        if (it == infix_alu_ops().end()) fail("unknown operator '" + bop + "'");
        if (!dst.wide || !src.wide) fail("three-operand form is 64-bit only");
        if (at_number()) return alu3_imm(it->second, dst.reg, src.reg, number());
        return alu3_reg(it->second, dst.reg, src.reg, reg().reg);
    }

    std::int64_t helper_operand() {
        if (peek().kind == Tok::Word) {
            const Token t = next();
            const HelperInfo* h = find_helper(t.text);
            if (!h) fail("unknown helper '" + t.text + "'");
            return h->id;
        }
        return number();
    }

    Instruction parse_keyword() {
        const std::string m = next().text;
        if (m == "exit") return exit_insn();
        if (m == "early_exit") return early_exit(number());
        if (m == "call") return call(helper_operand());
        if (m == "goto" || m == "ja") return jump(label());
        if (m == "if") {
            const RegTok lhs = reg();
            std::string op;
            if (auto s = signed_op()) {
                op = *s;
            } else {
                op = next().text;
            }
            auto it = infix_jmp_ops().find(op);
            if (it == infix_jmp_ops().end()) fail("unknown comparison '" + op + "'");
            const int width = lhs.wide ? 64 : 32;
            Instruction insn;
            if (at_number()) {
                insn = branch_imm(it->second, lhs.reg, number(), -1, width);
            } else {
                insn = branch_reg(it->second, lhs.reg, reg().reg, -1, width);
            }
            expect("goto");
            insn.target = label();
            return insn;
        }

        std::string base = m;
        int width = 64;
        if (base.size() > 2 && base.ends_with("32") && !base.starts_with("le") && !base.starts_with("be")) {
            base = base.substr(0, base.size() - 2);
            width = 32;
        }
        if (base == "mov") {
            const RegTok d = reg();
            expect(",");
            if (at_number()) return mov_imm(d.reg, number(), width);
            return mov_reg(d.reg, reg().reg, width);
        }
        if (base == "neg") return alu_imm(AluOp::Neg, reg().reg, 0, width);
        if (auto it = mnemonic_alu_ops().find(base); it != mnemonic_alu_ops().end()) {
            const RegTok d = reg();
            expect(",");
            if (at_number()) return alu_imm(it->second, d.reg, number(), width);
            return alu_reg(it->second, d.reg, reg().reg, width);
        }
        if (m.size() == 4 && (m.starts_with("le") || m.starts_with("be"))) {
            const int bits = std::stoi(m.substr(2));
            if (bits != 16 && bits != 32 && bits != 64) {
                throw AsmError(AsmError::Code::UnknownMnemonic, 0, "unknown mnemonic '" + m + "'");
            }
            return alu_imm(m[0] == 'b' ? AluOp::Be : AluOp::Le, reg().reg, bits, 32);
        }
        if (m.size() > 1 && m.back() == '3') {
            if (auto it = mnemonic_alu_ops().find(m.substr(0, m.size() - 1)); it != mnemonic_alu_ops().end()) {
                const RegTok d = reg();
                expect(",");
                const RegTok s = reg();
                expect(",");
                if (at_number()) return alu3_imm(it->second, d.reg, s.reg, number());
                return alu3_reg(it->second, d.reg, s.reg, reg().reg);
            }
        }
        if (m == "lddw") {
            const RegTok d = reg();
            expect(",");
            if (accept("map")) {
                expect("[");
                const std::int64_t id = number();
                expect("]");
                return load_map(d.reg, static_cast<std::uint32_t>(id));
            }
            return load_imm64(d.reg, number());
        }
        if (m.starts_with("ldx") && suffix_width(m.substr(3)) != 0) {
            const int w = suffix_width(m.substr(3));
            const RegTok d = reg();
            expect(",");
            auto [b, off] = mem_operand_brackets();
            return w == 6 ? load48(d.reg, b, off) : load(w, d.reg, b, off);
        }
        if (m.starts_with("stx") && suffix_width(m.substr(3)) != 0) {
            const int w = suffix_width(m.substr(3));
            auto [b, off] = mem_operand_brackets();
            expect(",");
            const RegTok s = reg();
            return w == 6 ? store48(b, off, s.reg) : store_reg(w, b, off, s.reg);
        }
        if (m.starts_with("st") && suffix_width(m.substr(2)) != 0 && m != "st48") {
            const int w = suffix_width(m.substr(2));
            auto [b, off] = mem_operand_brackets();
            expect(",");
            return store_imm(w, b, off, number());
        }
        if (auto it = mnemonic_jmp_ops().find(base); it != mnemonic_jmp_ops().end()) {
            const RegTok lhs = reg();
            expect(",");
            Instruction insn;
            if (at_number()) {
                insn = branch_imm(it->second, lhs.reg, number(), -1, width);
            } else {
                insn = branch_reg(it->second, lhs.reg, reg().reg, -1, width);
            }
            expect(",");
            insn.target = label();
            return insn;
        }
        throw AsmError(AsmError::Code::UnknownMnemonic, 0, "unknown mnemonic '" + m + "'");
    }
};

std::string reg_name(Reg r, int width) { return (width == 32 ? "w" : "r") + std::to_string(r.index); }

std::string alu_symbol(AluOp op) {
    for (const auto& [s, o] : infix_alu_ops()) {
        if (o == op) return s;
    }
    return "?";
}

std::string jmp_symbol(JmpOp op) {
    for (const auto& [s, o] : infix_jmp_ops()) {
        if (o == op) return s;
    }
    return "?";
}

std::string mem_operand(Reg base, std::int16_t off) {
    std::string s = "(r" + std::to_string(base.index);
    if (off < 0) {
        s += " - " + std::to_string(-static_cast<int>(off));
    } else {
        s += " + " + std::to_string(off);
    }
    return s + ")";
}

std::string operand(const Instruction& insn, int width) {
    return insn.src ? reg_name(*insn.src, width) : std::to_string(insn.imm);
}

}  // namespace

std::string format_instruction(const Instruction& insn, const std::function<std::string(std::int32_t)>& label) {
    const int w = insn.width;
    switch (insn.kind) {
    case Kind::AluBinary:
        return reg_name(insn.dst, w) + " " + alu_symbol(insn.alu_op()) + "= " + operand(insn, w);
    case Kind::AluUnary:
        if (insn.alu_op() == AluOp::Neg) return reg_name(insn.dst, w) + " = -" + reg_name(insn.dst, w);
        return reg_name(insn.dst, 64) + " = " + (insn.alu_op() == AluOp::Be ? "be" : "le") +
               std::to_string(insn.imm) + " " + reg_name(insn.dst, 64);
    case Kind::MovImm: return reg_name(insn.dst, w) + " = " + std::to_string(insn.imm);
    case Kind::MovReg: return reg_name(insn.dst, w) + " = " + reg_name(*insn.src, w);
    case Kind::Load:
    case Kind::Load48:
        return reg_name(insn.dst, 64) + " = *(" + type_name(w) + " *)" + mem_operand(*insn.src, insn.offset);
    case Kind::Store:
    case Kind::Store48:
        return std::string("*(") + type_name(w) + " *)" + mem_operand(insn.dst, insn.offset) + " = " +
               (insn.src ? reg_name(*insn.src, 64) : std::to_string(insn.imm));
    case Kind::LoadImm64:
        if (insn.map_ref) return reg_name(insn.dst, 64) + " = map[" + std::to_string(insn.imm) + "]";
        return reg_name(insn.dst, 64) + " = " + std::to_string(insn.imm) + " ll";
    case Kind::Branch:
        return "if " + reg_name(insn.dst, w) + " " + jmp_symbol(insn.jmp_op()) + " " + operand(insn, w) +
               " goto " + label(insn.target);
    case Kind::JumpAlways: return "goto " + label(insn.target);
    case Kind::Call: {
        const HelperInfo* h = find_helper(insn.imm);
        return "call " + (h ? std::string(h->name) : std::to_string(insn.imm));
    }
    case Kind::Exit: return "exit";
    case Kind::AluThreeOp:
        return reg_name(insn.dst, 64) + " = " + reg_name(*insn.src, 64) + " " + alu_symbol(insn.alu_op()) + " " +
               (insn.src2 ? reg_name(*insn.src2, 64) : std::to_string(insn.imm));
    case Kind::EarlyExit: return "early_exit " + std::to_string(insn.imm);
    }
    return "?";
}

std::string format_instruction(const Instruction& insn) {
    return format_instruction(insn, [](std::int32_t t) { return "L" + std::to_string(t); });
}

Instruction parse_instruction(std::string_view text,
                              const std::function<std::optional<std::int32_t>(std::string_view)>& resolve) {
    Parser p(lex(text), resolve);
    return p.parse();
}

Program parse_asm(std::string_view text) {
    struct Line {
        std::size_t number;
        std::string body;
    };
    std::vector<Line> lines;
    std::map<std::string, std::int32_t, std::less<>> labels;

    std::size_t lineno = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::int32_t index = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string body = strip_comment(raw);
        // leading `name:` labels, possibly several
        for (;;) {
            std::size_t i = 0;
            while (i < body.size() && std::isspace(static_cast<unsigned char>(body[i]))) ++i;
            std::size_t j = i;
            while (j < body.size() && (std::isalnum(static_cast<unsigned char>(body[j])) || body[j] == '_' ||
                                       body[j] == '.')) {
                ++j;
            }
            if (j == i || j >= body.size() || body[j] != ':') break;
            const std::string name = body.substr(i, j - i);
            if (labels.contains(name)) {
                throw AsmError(AsmError::Code::DuplicateLabel, lineno,
                               "line " + std::to_string(lineno) + ": duplicate label '" + name + "'");
            }
            labels[name] = index;
            body = body.substr(j + 1);
        }
        bool blank = true;
        for (char c : body) blank = blank && std::isspace(static_cast<unsigned char>(c));
        if (blank) continue;
        lines.push_back({lineno, body});
        ++index;
    }

    const auto resolve = [&](std::string_view name) -> std::optional<std::int32_t> {
        auto it = labels.find(name);
        if (it == labels.end()) return std::nullopt;
        return it->second;
    };

    Program prog;
    for (const auto& line : lines) {
        try {
            prog.instructions.push_back(parse_instruction(line.body, resolve));
        } catch (const AsmError& e) {
            throw AsmError(e.code(), line.number, "line " + std::to_string(line.number) + ": " + e.what());
        }
    }
    // a label after the last instruction has nothing to point at
    for (const auto& [name, idx] : labels) {
        if (idx >= static_cast<std::int32_t>(prog.instructions.size())) {
            for (const auto& insn : prog.instructions) {
                if ((insn.kind == Kind::Branch || insn.kind == Kind::JumpAlways) && insn.target == idx) {
                    throw AsmError(AsmError::Code::UndefinedLabel, 0, "label '" + name + "' marks no instruction");
                }
            }
        }
    }
    return prog;
}

std::string format_asm(const Program& program) {
    std::vector<bool> is_target(program.instructions.size(), false);
    for (const auto& insn : program.instructions) {
        if ((insn.kind == Kind::Branch || insn.kind == Kind::JumpAlways) && insn.target >= 0 &&
            static_cast<std::size_t>(insn.target) < is_target.size()) {
            is_target[static_cast<std::size_t>(insn.target)] = true;
        }
    }
    std::string out;
    for (std::size_t i = 0; i < program.instructions.size(); ++i) {
        if (is_target[i]) out += "L" + std::to_string(i) + ":\n";
        out += "    " + format_instruction(program.instructions[i]) + "\n";
    }
    return out;
}

}  // namespace xdpvliw::isa
