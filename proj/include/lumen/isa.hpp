#pragma once

#include <array>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "lumen/errors.hpp"

namespace lumen {

inline constexpr std::size_t kDataMemBytes = 2048;
inline constexpr int kTicksPerInstruction = 4;
inline constexpr std::uint8_t kTriggerPort = 0;
inline constexpr std::uint8_t kGpioInPort = 1;

enum class Op : std::uint8_t {
    Nop = 0x0,
    Ldi = 0x1,
    Mov = 0x2,
    Add = 0x3,
    Sub = 0x4,
    And = 0x5,
    Or = 0x6,
    Eor = 0x7,
    Lds = 0x8,
    Sts = 0x9,
    Push = 0xa,
    Pop = 0xb,
    Rjmp = 0xc,
    Brne = 0xd,
    Out = 0xe,
    In = 0xf,
};

struct Instruction {
    Op op = Op::Nop;
    std::uint8_t rd = 0;       // destination register
    std::uint8_t rr = 0;       // source register
    std::uint8_t imm = 0;      // LDI immediate
    std::uint16_t addr = 0;    // LDS/STS data address
    std::int16_t offset = 0;   // RJMP/BRNE word offset
    std::uint8_t port = 0;     // IN/OUT port
    std::uint8_t words = 1;

    bool is_trigger_write() const { return op == Op::Out && port == kTriggerPort; }
};

/// 16-bit word image plus the decoded listing. The program counter is
/// word-indexed; LDS and STS occupy two words.
struct Program {
    std::vector<std::uint16_t> words;
    std::vector<Instruction> instructions;
    std::uint16_t origin = 0;

    std::size_t instruction_count() const { return instructions.size(); }
    std::uint64_t static_ticks() const {
        return static_cast<std::uint64_t>(instructions.size()) * kTicksPerInstruction;
    }
    bool empty() const { return words.empty(); }
};

inline std::array<std::uint16_t, 2> encode(const Instruction& instr) {
    const auto op = static_cast<std::uint16_t>(static_cast<std::uint16_t>(instr.op) << 12);
    switch (instr.op) {
        case Op::Nop:
            return {op, 0};
        case Op::Ldi:
            return {static_cast<std::uint16_t>(
                        op | ((instr.rd - 16u) & 0xfu) << 8 | instr.imm),
                    0};
        case Op::Mov:
        case Op::Add:
        case Op::Sub:
        case Op::And:
        case Op::Or:
        case Op::Eor:
            return {static_cast<std::uint16_t>(op | (instr.rd & 0x1fu) << 7 | (instr.rr & 0x1fu) << 2), 0};
        case Op::Lds:
            return {static_cast<std::uint16_t>(op | (instr.rd & 0x1fu) << 7), instr.addr};
        case Op::Sts:
            return {static_cast<std::uint16_t>(op | (instr.rr & 0x1fu) << 7), instr.addr};
        case Op::Push:
            return {static_cast<std::uint16_t>(op | (instr.rr & 0x1fu) << 7), 0};
        case Op::Pop:
            return {static_cast<std::uint16_t>(op | (instr.rd & 0x1fu) << 7), 0};
        case Op::Rjmp:
        case Op::Brne:
            return {static_cast<std::uint16_t>(op | (static_cast<std::uint16_t>(instr.offset) & 0xfffu)), 0};
        case Op::Out:
            return {static_cast<std::uint16_t>(op | (instr.port & 0xfu) << 8 | (instr.rr & 0x1fu) << 3), 0};
        case Op::In:
            return {static_cast<std::uint16_t>(op | (instr.rd & 0x1fu) << 7 | (instr.port & 0xfu) << 3), 0};
    }
    return {0, 0};
}

/// Decodes one instruction from its word(s); nullopt marks an unmapped
/// encoding, which the core executes as NOP.
inline std::optional<Instruction> decode(std::uint16_t w0, std::uint16_t w1) {
    Instruction instr;
    instr.op = static_cast<Op>(w0 >> 12);
    const std::uint16_t rest = w0 & 0x0fff;
    switch (instr.op) {
        case Op::Nop:
            if (rest != 0) return std::nullopt;
            return instr;
        case Op::Ldi:
            instr.rd = static_cast<std::uint8_t>(16 + ((rest >> 8) & 0xf));
            instr.imm = static_cast<std::uint8_t>(rest & 0xff);
            return instr;
        case Op::Mov:
        case Op::Add:
        case Op::Sub:
        case Op::And:
        case Op::Or:
        case Op::Eor:
            if ((rest & 0x3) != 0) return std::nullopt;
            instr.rd = static_cast<std::uint8_t>((rest >> 7) & 0x1f);
            instr.rr = static_cast<std::uint8_t>((rest >> 2) & 0x1f);
            return instr;
        case Op::Lds:
            if ((rest & 0x7f) != 0 || w1 >= kDataMemBytes) return std::nullopt;
            instr.rd = static_cast<std::uint8_t>((rest >> 7) & 0x1f);
            instr.addr = w1;
            instr.words = 2;
            return instr;
        case Op::Sts:
            if ((rest & 0x7f) != 0 || w1 >= kDataMemBytes) return std::nullopt;
            instr.rr = static_cast<std::uint8_t>((rest >> 7) & 0x1f);
            instr.addr = w1;
            instr.words = 2;
            return instr;
        case Op::Push:
            if ((rest & 0x7f) != 0) return std::nullopt;
            instr.rr = static_cast<std::uint8_t>((rest >> 7) & 0x1f);
            return instr;
        case Op::Pop:
            if ((rest & 0x7f) != 0) return std::nullopt;
            instr.rd = static_cast<std::uint8_t>((rest >> 7) & 0x1f);
            return instr;
        case Op::Rjmp:
        case Op::Brne:
            instr.offset = static_cast<std::int16_t>(rest & 0x800 ? rest | 0xf000 : rest);
            return instr;
        case Op::Out:
            if ((rest & 0x7) != 0) return std::nullopt;
            instr.port = static_cast<std::uint8_t>((rest >> 8) & 0xf);
            instr.rr = static_cast<std::uint8_t>((rest >> 3) & 0x1f);
            return instr;
        case Op::In:
            if ((rest & 0x7) != 0) return std::nullopt;
            instr.rd = static_cast<std::uint8_t>((rest >> 7) & 0x1f);
            instr.port = static_cast<std::uint8_t>((rest >> 3) & 0xf);
            return instr;
    }
    return std::nullopt;
}

namespace detail {

struct AsmLine {
    std::string mnemonic;
    std::vector<std::string> operands;
    std::size_t line_no = 0;
};

inline std::string asm_where(std::size_t line_no) {
    return "line " + std::to_string(line_no) + ": ";
}

inline std::uint8_t parse_register(const std::string& token, std::size_t line_no) {
    if (token.size() < 2 || (token[0] != 'r' && token[0] != 'R')) {
        throw RangeError(asm_where(line_no) + "expected a register, got '" + token + "'");
    }
    int value = 0;
    for (std::size_t i = 1; i < token.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(token[i]))) {
            throw RangeError(asm_where(line_no) + "expected a register, got '" + token + "'");
        }
        value = value * 10 + (token[i] - '0');
    }
    if (value > 31) {
        throw RangeError(asm_where(line_no) + "register out of range: " + token);
    }
    return static_cast<std::uint8_t>(value);
}

inline long parse_integer(const std::string& token, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const long value = std::stol(token, &used, 0);
        if (used != token.size()) {
            throw RangeError(asm_where(line_no) + "bad integer '" + token + "'");
        }
        return value;
    } catch (const std::invalid_argument&) {
        throw RangeError(asm_where(line_no) + "bad integer '" + token + "'");
    } catch (const std::out_of_range&) {
        throw RangeError(asm_where(line_no) + "integer out of range '" + token + "'");
    }
}

inline bool is_integer_token(const std::string& token) {
    if (token.empty()) return false;
    std::size_t i = token[0] == '+' || token[0] == '-' ? 1 : 0;
    return i < token.size() && std::isdigit(static_cast<unsigned char>(token[i]));
}

}  // namespace detail

/// Two-pass assembler. Syntax: optional `label:` prefix, mnemonic,
/// comma-separated operands, `;` comments. Immediates accept decimal or
/// 0x hex; branch targets are labels or signed word offsets.
inline Program assemble(std::string_view source) {
    struct Pending {
        detail::AsmLine line;
        std::size_t word_addr = 0;
    };
    std::map<std::string, std::size_t> labels;
    std::vector<Pending> pending;

    std::istringstream stream{std::string(source)};
    std::string raw;
    std::size_t line_no = 0;
    std::size_t word_addr = 0;
    while (std::getline(stream, raw)) {
        ++line_no;
        if (const auto comment = raw.find(';'); comment != std::string::npos) {
            raw.erase(comment);
        }
        // peel off label definitions
        while (true) {
            const auto colon = raw.find(':');
            if (colon == std::string::npos) break;
            std::string label = raw.substr(0, colon);
            label.erase(0, label.find_first_not_of(" \t"));
            label.erase(label.find_last_not_of(" \t") + 1);
            if (label.empty() || detail::is_integer_token(label)) {
                throw UnknownMnemonic(detail::asm_where(line_no) + "bad label");
            }
            if (labels.count(label)) {
                throw UnknownLabel(detail::asm_where(line_no) + "duplicate label '" + label + "'");
            }
            labels[label] = word_addr;
            raw.erase(0, colon + 1);
        }
        std::istringstream fields(raw);
        std::string mnemonic;
        if (!(fields >> mnemonic)) {
            continue;
        }
        for (char& c : mnemonic) {
            c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        }
        detail::AsmLine line;
        line.mnemonic = mnemonic;
        line.line_no = line_no;
        std::string rest;
        std::getline(fields, rest);
        std::string token;
        for (char c : rest) {
            if (c == ',' || c == ' ' || c == '\t' || c == '\r') {
                if (!token.empty()) {
                    line.operands.push_back(token);
                    token.clear();
                }
            } else {
                token.push_back(c);
            }
        }
        if (!token.empty()) {
            line.operands.push_back(token);
        }
        const bool two_words = mnemonic == "LDS" || mnemonic == "STS";
        pending.push_back({line, word_addr});
        word_addr += two_words ? 2 : 1;
    }

    Program program;
    program.words.reserve(word_addr);
    for (const Pending& entry : pending) {
        const detail::AsmLine& line = entry.line;
        const auto expect_operands = [&](std::size_t n) {
            if (line.operands.size() != n) {
                throw RangeError(detail::asm_where(line.line_no) + line.mnemonic + " expects " +
                                 std::to_string(n) + " operand(s)");
            }
        };
        const auto branch_offset = [&](const std::string& token, std::uint8_t words) {
            long target_offset = 0;
            if (detail::is_integer_token(token)) {
                target_offset = detail::parse_integer(token, line.line_no);
            } else {
                const auto it = labels.find(token);
                if (it == labels.end()) {
                    throw UnknownLabel(detail::asm_where(line.line_no) + "unknown label '" + token + "'");
                }
                target_offset = static_cast<long>(it->second) -
                                static_cast<long>(entry.word_addr + words);
            }
            if (target_offset < -2048 || target_offset > 2047) {
                throw RangeError(detail::asm_where(line.line_no) + "branch offset out of range");
            }
            return static_cast<std::int16_t>(target_offset);
        };

        Instruction instr;
        if (line.mnemonic == "NOP") {
            expect_operands(0);
            instr.op = Op::Nop;
        } else if (line.mnemonic == "LDI") {
            expect_operands(2);
            instr.op = Op::Ldi;
            instr.rd = detail::parse_register(line.operands[0], line.line_no);
            if (instr.rd < 16) {
                throw RangeError(detail::asm_where(line.line_no) + "LDI requires r16..r31");
            }
            const long imm = detail::parse_integer(line.operands[1], line.line_no);
            if (imm < 0 || imm > 255) {
                throw RangeError(detail::asm_where(line.line_no) + "immediate out of range");
            }
            instr.imm = static_cast<std::uint8_t>(imm);
        } else if (line.mnemonic == "MOV" || line.mnemonic == "ADD" || line.mnemonic == "SUB" ||
                   line.mnemonic == "AND" || line.mnemonic == "OR" || line.mnemonic == "EOR") {
            expect_operands(2);
            instr.op = line.mnemonic == "MOV"   ? Op::Mov
                       : line.mnemonic == "ADD" ? Op::Add
                       : line.mnemonic == "SUB" ? Op::Sub
                       : line.mnemonic == "AND" ? Op::And
                       : line.mnemonic == "OR"  ? Op::Or
                                                : Op::Eor;
            instr.rd = detail::parse_register(line.operands[0], line.line_no);
            instr.rr = detail::parse_register(line.operands[1], line.line_no);
        } else if (line.mnemonic == "LDS") {
            expect_operands(2);
            instr.op = Op::Lds;
            instr.rd = detail::parse_register(line.operands[0], line.line_no);
            const long addr = detail::parse_integer(line.operands[1], line.line_no);
            if (addr < 0 || addr >= static_cast<long>(kDataMemBytes)) {
                throw RangeError(detail::asm_where(line.line_no) + "data address out of range");
            }
            instr.addr = static_cast<std::uint16_t>(addr);
            instr.words = 2;
        } else if (line.mnemonic == "STS") {
            expect_operands(2);
            instr.op = Op::Sts;
            const long addr = detail::parse_integer(line.operands[0], line.line_no);
            if (addr < 0 || addr >= static_cast<long>(kDataMemBytes)) {
                throw RangeError(detail::asm_where(line.line_no) + "data address out of range");
            }
            instr.addr = static_cast<std::uint16_t>(addr);
            instr.rr = detail::parse_register(line.operands[1], line.line_no);
            instr.words = 2;
        } else if (line.mnemonic == "PUSH") {
            expect_operands(1);
            instr.op = Op::Push;
            instr.rr = detail::parse_register(line.operands[0], line.line_no);
        } else if (line.mnemonic == "POP") {
            expect_operands(1);
            instr.op = Op::Pop;
            instr.rd = detail::parse_register(line.operands[0], line.line_no);
        } else if (line.mnemonic == "RJMP") {
            expect_operands(1);
            instr.op = Op::Rjmp;
            instr.offset = branch_offset(line.operands[0], 1);
        } else if (line.mnemonic == "BRNE") {
            expect_operands(1);
            instr.op = Op::Brne;
            instr.offset = branch_offset(line.operands[0], 1);
        } else if (line.mnemonic == "OUT") {
            expect_operands(2);
            instr.op = Op::Out;
            const long port = detail::parse_integer(line.operands[0], line.line_no);
            if (port < 0 || port > 15) {
                throw RangeError(detail::asm_where(line.line_no) + "port out of range");
            }
            instr.port = static_cast<std::uint8_t>(port);
            instr.rr = detail::parse_register(line.operands[1], line.line_no);
        } else if (line.mnemonic == "IN") {
            expect_operands(2);
            instr.op = Op::In;
            instr.rd = detail::parse_register(line.operands[0], line.line_no);
            const long port = detail::parse_integer(line.operands[1], line.line_no);
            if (port < 0 || port > 15) {
                throw RangeError(detail::asm_where(line.line_no) + "port out of range");
            }
            instr.port = static_cast<std::uint8_t>(port);
        } else {
            throw UnknownMnemonic(detail::asm_where(line.line_no) + "unknown mnemonic '" +
                                  line.mnemonic + "'");
        }

        const auto encoded = encode(instr);
        program.words.push_back(encoded[0]);
        if (instr.words == 2) {
            program.words.push_back(encoded[1]);
        }
        program.instructions.push_back(instr);
    }
    return program;
}

}  // namespace lumen
