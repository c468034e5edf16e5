#include "tokens.hpp"

#include <array>
#include <cctype>
#include <stdexcept>

namespace gi {

bool class_matches(UnitClass c, uint8_t b) {
    switch (c) {
        case UnitClass::LITERAL: return false;  // needs the literal value
        case UnitClass::LOWER_HEX: return b >= 'a' && b <= 'f';
        case UnitClass::UPPER_HEX: return b >= 'A' && b <= 'F';
        case UnitClass::DIGIT: return b >= '0' && b <= '9';
        case UnitClass::XDIGIT:
            return (b >= '0' && b <= '9') || (b >= 'a' && b <= 'f') || (b >= 'A' && b <= 'F');
        case UnitClass::LOWER: return b >= 'a' && b <= 'z';
        case UnitClass::UPPER: return b >= 'A' && b <= 'Z';
        case UnitClass::ALPHA: return (b >= 'a' && b <= 'z') || (b >= 'A' && b <= 'Z');
        case UnitClass::ALNUM:
            return (b >= '0' && b <= '9') || (b >= 'a' && b <= 'z') || (b >= 'A' && b <= 'Z');
        case UnitClass::WHITESPACE:
            return b == 0x09 || b == 0x0a || b == 0x0b || b == 0x0c || b == 0x0d || b == 0x20;
        case UnitClass::PUNCTUATION:
            return b >= 0x21 && b <= 0x7e &&
                   !((b >= '0' && b <= '9') || (b >= 'a' && b <= 'z') || (b >= 'A' && b <= 'Z'));
        case UnitClass::CONTROL: return b <= 0x1f || b == 0x7f;
        case UnitClass::PRINTABLE: return b >= 0x20 && b <= 0x7e;
        case UnitClass::ALL: return true;
    }
    return false;
}

size_t class_cardinality(UnitClass c) {
    size_t n = 0;
    for (int b = 0; b < 256; ++b)
        if (class_matches(c, uint8_t(b))) ++n;
    return n;
}

const char* class_name(UnitClass c) {
    switch (c) {
        case UnitClass::LITERAL: return "LITERAL";
        case UnitClass::LOWER_HEX: return "LOWER_HEX";
        case UnitClass::UPPER_HEX: return "UPPER_HEX";
        case UnitClass::DIGIT: return "DIGIT";
        case UnitClass::XDIGIT: return "XDIGIT";
        case UnitClass::LOWER: return "LOWER";
        case UnitClass::UPPER: return "UPPER";
        case UnitClass::ALPHA: return "ALPHA";
        case UnitClass::ALNUM: return "ALNUM";
        case UnitClass::WHITESPACE: return "WHITESPACE";
        case UnitClass::PUNCTUATION: return "PUNCTUATION";
        case UnitClass::CONTROL: return "CONTROL";
        case UnitClass::PRINTABLE: return "PRINTABLE";
        case UnitClass::ALL: return "ALL";
    }
    return "?";
}

std::optional<UnitClass> class_by_name(const std::string& name) {
    static const UnitClass all[] = {
        UnitClass::LOWER_HEX, UnitClass::UPPER_HEX, UnitClass::DIGIT,       UnitClass::XDIGIT,
        UnitClass::LOWER,     UnitClass::UPPER,     UnitClass::ALPHA,       UnitClass::ALNUM,
        UnitClass::WHITESPACE, UnitClass::PUNCTUATION, UnitClass::CONTROL,  UnitClass::PRINTABLE,
        UnitClass::ALL,
    };
    for (UnitClass c : all)
        if (name == class_name(c)) return c;
    return std::nullopt;
}

bool Unit::matches(uint8_t b) const {
    if (cls == UnitClass::LITERAL) return b == literal;
    return class_matches(cls, b);
}

Unit least_unit(const std::vector<uint8_t>& bytes) {
    if (bytes.empty()) throw std::invalid_argument("least_unit: no bytes");
    bool same = true;
    for (uint8_t b : bytes) same = same && b == bytes[0];
    if (same) return Unit{UnitClass::LITERAL, bytes[0]};
    // Candidates in precedence order for cardinality ties.
    static const UnitClass cand[] = {
        UnitClass::LOWER_HEX, UnitClass::UPPER_HEX, UnitClass::WHITESPACE, UnitClass::DIGIT,
        UnitClass::XDIGIT,    UnitClass::LOWER,     UnitClass::UPPER,      UnitClass::PUNCTUATION,
        UnitClass::CONTROL,   UnitClass::ALPHA,     UnitClass::ALNUM,      UnitClass::PRINTABLE,
        UnitClass::ALL,
    };
    Unit best{UnitClass::ALL, 0};
    size_t best_card = 257;
    for (UnitClass c : cand) {
        bool ok = true;
        for (uint8_t b : bytes)
            if (!class_matches(c, b)) {
                ok = false;
                break;
            }
        if (!ok) continue;
        size_t card = class_cardinality(c);
        if (card < best_card) {
            best_card = card;
            best = Unit{c, 0};
        }
    }
    return best;
}

Token infer_token(const std::vector<std::string>& byte_strings) {
    if (byte_strings.empty()) throw std::invalid_argument("infer_token: no samples");
    for (const auto& s : byte_strings)
        if (s.empty()) throw std::invalid_argument("infer_token: empty sample");
    size_t w = byte_strings[0].size();
    bool uniform = true;
    for (const auto& s : byte_strings) uniform = uniform && s.size() == w;
    Token t;
    if (uniform) {
        for (size_t i = 0; i < w; ++i) {
            std::vector<uint8_t> col;
            for (const auto& s : byte_strings) col.push_back(uint8_t(s[i]));
            t.units.push_back(least_unit(col));
        }
        t.plus = false;
    } else {
        std::vector<uint8_t> all;
        for (const auto& s : byte_strings)
            for (char c : s) all.push_back(uint8_t(c));
        // Variable-length samples collapse to one class unit under `+`; a
        // single distinct byte stays a literal under `+`.
        t.units.push_back(least_unit(all));
        t.plus = true;
    }
    return t;
}

bool Token::matches(const std::string& bytes) const {
    if (bytes.empty()) return false;
    if (!plus) {
        if (bytes.size() != units.size()) return false;
        for (size_t i = 0; i < bytes.size(); ++i)
            if (!units[i].matches(uint8_t(bytes[i]))) return false;
        return true;
    }
    if (bytes.size() < units.size()) return false;
    size_t head = units.size() - 1;
    for (size_t i = 0; i < head; ++i)
        if (!units[i].matches(uint8_t(bytes[i]))) return false;
    for (size_t i = head; i < bytes.size(); ++i)
        if (!units.back().matches(uint8_t(bytes[i]))) return false;
    return true;
}

bool Token::is_constant() const {
    if (plus) return false;
    for (const auto& u : units)
        if (u.cls != UnitClass::LITERAL) return false;
    return !units.empty();
}

std::string Token::constant_bytes() const {
    std::string out;
    for (const auto& u : units) out += char(u.literal);
    return out;
}

bool token_matches(const Token& t, const std::string& bytes) { return t.matches(bytes); }

static std::string hex2(uint8_t b) {
    static const char* d = "0123456789ABCDEF";
    return std::string("0x") + d[b >> 4] + d[b & 15];
}

std::string render_token(const Token& t) {
    std::string out = "[";
    for (size_t i = 0; i < t.units.size(); ++i) {
        if (i) out += " ";
        const Unit& u = t.units[i];
        out += u.cls == UnitClass::LITERAL ? hex2(u.literal) : class_name(u.cls);
    }
    if (t.plus) out += " +";
    out += "]";
    return out;
}

Token parse_token(const std::string& text) {
    if (text.size() < 2 || text.front() != '[' || text.back() != ']')
        throw std::invalid_argument("token must be bracketed: " + text);
    Token t;
    std::string body = text.substr(1, text.size() - 2);
    size_t pos = 0;
    while (pos < body.size()) {
        while (pos < body.size() && body[pos] == ' ') ++pos;
        if (pos >= body.size()) break;
        size_t end = body.find(' ', pos);
        std::string word = body.substr(pos, end == std::string::npos ? end : end - pos);
        pos = end == std::string::npos ? body.size() : end + 1;
        if (word == "+") {
            t.plus = true;
        } else if (word.rfind("0x", 0) == 0 && word.size() == 4) {
            t.units.push_back(Unit{UnitClass::LITERAL, uint8_t(std::stoul(word.substr(2), nullptr, 16))});
        } else if (auto c = class_by_name(word)) {
            t.units.push_back(Unit{*c, 0});
        } else {
            throw std::invalid_argument("unknown token unit: " + word);
        }
    }
    if (t.units.empty()) throw std::invalid_argument("empty token: " + text);
    return t;
}

uint8_t unit_sample(const Unit& u, uint32_t rnd) {
    if (u.cls == UnitClass::LITERAL) return u.literal;
    std::vector<uint8_t> members;
    for (int b = 0; b < 256; ++b)
        if (class_matches(u.cls, uint8_t(b))) members.push_back(uint8_t(b));
    return members[rnd % members.size()];
}

}  // namespace gi
