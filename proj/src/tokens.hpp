#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gi {

// One alphabet unit: either a literal byte or one of the named classes.
// The named classes form a containment lattice with ALL on top.
enum class UnitClass : uint8_t {
    LITERAL,
    LOWER_HEX,
    UPPER_HEX,
    DIGIT,
    XDIGIT,
    LOWER,
    UPPER,
    ALPHA,
    ALNUM,
    WHITESPACE,
    PUNCTUATION,
    CONTROL,
    PRINTABLE,
    ALL,
};

struct Unit {
    UnitClass cls = UnitClass::ALL;
    uint8_t literal = 0;  // meaningful when cls == LITERAL

    bool matches(uint8_t b) const;
    bool operator==(const Unit& o) const = default;
};

struct Token {
    std::vector<Unit> units;
    bool plus = false;  // last unit repeats one-or-more

    bool matches(const std::string& bytes) const;
    bool fixed_width() const { return !plus; }
    size_t width() const { return units.size(); }
    bool is_constant() const;  // all units literal and not plus
    std::string constant_bytes() const;
    bool operator==(const Token& o) const = default;
};

bool class_matches(UnitClass c, uint8_t b);
size_t class_cardinality(UnitClass c);
const char* class_name(UnitClass c);
std::optional<UnitClass> class_by_name(const std::string& name);

// Smallest class (by cardinality, then fixed precedence) covering all bytes.
Unit least_unit(const std::vector<uint8_t>& bytes);

Token infer_token(const std::vector<std::string>& byte_strings);
bool token_matches(const Token& t, const std::string& bytes);

std::string render_token(const Token& t);
Token parse_token(const std::string& text);  // inverse of render_token

// Draw a random byte matching the unit, using the given uniform value.
uint8_t unit_sample(const Unit& u, uint32_t rnd);

}  // namespace gi
