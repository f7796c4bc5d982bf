#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace refinekit::css {

struct Declaration {
    std::string property; // lower-case
    std::string value;    // trimmed, internal whitespace collapsed

    bool operator==(const Declaration&) const = default;
};

// Parses the body of a style attribute or rule block ("a: b; c: d").
// Semicolons inside quotes or parentheses do not split declarations;
// fragments without a colon are skipped.
std::vector<Declaration> parse_declarations(std::string_view text);

// Canonical form: "prop:value;prop:value" with no trailing semicolon.
std::string serialize_declarations(const std::vector<Declaration>& decls);

// Last value for `property`, honouring source order.
std::optional<std::string> find(const std::vector<Declaration>& decls, std::string_view property);

// Replaces every declaration of `property` with one carrying `value`
// (appended when absent).
void set(std::vector<Declaration>& decls, std::string_view property, std::string value);

// Sorts by property name while keeping the relative order of declarations
// whose longhand sets overlap, after dropping declarations that a later one
// fully overrides. The result cascades to the same computed values.
std::vector<Declaration> canonicalize(const std::vector<Declaration>& decls);

// Longhands a property expands to (itself when it is not a shorthand).
std::vector<std::string_view> longhands(std::string_view property);

// A style rule inside a stylesheet together with the byte range of its
// declaration block (the text strictly between the braces).
struct StyleRule {
    std::string selector;
    std::vector<Declaration> declarations;
    std::size_t block_begin = 0;
    std::size_t block_end = 0;
    std::string media; // enclosing @media prelude, empty at top level
};

struct Stylesheet {
    std::vector<StyleRule> rules;
};

// Tolerant stylesheet parser. Comments are skipped, @media blocks are
// descended one level, other at-rules are skipped whole.
Stylesheet parse_stylesheet(std::string_view text);

// Rewrites every plain rule into "selector{decls}" with canonical
// declarations; at-rules are kept verbatim. Idempotent.
std::string canonicalize_stylesheet(std::string_view text);

// --- values --------------------------------------------------------------

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb&) const = default;
};

struct Rgba {
    Rgb rgb;
    double alpha = 1.0;
};

std::optional<Rgba> parse_color(std::string_view text);
std::string format_hex(Rgb c); // "#RRGGBB"

struct Hsl {
    double h = 0; // degrees in [0, 360)
    double s = 0; // [0, 1]
    double l = 0; // [0, 1]
};
Hsl to_hsl(Rgb c);
Rgb from_hsl(Hsl c);

enum class Unit { px, em, rem, percent, vw, vh, pt, none };

struct Length {
    double value = 0;
    Unit unit = Unit::px;
};

std::optional<Length> parse_length(std::string_view text);
std::string format_px(double px); // integer when whole, else up to 2 decimals

// Splits a value on top-level whitespace ("1px solid rgb(0, 0, 0)").
std::vector<std::string> split_value(std::string_view value);

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);

} // namespace refinekit::css
