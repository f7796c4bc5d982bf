#include "refinekit/doc/css.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

namespace refinekit::css {

std::string to_lower(std::string_view s)
{
    std::string out(s);
    for (char& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string_view trim(std::string_view s)
{
    auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; };
    while (!s.empty() && is_space(s.front()))
        s.remove_prefix(1);
    while (!s.empty() && is_space(s.back()))
        s.remove_suffix(1);
    return s;
}

namespace {

std::string collapse_ws(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    bool pending = false;
    char quote = 0;
    for (char c : trim(s)) {
        if (quote) {
            out.push_back(c);
            if (c == quote)
                quote = 0;
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f') {
            pending = true;
            continue;
        }
        if (pending && !out.empty())
            out.push_back(' ');
        pending = false;
        if (c == '"' || c == '\'')
            quote = c;
        out.push_back(c);
    }
    return out;
}

// Splits on `sep` at nesting depth zero, outside quotes.
std::vector<std::string_view> split_top(std::string_view text, char sep)
{
    std::vector<std::string_view> parts;
    int depth = 0;
    char quote = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (quote) {
            if (c == '\\')
                ++i;
            else if (c == quote)
                quote = 0;
            continue;
        }
        if (c == '"' || c == '\'')
            quote = c;
        else if (c == '(')
            ++depth;
        else if (c == ')' && depth > 0)
            --depth;
        else if (c == sep && depth == 0) {
            parts.push_back(text.substr(start, i - start));
            start = i + 1;
        }
    }
    parts.push_back(text.substr(start));
    return parts;
}

} // namespace

std::vector<Declaration> parse_declarations(std::string_view text)
{
    std::vector<Declaration> out;
    for (std::string_view part : split_top(text, ';')) {
        auto colon = part.find(':');
        if (colon == std::string_view::npos)
            continue;
        auto prop = trim(part.substr(0, colon));
        auto value = collapse_ws(part.substr(colon + 1));
        if (prop.empty() || value.empty())
            continue;
        out.push_back({to_lower(prop), std::move(value)});
    }
    return out;
}

std::string serialize_declarations(const std::vector<Declaration>& decls)
{
    std::string out;
    for (const auto& d : decls) {
        if (!out.empty())
            out.push_back(';');
        out += d.property;
        out.push_back(':');
        out += d.value;
    }
    return out;
}

std::optional<std::string> find(const std::vector<Declaration>& decls, std::string_view property)
{
    for (auto it = decls.rbegin(); it != decls.rend(); ++it)
        if (it->property == property)
            return it->value;
    return std::nullopt;
}

void set(std::vector<Declaration>& decls, std::string_view property, std::string value)
{
    bool placed = false;
    std::vector<Declaration> out;
    out.reserve(decls.size() + 1);
    for (auto& d : decls) {
        if (d.property != property) {
            out.push_back(std::move(d));
            continue;
        }
        if (!placed) {
            out.push_back({std::string(property), value});
            placed = true;
        }
    }
    if (!placed)
        out.push_back({std::string(property), std::move(value)});
    decls = std::move(out);
}

std::vector<std::string_view> longhands(std::string_view p)
{
    static const std::map<std::string_view, std::vector<std::string_view>> table = {
        {"margin", {"margin-top", "margin-right", "margin-bottom", "margin-left"}},
        {"padding", {"padding-top", "padding-right", "padding-bottom", "padding-left"}},
        {"inset", {"top", "right", "bottom", "left"}},
        {"gap", {"row-gap", "column-gap"}},
        {"grid-gap", {"row-gap", "column-gap"}},
        {"flex", {"flex-grow", "flex-shrink", "flex-basis"}},
        {"flex-flow", {"flex-direction", "flex-wrap"}},
        {"overflow", {"overflow-x", "overflow-y"}},
        {"place-items", {"align-items", "justify-items"}},
        {"place-content", {"align-content", "justify-content"}},
        {"list-style", {"list-style-type", "list-style-position", "list-style-image"}},
        {"outline", {"outline-color", "outline-style", "outline-width"}},
        {"text-decoration", {"text-decoration-line", "text-decoration-color", "text-decoration-style"}},
        {"background",
         {"background-color", "background-image", "background-position", "background-size", "background-repeat",
          "background-attachment", "background-origin", "background-clip"}},
        {"font", {"font-style", "font-variant", "font-weight", "font-stretch", "font-size", "line-height", "font-family"}},
        {"border",
         {"border-top-width", "border-right-width", "border-bottom-width", "border-left-width", "border-top-style",
          "border-right-style", "border-bottom-style", "border-left-style", "border-top-color", "border-right-color",
          "border-bottom-color", "border-left-color"}},
        {"border-width", {"border-top-width", "border-right-width", "border-bottom-width", "border-left-width"}},
        {"border-style", {"border-top-style", "border-right-style", "border-bottom-style", "border-left-style"}},
        {"border-color", {"border-top-color", "border-right-color", "border-bottom-color", "border-left-color"}},
        {"border-top", {"border-top-width", "border-top-style", "border-top-color"}},
        {"border-right", {"border-right-width", "border-right-style", "border-right-color"}},
        {"border-bottom", {"border-bottom-width", "border-bottom-style", "border-bottom-color"}},
        {"border-left", {"border-left-width", "border-left-style", "border-left-color"}},
        {"border-radius",
         {"border-top-left-radius", "border-top-right-radius", "border-bottom-right-radius", "border-bottom-left-radius"}},
        {"grid-template", {"grid-template-rows", "grid-template-columns", "grid-template-areas"}},
    };
    if (auto it = table.find(p); it != table.end())
        return it->second;
    return {p};
}

namespace {

bool overlaps(std::string_view a, std::string_view b)
{
    if (a == b)
        return true;
    auto la = longhands(a);
    auto lb = longhands(b);
    for (auto x : la)
        for (auto y : lb)
            if (x == y)
                return true;
    return false;
}

bool covers(std::string_view later, std::string_view earlier)
{
    // `later` overrides `earlier` completely when every longhand of the
    // earlier declaration is set again by the later one.
    auto le = longhands(earlier);
    auto ll = longhands(later);
    return std::all_of(le.begin(), le.end(), [&](std::string_view x) { return std::find(ll.begin(), ll.end(), x) != ll.end(); });
}

bool important(const Declaration& d)
{
    auto v = to_lower(d.value);
    return v.size() >= 10 && v.find("!important") != std::string::npos;
}

} // namespace

std::vector<Declaration> canonicalize(const std::vector<Declaration>& decls)
{
    std::vector<Declaration> live;
    for (std::size_t i = 0; i < decls.size(); ++i) {
        bool dead = false;
        for (std::size_t j = i + 1; j < decls.size() && !dead; ++j)
            dead = covers(decls[j].property, decls[i].property) && important(decls[j]) >= important(decls[i]);
        if (!dead)
            live.push_back(decls[i]);
    }
    // Lexicographically smallest topological order: a declaration may move
    // ahead of another only when their longhand sets are disjoint.
    std::vector<Declaration> out;
    std::vector<bool> used(live.size(), false);
    for (std::size_t step = 0; step < live.size(); ++step) {
        std::size_t best = live.size();
        for (std::size_t i = 0; i < live.size(); ++i) {
            if (used[i])
                continue;
            bool blocked = false;
            for (std::size_t j = 0; j < i && !blocked; ++j)
                blocked = !used[j] && overlaps(live[i].property, live[j].property);
            if (blocked)
                continue;
            if (best == live.size() || live[i].property < live[best].property)
                best = i;
        }
        used[best] = true;
        out.push_back(live[best]);
    }
    return out;
}

// --- stylesheets ----------------------------------------------------------

namespace {

struct Cursor {
    std::string_view text;
    std::size_t pos = 0;

    bool done() const { return pos >= text.size(); }

    void skip_ws_and_comments()
    {
        while (!done()) {
            if (std::isspace(static_cast<unsigned char>(text[pos]))) {
                ++pos;
            } else if (text.compare(pos, 2, "/*") == 0) {
                auto end = text.find("*/", pos + 2);
                pos = end == std::string_view::npos ? text.size() : end + 2;
            } else {
                break;
            }
        }
    }

    // Returns the index of the matching '}' for the '{' at `open`, or
    // text.size() when unbalanced.
    std::size_t match_brace(std::size_t open) const
    {
        int depth = 0;
        char quote = 0;
        for (std::size_t i = open; i < text.size(); ++i) {
            char c = text[i];
            if (quote) {
                if (c == '\\')
                    ++i;
                else if (c == quote)
                    quote = 0;
                continue;
            }
            if (c == '/' && i + 1 < text.size() && text[i + 1] == '*') {
                auto end = text.find("*/", i + 2);
                if (end == std::string_view::npos)
                    return text.size();
                i = end + 1;
                continue;
            }
            if (c == '"' || c == '\'')
                quote = c;
            else if (c == '{')
                ++depth;
            else if (c == '}' && --depth == 0)
                return i;
        }
        return text.size();
    }
};

std::string strip_comments(std::string_view s)
{
    std::string out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (s.compare(i, 2, "/*") == 0) {
            auto end = s.find("*/", i + 2);
            i = end == std::string_view::npos ? s.size() : end + 2;
            out.push_back(' ');
        } else {
            out.push_back(s[i++]);
        }
    }
    return out;
}

void parse_rules(std::string_view text, std::size_t base, std::size_t begin, std::size_t end, const std::string& media,
                 std::vector<StyleRule>& out)
{
    Cursor cur{text.substr(0, end), begin};
    while (true) {
        cur.skip_ws_and_comments();
        if (cur.done())
            break;
        auto open = text.find('{', cur.pos);
        auto semi = text.find(';', cur.pos);
        if (text[cur.pos] == '@' && semi != std::string_view::npos && semi < end && (open == std::string_view::npos || semi < open)) {
            cur.pos = semi + 1; // @import / @charset
            continue;
        }
        if (open == std::string_view::npos || open >= end)
            break;
        auto close = cur.match_brace(open);
        std::string prelude = collapse_ws(strip_comments(text.substr(cur.pos, open - cur.pos)));
        if (!prelude.empty() && prelude.front() == '@') {
            if (to_lower(prelude).rfind("@media", 0) == 0 && media.empty())
                parse_rules(text, base, open + 1, std::min(close, end), prelude.substr(6).empty() ? std::string("all") : collapse_ws(prelude.substr(6)), out);
        } else if (!prelude.empty()) {
            StyleRule rule;
            rule.selector = prelude;
            rule.block_begin = base + open + 1;
            rule.block_end = base + std::min(close, end);
            rule.declarations = parse_declarations(strip_comments(text.substr(open + 1, std::min(close, end) - open - 1)));
            rule.media = media;
            out.push_back(std::move(rule));
        }
        cur.pos = close >= end ? end : close + 1;
    }
}

} // namespace

Stylesheet parse_stylesheet(std::string_view text)
{
    Stylesheet sheet;
    parse_rules(text, 0, 0, text.size(), {}, sheet.rules);
    return sheet;
}

std::string canonicalize_stylesheet(std::string_view text)
{
    std::string out;
    Cursor cur{text, 0};
    while (true) {
        cur.skip_ws_and_comments();
        if (cur.done())
            break;
        auto open = text.find('{', cur.pos);
        auto semi = text.find(';', cur.pos);
        if (text[cur.pos] == '@' && semi != std::string_view::npos && (open == std::string_view::npos || semi < open)) {
            if (!out.empty())
                out.push_back('\n');
            out += collapse_ws(text.substr(cur.pos, semi + 1 - cur.pos));
            cur.pos = semi + 1;
            continue;
        }
        if (open == std::string_view::npos) {
            // Trailing garbage without a block is dropped from the canonical form.
            break;
        }
        auto close = cur.match_brace(open);
        std::string prelude = collapse_ws(strip_comments(text.substr(cur.pos, open - cur.pos)));
        if (!out.empty())
            out.push_back('\n');
        if (!prelude.empty() && prelude.front() == '@') {
            out += prelude;
            out += std::string(text.substr(open, (close >= text.size() ? text.size() : close + 1) - open));
            if (close >= text.size())
                out.push_back('}');
        } else {
            auto body = text.substr(open + 1, (close >= text.size() ? text.size() : close) - open - 1);
            out += prelude;
            out.push_back('{');
            out += serialize_declarations(canonicalize(parse_declarations(strip_comments(body))));
            out.push_back('}');
        }
        cur.pos = close >= text.size() ? text.size() : close + 1;
    }
    return out;
}

// --- colors ----------------------------------------------------------------

namespace {

const std::map<std::string_view, std::uint32_t>& named_colors()
{
    static const std::map<std::string_view, std::uint32_t> table = {
        {"aliceblue", 0xF0F8FF}, {"antiquewhite", 0xFAEBD7}, {"aqua", 0x00FFFF}, {"aquamarine", 0x7FFFD4},
        {"azure", 0xF0FFFF}, {"beige", 0xF5F5DC}, {"bisque", 0xFFE4C4}, {"black", 0x000000},
        {"blanchedalmond", 0xFFEBCD}, {"blue", 0x0000FF}, {"blueviolet", 0x8A2BE2}, {"brown", 0xA52A2A},
        {"burlywood", 0xDEB887}, {"cadetblue", 0x5F9EA0}, {"chartreuse", 0x7FFF00}, {"chocolate", 0xD2691E},
        {"coral", 0xFF7F50}, {"cornflowerblue", 0x6495ED}, {"cornsilk", 0xFFF8DC}, {"crimson", 0xDC143C},
        {"cyan", 0x00FFFF}, {"darkblue", 0x00008B}, {"darkcyan", 0x008B8B}, {"darkgoldenrod", 0xB8860B},
        {"darkgray", 0xA9A9A9}, {"darkgreen", 0x006400}, {"darkgrey", 0xA9A9A9}, {"darkkhaki", 0xBDB76B},
        {"darkmagenta", 0x8B008B}, {"darkolivegreen", 0x556B2F}, {"darkorange", 0xFF8C00}, {"darkorchid", 0x9932CC},
        {"darkred", 0x8B0000}, {"darksalmon", 0xE9967A}, {"darkseagreen", 0x8FBC8F}, {"darkslateblue", 0x483D8B},
        {"darkslategray", 0x2F4F4F}, {"darkturquoise", 0x00CED1}, {"darkviolet", 0x9400D3}, {"deeppink", 0xFF1493},
        {"deepskyblue", 0x00BFFF}, {"dimgray", 0x696969}, {"dodgerblue", 0x1E90FF}, {"firebrick", 0xB22222},
        {"floralwhite", 0xFFFAF0}, {"forestgreen", 0x228B22}, {"fuchsia", 0xFF00FF}, {"gainsboro", 0xDCDCDC},
        {"ghostwhite", 0xF8F8FF}, {"gold", 0xFFD700}, {"goldenrod", 0xDAA520}, {"gray", 0x808080},
        {"green", 0x008000}, {"greenyellow", 0xADFF2F}, {"grey", 0x808080}, {"honeydew", 0xF0FFF0},
        {"hotpink", 0xFF69B4}, {"indianred", 0xCD5C5C}, {"indigo", 0x4B0082}, {"ivory", 0xFFFFF0},
        {"khaki", 0xF0E68C}, {"lavender", 0xE6E6FA}, {"lawngreen", 0x7CFC00}, {"lemonchiffon", 0xFFFACD},
        {"lightblue", 0xADD8E6}, {"lightcoral", 0xF08080}, {"lightcyan", 0xE0FFFF}, {"lightgray", 0xD3D3D3},
        {"lightgreen", 0x90EE90}, {"lightgrey", 0xD3D3D3}, {"lightpink", 0xFFB6C1}, {"lightsalmon", 0xFFA07A},
        {"lightseagreen", 0x20B2AA}, {"lightskyblue", 0x87CEFA}, {"lightslategray", 0x778899}, {"lightsteelblue", 0xB0C4DE},
        {"lightyellow", 0xFFFFE0}, {"lime", 0x00FF00}, {"limegreen", 0x32CD32}, {"linen", 0xFAF0E6},
        {"magenta", 0xFF00FF}, {"maroon", 0x800000}, {"mediumaquamarine", 0x66CDAA}, {"mediumblue", 0x0000CD},
        {"mediumorchid", 0xBA55D3}, {"mediumpurple", 0x9370DB}, {"mediumseagreen", 0x3CB371}, {"mediumslateblue", 0x7B68EE},
        {"mediumspringgreen", 0x00FA9A}, {"mediumturquoise", 0x48D1CC}, {"mediumvioletred", 0xC71585}, {"midnightblue", 0x191970},
        {"mintcream", 0xF5FFFA}, {"mistyrose", 0xFFE4E1}, {"moccasin", 0xFFE4B5}, {"navajowhite", 0xFFDEAD},
        {"navy", 0x000080}, {"oldlace", 0xFDF5E6}, {"olive", 0x808000}, {"olivedrab", 0x6B8E23},
        {"orange", 0xFFA500}, {"orangered", 0xFF4500}, {"orchid", 0xDA70D6}, {"palegoldenrod", 0xEEE8AA},
        {"palegreen", 0x98FB98}, {"paleturquoise", 0xAFEEEE}, {"palevioletred", 0xDB7093}, {"papayawhip", 0xFFEFD5},
        {"peachpuff", 0xFFDAB9}, {"peru", 0xCD853F}, {"pink", 0xFFC0CB}, {"plum", 0xDDA0DD},
        {"powderblue", 0xB0E0E6}, {"purple", 0x800080}, {"rebeccapurple", 0x663399}, {"red", 0xFF0000},
        {"rosybrown", 0xBC8F8F}, {"royalblue", 0x4169E1}, {"saddlebrown", 0x8B4513}, {"salmon", 0xFA8072},
        {"sandybrown", 0xF4A460}, {"seagreen", 0x2E8B57}, {"seashell", 0xFFF5EE}, {"sienna", 0xA0522D},
        {"silver", 0xC0C0C0}, {"skyblue", 0x87CEEB}, {"slateblue", 0x6A5ACD}, {"slategray", 0x708090},
        {"snow", 0xFFFAFA}, {"springgreen", 0x00FF7F}, {"steelblue", 0x4682B4}, {"tan", 0xD2B48C},
        {"teal", 0x008080}, {"thistle", 0xD8BFD8}, {"tomato", 0xFF6347}, {"turquoise", 0x40E0D0},
        {"violet", 0xEE82EE}, {"wheat", 0xF5DEB3}, {"white", 0xFFFFFF}, {"whitesmoke", 0xF5F5F5},
        {"yellow", 0xFFFF00}, {"yellowgreen", 0x9ACD32},
    };
    return table;
}

int hex_digit(char c)
{
    if (c >= '0' && c <= '9')
        return c - '0';
    if (c >= 'a' && c <= 'f')
        return c - 'a' + 10;
    if (c >= 'A' && c <= 'F')
        return c - 'A' + 10;
    return -1;
}

std::optional<double> parse_number(std::string_view s)
{
    s = trim(s);
    if (s.empty())
        return std::nullopt;
    std::string tmp(s);
    char* end = nullptr;
    double v = std::strtod(tmp.c_str(), &end);
    if (end == tmp.c_str())
        return std::nullopt;
    return v;
}

std::uint8_t clamp_channel(double v)
{
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

std::optional<double> channel_value(std::string_view s)
{
    s = trim(s);
    if (!s.empty() && s.back() == '%') {
        auto v = parse_number(s.substr(0, s.size() - 1));
        if (!v)
            return std::nullopt;
        return *v * 255.0 / 100.0;
    }
    return parse_number(s);
}

std::optional<double> alpha_value(std::string_view s)
{
    s = trim(s);
    if (!s.empty() && s.back() == '%') {
        auto v = parse_number(s.substr(0, s.size() - 1));
        return v ? std::optional(*v / 100.0) : std::nullopt;
    }
    return parse_number(s);
}

std::vector<std::string_view> function_args(std::string_view inner)
{
    // Accept both "r, g, b" and "r g b / a".
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < inner.size()) {
        while (i < inner.size() && (inner[i] == ' ' || inner[i] == ',' || inner[i] == '/'))
            ++i;
        std::size_t start = i;
        while (i < inner.size() && inner[i] != ' ' && inner[i] != ',' && inner[i] != '/')
            ++i;
        if (i > start)
            out.push_back(inner.substr(start, i - start));
    }
    return out;
}

} // namespace

std::optional<Rgba> parse_color(std::string_view text)
{
    auto s = to_lower(trim(text));
    if (auto pos = s.find("!important"); pos != std::string::npos)
        s = std::string(trim(std::string_view(s).substr(0, pos)));
    if (s.empty())
        return std::nullopt;
    if (s == "transparent")
        return Rgba{{0, 0, 0}, 0.0};
    if (s[0] == '#') {
        std::string_view h = std::string_view(s).substr(1);
        for (char c : h)
            if (hex_digit(c) < 0)
                return std::nullopt;
        if (h.size() == 3 || h.size() == 4) {
            Rgba c;
            c.rgb = {static_cast<std::uint8_t>(hex_digit(h[0]) * 17), static_cast<std::uint8_t>(hex_digit(h[1]) * 17),
                     static_cast<std::uint8_t>(hex_digit(h[2]) * 17)};
            if (h.size() == 4)
                c.alpha = hex_digit(h[3]) * 17 / 255.0;
            return c;
        }
        if (h.size() == 6 || h.size() == 8) {
            auto byte = [&](std::size_t i) { return static_cast<std::uint8_t>(hex_digit(h[i]) * 16 + hex_digit(h[i + 1])); };
            Rgba c;
            c.rgb = {byte(0), byte(2), byte(4)};
            if (h.size() == 8)
                c.alpha = byte(6) / 255.0;
            return c;
        }
        return std::nullopt;
    }
    auto open = s.find('(');
    if (open != std::string::npos && s.back() == ')') {
        auto fn = s.substr(0, open);
        auto args = function_args(std::string_view(s).substr(open + 1, s.size() - open - 2));
        if ((fn == "rgb" || fn == "rgba") && (args.size() == 3 || args.size() == 4)) {
            auto r = channel_value(args[0]), g = channel_value(args[1]), b = channel_value(args[2]);
            if (!r || !g || !b)
                return std::nullopt;
            Rgba c{{clamp_channel(*r), clamp_channel(*g), clamp_channel(*b)}, 1.0};
            if (args.size() == 4) {
                auto a = alpha_value(args[3]);
                if (!a)
                    return std::nullopt;
                c.alpha = std::clamp(*a, 0.0, 1.0);
            }
            return c;
        }
        if ((fn == "hsl" || fn == "hsla") && (args.size() == 3 || args.size() == 4)) {
            auto strip = [](std::string_view v) {
                if (v.ends_with("deg"))
                    v.remove_suffix(3);
                if (v.ends_with('%'))
                    v.remove_suffix(1);
                return v;
            };
            auto h = parse_number(strip(args[0])), sat = parse_number(strip(args[1])), l = parse_number(strip(args[2]));
            if (!h || !sat || !l)
                return std::nullopt;
            Rgba c{from_hsl({std::fmod(std::fmod(*h, 360.0) + 360.0, 360.0), std::clamp(*sat / 100.0, 0.0, 1.0),
                             std::clamp(*l / 100.0, 0.0, 1.0)}),
                   1.0};
            if (args.size() == 4) {
                auto a = alpha_value(args[3]);
                if (!a)
                    return std::nullopt;
                c.alpha = std::clamp(*a, 0.0, 1.0);
            }
            return c;
        }
        return std::nullopt;
    }
    const auto& names = named_colors();
    if (auto it = names.find(s); it != names.end()) {
        auto v = it->second;
        return Rgba{{static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>((v >> 8) & 0xFF), static_cast<std::uint8_t>(v & 0xFF)},
                    1.0};
    }
    return std::nullopt;
}

std::string format_hex(Rgb c)
{
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02X%02X%02X", c.r, c.g, c.b);
    return buf;
}

Hsl to_hsl(Rgb c)
{
    const double r = c.r / 255.0, g = c.g / 255.0, b = c.b / 255.0;
    const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
    Hsl out;
    out.l = (mx + mn) / 2.0;
    const double d = mx - mn;
    if (d == 0)
        return out;
    out.s = out.l > 0.5 ? d / (2.0 - mx - mn) : d / (mx + mn);
    double h;
    if (mx == r)
        h = (g - b) / d + (g < b ? 6.0 : 0.0);
    else if (mx == g)
        h = (b - r) / d + 2.0;
    else
        h = (r - g) / d + 4.0;
    out.h = std::fmod(h * 60.0, 360.0);
    return out;
}

Rgb from_hsl(Hsl c)
{
    auto hue_to_rgb = [](double p, double q, double t) {
        if (t < 0)
            t += 1;
        if (t > 1)
            t -= 1;
        if (t < 1.0 / 6)
            return p + (q - p) * 6 * t;
        if (t < 1.0 / 2)
            return q;
        if (t < 2.0 / 3)
            return p + (q - p) * (2.0 / 3 - t) * 6;
        return p;
    };
    double r, g, b;
    if (c.s == 0) {
        r = g = b = c.l;
    } else {
        const double q = c.l < 0.5 ? c.l * (1 + c.s) : c.l + c.s - c.l * c.s;
        const double p = 2 * c.l - q;
        const double h = c.h / 360.0;
        r = hue_to_rgb(p, q, h + 1.0 / 3);
        g = hue_to_rgb(p, q, h);
        b = hue_to_rgb(p, q, h - 1.0 / 3);
    }
    return {clamp_channel(r * 255.0), clamp_channel(g * 255.0), clamp_channel(b * 255.0)};
}

// --- lengths -----------------------------------------------------------------

std::optional<Length> parse_length(std::string_view text)
{
    auto s = to_lower(trim(text));
    if (auto pos = s.find("!important"); pos != std::string::npos)
        s = std::string(trim(std::string_view(s).substr(0, pos)));
    if (s.empty())
        return std::nullopt;
    std::size_t i = 0;
    if (s[i] == '+' || s[i] == '-')
        ++i;
    bool digits = false;
    while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) {
        digits = digits || std::isdigit(static_cast<unsigned char>(s[i]));
        ++i;
    }
    if (!digits)
        return std::nullopt;
    auto num = parse_number(std::string_view(s).substr(0, i));
    if (!num)
        return std::nullopt;
    auto unit = std::string_view(s).substr(i);
    Length len{*num, Unit::px};
    if (unit == "px")
        len.unit = Unit::px;
    else if (unit == "em")
        len.unit = Unit::em;
    else if (unit == "rem")
        len.unit = Unit::rem;
    else if (unit == "%")
        len.unit = Unit::percent;
    else if (unit == "vw")
        len.unit = Unit::vw;
    else if (unit == "vh")
        len.unit = Unit::vh;
    else if (unit == "pt")
        len.unit = Unit::pt;
    else if (unit.empty())
        len.unit = Unit::none;
    else
        return std::nullopt;
    return len;
}

std::string format_px(double px)
{
    double rounded = std::round(px * 100.0) / 100.0;
    if (rounded == 0)
        rounded = 0; // no "-0px"
    char buf[64];
    if (rounded == std::floor(rounded))
        std::snprintf(buf, sizeof buf, "%.0fpx", rounded);
    else {
        std::snprintf(buf, sizeof buf, "%.2f", rounded);
        std::string s(buf);
        while (s.back() == '0')
            s.pop_back();
        return s + "px";
    }
    return buf;
}

std::vector<std::string> split_value(std::string_view value)
{
    std::vector<std::string> out;
    int depth = 0;
    std::string cur;
    for (char c : value) {
        if (c == '(')
            ++depth;
        if (c == ')' && depth > 0)
            --depth;
        if ((c == ' ' || c == '\t' || c == '\n') && depth == 0) {
            if (!cur.empty())
                out.push_back(std::move(cur));
            cur.clear();
            continue;
        }
        cur.push_back(c);
    }
    if (!cur.empty())
        out.push_back(std::move(cur));
    return out;
}

} // namespace refinekit::css
