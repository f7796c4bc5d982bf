#include "style.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <regex>

namespace refinekit::render::detail {

namespace {

constexpr std::string_view kUserAgentSheet = R"css(
html,body,div,p,h1,h2,h3,h4,h5,h6,section,article,header,footer,nav,main,aside,form,fieldset,figure,figcaption,blockquote,pre,hr,address,dl,dt,dd,ul,ol,caption,legend,details,summary,center,menu{display:block}
head,script,style,title,meta,link,template,noscript,base,option,optgroup,datalist,param,source,track{display:none}
li{display:list-item}
table{display:table;border-spacing:2px}
tr{display:table-row}
thead,tbody,tfoot{display:table-row-group}
td,th{display:table-cell;padding:1px}
th{font-weight:bold;text-align:center}
img,button,input,select,textarea,svg,canvas,video,iframe{display:inline-block}
body{margin:8px}
p,pre,dl{margin:1em 0}
h1{font-size:2em;margin:0.67em 0;font-weight:bold}
h2{font-size:1.5em;margin:0.83em 0;font-weight:bold}
h3{font-size:1.17em;margin:1em 0;font-weight:bold}
h4{margin:1.33em 0;font-weight:bold}
h5{font-size:0.83em;margin:1.67em 0;font-weight:bold}
h6{font-size:0.67em;margin:2.33em 0;font-weight:bold}
ul,ol,menu{margin:1em 0;padding-left:40px}
ol{list-style-type:decimal}
dd{margin-left:40px}
blockquote,figure{margin:1em 40px}
fieldset{margin:0 2px;padding:6px 10px;border:2px solid #C0C0C0}
b,strong{font-weight:bold}
small{font-size:smaller}
big{font-size:larger}
a{color:#0000EE}
pre{white-space:pre}
center{text-align:center}
button{padding:1px 6px;border:2px solid #767676;background-color:#EFEFEF;text-align:center}
input,select,textarea{border:2px solid #767676;padding:1px 2px;background-color:#FFFFFF}
input{width:150px}
select{width:120px}
textarea{width:180px;height:36px;white-space:pre-wrap}
hr{border:1px solid #808080;margin:0.5em 0}
)css";

// --- selectors -----------------------------------------------------------

struct Compound {
    std::string tag; // empty = any
    std::string id;
    std::vector<std::string> classes;
    std::vector<std::pair<std::string, std::optional<std::string>>> attrs;
    bool first_child = false;
    bool last_child = false;
    bool root = false;
    bool never = false; // unsupported pseudo-class or pseudo-element
};

struct Complex {
    std::vector<Compound> parts;  // left to right
    std::vector<char> combinators; // between parts: ' ' or '>'
    std::array<int, 3> specificity{0, 0, 0};
    bool never = false;
};

bool is_ident_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || static_cast<unsigned char>(c) >= 0x80;
}

Compound parse_compound(std::string_view s, std::array<int, 3>& spec)
{
    Compound c;
    std::size_t i = 0;
    auto ident = [&]() {
        std::size_t b = i;
        while (i < s.size() && (is_ident_char(s[i]) || s[i] == '\\'))
            ++i;
        return std::string(s.substr(b, i - b));
    };
    if (i < s.size() && s[i] == '*') {
        ++i;
    } else if (i < s.size() && is_ident_char(s[i])) {
        c.tag = css::to_lower(ident());
        ++spec[2];
    }
    while (i < s.size()) {
        char ch = s[i];
        if (ch == '.') {
            ++i;
            c.classes.push_back(ident());
            ++spec[1];
        } else if (ch == '#') {
            ++i;
            c.id = ident();
            ++spec[0];
        } else if (ch == '[') {
            auto close = s.find(']', i);
            if (close == std::string_view::npos) {
                c.never = true;
                return c;
            }
            auto body = s.substr(i + 1, close - i - 1);
            i = close + 1;
            ++spec[1];
            auto eq = body.find('=');
            if (eq == std::string_view::npos) {
                c.attrs.emplace_back(css::to_lower(css::trim(body)), std::nullopt);
            } else {
                auto name = body.substr(0, eq);
                if (!name.empty() && std::string_view("~|^$*").find(name.back()) != std::string_view::npos) {
                    c.never = true;
                    return c;
                }
                auto value = css::trim(body.substr(eq + 1));
                if (value.size() >= 2 && (value.front() == '"' || value.front() == '\''))
                    value = value.substr(1, value.size() - 2);
                c.attrs.emplace_back(css::to_lower(css::trim(name)), std::string(value));
            }
        } else if (ch == ':') {
            ++i;
            if (i < s.size() && s[i] == ':') {
                c.never = true;
                return c;
            }
            auto name = css::to_lower(ident());
            ++spec[1];
            if (name == "first-child")
                c.first_child = true;
            else if (name == "last-child")
                c.last_child = true;
            else if (name == "root")
                c.root = true;
            else
                c.never = true;
            if (i < s.size() && s[i] == '(') {
                c.never = true;
                return c;
            }
        } else {
            c.never = true;
            return c;
        }
    }
    return c;
}

Complex parse_complex(std::string_view s)
{
    Complex cx;
    std::string token;
    char pending = 0;
    auto flush = [&]() {
        if (token.empty())
            return;
        if (!cx.parts.empty())
            cx.combinators.push_back(pending ? pending : ' ');
        auto c = parse_compound(token, cx.specificity);
        cx.never = cx.never || c.never;
        cx.parts.push_back(std::move(c));
        token.clear();
        pending = 0;
    };
    int bracket = 0;
    for (char ch : s) {
        if (ch == '[')
            ++bracket;
        if (ch == ']')
            --bracket;
        if (bracket == 0 && (ch == ' ' || ch == '\t' || ch == '\n' || ch == '>' || ch == '+' || ch == '~')) {
            flush();
            if (ch == '>')
                pending = '>';
            else if (ch == '+' || ch == '~')
                cx.never = true;
            continue;
        }
        token.push_back(ch);
    }
    flush();
    if (cx.parts.empty())
        cx.never = true;
    return cx;
}

std::vector<Complex> parse_selector_list(std::string_view s)
{
    std::vector<Complex> out;
    std::size_t b = 0;
    int depth = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i < s.size() && (s[i] == '(' || s[i] == '['))
            ++depth;
        if (i < s.size() && (s[i] == ')' || s[i] == ']'))
            --depth;
        if (i == s.size() || (s[i] == ',' && depth == 0)) {
            auto part = css::trim(s.substr(b, i - b));
            if (!part.empty())
                out.push_back(parse_complex(part));
            b = i + 1;
        }
    }
    return out;
}

struct ElementRef {
    const doc::Node* node = nullptr;
    const ElementRef* parent = nullptr;
    bool first = false;
    bool last = false;
    bool is_root = false;
};

bool has_class(const doc::Node& n, std::string_view cls)
{
    const auto* c = n.attribute("class");
    if (!c)
        return false;
    std::size_t i = 0;
    while (i < c->size()) {
        while (i < c->size() && std::isspace(static_cast<unsigned char>((*c)[i])))
            ++i;
        std::size_t b = i;
        while (i < c->size() && !std::isspace(static_cast<unsigned char>((*c)[i])))
            ++i;
        if (i > b && std::string_view(*c).substr(b, i - b) == cls)
            return true;
    }
    return false;
}

bool matches_compound(const Compound& c, const ElementRef& e)
{
    const auto& n = *e.node;
    if (c.never)
        return false;
    if (!c.tag.empty() && n.name != c.tag)
        return false;
    if (!c.id.empty()) {
        const auto* id = n.attribute("id");
        if (!id || *id != c.id)
            return false;
    }
    for (const auto& cls : c.classes)
        if (!has_class(n, cls))
            return false;
    for (const auto& [name, value] : c.attrs) {
        const auto* v = n.attribute(name);
        if (!v || (value && *v != *value))
            return false;
    }
    if (c.first_child && !e.first)
        return false;
    if (c.last_child && !e.last)
        return false;
    if (c.root && !e.is_root)
        return false;
    return true;
}

bool matches_from(const Complex& cx, int part, const ElementRef* e)
{
    if (!e || !matches_compound(cx.parts[static_cast<std::size_t>(part)], *e))
        return false;
    if (part == 0)
        return true;
    char comb = cx.combinators[static_cast<std::size_t>(part - 1)];
    if (comb == '>')
        return matches_from(cx, part - 1, e->parent);
    for (const auto* a = e->parent; a; a = a->parent)
        if (matches_from(cx, part - 1, a))
            return true;
    return false;
}

bool matches(const Complex& cx, const ElementRef& e)
{
    return !cx.never && matches_from(cx, static_cast<int>(cx.parts.size()) - 1, &e);
}

// --- cascade -----------------------------------------------------------------

struct SheetRule {
    std::vector<Complex> selectors;
    std::vector<css::Declaration> decls;
    int origin = 0; // 0 user agent, 1 author
    int order = 0;
};

bool media_matches(std::string_view prelude, const Viewport& vp)
{
    auto lower = css::to_lower(prelude);
    if (lower.find("print") != std::string::npos && lower.find("screen") == std::string::npos)
        return false;
    static const std::regex feature(R"(\(\s*(min|max)-width\s*:\s*([0-9.]+)\s*(px|em|rem)?\s*\))");
    for (auto it = std::sregex_iterator(lower.begin(), lower.end(), feature); it != std::sregex_iterator(); ++it) {
        double v = std::stod((*it)[2].str());
        if ((*it)[3].str() == "em" || (*it)[3].str() == "rem")
            v *= 16;
        if ((*it)[1].str() == "min" ? vp.width < v : vp.width > v)
            return false;
    }
    return true;
}

void add_sheet(std::vector<SheetRule>& rules, std::string_view text, int origin, const Viewport& vp)
{
    auto sheet = css::parse_stylesheet(text);
    for (auto& r : sheet.rules) {
        if (!r.media.empty() && !media_matches(r.media, vp))
            continue;
        SheetRule sr;
        sr.selectors = parse_selector_list(r.selector);
        sr.decls = std::move(r.declarations);
        sr.origin = origin;
        sr.order = static_cast<int>(rules.size());
        rules.push_back(std::move(sr));
    }
}

const std::vector<SheetRule>& ua_rules()
{
    static const std::vector<SheetRule> rules = [] {
        std::vector<SheetRule> r;
        add_sheet(r, kUserAgentSheet, 0, Viewport{});
        return r;
    }();
    return rules;
}

using Specified = std::map<std::string, std::string>;

void set_box(Specified& out, const std::string& prefix, const std::string& suffix, const std::vector<std::string>& toks)
{
    static constexpr std::array sides = {"top", "right", "bottom", "left"};
    static constexpr int index[4][4] = {{0, 0, 0, 0}, {0, 1, 0, 1}, {0, 1, 2, 1}, {0, 1, 2, 3}};
    if (toks.empty() || toks.size() > 4)
        return;
    for (int s = 0; s < 4; ++s)
        out[prefix + "-" + sides[static_cast<std::size_t>(s)] + suffix] = toks[static_cast<std::size_t>(index[toks.size() - 1][s])];
}

bool is_border_style(std::string_view t)
{
    static constexpr std::array styles = {"none", "hidden", "solid", "dashed", "dotted", "double",
                                          "groove", "ridge", "inset", "outset"};
    return std::find(styles.begin(), styles.end(), t) != styles.end();
}

void apply_border(Specified& out, const std::vector<std::string>& sides, const std::vector<std::string>& toks)
{
    std::string width = "medium", style = "none", color = "currentcolor";
    for (const auto& t : toks) {
        if (is_border_style(t))
            style = t;
        else if (css::parse_color(t) || t == "currentcolor")
            color = t;
        else
            width = t;
    }
    for (const auto& s : sides) {
        out["border-" + s + "-width"] = width;
        out["border-" + s + "-style"] = style;
        out["border-" + s + "-color"] = color;
    }
}

void apply_declaration(Specified& out, const css::Declaration& d)
{
    std::string value = d.value;
    if (auto p = value.find("!important"); p != std::string::npos)
        value = std::string(css::trim(std::string_view(value).substr(0, p)));
    const auto& p = d.property;
    auto toks = css::split_value(value);
    static const std::vector<std::string> all_sides = {"top", "right", "bottom", "left"};
    if (p == "margin" || p == "padding") {
        set_box(out, p, "", toks);
    } else if (p == "border-width" || p == "border-style" || p == "border-color") {
        set_box(out, "border", p.substr(6), toks);
    } else if (p == "border") {
        apply_border(out, all_sides, toks);
    } else if (p == "border-top" || p == "border-right" || p == "border-bottom" || p == "border-left") {
        apply_border(out, {p.substr(7)}, toks);
    } else if (p == "background") {
        out["background-color"] = "transparent";
        for (const auto& t : toks)
            if (css::parse_color(t))
                out["background-color"] = t;
    } else if (p == "flex") {
        if (toks.size() == 1 && (toks[0] == "none" || toks[0] == "auto")) {
            out["flex-grow"] = toks[0] == "auto" ? "1" : "0";
            out["flex-shrink"] = toks[0] == "auto" ? "1" : "0";
            out["flex-basis"] = "auto";
        } else {
            std::vector<std::string> numbers;
            std::string basis = "0";
            for (const auto& t : toks) {
                auto len = css::parse_length(t);
                if (len && len->unit == css::Unit::none && numbers.size() < 2)
                    numbers.push_back(t);
                else
                    basis = t;
            }
            out["flex-grow"] = numbers.empty() ? "0" : numbers[0];
            out["flex-shrink"] = numbers.size() > 1 ? numbers[1] : "1";
            out["flex-basis"] = basis;
        }
    } else if (p == "flex-flow") {
        for (const auto& t : toks) {
            if (t.find("wrap") != std::string::npos)
                out["flex-wrap"] = t;
            else
                out["flex-direction"] = t;
        }
    } else if (p == "gap" || p == "grid-gap") {
        if (!toks.empty()) {
            out["row-gap"] = toks[0];
            out["column-gap"] = toks.size() > 1 ? toks[1] : toks[0];
        }
    } else if (p == "font") {
        for (const auto& t : toks) {
            if (t == "bold" || t == "bolder" || t == "normal")
                out["font-weight"] = t;
            else if (auto slash = t.find('/'); slash != std::string::npos) {
                out["font-size"] = t.substr(0, slash);
                out["line-height"] = t.substr(slash + 1);
            } else if (css::parse_length(t) && css::parse_length(t)->unit != css::Unit::none)
                out["font-size"] = t;
        }
    } else if (p == "list-style") {
        for (const auto& t : toks)
            if (t == "none" || t == "disc" || t == "circle" || t == "square" || t == "decimal")
                out["list-style-type"] = t;
    } else if (p == "inset" || p == "transition" || p == "animation") {
        // no effect on a static render
    } else {
        out[p] = value;
    }
}

struct Weighted {
    bool important;
    int origin;
    std::array<int, 3> specificity;
    int order;
    const css::Declaration* decl;
};

bool is_important(const css::Declaration& d) { return d.value.find("!important") != std::string::npos; }

Specified cascade(const ElementRef& e, const std::vector<SheetRule>& author, const std::vector<css::Declaration>& inline_decls)
{
    std::vector<Weighted> ws;
    auto collect = [&](const std::vector<SheetRule>& rules) {
        for (const auto& r : rules) {
            std::optional<std::array<int, 3>> best;
            for (const auto& s : r.selectors)
                if (matches(s, e) && (!best || s.specificity > *best))
                    best = s.specificity;
            if (!best)
                continue;
            for (const auto& d : r.decls)
                ws.push_back({is_important(d), r.origin, *best, r.order, &d});
        }
    };
    collect(ua_rules());
    collect(author);
    int order = 0;
    for (const auto& d : inline_decls)
        ws.push_back({is_important(d), 2, {1, 0, 0}, order++, &d});
    std::stable_sort(ws.begin(), ws.end(), [](const Weighted& a, const Weighted& b) {
        if (a.important != b.important)
            return !a.important;
        if (a.origin != b.origin)
            return a.origin < b.origin;
        if (a.specificity != b.specificity)
            return a.specificity < b.specificity;
        return a.order < b.order;
    });
    Specified out;
    for (const auto& w : ws)
        apply_declaration(out, *w.decl);
    return out;
}

// --- computed values -----------------------------------------------------

struct Context {
    Viewport viewport;
};

std::optional<double> length_px(std::string_view v, double em, const Context& ctx, double percent_basis = -1)
{
    auto len = css::parse_length(v);
    if (!len)
        return std::nullopt;
    switch (len->unit) {
    case css::Unit::px: return len->value;
    case css::Unit::pt: return len->value * 4.0 / 3.0;
    case css::Unit::em: return len->value * em;
    case css::Unit::rem: return len->value * 16.0;
    case css::Unit::vw: return len->value * ctx.viewport.width / 100.0;
    case css::Unit::vh: return len->value * ctx.viewport.height / 100.0;
    case css::Unit::percent:
        if (percent_basis < 0)
            return std::nullopt;
        return len->value * percent_basis / 100.0;
    case css::Unit::none: return len->value == 0 ? std::optional<double>(0.0) : std::nullopt;
    }
    return std::nullopt;
}

Dim dim_value(const Specified& s, const std::string& prop, double em, const Context& ctx)
{
    auto it = s.find(prop);
    if (it == s.end())
        return {};
    const auto& v = it->second;
    if (v == "auto" || v == "none" || v.empty())
        return {};
    auto len = css::parse_length(v);
    if (len && len->unit == css::Unit::percent)
        return {Dim::percent, len->value};
    if (v.rfind("calc(", 0) == 0) {
        // calc(100% - Npx) and friends: keep the percentage part only.
        static const std::regex pct(R"(([0-9.]+)%)");
        std::smatch m;
        if (std::regex_search(v, m, pct))
            return {Dim::percent, std::stod(m[1].str())};
        return {};
    }
    if (auto px = length_px(v, em, ctx))
        return Dim::pixels(*px);
    return {};
}

Display parse_display(std::string_view v, Display fallback)
{
    if (v == "none")
        return Display::none;
    if (v == "block" || v == "flow-root" || v == "contents")
        return Display::block;
    if (v == "inline")
        return Display::inline_;
    if (v == "inline-block")
        return Display::inline_block;
    if (v == "flex")
        return Display::flex;
    if (v == "inline-flex")
        return Display::inline_flex;
    if (v == "grid" || v == "inline-grid")
        return Display::grid;
    if (v == "list-item")
        return Display::list_item;
    if (v == "table" || v == "inline-table")
        return Display::table;
    if (v == "table-row")
        return Display::table_row;
    if (v == "table-row-group" || v == "table-header-group" || v == "table-footer-group")
        return Display::table_row_group;
    if (v == "table-cell")
        return Display::table_cell;
    return fallback;
}

double font_size_value(std::string_view v, double parent, const Context& ctx)
{
    static const std::pair<std::string_view, double> keywords[] = {
        {"xx-small", 9}, {"x-small", 10}, {"small", 13}, {"medium", 16}, {"large", 18}, {"x-large", 24}, {"xx-large", 32},
    };
    for (const auto& [k, px] : keywords)
        if (v == k)
            return px;
    if (v == "smaller")
        return parent / 1.2;
    if (v == "larger")
        return parent * 1.2;
    if (auto px = length_px(v, parent, ctx, parent))
        return std::max(0.0, *px);
    return parent;
}

ComputedStyle compute(const Specified& s, const ComputedStyle& parent, const Context& ctx)
{
    ComputedStyle c;
    auto get = [&](const std::string& p) -> const std::string* {
        auto it = s.find(p);
        if (it == s.end() || it->second == "inherit" || it->second == "initial" || it->second == "unset")
            return nullptr;
        return &it->second;
    };
    // inherited properties
    c.font_size = parent.font_size;
    c.bold = parent.bold;
    c.color = parent.color;
    c.text_align = parent.text_align;
    c.preserve_newlines = parent.preserve_newlines;
    c.preserve_spaces = parent.preserve_spaces;
    c.nowrap = parent.nowrap;
    c.hidden = parent.hidden;
    c.list_style = parent.list_style;
    c.border_spacing = parent.border_spacing;
    std::optional<std::string> line_height_spec;

    if (const auto* v = get("font-size"))
        c.font_size = font_size_value(*v, parent.font_size, ctx);
    const double em = c.font_size;
    if (const auto* v = get("font-weight")) {
        if (*v == "bold" || *v == "bolder")
            c.bold = true;
        else if (*v == "normal" || *v == "lighter")
            c.bold = false;
        else if (auto n = css::parse_length(*v))
            c.bold = n->value >= 600;
    }
    if (const auto* v = get("color"))
        if (auto col = css::parse_color(*v))
            c.color = *col;
    if (const auto* v = get("text-align")) {
        if (*v == "center" || *v == "right" || *v == "left")
            c.text_align = *v;
        else if (*v == "end")
            c.text_align = "right";
        else
            c.text_align = "left";
    }
    if (const auto* v = get("white-space")) {
        c.preserve_newlines = *v == "pre" || *v == "pre-wrap" || *v == "pre-line" || *v == "break-spaces";
        c.preserve_spaces = *v == "pre" || *v == "pre-wrap" || *v == "break-spaces";
        c.nowrap = *v == "nowrap" || *v == "pre";
    }
    if (const auto* v = get("visibility"))
        c.hidden = *v == "hidden" || *v == "collapse";
    if (const auto* v = get("list-style-type"))
        c.list_style = *v;
    if (const auto* v = get("border-spacing"))
        if (auto px = length_px(css::split_value(*v).front(), em, ctx))
            c.border_spacing = *px;

    // line-height inherits as specified for numbers, as computed otherwise
    c.line_height = parent.font_size > 0 ? parent.line_height * (c.font_size / parent.font_size) : c.font_size * 1.2;
    if (const auto* v = get("line-height")) {
        auto len = css::parse_length(*v);
        if (*v == "normal")
            c.line_height = c.font_size * 1.2;
        else if (len && len->unit == css::Unit::none)
            c.line_height = c.font_size * len->value;
        else if (len && len->unit == css::Unit::percent)
            c.line_height = c.font_size * len->value / 100.0;
        else if (auto px = length_px(*v, em, ctx))
            c.line_height = *px;
    } else if (parent.font_size <= 0) {
        c.line_height = c.font_size * 1.2;
    }

    // non-inherited properties
    if (const auto* v = get("display"))
        c.display = parse_display(*v, Display::inline_);
    if (const auto* v = get("background-color"))
        if (auto col = css::parse_color(*v))
            c.background = *col;
    c.width = dim_value(s, "width", em, ctx);
    c.height = dim_value(s, "height", em, ctx);
    c.min_width = dim_value(s, "min-width", em, ctx);
    c.min_height = dim_value(s, "min-height", em, ctx);
    c.max_width = dim_value(s, "max-width", em, ctx);
    c.max_height = dim_value(s, "max-height", em, ctx);
    static constexpr std::array sides = {"top", "right", "bottom", "left"};
    for (std::size_t i = 0; i < 4; ++i) {
        std::string side = sides[i];
        auto m = s.find("margin-" + side);
        if (m == s.end() || m->second != "auto") {
            c.margin[i] = dim_value(s, "margin-" + side, em, ctx);
            if (c.margin[i].is_auto())
                c.margin[i] = Dim::pixels(0);
        }
        c.padding[i] = dim_value(s, "padding-" + side, em, ctx);
        if (c.padding[i].is_auto())
            c.padding[i] = Dim::pixels(0);
        auto style = s.find("border-" + side + "-style");
        bool visible = style != s.end() && style->second != "none" && style->second != "hidden";
        if (visible) {
            auto w = s.find("border-" + side + "-width");
            std::string wv = w == s.end() ? "medium" : w->second;
            if (wv == "thin")
                c.border[i] = 1;
            else if (wv == "medium")
                c.border[i] = 3;
            else if (wv == "thick")
                c.border[i] = 5;
            else
                c.border[i] = std::max(0.0, length_px(wv, em, ctx).value_or(3));
        }
        c.border_color[i] = c.color;
        auto col = s.find("border-" + side + "-color");
        if (col != s.end())
            if (auto parsed = css::parse_color(col->second))
                c.border_color[i] = *parsed;
    }
    if (const auto* v = get("box-sizing"))
        c.border_box = *v == "border-box";
    if (const auto* v = get("flex-direction"))
        c.flex_direction = *v;
    if (const auto* v = get("flex-wrap"))
        c.flex_wrap = *v == "wrap" || *v == "wrap-reverse";
    if (const auto* v = get("justify-content"))
        c.justify_content = *v;
    if (const auto* v = get("align-items"))
        c.align_items = *v;
    if (const auto* v = get("align-self"))
        c.align_self = *v;
    if (const auto* v = get("row-gap"))
        c.row_gap = length_px(*v, em, ctx).value_or(0);
    if (const auto* v = get("column-gap"))
        c.column_gap = length_px(*v, em, ctx).value_or(0);
    if (const auto* v = get("flex-grow"))
        if (auto n = css::parse_length(*v))
            c.flex_grow = std::max(0.0, n->value);
    if (const auto* v = get("flex-shrink"))
        if (auto n = css::parse_length(*v))
            c.flex_shrink = std::max(0.0, n->value);
    c.flex_basis = dim_value(s, "flex-basis", em, ctx);
    if (const auto* v = get("grid-template-columns"))
        c.grid_columns = *v;
    return c;
}

// --- tree construction ---------------------------------------------------

struct Builder {
    const doc::HtmlDocument& doc;
    Context ctx;
    std::vector<SheetRule> author;

    std::unique_ptr<StyledNode> element(const doc::Node& n, const doc::NodePath& path, const ElementRef& ref,
                                        const ComputedStyle& parent_style)
    {
        auto decls = n.style();
        auto specified = cascade(ref, author, decls);
        auto out = std::make_unique<StyledNode>();
        out->node = &n;
        out->path = path;
        out->style = compute(specified, parent_style, ctx);
        if (n.attribute("hidden"))
            out->style.display = Display::none;
        if (n.name == "input") {
            const auto* type = n.attribute("type");
            if (type && *type == "hidden")
                out->style.display = Display::none;
        }
        if (out->style.display == Display::none)
            return nullptr;
        if (n.name == "svg" || n.name == "img" || n.name == "canvas" || n.name == "video" || n.name == "iframe" ||
            n.name == "select" || n.name == "input")
            return out; // replaced content: children are not rendered

        std::vector<const doc::Node*> elems;
        for (const auto& c : n.children)
            if (c.is_element())
                elems.push_back(&c);
        int list_counter = 0;
        doc::NodePath child_path = path;
        for (std::uint32_t i = 0; i < n.children.size(); ++i) {
            const auto& c = n.children[i];
            child_path.push_back(i);
            if (c.is_text() && !doc::is_raw_text_element(n.name)) {
                auto t = std::make_unique<StyledNode>();
                t->node = &c;
                t->path = child_path;
                t->is_text = true;
                t->text = c.text;
                t->style = out->style;
                t->style.display = Display::inline_;
                out->children.push_back(std::move(t));
            } else if (c.is_element()) {
                ElementRef cref{&c, &ref, elems.front() == &c, elems.back() == &c, false};
                if (auto child = element(c, child_path, cref, out->style)) {
                    if (child->style.display == Display::list_item)
                        child->list_index = ++list_counter;
                    out->children.push_back(std::move(child));
                }
            }
            child_path.pop_back();
        }
        return out;
    }
};

} // namespace

bool is_block_level(Display d)
{
    switch (d) {
    case Display::block:
    case Display::flex:
    case Display::grid:
    case Display::list_item:
    case Display::table:
    case Display::table_row:
    case Display::table_row_group:
    case Display::table_cell: return true;
    default: return false;
    }
}

bool is_inline_level(Display d) { return !is_block_level(d) && d != Display::none; }

std::unique_ptr<StyledNode> build_styled_tree(const doc::HtmlDocument& d, const Viewport& viewport)
{
    Builder b{d, Context{viewport}, {}};
    doc::walk(d.root, [&](const doc::Node& n, const doc::NodePath&) {
        if (n.is_element("style") && !n.children.empty() && n.children[0].is_text()) {
            const auto* media = n.attribute("media");
            if (media && !media_matches(*media, viewport))
                return;
            add_sheet(b.author, n.children[0].text, 1, viewport);
        }
    });
    const doc::Node* html = d.html();
    if (!html)
        return nullptr;
    doc::NodePath path;
    for (std::uint32_t i = 0; i < d.root.children.size(); ++i)
        if (&d.root.children[i] == html)
            path.push_back(i);
    ComputedStyle initial;
    initial.display = Display::block;
    ElementRef ref{html, nullptr, true, true, true};
    auto root = b.element(*html, path, ref, initial);
    if (root)
        root->style.display = Display::block;
    return root;
}

} // namespace refinekit::render::detail
