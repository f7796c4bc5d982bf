#include "rules_internal.hpp"

#include "refinekit/doc/css.hpp"
#include "refinekit/error.hpp"
#include "../render/style.hpp"

#include <algorithm>
#include <cctype>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace refinekit::perturb {

using doc::HtmlDocument;
using doc::Node;
using doc::NodePath;

namespace {

constexpr std::array kCategoryNames = {"color", "layout", "alignment", "component", "image", "text"};
constexpr std::array kTargetNames = {"attribute", "style_property", "text", "subtree"};

} // namespace

std::string_view to_string(Category c) { return kCategoryNames[static_cast<std::size_t>(c)]; }

Category category_from_string(std::string_view s)
{
    for (std::size_t i = 0; i < kCategoryNames.size(); ++i)
        if (s == kCategoryNames[i])
            return static_cast<Category>(i);
    throw std::invalid_argument("unknown category: " + std::string(s));
}

std::string_view to_string(Target t) { return kTargetNames[static_cast<std::size_t>(t)]; }

Target target_from_string(std::string_view s)
{
    for (std::size_t i = 0; i < kTargetNames.size(); ++i)
        if (s == kTargetNames[i])
            return static_cast<Target>(i);
    throw std::invalid_argument("unknown edit target: " + std::string(s));
}

const std::vector<RuleInfo>& rule_catalog()
{
    static const std::vector<RuleInfo> rules = {
        {"color.hue_rotate", Category::color, "HSL hue rotated by U[60, 300) degrees; achromatic colors skipped"},
        {"color.lightness", Category::color, "HSL lightness shifted by +/-U[0.20, 0.40), sign flipped to stay in range"},
        {"layout.flex_direction", Category::layout, "flex-direction row <-> column on a flex container"},
        {"layout.gap_scale", Category::layout, "gap multiplied by one of {0.1, 0.25, 3, 5}"},
        {"layout.swap_siblings", Category::layout, "two adjacent element siblings exchanged"},
        {"alignment.text_align", Category::alignment, "text-align cycled left -> center -> right -> left"},
        {"alignment.spacing", Category::alignment, "margin or padding on the top or left side increased by U{40..80} px"},
        {"component.comment_out", Category::component,
         "one of nav, footer, aside, header, form, table or a button-bearing div wrapped in a comment"},
        {"component.button_todo", Category::component, "button label replaced by \"TODO\""},
        {"image.height_scale", Category::image, "image height multiplied by one of {0.3, 0.5, 2}"},
        {"image.remove", Category::image, "image element removed"},
        {"text.font_size", Category::text, "font-size multiplied by one of {0.6, 1.8}"},
        {"text.font_weight", Category::text, "font-weight toggled normal <-> bold"},
        {"text.truncate", Category::text, "text cut to its first ceil(40%) code points, trailing space trimmed"},
    };
    return rules;
}

const RuleInfo& find_rule(std::string_view id)
{
    for (const auto& r : rule_catalog())
        if (r.id == id)
            return r;
    throw std::invalid_argument("unknown rule: " + std::string(id));
}

std::vector<std::string_view> rules_in(Category c)
{
    std::vector<std::string_view> out;
    for (const auto& r : rule_catalog())
        if (r.category == c)
            out.push_back(r.id);
    return out;
}

css::Rgb rotate_hue(css::Rgb c, double degrees)
{
    auto hsl = css::to_hsl(c);
    hsl.h = std::fmod(hsl.h + degrees, 360.0);
    if (hsl.h < 0)
        hsl.h += 360.0;
    return css::from_hsl(hsl);
}

namespace detail {

namespace {

// --- document helpers ----------------------------------------------------

std::optional<NodePath> find_body(const HtmlDocument& d)
{
    const Node* body = d.body();
    std::optional<NodePath> out;
    if (!body)
        return out;
    doc::walk(d.root, [&](const Node& n, const NodePath& p) {
        if (!out && &n == body)
            out = p;
    });
    return out;
}

bool has_prefix(const NodePath& p, const NodePath& prefix)
{
    return p.size() >= prefix.size() && std::equal(prefix.begin(), prefix.end(), p.begin());
}

// Visits every node strictly below body, skipping raw-text and comment
// content.
void walk_body(const HtmlDocument& d, const std::function<void(const Node&, const NodePath&)>& visit)
{
    auto body = find_body(d);
    if (!body)
        return;
    doc::walk(d.root, [&](const Node& n, const NodePath& p) {
        if (p.size() > body->size() && has_prefix(p, *body))
            visit(n, p);
    });
}

bool has_direct_text(const Node& n)
{
    if (!n.is_element() || doc::is_raw_text_element(n.name) || n.name == "textarea" || n.name == "title")
        return false;
    return std::any_of(n.children.begin(), n.children.end(), [](const Node& c) {
        return c.is_text() && !css::trim(c.text).empty();
    });
}

bool contains_element(const Node& n, std::string_view tag)
{
    for (const auto& c : n.children)
        if (c.is_element(tag) || contains_element(c, tag))
            return true;
    return false;
}

// --- computed styles -----------------------------------------------------

// Cascade-resolved styles of the rendered elements, keyed by node path.
// Elements inside display:none subtrees are absent.
class StyleIndex {
public:
    explicit StyleIndex(const HtmlDocument& d) : root_(render::detail::build_styled_tree(d, render::Viewport{}))
    {
        index(*root_, nullptr);
    }

    const render::detail::StyledNode* find(const NodePath& p) const
    {
        auto it = nodes_.find(p);
        return it == nodes_.end() ? nullptr : it->second.first;
    }

    const render::detail::StyledNode* parent(const NodePath& p) const
    {
        auto it = nodes_.find(p);
        return it == nodes_.end() ? nullptr : it->second.second;
    }

private:
    void index(const render::detail::StyledNode& n, const render::detail::StyledNode* parent)
    {
        const auto* next_parent = parent;
        if (n.node && n.node->is_element()) {
            nodes_.emplace(n.path, std::make_pair(&n, parent));
            next_parent = &n;
        }
        for (const auto& c : n.children)
            index(*c, next_parent);
    }

    std::unique_ptr<render::detail::StyledNode> root_;
    std::map<NodePath, std::pair<const render::detail::StyledNode*, const render::detail::StyledNode*>> nodes_;
};

// --- declaration hosts ---------------------------------------------------

// A declaration list the rules can edit: an inline style attribute or one
// rule of an internal stylesheet.
struct Host {
    NodePath path; // element (inline) or stylesheet text node
    int rule = -1;
    std::size_t block_begin = 0;
    std::size_t block_end = 0;
    std::vector<css::Declaration> decls;
};

std::vector<Host> find_hosts(const HtmlDocument& d)
{
    std::vector<Host> hosts;
    auto body = find_body(d);
    doc::walk(d.root, [&](const Node& n, const NodePath& p) {
        if (!n.is_element())
            return;
        if (body && p.size() > body->size() && has_prefix(p, *body) && n.attribute("style")) {
            auto decls = n.style();
            if (!decls.empty())
                hosts.push_back({p, -1, 0, 0, std::move(decls)});
        }
        if (n.name == "style" && n.children.size() == 1 && n.children[0].is_text()) {
            auto sheet = css::parse_stylesheet(n.children[0].text);
            NodePath tp = p;
            tp.push_back(0);
            for (std::size_t r = 0; r < sheet.rules.size(); ++r) {
                auto& rule = sheet.rules[r];
                if (!rule.declarations.empty())
                    hosts.push_back({tp, static_cast<int>(r), rule.block_begin, rule.block_end, rule.declarations});
            }
        }
    });
    return hosts;
}

void write_host(HtmlDocument& d, const Host& h, const std::vector<css::Declaration>& decls)
{
    auto canon = css::canonicalize(decls);
    Node* n = d.at_mut(h.path);
    if (h.rule < 0) {
        n->set_style(canon);
        return;
    }
    n->text = n->text.substr(0, h.block_begin) + css::serialize_declarations(canon) + n->text.substr(h.block_end);
}

Site host_site(const Host& h, std::string property)
{
    Site s;
    s.path = h.path;
    s.target = Target::style_property;
    s.target_name = std::move(property);
    if (h.rule < 0) {
        s.span = SpanKind::start_tag;
    } else {
        s.span = SpanKind::stylesheet_block;
        s.block_begin = h.block_begin;
        s.block_end = h.block_end;
    }
    return s;
}

std::string join_tokens(const std::vector<std::string>& tokens)
{
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i)
            out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

std::string format_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    std::string s = buf;
    while (!s.empty() && s.back() == '0')
        s.pop_back();
    if (!s.empty() && s.back() == '.')
        s.pop_back();
    return s;
}

std::string format_color(const css::Rgba& c)
{
    if (c.alpha >= 1.0)
        return css::format_hex(c.rgb);
    return "rgba(" + std::to_string(c.rgb.r) + "," + std::to_string(c.rgb.g) + "," + std::to_string(c.rgb.b) + "," +
           format_number(c.alpha) + ")";
}

bool is_color_property(std::string_view p)
{
    static constexpr std::array props = {
        "color",          "background",       "background-color", "border",           "border-color",
        "border-top",     "border-right",     "border-bottom",    "border-left",      "border-top-color",
        "border-right-color", "border-bottom-color", "border-left-color", "outline", "outline-color",
        "fill",           "stroke",           "text-decoration-color",
    };
    return std::find(props.begin(), props.end(), p) != props.end();
}

template <typename T>
T pick_value(Rng& rng, const std::vector<T>& values, const RuleOptions& o)
{
    return o.magnitude ? static_cast<T>(*o.magnitude) : rng.pick(values);
}

// --- color -----------------------------------------------------------------

enum class ColorOp { hue, lightness };

std::vector<Site> color_sites(const HtmlDocument& d, ColorOp op, const RuleOptions& o)
{
    std::vector<Site> sites;
    for (const auto& h : find_hosts(d)) {
        for (std::size_t i = 0; i < h.decls.size(); ++i) {
            if (!is_color_property(h.decls[i].property))
                continue;
            auto tokens = css::split_value(h.decls[i].value);
            for (std::size_t t = 0; t < tokens.size(); ++t) {
                auto c = css::parse_color(tokens[t]);
                if (!c || c->alpha <= 0)
                    continue;
                if (op == ColorOp::hue && css::to_hsl(c->rgb).s < 0.05)
                    continue;
                Site s = host_site(h, h.decls[i].property);
                s.mutate = [h, i, tokens, t, c = *c, op, o](HtmlDocument& doc, Rng& rng) {
                    auto hsl = css::to_hsl(c.rgb);
                    css::Rgba next = c;
                    if (op == ColorOp::hue) {
                        double deg = o.magnitude ? *o.magnitude : rng.uniform_real(60.0, 300.0);
                        next.rgb = rotate_hue(c.rgb, deg);
                    } else {
                        double amount = o.magnitude ? *o.magnitude : rng.uniform_real(0.20, 0.40) * (rng.coin() ? 1 : -1);
                        if (!o.magnitude && (hsl.l + amount > 1.0 || hsl.l + amount < 0.0))
                            amount = -amount;
                        hsl.l = std::clamp(hsl.l + amount, 0.0, 1.0);
                        next.rgb = css::from_hsl(hsl);
                    }
                    if (next.rgb == c.rgb)
                        return false;
                    auto toks = tokens;
                    toks[t] = format_color(next);
                    auto decls = h.decls;
                    decls[i].value = join_tokens(toks);
                    write_host(doc, h, decls);
                    return true;
                };
                sites.push_back(std::move(s));
            }
        }
    }
    return sites;
}

// --- layout ----------------------------------------------------------------

std::vector<Site> flex_direction_sites(const HtmlDocument& d)
{
    std::vector<Site> sites;
    for (const auto& h : find_hosts(d)) {
        auto display = css::find(h.decls, "display");
        if (!display || (*display != "flex" && *display != "inline-flex"))
            continue;
        Site s = host_site(h, "flex-direction");
        s.mutate = [h](HtmlDocument& doc, Rng&) {
            auto dir = css::find(h.decls, "flex-direction").value_or("row");
            std::string next;
            if (dir == "row")
                next = "column";
            else if (dir == "column")
                next = "row";
            else if (dir == "row-reverse")
                next = "column-reverse";
            else if (dir == "column-reverse")
                next = "row-reverse";
            else
                next = "column";
            auto decls = h.decls;
            css::set(decls, "flex-direction", next);
            write_host(doc, h, decls);
            return true;
        };
        sites.push_back(std::move(s));
    }
    return sites;
}

std::optional<std::vector<double>> px_tokens(std::string_view value)
{
    std::vector<double> out;
    for (const auto& t : css::split_value(value)) {
        auto len = css::parse_length(t);
        if (!len || (len->unit != css::Unit::px && !(len->unit == css::Unit::none && len->value == 0)))
            return std::nullopt;
        out.push_back(len->value);
    }
    if (out.empty())
        return std::nullopt;
    return out;
}

std::vector<Site> gap_sites(const HtmlDocument& d, const RuleOptions& o)
{
    std::vector<Site> sites;
    for (const auto& h : find_hosts(d)) {
        for (std::size_t i = 0; i < h.decls.size(); ++i) {
            const auto& prop = h.decls[i].property;
            if (prop != "gap" && prop != "row-gap" && prop != "column-gap" && prop != "grid-gap")
                continue;
            auto values = px_tokens(h.decls[i].value);
            if (!values || std::all_of(values->begin(), values->end(), [](double v) { return v == 0; }))
                continue;
            Site s = host_site(h, prop);
            s.mutate = [h, i, values = *values, o](HtmlDocument& doc, Rng& rng) {
                double f = pick_value<double>(rng, {0.1, 0.25, 3.0, 5.0}, o);
                std::vector<std::string> toks;
                for (double v : values)
                    toks.push_back(css::format_px(v * f));
                auto decls = h.decls;
                decls[i].value = join_tokens(toks);
                if (decls[i].value == h.decls[i].value)
                    return false;
                write_host(doc, h, decls);
                return true;
            };
            sites.push_back(std::move(s));
        }
    }
    return sites;
}

std::vector<Site> swap_sites(const HtmlDocument& d)
{
    std::vector<Site> sites;
    auto body = find_body(d);
    if (!body)
        return sites;
    auto consider = [&](const Node& parent, const NodePath& ppath) {
        if (doc::is_raw_text_element(parent.name))
            return;
        std::optional<std::uint32_t> prev;
        for (std::uint32_t i = 0; i < parent.children.size(); ++i) {
            const auto& c = parent.children[i];
            if (c.is_text() && css::trim(c.text).empty())
                continue;
            if (!c.is_element() || c.name == "script" || c.name == "style") {
                prev.reset();
                continue;
            }
            if (prev && doc::serialize(parent.children[*prev]) != doc::serialize(c)) {
                Site s;
                s.path = ppath;
                s.path.push_back(*prev);
                s.path2 = ppath;
                s.path2.push_back(i);
                s.span = SpanKind::sibling_pair;
                s.target = Target::subtree;
                s.target_name = parent.children[*prev].name;
                s.mutate = [ppath, a = *prev, b = i](HtmlDocument& doc, Rng&) {
                    Node* p = doc.at_mut(ppath);
                    std::swap(p->children[a], p->children[b]);
                    return true;
                };
                sites.push_back(std::move(s));
            }
            prev = i;
        }
    };
    consider(*d.at(*body), *body);
    walk_body(d, [&](const Node& n, const NodePath& p) {
        if (n.is_element())
            consider(n, p);
    });
    return sites;
}

// --- alignment -------------------------------------------------------------

std::string next_alignment(std::string_view current)
{
    if (current == "center")
        return "right";
    if (current == "right" || current == "end")
        return "left";
    return "center";
}

bool is_alignable(const Node& n)
{
    return doc::is_block_element(n.name) || n.name == "td" || n.name == "th" || n.name == "li" || n.name == "button";
}

// Whether a box's width comes from its container chain rather than from its
// content.
bool has_definite_width(const StyleIndex& styles, const NodePath& p, const render::detail::StyledNode& n)
{
    using render::detail::Display;
    if (!n.style.width.is_auto())
        return true;
    const auto* parent = styles.parent(p);
    if (!parent)
        return true;
    auto up = [&] { return has_definite_width(styles, parent->path, *parent); };
    switch (n.style.display) {
    case Display::block:
    case Display::list_item:
    case Display::table:
        if (parent->style.display == Display::grid)
            return true;
        if (parent->style.display == Display::flex || parent->style.display == Display::inline_flex) {
            bool column = parent->style.flex_direction.rfind("column", 0) == 0;
            if (column ? parent->style.align_items == "stretch" : n.style.flex_grow > 0)
                return up();
            return false;
        }
        if (n.style.display == Display::table)
            return false;
        return parent->style.display == Display::block || parent->style.display == Display::list_item ||
               parent->style.display == Display::table_cell
                   ? up()
                   : false;
    case Display::table_cell:
        for (const auto* a = parent; a; a = styles.parent(a->path))
            if (a->style.display == Display::table)
                return !a->style.width.is_auto() && has_definite_width(styles, a->path, *a);
        return false;
    default: return false;
    }
}

// Whether the element's line boxes are wider than their text, so that a new
// text-align moves it.
bool has_alignment_slack(const StyleIndex& styles, const NodePath& p)
{
    using render::detail::Display;
    const auto* n = styles.find(p);
    if (!n || n->style.display == Display::inline_)
        return false;
    return has_definite_width(styles, p, *n);
}

std::vector<Site> text_align_sites(const HtmlDocument& d)
{
    std::vector<Site> sites;
    std::vector<NodePath> inline_declared;
    for (const auto& h : find_hosts(d)) {
        auto align = css::find(h.decls, "text-align");
        if (!align)
            continue;
        if (h.rule < 0)
            inline_declared.push_back(h.path);
        Site s = host_site(h, "text-align");
        s.mutate = [h, next = next_alignment(*align)](HtmlDocument& doc, Rng&) {
            auto decls = h.decls;
            css::set(decls, "text-align", next);
            write_host(doc, h, decls);
            return true;
        };
        sites.push_back(std::move(s));
    }
    StyleIndex styles(d);
    walk_body(d, [&](const Node& n, const NodePath& p) {
        if (!is_alignable(n) || !has_direct_text(n) || !has_alignment_slack(styles, p))
            return;
        if (std::find(inline_declared.begin(), inline_declared.end(), p) != inline_declared.end())
            return;
        Site s;
        s.path = p;
        s.span = SpanKind::start_tag;
        s.target = Target::style_property;
        s.target_name = "text-align";
        s.mutate = [p, next = next_alignment(styles.find(p)->style.text_align)](HtmlDocument& doc, Rng&) {
            Node* e = doc.at_mut(p);
            auto decls = e->style();
            css::set(decls, "text-align", next);
            e->set_style(css::canonicalize(decls));
            return true;
        };
        sites.push_back(std::move(s));
    });
    return sites;
}

// Resolved px value of one side of a margin/padding, or 0 when it is not a
// px length.
double side_value(const std::vector<css::Declaration>& decls, const std::string& prop, int side)
{
    static constexpr std::array sides = {"top", "right", "bottom", "left"};
    std::optional<double> value;
    for (const auto& dcl : decls) {
        if (dcl.property == prop + "-" + sides[static_cast<std::size_t>(side)]) {
            auto len = css::parse_length(dcl.value);
            value = len && len->unit == css::Unit::px ? len->value : 0.0;
        } else if (dcl.property == prop) {
            auto toks = css::split_value(dcl.value);
            if (toks.empty() || toks.size() > 4) {
                value = 0.0;
                continue;
            }
            static constexpr int index[4][4] = {{0, 0, 0, 0}, {0, 1, 0, 1}, {0, 1, 2, 1}, {0, 1, 2, 3}};
            auto len = css::parse_length(toks[static_cast<std::size_t>(index[toks.size() - 1][side])]);
            value = len && len->unit == css::Unit::px ? len->value : 0.0;
        }
    }
    return value.value_or(0.0);
}

std::vector<Site> spacing_sites(const HtmlDocument& d, const RuleOptions& o)
{
    std::vector<Site> sites;
    StyleIndex styles(d);
    walk_body(d, [&](const Node& n, const NodePath& p) {
        if (!n.is_element() || !(is_alignable(n) || n.name == "img" || n.name == "a" || n.name == "span"))
            return;
        const auto* styled = styles.find(p);
        if (!styled)
            return;
        using render::detail::Display;
        if (styled->style.display == Display::table_row || styled->style.display == Display::table_row_group)
            return;
        bool padding_only = styled->style.display == Display::table_cell;
        bool left_only = styled->style.display == Display::inline_;
        Site s;
        s.path = p;
        s.span = SpanKind::start_tag;
        s.target = Target::style_property;
        s.target_name = "margin";
        s.mutate = [p, o, padding_only, left_only](HtmlDocument& doc, Rng& rng) {
            static constexpr std::array sides = {"top", "right", "bottom", "left"};
            // Right and bottom offsets are often absorbed by auto widths and
            // stretched containers.
            static constexpr std::array visible_sides = {0, 3};
            std::string prop = padding_only || rng.coin() ? "padding" : "margin";
            int side = left_only ? 3 : visible_sides[rng.index(visible_sides.size())];
            double offset = o.magnitude ? *o.magnitude : static_cast<double>(rng.uniform_int(40, 80));
            Node* e = doc.at_mut(p);
            auto decls = e->style();
            double base = side_value(decls, prop, side);
            css::set(decls, prop + "-" + sides[static_cast<std::size_t>(side)], css::format_px(base + offset));
            e->set_style(css::canonicalize(decls));
            return true;
        };
        sites.push_back(std::move(s));
    });
    return sites;
}

// --- component -------------------------------------------------------------

bool is_removable_component(const Node& n)
{
    static constexpr std::array tags = {"nav", "footer", "aside", "header", "form", "table"};
    if (std::find(tags.begin(), tags.end(), n.name) != tags.end())
        return true;
    return n.name == "div" && contains_element(n, "button");
}

std::size_t visible_chars(const Node& n)
{
    auto text = n.text_content();
    return static_cast<std::size_t>(std::count_if(text.begin(), text.end(), [](char c) { return !std::isspace(static_cast<unsigned char>(c)); }));
}

std::vector<Site> comment_out_sites(const HtmlDocument& d)
{
    std::vector<Site> sites;
    const Node* body = d.body();
    const std::size_t page_chars = body ? visible_chars(*body) : 0;
    walk_body(d, [&](const Node& n, const NodePath& p) {
        if (!n.is_element() || !is_removable_component(n))
            return;
        // A wrapper holding all of the page text would leave a blank page.
        if (visible_chars(n) >= page_chars)
            return;
        auto text = doc::serialize(n);
        if (text.find("-->") != std::string::npos || text.find("--!>") != std::string::npos)
            return;
        Site s;
        s.path = p;
        s.span = SpanKind::node;
        s.target = Target::subtree;
        s.target_name = n.name;
        s.mutate = [p, text](HtmlDocument& doc, Rng&) {
            *doc.at_mut(p) = Node::comment(" " + text + " ");
            return true;
        };
        sites.push_back(std::move(s));
    });
    return sites;
}

std::vector<Site> button_sites(const HtmlDocument& d)
{
    std::vector<Site> sites;
    walk_body(d, [&](const Node& n, const NodePath& p) {
        if (!n.is_element())
            return;
        bool button = n.name == "button" && css::trim(n.text_content()) != "TODO";
        const auto* type = n.attribute("type");
        const auto* value = n.attribute("value");
        bool input = n.name == "input" && type && (*type == "submit" || *type == "button") && value && *value != "TODO";
        if (!button && !input)
            return;
        Site s;
        s.path = p;
        s.span = button ? SpanKind::node : SpanKind::start_tag;
        s.target = button ? Target::text : Target::attribute;
        s.target_name = button ? "button" : "value";
        s.mutate = [p, button](HtmlDocument& doc, Rng&) {
            Node* e = doc.at_mut(p);
            if (button) {
                e->children.clear();
                e->children.push_back(Node::make_text("TODO"));
            } else {
                e->set_attribute("value", "TODO");
            }
            return true;
        };
        sites.push_back(std::move(s));
    });
    return sites;
}

// --- image -----------------------------------------------------------------

std::vector<Site> image_height_sites(const HtmlDocument& d, const RuleOptions& o)
{
    std::vector<Site> sites;
    walk_body(d, [&](const Node& n, const NodePath& p) {
        if (!n.is_element("img"))
            return;
        const auto* h = n.attribute("height");
        auto len = h ? css::parse_length(*h) : std::nullopt;
        if (!len || len->value <= 0 || (len->unit != css::Unit::px && len->unit != css::Unit::none))
            return;
        Site s;
        s.path = p;
        s.span = SpanKind::start_tag;
        s.target = Target::attribute;
        s.target_name = "height";
        s.mutate = [p, base = len->value, o](HtmlDocument& doc, Rng& rng) {
            double f = pick_value<double>(rng, {0.3, 0.5, 2.0}, o);
            long next = std::max(1L, std::lround(base * f));
            if (static_cast<double>(next) == base)
                return false;
            Node* e = doc.at_mut(p);
            e->set_attribute("height", std::to_string(next));
            auto decls = e->style();
            if (auto sh = css::find(decls, "height")) {
                auto sl = css::parse_length(*sh);
                if (sl && sl->unit == css::Unit::px) {
                    css::set(decls, "height", css::format_px(std::max(1.0, std::round(sl->value * f))));
                    e->set_style(css::canonicalize(decls));
                }
            }
            return true;
        };
        sites.push_back(std::move(s));
    });
    return sites;
}

void merge_adjacent_text(Node& parent)
{
    for (std::size_t i = 1; i < parent.children.size();) {
        if (parent.children[i].is_text() && parent.children[i - 1].is_text()) {
            parent.children[i - 1].text += parent.children[i].text;
            parent.children.erase(parent.children.begin() + static_cast<std::ptrdiff_t>(i));
        } else {
            ++i;
        }
    }
}

std::vector<Site> image_remove_sites(const HtmlDocument& d)
{
    std::vector<Site> sites;
    walk_body(d, [&](const Node& n, const NodePath& p) {
        if (!n.is_element("img"))
            return;
        Site s;
        s.path = p;
        s.span = SpanKind::node;
        s.target = Target::subtree;
        s.target_name = "img";
        s.mutate = [p](HtmlDocument& doc, Rng&) {
            NodePath pp(p.begin(), p.end() - 1);
            Node* parent = pp.empty() ? &doc.root : doc.at_mut(pp);
            parent->children.erase(parent->children.begin() + static_cast<std::ptrdiff_t>(p.back()));
            merge_adjacent_text(*parent);
            return true;
        };
        sites.push_back(std::move(s));
    });
    return sites;
}

// --- text ------------------------------------------------------------------

std::vector<Site> font_sites(const HtmlDocument& d, bool size, const RuleOptions& o)
{
    std::vector<Site> sites;
    StyleIndex styles(d);
    walk_body(d, [&](const Node& n, const NodePath& p) {
        const auto* styled = styles.find(p);
        if (!has_direct_text(n) || !styled)
            return;
        Site s;
        s.path = p;
        s.span = SpanKind::start_tag;
        s.target = Target::style_property;
        s.target_name = size ? "font-size" : "font-weight";
        double fs = styled->style.font_size;
        bool bold = styled->style.bold;
        s.mutate = [p, size, fs = fs, bold = bold, o](HtmlDocument& doc, Rng& rng) {
            Node* e = doc.at_mut(p);
            auto decls = e->style();
            if (size) {
                double f = pick_value<double>(rng, {0.6, 1.8}, o);
                css::set(decls, "font-size", css::format_px(fs * f));
            } else {
                css::set(decls, "font-weight", bold ? "normal" : "bold");
            }
            e->set_style(css::canonicalize(decls));
            return true;
        };
        sites.push_back(std::move(s));
    });
    return sites;
}

std::size_t utf8_length(std::string_view s)
{
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

// Byte offset of the n-th code point.
std::size_t utf8_offset(std::string_view s, std::size_t n)
{
    std::size_t seen = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) {
            if (seen == n)
                return i;
            ++seen;
        }
    }
    return s.size();
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

} // namespace
} // namespace detail

std::string truncate_text(std::string_view text)
{
    using detail::is_space;
    using detail::utf8_length;
    using detail::utf8_offset;
    std::size_t lead = 0;
    while (lead < text.size() && is_space(text[lead]))
        ++lead;
    std::size_t tail = text.size();
    while (tail > lead && is_space(text[tail - 1]))
        --tail;
    auto core = text.substr(lead, tail - lead);
    std::size_t keep = (utf8_length(core) * 2 + 4) / 5; // ceil(0.4 n)
    auto cut = core.substr(0, utf8_offset(core, keep));
    while (!cut.empty() && is_space(cut.back()))
        cut.remove_suffix(1);
    return std::string(text.substr(0, lead)) + std::string(cut) + std::string(text.substr(tail));
}

namespace detail {
namespace {

std::vector<Site> truncate_sites(const HtmlDocument& d)
{
    std::vector<Site> sites;
    walk_body(d, [&](const Node& n, const NodePath& p) {
        if (!n.is_text())
            return;
        NodePath pp(p.begin(), p.end() - 1);
        const Node* parent = d.at(pp);
        if (!parent || !parent->is_element() || doc::is_raw_text_element(parent->name) || parent->name == "textarea")
            return;
        auto core = css::trim(n.text);
        if (core.empty())
            return;
        auto cut = truncate_text(n.text);
        if (css::trim(cut).empty() || cut == n.text)
            return;
        Site s;
        s.path = p;
        s.span = SpanKind::node;
        s.target = Target::text;
        s.target_name = parent->name;
        s.mutate = [p, cut](HtmlDocument& doc, Rng&) {
            doc.at_mut(p)->text = cut;
            return true;
        };
        sites.push_back(std::move(s));
    });
    return sites;
}

} // namespace

std::vector<Site> find_sites(const HtmlDocument& d, std::string_view id, const RuleOptions& o)
{
    if (id == "color.hue_rotate")
        return color_sites(d, ColorOp::hue, o);
    if (id == "color.lightness")
        return color_sites(d, ColorOp::lightness, o);
    if (id == "layout.flex_direction")
        return flex_direction_sites(d);
    if (id == "layout.gap_scale")
        return gap_sites(d, o);
    if (id == "layout.swap_siblings")
        return swap_sites(d);
    if (id == "alignment.text_align")
        return text_align_sites(d);
    if (id == "alignment.spacing")
        return spacing_sites(d, o);
    if (id == "component.comment_out")
        return comment_out_sites(d);
    if (id == "component.button_todo")
        return button_sites(d);
    if (id == "image.height_scale")
        return image_height_sites(d, o);
    if (id == "image.remove")
        return image_remove_sites(d);
    if (id == "text.font_size")
        return font_sites(d, true, o);
    if (id == "text.font_weight")
        return font_sites(d, false, o);
    if (id == "text.truncate")
        return truncate_sites(d);
    throw std::invalid_argument("unknown rule: " + std::string(id));
}

} // namespace detail
} // namespace refinekit::perturb
