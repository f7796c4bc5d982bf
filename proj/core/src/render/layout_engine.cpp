#include "refinekit/render/raster_provider.hpp"

#include "style.hpp"

#include "refinekit/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <regex>

namespace refinekit::render {

namespace {

using detail::Dim;
using detail::Display;
using detail::Fragment;
using detail::StyledNode;
using ComputedStyle = detail::ComputedStyle;

enum Side { top = 0, right = 1, bottom = 2, left = 3 };

// --- text metrics ------------------------------------------------------------

std::size_t code_points(std::string_view s)
{
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

double advance(const ComputedStyle& s) { return s.font_size * (s.bold ? 0.6 : 0.55); }

double text_width(std::string_view t, const ComputedStyle& s) { return static_cast<double>(code_points(t)) * advance(s); }

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

std::string collapse_whitespace(std::string_view s)
{
    std::string out;
    bool space = false;
    for (char c : s) {
        if (is_space(c)) {
            space = true;
            continue;
        }
        if (space && !out.empty())
            out.push_back(' ');
        space = false;
        out.push_back(c);
    }
    return out;
}

std::vector<std::string> split_words(std::string_view s)
{
    std::vector<std::string> words;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i]))
            ++i;
        std::size_t b = i;
        while (i < s.size() && !is_space(s[i]))
            ++i;
        if (i > b)
            words.emplace_back(s.substr(b, i - b));
    }
    return words;
}

// --- box helpers -------------------------------------------------------------

double pad(const StyledNode& n, int side, double cbw) { return n.style.padding[side].resolve(cbw); }
double margin(const StyledNode& n, int side, double cbw) { return n.style.margin[side].resolve(cbw, 0); }
double hframe(const StyledNode& n, double cbw) { return pad(n, left, cbw) + pad(n, right, cbw) + n.style.border[left] + n.style.border[right]; }
double vframe(const StyledNode& n, double cbw) { return pad(n, top, cbw) + pad(n, bottom, cbw) + n.style.border[top] + n.style.border[bottom]; }

bool is_replaced(const StyledNode& n)
{
    if (!n.node || n.is_text)
        return false;
    const auto& t = n.node->name;
    return t == "img" || t == "input" || t == "select" || t == "textarea" || t == "svg" || t == "canvas" ||
           t == "video" || t == "iframe";
}

bool is_flex(const StyledNode& n) { return n.style.display == Display::flex || n.style.display == Display::inline_flex; }

bool is_row(const StyledNode& n) { return n.style.flex_direction.rfind("row", 0) == 0; }

bool is_reverse(const StyledNode& n) { return n.style.flex_direction.find("reverse") != std::string::npos; }

std::optional<double> attr_number(const StyledNode& n, std::string_view name)
{
    const auto* v = n.node->attribute(name);
    if (!v)
        return std::nullopt;
    auto len = css::parse_length(*v);
    if (!len || (len->unit != css::Unit::px && len->unit != css::Unit::none) || len->value < 0)
        return std::nullopt;
    return len->value;
}

void translate(StyledNode& n, double dx, double dy)
{
    n.x += dx;
    n.y += dy;
    for (auto& f : n.fragments) {
        f.x += dx;
        f.y += dy;
    }
    for (auto& c : n.children)
        translate(*c, dx, dy);
}

ComputedStyle anonymous_style(const ComputedStyle& parent)
{
    ComputedStyle s;
    s.font_size = parent.font_size;
    s.bold = parent.bold;
    s.color = parent.color;
    s.text_align = parent.text_align;
    s.line_height = parent.line_height;
    s.preserve_newlines = parent.preserve_newlines;
    s.preserve_spaces = parent.preserve_spaces;
    s.nowrap = parent.nowrap;
    s.hidden = parent.hidden;
    s.list_style = parent.list_style;
    s.border_spacing = parent.border_spacing;
    s.display = Display::block;
    return s;
}

bool is_whitespace_text(const StyledNode& n)
{
    return n.is_text && std::all_of(n.text.begin(), n.text.end(), is_space);
}

// Flex and grid containers take element children as items: text runs are
// wrapped in anonymous blocks and inline children are blockified.
void fix_anonymous(StyledNode& n)
{
    if (is_flex(n) || n.style.display == Display::grid) {
        std::vector<std::unique_ptr<StyledNode>> kids;
        for (auto& c : n.children) {
            if (c->is_text) {
                if (is_whitespace_text(*c))
                    continue;
                auto anon = std::make_unique<StyledNode>();
                anon->style = anonymous_style(n.style);
                anon->path = c->path;
                anon->children.push_back(std::move(c));
                kids.push_back(std::move(anon));
                continue;
            }
            if (c->style.display == Display::inline_ || c->style.display == Display::inline_block)
                c->style.display = Display::block;
            else if (c->style.display == Display::inline_flex)
                c->style.display = Display::flex;
            kids.push_back(std::move(c));
        }
        n.children = std::move(kids);
    }
    for (auto& c : n.children)
        if (!c->is_text)
            fix_anonymous(*c);
}

// --- inline items ------------------------------------------------------------

struct Item {
    enum Kind { word, space, atomic, open, close, newline } kind = word;
    StyledNode* owner = nullptr; // text node, atomic box, or inline element
    std::string text;
    double width = 0;
    bool breakable = true;                 // spaces only
    std::vector<StyledNode*> inline_stack; // enclosing inline elements
};

struct Line {
    struct Placed {
        std::size_t item;
        double x;
    };
    std::vector<Placed> placed;
    double width = 0;
    double height = 0;
    bool has_content = false;
};

class Engine {
public:
    explicit Engine(const Viewport& vp) : vp_(vp) {}

    void layout_root(StyledNode& html)
    {
        double ml = margin(html, left, vp_.width);
        double mr = margin(html, right, vp_.width);
        layout_box(html, ml, margin(html, top, vp_.width), vp_.width - ml - mr, std::nullopt);
    }

private:
    const Viewport& vp_;
    std::map<const StyledNode*, std::pair<double, double>> intrinsic_cache_;

    // --- intrinsic widths (border box) ----------------------------------------

    std::pair<double, double> replaced_content_size(const StyledNode& n, double cbw)
    {
        const auto& t = n.node->name;
        double lh = n.style.line_height;
        double dw = 300, dh = 150;
        if (t == "img") {
            dw = attr_number(n, "width").value_or(100);
            dh = attr_number(n, "height").value_or(100);
        } else if (t == "input" || t == "select") {
            dw = 150;
            dh = lh;
        } else if (t == "textarea") {
            dw = 180;
            dh = 36;
        } else {
            dw = attr_number(n, "width").value_or(300);
            dh = attr_number(n, "height").value_or(150);
        }
        double frame_w = n.style.border_box ? hframe(n, cbw) : 0;
        double frame_h = n.style.border_box ? vframe(n, cbw) : 0;
        std::optional<double> w, h;
        if (!n.style.width.is_auto())
            w = std::max(0.0, n.style.width.resolve(cbw) - frame_w);
        if (!n.style.height.is_auto() && n.style.height.kind != Dim::percent)
            h = std::max(0.0, n.style.height.resolve(0) - frame_h);
        if (w && !h)
            h = dw > 0 ? *w * dh / dw : dh;
        if (h && !w)
            w = dh > 0 ? *h * dw / dh : dw;
        double cw = w.value_or(dw);
        double ch = h.value_or(dh);
        if (!n.style.max_width.is_auto())
            cw = std::min(cw, n.style.max_width.resolve(cbw) - frame_w);
        return {std::max(0.0, cw), std::max(0.0, ch)};
    }

    std::pair<double, double> intrinsic(const StyledNode& n, double cbw)
    {
        if (auto it = intrinsic_cache_.find(&n); it != intrinsic_cache_.end())
            return it->second;
        auto r = compute_intrinsic(n, cbw);
        intrinsic_cache_[&n] = r;
        return r;
    }

    // Min- and max-content widths of an inline run (text plus inline
    // descendants), accumulating into the current line width.
    void inline_intrinsic(const StyledNode& n, double cbw, double& line, double& min_w, double& max_w)
    {
        if (n.is_text) {
            if (n.style.preserve_newlines) {
                std::size_t b = 0;
                for (std::size_t i = 0; i <= n.text.size(); ++i) {
                    if (i == n.text.size() || n.text[i] == '\n') {
                        double w = text_width(n.style.preserve_spaces ? n.text.substr(b, i - b) : collapse_whitespace(n.text.substr(b, i - b)), n.style);
                        line += w;
                        min_w = std::max(min_w, n.style.nowrap ? line : w);
                        if (i < n.text.size()) {
                            max_w = std::max(max_w, line);
                            line = 0;
                        }
                        b = i + 1;
                    }
                }
                return;
            }
            auto words = split_words(n.text);
            double adv = advance(n.style);
            if (!n.text.empty() && is_space(n.text.front()) && line > 0)
                line += adv;
            for (std::size_t i = 0; i < words.size(); ++i) {
                double w = text_width(words[i], n.style);
                if (i)
                    line += adv;
                line += w;
                min_w = std::max(min_w, n.style.nowrap ? line : w);
            }
            if (!words.empty() && is_space(n.text.back()))
                line += adv;
            return;
        }
        if (n.node && n.node->is_element("br")) {
            max_w = std::max(max_w, line);
            line = 0;
            return;
        }
        if (n.style.display == Display::inline_) {
            double extra_l = margin(n, left, cbw) + pad(n, left, cbw) + n.style.border[left];
            double extra_r = margin(n, right, cbw) + pad(n, right, cbw) + n.style.border[right];
            line += extra_l;
            for (const auto& c : n.children)
                inline_intrinsic(*c, cbw, line, min_w, max_w);
            line += extra_r;
            return;
        }
        auto [cmin, cmax] = intrinsic(n, cbw);
        double m = margin(n, left, cbw) + margin(n, right, cbw);
        line += cmax + m;
        min_w = std::max(min_w, cmin + m);
    }

    std::pair<double, double> compute_intrinsic(const StyledNode& n, double cbw)
    {
        double frame = hframe(n, cbw);
        if (is_replaced(n)) {
            double w = replaced_content_size(n, cbw).first + frame;
            return {w, w};
        }
        if (!n.style.width.is_auto() && n.style.width.kind == Dim::px) {
            double w = n.style.width.value + (n.style.border_box ? 0 : frame);
            return {w, w};
        }
        double min_w = 0, max_w = 0;
        auto outer = [&](const StyledNode& c) {
            auto [a, b] = intrinsic(c, cbw);
            double m = margin(c, left, cbw) + margin(c, right, cbw);
            return std::pair{a + m, b + m};
        };
        if (is_flex(n) && is_row(n)) {
            double gap = n.style.column_gap;
            for (std::size_t i = 0; i < n.children.size(); ++i) {
                auto [a, b] = outer(*n.children[i]);
                max_w += b + (i ? gap : 0);
                min_w = n.style.flex_wrap ? std::max(min_w, a) : min_w + a + (i ? gap : 0);
            }
        } else if (n.style.display == Display::grid) {
            auto cols = std::max<std::size_t>(1, track_count(n));
            double cell_max = 0, cell_min = 0;
            for (const auto& c : n.children) {
                auto [a, b] = outer(*c);
                cell_max = std::max(cell_max, b);
                cell_min = std::max(cell_min, a);
            }
            double gaps = n.style.column_gap * static_cast<double>(cols - 1);
            max_w = cell_max * static_cast<double>(cols) + gaps;
            min_w = cell_min * static_cast<double>(cols) + gaps;
        } else if (n.style.display == Display::table) {
            auto [mins, maxs] = table_columns(n, cbw);
            double s = n.style.border_spacing * static_cast<double>(mins.size() + 1);
            for (double v : mins)
                min_w += v;
            for (double v : maxs)
                max_w += v;
            min_w += s;
            max_w += s;
        } else {
            double line = 0;
            for (const auto& c : n.children) {
                if (c->is_text || detail::is_inline_level(c->style.display)) {
                    inline_intrinsic(*c, cbw, line, min_w, max_w);
                } else {
                    max_w = std::max(max_w, line);
                    line = 0;
                    auto [a, b] = outer(*c);
                    min_w = std::max(min_w, a);
                    max_w = std::max(max_w, b);
                }
            }
            max_w = std::max(max_w, line);
        }
        max_w = std::max(max_w, min_w);
        if (!n.style.min_width.is_auto() && n.style.min_width.kind == Dim::px) {
            min_w = std::max(min_w, n.style.min_width.value);
            max_w = std::max(max_w, n.style.min_width.value);
        }
        if (!n.style.max_width.is_auto() && n.style.max_width.kind == Dim::px)
            max_w = std::min(max_w, std::max(min_w, n.style.max_width.value));
        return {min_w + frame, max_w + frame};
    }

    // --- block-level width -------------------------------------------------

    struct UsedWidth {
        double width, ml, mr;
    };

    double clamp_width(const StyledNode& n, double w, double cbw)
    {
        double frame = n.style.border_box ? 0 : hframe(n, cbw);
        if (!n.style.max_width.is_auto())
            w = std::min(w, n.style.max_width.resolve(cbw) + frame);
        if (!n.style.min_width.is_auto())
            w = std::max(w, n.style.min_width.resolve(cbw) + frame);
        return std::max(w, hframe(n, cbw));
    }

    UsedWidth block_width(const StyledNode& n, double cw)
    {
        double ml = margin(n, left, cw), mr = margin(n, right, cw);
        bool auto_l = n.style.margin[left].is_auto(), auto_r = n.style.margin[right].is_auto();
        double w;
        if (is_replaced(n)) {
            w = replaced_content_size(n, cw).first + hframe(n, cw);
        } else if (!n.style.width.is_auto()) {
            w = n.style.width.resolve(cw) + (n.style.border_box ? 0 : hframe(n, cw));
        } else if (n.style.display == Display::table) {
            auto [a, b] = intrinsic(n, cw);
            w = std::max(a, std::min(b, cw - ml - mr));
        } else {
            w = cw - ml - mr;
        }
        w = clamp_width(n, w, cw);
        double free = cw - w - ml - mr;
        if (auto_l && auto_r && free > 0) {
            ml += free / 2;
            mr += free / 2;
        } else if (auto_l && free > 0) {
            ml += free;
        }
        return {w, ml, mr};
    }

    double shrink_to_fit(const StyledNode& n, double avail)
    {
        if (is_replaced(n))
            return replaced_content_size(n, avail).first + hframe(n, avail);
        if (!n.style.width.is_auto())
            return clamp_width(n, n.style.width.resolve(avail) + (n.style.border_box ? 0 : hframe(n, avail)), avail);
        auto [a, b] = intrinsic(n, avail);
        return clamp_width(n, std::max(a, std::min(b, avail)), avail);
    }

    // --- generic box ---------------------------------------------------------

    std::optional<double> specified_content_height(const StyledNode& n, double cbw)
    {
        if (n.style.height.is_auto() || n.style.height.kind == Dim::percent)
            return std::nullopt;
        double h = n.style.height.value;
        if (n.style.border_box)
            h -= vframe(n, cbw);
        return std::max(0.0, h);
    }

    void layout_box(StyledNode& n, double x, double y, double w, std::optional<double> forced_h, double cbw = -1)
    {
        if (cbw < 0)
            cbw = w;
        n.x = x;
        n.y = y;
        n.w = w;
        double cx = x + n.style.border[left] + pad(n, left, cbw);
        double cy = y + n.style.border[top] + pad(n, top, cbw);
        double cw = std::max(0.0, w - hframe(n, cbw));
        auto definite = specified_content_height(n, cbw);
        if (forced_h)
            definite = std::max(0.0, *forced_h - vframe(n, cbw));

        double content_h;
        if (is_replaced(n))
            content_h = replaced_content_size(n, cbw).second;
        else if (is_flex(n))
            content_h = layout_flex(n, cx, cy, cw, definite);
        else if (n.style.display == Display::grid)
            content_h = layout_grid(n, cx, cy, cw);
        else if (n.style.display == Display::table)
            content_h = layout_table(n, cx, cy, cw);
        else
            content_h = layout_flow(n, cx, cy, cw);

        double h = (definite ? *definite : content_h);
        if (!n.style.min_height.is_auto() && n.style.min_height.kind == Dim::px)
            h = std::max(h, n.style.min_height.value - (n.style.border_box ? vframe(n, cbw) : 0));
        if (!n.style.max_height.is_auto() && n.style.max_height.kind == Dim::px && !forced_h)
            h = std::min(h, n.style.max_height.value - (n.style.border_box ? vframe(n, cbw) : 0));
        n.h = std::max(0.0, h) + vframe(n, cbw);
        if (forced_h)
            n.h = std::max(n.h, *forced_h);
    }

    // --- flow layout ---------------------------------------------------------

    double layout_flow(StyledNode& n, double cx, double cy, double cw)
    {
        double cursor = cy;
        double prev_mb = 0;
        bool any_block = false;
        std::vector<StyledNode*> group;
        auto flush = [&]() {
            if (group.empty())
                return;
            double h = layout_inline(n, group, cx, cursor + (any_block ? prev_mb : 0), cw);
            if (h > 0) {
                cursor += (any_block ? prev_mb : 0) + h;
                prev_mb = 0;
                any_block = false;
            }
            group.clear();
        };
        for (auto& c : n.children) {
            if (c->is_text || detail::is_inline_level(c->style.display)) {
                group.push_back(c.get());
                continue;
            }
            flush();
            auto used = block_width(*c, cw);
            double mt = margin(*c, top, cw);
            double y = cursor + (any_block ? std::max(prev_mb, mt) : mt);
            layout_box(*c, cx + used.ml, y, used.width, std::nullopt, cw);
            cursor = y + c->h;
            prev_mb = margin(*c, bottom, cw);
            any_block = true;
        }
        flush();
        return cursor + (any_block ? prev_mb : 0) - cy;
    }

    void collect_items(StyledNode& n, std::vector<Item>& items, std::vector<StyledNode*>& stack, double cbw)
    {
        if (n.is_text) {
            n.fragments.clear();
            const auto& st = n.style;
            if (st.preserve_newlines) {
                std::size_t b = 0;
                for (std::size_t i = 0; i <= n.text.size(); ++i) {
                    if (i == n.text.size() || n.text[i] == '\n') {
                        auto seg = n.text.substr(b, i - b);
                        if (st.preserve_spaces && !st.nowrap) {
                            // pre-wrap: words keep their spacing but may wrap
                            std::size_t j = 0;
                            while (j < seg.size()) {
                                std::size_t k = j;
                                while (k < seg.size() && seg[k] != ' ')
                                    ++k;
                                while (k < seg.size() && seg[k] == ' ')
                                    ++k;
                                auto piece = seg.substr(j, k - j);
                                items.push_back({Item::word, &n, piece, text_width(piece, st), true, stack});
                                j = k;
                            }
                        } else if (st.preserve_spaces) {
                            if (!seg.empty())
                                items.push_back({Item::word, &n, seg, text_width(seg, st), true, stack});
                        } else {
                            auto words = split_words(seg);
                            for (std::size_t w = 0; w < words.size(); ++w) {
                                if (w)
                                    items.push_back({Item::space, &n, " ", advance(st), !st.nowrap, stack});
                                items.push_back({Item::word, &n, words[w], text_width(words[w], st), true, stack});
                            }
                        }
                        if (i < n.text.size())
                            items.push_back({Item::newline, &n, "", 0, true, stack});
                        b = i + 1;
                    }
                }
                return;
            }
            std::size_t i = 0;
            while (i < n.text.size()) {
                if (is_space(n.text[i])) {
                    while (i < n.text.size() && is_space(n.text[i]))
                        ++i;
                    items.push_back({Item::space, &n, " ", advance(st), !st.nowrap, stack});
                    continue;
                }
                std::size_t b = i;
                while (i < n.text.size() && !is_space(n.text[i]))
                    ++i;
                auto w = n.text.substr(b, i - b);
                items.push_back({Item::word, &n, w, text_width(w, st), true, stack});
            }
            return;
        }
        if (n.node && n.node->is_element("br")) {
            items.push_back({Item::newline, &n, "", 0, true, stack});
            return;
        }
        if (n.style.display == Display::inline_ && !is_replaced(n)) {
            n.fragments.clear();
            stack.push_back(&n);
            double lw = margin(n, left, cbw) + pad(n, left, cbw) + n.style.border[left];
            double rw = margin(n, right, cbw) + pad(n, right, cbw) + n.style.border[right];
            items.push_back({Item::open, &n, "", lw, true, stack});
            for (auto& c : n.children)
                collect_items(*c, items, stack, cbw);
            items.push_back({Item::close, &n, "", rw, true, stack});
            stack.pop_back();
            return;
        }
        double w = shrink_to_fit(n, cbw - margin(n, left, cbw) - margin(n, right, cbw));
        layout_box(n, 0, 0, w, std::nullopt, cbw);
        items.push_back({Item::atomic, &n, "", w + margin(n, left, cbw) + margin(n, right, cbw), true, stack});
    }

    double item_height(const Item& it, double cbw)
    {
        switch (it.kind) {
        case Item::word:
        case Item::space: return it.owner->style.line_height;
        case Item::atomic: return it.owner->h + margin(*it.owner, top, cbw) + margin(*it.owner, bottom, cbw);
        default: return 0;
        }
    }

    // Lays out a run of inline-level siblings into line boxes starting at
    // (cx, cy); returns the total height (0 when the run has no content).
    double layout_inline(StyledNode& container, const std::vector<StyledNode*>& run, double cx, double cy, double cw)
    {
        std::vector<Item> items;
        std::vector<StyledNode*> stack;
        for (auto* n : run)
            collect_items(*n, items, stack, cw);

        std::vector<Line> lines(1);
        constexpr std::size_t none = static_cast<std::size_t>(-1);
        std::size_t pending_space = none;
        bool can_break = false;
        auto new_line = [&]() {
            lines.emplace_back();
            pending_space = none;
            can_break = false;
        };
        for (std::size_t i = 0; i < items.size(); ++i) {
            auto& it = items[i];
            auto& line = lines.back();
            switch (it.kind) {
            case Item::newline:
                line.has_content = true;
                new_line();
                break;
            case Item::space:
                if (line.placed.empty() || !line.has_content || pending_space != none)
                    break;
                pending_space = i;
                can_break = can_break || it.breakable;
                if (!it.breakable)
                    can_break = false;
                break;
            case Item::open:
            case Item::close:
                line.placed.push_back({i, line.width});
                line.width += it.width;
                break;
            case Item::word:
            case Item::atomic: {
                double space_w = pending_space != none ? items[pending_space].width : 0;
                if (line.has_content && can_break && pending_space != none && items[pending_space].breakable &&
                    line.width + space_w + it.width > cw + 1e-9) {
                    new_line();
                    space_w = 0;
                }
                auto& cur = lines.back();
                if (pending_space != none) {
                    cur.placed.push_back({pending_space, cur.width});
                    cur.width += space_w;
                    pending_space = none;
                }
                cur.placed.push_back({i, cur.width});
                cur.width += it.width;
                cur.has_content = true;
                can_break = false;
                break;
            }
            }
        }

        const double strut = container.style.line_height;
        double y = cy;
        std::map<StyledNode*, std::map<std::size_t, Fragment>> inline_rects;
        for (std::size_t li = 0; li < lines.size(); ++li) {
            auto& line = lines[li];
            if (!line.has_content)
                continue;
            double lh = strut;
            for (const auto& p : line.placed)
                lh = std::max(lh, item_height(items[p.item], cw));
            double shift = 0;
            double free = cw - line.width;
            if (free > 0) {
                if (container.style.text_align == "center")
                    shift = free / 2;
                else if (container.style.text_align == "right")
                    shift = free;
            }
            for (const auto& p : line.placed) {
                auto& it = items[p.item];
                double ix = cx + shift + p.x;
                double ih = item_height(it, cw);
                double iy = y + lh - ih;
                if (it.kind == Item::word || it.kind == Item::space) {
                    auto& frags = it.owner->fragments;
                    // merge consecutive pieces of one text node on one line
                    if (!frags.empty() && std::abs(frags.back().y - iy) < 1e-9 && std::abs(frags.back().x + frags.back().w - ix) < 1e-6)
                        frags.back().w += it.width, frags.back().text += it.text;
                    else
                        frags.push_back({ix, iy, it.width, ih, it.text});
                } else if (it.kind == Item::atomic) {
                    auto* box = it.owner;
                    translate(*box, ix + margin(*box, left, cw) - box->x, iy + margin(*box, top, cw) - box->y);
                }
                for (auto* anc : it.inline_stack) {
                    double ah = anc->style.line_height;
                    Fragment r{ix, y + lh - ah, it.width, ah, ""};
                    auto [pos, inserted] = inline_rects[anc].try_emplace(li, r);
                    if (!inserted) {
                        double x0 = std::min(pos->second.x, r.x);
                        double x1 = std::max(pos->second.x + pos->second.w, r.x + r.w);
                        pos->second.x = x0;
                        pos->second.w = x1 - x0;
                    }
                }
            }
            y += lh;
        }
        for (auto& [node, rects] : inline_rects) {
            node->fragments.clear();
            double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
            for (auto& [_, r] : rects) {
                node->fragments.push_back(r);
                x0 = std::min(x0, r.x);
                y0 = std::min(y0, r.y);
                x1 = std::max(x1, r.x + r.w);
                y1 = std::max(y1, r.y + r.h);
            }
            node->x = x0;
            node->y = y0;
            node->w = x1 - x0;
            node->h = y1 - y0;
        }
        // Trailing spaces at line ends stay out of the text boxes.
        for (auto* n : run)
            trim_fragments(*n);
        return y - cy;
    }

    void trim_fragments(StyledNode& n)
    {
        if (n.is_text) {
            for (auto& f : n.fragments) {
                while (!f.text.empty() && f.text.back() == ' ') {
                    f.text.pop_back();
                    f.w -= advance(n.style);
                }
                std::size_t lead = 0;
                while (lead < f.text.size() && f.text[lead] == ' ')
                    ++lead;
                f.x += static_cast<double>(lead) * advance(n.style);
                f.w -= static_cast<double>(lead) * advance(n.style);
                f.text.erase(0, lead);
            }
            n.fragments.erase(std::remove_if(n.fragments.begin(), n.fragments.end(), [](const Fragment& f) { return f.text.empty(); }),
                              n.fragments.end());
            return;
        }
        if (n.style.display == Display::inline_)
            for (auto& c : n.children)
                trim_fragments(*c);
    }

    // --- flex layout ---------------------------------------------------------

    struct FlexItem {
        StyledNode* node;
        double size = 0; // main size, border box
        double min_size = 0;
        double max_size = 1e300;
        double basis = 0;
        double m_before = 0, m_after = 0, m_cross_before = 0, m_cross_after = 0;
        bool auto_before = false, auto_after = false;
        double cross = 0; // border-box cross size after layout
    };

    double layout_flex(StyledNode& n, double cx, double cy, double cw, std::optional<double> definite_h)
    {
        if (n.children.empty())
            return 0;
        bool row = is_row(n);
        std::vector<FlexItem> items;
        for (auto& c : n.children) {
            FlexItem it;
            it.node = c.get();
            const auto& st = c->style;
            if (row) {
                it.m_before = margin(*c, left, cw);
                it.m_after = margin(*c, right, cw);
                it.auto_before = st.margin[left].is_auto();
                it.auto_after = st.margin[right].is_auto();
                it.m_cross_before = margin(*c, top, cw);
                it.m_cross_after = margin(*c, bottom, cw);
            } else {
                it.m_before = margin(*c, top, cw);
                it.m_after = margin(*c, bottom, cw);
                it.auto_before = st.margin[top].is_auto();
                it.auto_after = st.margin[bottom].is_auto();
                it.m_cross_before = margin(*c, left, cw);
                it.m_cross_after = margin(*c, right, cw);
            }
            items.push_back(it);
        }
        if (is_reverse(n))
            std::reverse(items.begin(), items.end());
        return row ? flex_row(n, items, cx, cy, cw, definite_h) : flex_column(n, items, cx, cy, cw, definite_h);
    }

    std::string item_align(const StyledNode& container, const StyledNode& item)
    {
        const auto& a = item.style.align_self != "auto" ? item.style.align_self : container.style.align_items;
        if (a == "start" || a == "self-start" || a == "baseline" || a == "first baseline")
            return "flex-start";
        if (a == "end" || a == "self-end")
            return "flex-end";
        if (a == "normal")
            return "stretch";
        return a;
    }

    // Offset of the first item and the extra spacing between items.
    std::pair<double, double> justify(const std::string& mode, double free, std::size_t count)
    {
        if (free <= 0 || count == 0)
            return {0, 0};
        double k = static_cast<double>(count);
        if (mode == "flex-end" || mode == "end" || mode == "right")
            return {free, 0};
        if (mode == "center")
            return {free / 2, 0};
        if (mode == "space-between")
            return {0, count > 1 ? free / (k - 1) : 0};
        if (mode == "space-around")
            return {free / k / 2, free / k};
        if (mode == "space-evenly")
            return {free / (k + 1), free / (k + 1)};
        return {0, 0};
    }

    void resolve_main_sizes(std::vector<FlexItem*>& line, double avail, double gap)
    {
        double used = 0;
        for (auto* it : line)
            used += it->size + it->m_before + it->m_after;
        used += gap * static_cast<double>(line.size() - 1);
        double free = avail - used;
        if (free > 0) {
            double grow = 0;
            for (auto* it : line)
                grow += it->node->style.flex_grow;
            if (grow > 0)
                for (auto* it : line)
                    it->size = std::min(it->max_size, it->size + free * it->node->style.flex_grow / grow);
        } else if (free < 0) {
            double weight = 0;
            for (auto* it : line)
                weight += it->node->style.flex_shrink * it->basis;
            if (weight > 0)
                for (auto* it : line)
                    it->size = std::max(it->min_size, it->size + free * it->node->style.flex_shrink * it->basis / weight);
        }
    }

    double flex_row(StyledNode& n, std::vector<FlexItem>& items, double cx, double cy, double cw, std::optional<double> definite_h)
    {
        const double gap = n.style.column_gap;
        for (auto& it : items) {
            auto& c = *it.node;
            auto [mn, mx] = intrinsic(c, cw);
            double frame = c.style.border_box ? 0 : hframe(c, cw);
            if (!c.style.flex_basis.is_auto())
                it.basis = c.style.flex_basis.resolve(cw) + frame;
            else if (!c.style.width.is_auto() || is_replaced(c))
                it.basis = is_replaced(c) ? mx : c.style.width.resolve(cw) + frame;
            else
                it.basis = mx;
            it.min_size = c.style.width.is_auto() || is_replaced(c) ? mn : std::min(mn, c.style.width.resolve(cw) + frame);
            if (!c.style.min_width.is_auto())
                it.min_size = std::max(it.min_size, c.style.min_width.resolve(cw) + frame);
            if (!c.style.max_width.is_auto())
                it.max_size = c.style.max_width.resolve(cw) + frame;
            it.min_size = std::min(it.min_size, it.max_size);
            it.size = std::clamp(it.basis, it.min_size, it.max_size);
        }
        std::vector<std::vector<FlexItem*>> lines(1);
        double used = 0;
        for (auto& it : items) {
            double outer = it.size + it.m_before + it.m_after;
            if (n.style.flex_wrap && !lines.back().empty() && used + gap + outer > cw + 1e-9) {
                lines.emplace_back();
                used = 0;
            }
            used += (lines.back().empty() ? 0 : gap) + outer;
            lines.back().push_back(&it);
        }
        double y = cy;
        const double row_gap = n.style.row_gap;
        for (std::size_t li = 0; li < lines.size(); ++li) {
            auto& line = lines[li];
            resolve_main_sizes(line, cw, gap);
            double used_w = gap * static_cast<double>(line.size() - 1);
            int autos = 0;
            for (auto* it : line) {
                used_w += it->size + it->m_before + it->m_after;
                autos += it->auto_before + it->auto_after;
            }
            double free = cw - used_w;
            double auto_share = autos > 0 && free > 0 ? free / autos : 0;
            auto [offset, between] = autos > 0 ? std::pair{0.0, 0.0} : justify(n.style.justify_content, free, line.size());
            double cross = 0;
            for (auto* it : line) {
                layout_box(*it->node, 0, 0, it->size, std::nullopt, cw);
                cross = std::max(cross, it->node->h + it->m_cross_before + it->m_cross_after);
            }
            if (lines.size() == 1 && definite_h)
                cross = std::max(cross, *definite_h);
            double x = cx + offset;
            for (auto* it : line) {
                auto& c = *it->node;
                x += it->m_before + (it->auto_before ? auto_share : 0);
                auto align = item_align(n, c);
                double item_cross = c.h;
                if (align == "stretch" && c.style.height.is_auto()) {
                    item_cross = cross - it->m_cross_before - it->m_cross_after;
                    layout_box(c, 0, 0, it->size, item_cross, cw);
                }
                double dy = it->m_cross_before;
                if (align == "center")
                    dy = (cross - item_cross - it->m_cross_before - it->m_cross_after) / 2 + it->m_cross_before;
                else if (align == "flex-end")
                    dy = cross - item_cross - it->m_cross_after;
                translate(c, x - c.x, y + dy - c.y);
                x += it->size + it->m_after + (it->auto_after ? auto_share : 0) + gap + between;
            }
            y += cross + (li + 1 < lines.size() ? row_gap : 0);
        }
        return y - cy;
    }

    double flex_column(StyledNode& n, std::vector<FlexItem>& items, double cx, double cy, double cw, std::optional<double> definite_h)
    {
        const double gap = n.style.row_gap;
        double total = 0;
        for (auto& it : items) {
            auto& c = *it.node;
            auto align = item_align(n, c);
            double avail = cw - it.m_cross_before - it.m_cross_after;
            double w = (align == "stretch" && c.style.width.is_auto() && !is_replaced(c)) ? clamp_width(c, avail, cw) : shrink_to_fit(c, avail);
            layout_box(c, 0, 0, w, std::nullopt, cw);
            it.size = c.h;
            it.basis = c.h;
            it.min_size = 0;
            if (!c.style.flex_basis.is_auto() && c.style.flex_basis.kind == Dim::px) {
                it.size = c.style.flex_basis.value + (c.style.border_box ? 0 : vframe(c, cw));
                it.basis = it.size;
            }
            total += it.size + it.m_before + it.m_after;
        }
        total += gap * static_cast<double>(items.size() - 1);
        double free = 0;
        if (definite_h) {
            std::vector<FlexItem*> line;
            for (auto& it : items)
                line.push_back(&it);
            resolve_main_sizes(line, *definite_h, gap);
            double used = gap * static_cast<double>(items.size() - 1);
            for (auto& it : items)
                used += it.size + it.m_before + it.m_after;
            free = *definite_h - used;
        }
        auto [offset, between] = justify(n.style.justify_content, free, items.size());
        double y = cy + offset;
        for (auto& it : items) {
            auto& c = *it.node;
            if (std::abs(it.size - c.h) > 1e-9)
                layout_box(c, 0, 0, c.w, it.size, cw);
            auto align = item_align(n, c);
            double dx = it.m_cross_before;
            if (align == "center")
                dx = (cw - c.w - it.m_cross_before - it.m_cross_after) / 2 + it.m_cross_before;
            else if (align == "flex-end")
                dx = cw - c.w - it.m_cross_after;
            y += it.m_before;
            translate(c, cx + dx - c.x, y - c.y);
            y += c.h + it.m_after + gap + between;
        }
        double content = items.empty() ? 0 : y - gap - between - cy;
        return definite_h ? *definite_h : content;
    }

    // --- grid layout ---------------------------------------------------------

    std::vector<detail::Track> parse_tracks(const StyledNode& n, double cw)
    {
        std::vector<detail::Track> tracks;
        const double gap = n.style.column_gap;
        std::function<void(std::string_view)> add = [&](std::string_view value) {
            for (const auto& tok : css::split_value(value)) {
                if (tok.rfind("repeat(", 0) == 0 && tok.back() == ')') {
                    auto inner = std::string_view(tok).substr(7, tok.size() - 8);
                    auto comma = inner.find(',');
                    if (comma == std::string_view::npos)
                        continue;
                    auto count = css::trim(inner.substr(0, comma));
                    auto body = css::trim(inner.substr(comma + 1));
                    if (count == "auto-fill" || count == "auto-fit") {
                        static const std::regex minpx(R"(minmax\(\s*([0-9.]+)px)");
                        std::cmatch m;
                        double min_px = 100;
                        if (std::regex_search(body.begin(), body.end(), m, minpx))
                            min_px = std::stod(m[1].str());
                        else if (auto len = css::parse_length(body); len && len->unit == css::Unit::px)
                            min_px = len->value;
                        int k = std::max(1, static_cast<int>(std::floor((cw + gap) / (min_px + gap))));
                        for (int i = 0; i < k; ++i)
                            tracks.push_back({0, 1, 0});
                        continue;
                    }
                    int k = std::max(1, std::min(64, std::atoi(std::string(count).c_str())));
                    for (int i = 0; i < k; ++i)
                        add(body);
                    continue;
                }
                std::string_view t = tok;
                if (t.rfind("minmax(", 0) == 0 && t.back() == ')') {
                    auto inner = t.substr(7, t.size() - 8);
                    auto comma = inner.find(',');
                    t = comma == std::string_view::npos ? inner : css::trim(inner.substr(comma + 1));
                }
                if (t.size() > 2 && t.substr(t.size() - 2) == "fr") {
                    tracks.push_back({0, std::atof(std::string(t.substr(0, t.size() - 2)).c_str()), 0});
                } else if (auto len = css::parse_length(t); len && len->unit == css::Unit::percent) {
                    tracks.push_back({0, 0, len->value});
                } else if (len && len->unit != css::Unit::none) {
                    double px = len->unit == css::Unit::em || len->unit == css::Unit::rem ? len->value * 16 : len->value;
                    tracks.push_back({px, 0, 0});
                } else {
                    tracks.push_back({0, 1, 0});
                }
            }
        };
        add(n.style.grid_columns);
        if (tracks.empty())
            tracks.push_back({0, 1, 0});
        return tracks;
    }

    std::size_t track_count(const StyledNode& n) { return parse_tracks(n, vp_.width).size(); }

    double layout_grid(StyledNode& n, double cx, double cy, double cw)
    {
        auto tracks = parse_tracks(n, cw);
        const double gap = n.style.column_gap;
        double fixed = 0, fr = 0;
        for (const auto& t : tracks) {
            fixed += t.px + t.percent * cw / 100.0;
            fr += t.fr;
        }
        double free = std::max(0.0, cw - fixed - gap * static_cast<double>(tracks.size() - 1));
        std::vector<double> widths, xs;
        double x = cx;
        for (const auto& t : tracks) {
            double w = t.px + t.percent * cw / 100.0 + (fr > 0 ? free * t.fr / fr : 0);
            widths.push_back(w);
            xs.push_back(x);
            x += w + gap;
        }
        double y = cy;
        std::size_t cols = tracks.size();
        for (std::size_t r = 0; r * cols < n.children.size(); ++r) {
            double row_h = 0;
            std::size_t end = std::min(n.children.size(), (r + 1) * cols);
            for (std::size_t i = r * cols; i < end; ++i) {
                auto& c = *n.children[i];
                double ml = margin(c, left, cw), mr = margin(c, right, cw);
                double w = c.style.width.is_auto() && !is_replaced(c) ? widths[i % cols] - ml - mr : shrink_to_fit(c, widths[i % cols] - ml - mr);
                layout_box(c, xs[i % cols] + ml, y + margin(c, top, cw), w, std::nullopt, widths[i % cols]);
                row_h = std::max(row_h, c.h + margin(c, top, cw) + margin(c, bottom, cw));
            }
            for (std::size_t i = r * cols; i < end; ++i) {
                auto& c = *n.children[i];
                if (item_align(n, c) == "stretch" && c.style.height.is_auto())
                    layout_box(c, c.x, c.y, c.w, row_h - margin(c, top, cw) - margin(c, bottom, cw), widths[i % cols]);
            }
            y += row_h + (end < n.children.size() ? n.style.row_gap : 0);
        }
        return y - cy;
    }

    // --- table layout --------------------------------------------------------

    std::vector<StyledNode*> table_rows(StyledNode& t, std::vector<StyledNode*>* groups = nullptr)
    {
        std::vector<StyledNode*> rows;
        for (auto& c : t.children) {
            if (c->is_text)
                continue;
            if (c->style.display == Display::table_row_group) {
                if (groups)
                    groups->push_back(c.get());
                for (auto& r : c->children)
                    if (!r->is_text)
                        rows.push_back(r.get());
            } else if (c->style.display == Display::table_row) {
                rows.push_back(c.get());
            }
        }
        return rows;
    }

    std::vector<StyledNode*> row_cells(StyledNode& row)
    {
        std::vector<StyledNode*> cells;
        for (auto& c : row.children)
            if (!c->is_text)
                cells.push_back(c.get());
        return cells;
    }

    std::pair<std::vector<double>, std::vector<double>> table_columns(const StyledNode& t, double cbw)
    {
        auto& table = const_cast<StyledNode&>(t);
        std::vector<double> mins, maxs;
        for (auto* row : table_rows(table)) {
            auto cells = row_cells(*row);
            if (cells.size() > mins.size()) {
                mins.resize(cells.size(), 0);
                maxs.resize(cells.size(), 0);
            }
            for (std::size_t j = 0; j < cells.size(); ++j) {
                auto [a, b] = intrinsic(*cells[j], cbw);
                mins[j] = std::max(mins[j], a);
                maxs[j] = std::max(maxs[j], b);
            }
        }
        return {mins, maxs};
    }

    double layout_table(StyledNode& n, double cx, double cy, double cw)
    {
        double y = cy;
        for (auto& c : n.children) {
            if (c->is_element("caption")) {
                layout_box(*c, cx, y, cw, std::nullopt, cw);
                y = c->y + c->h;
            }
        }
        std::vector<StyledNode*> groups;
        auto rows = table_rows(n, &groups);
        auto [mins, maxs] = table_columns(n, cw);
        const double s = n.style.border_spacing;
        std::size_t cols = mins.size();
        if (cols == 0)
            return y - cy;
        double inner = cw - s * static_cast<double>(cols + 1);
        double sum_min = 0, sum_max = 0;
        for (std::size_t j = 0; j < cols; ++j) {
            sum_min += mins[j];
            sum_max += maxs[j];
        }
        std::vector<double> widths(cols);
        for (std::size_t j = 0; j < cols; ++j) {
            if (sum_max <= inner)
                widths[j] = sum_max > 0 ? maxs[j] + (inner - sum_max) * maxs[j] / sum_max : inner / static_cast<double>(cols);
            else if (sum_min >= inner)
                widths[j] = mins[j];
            else
                widths[j] = mins[j] + (inner - sum_min) * (maxs[j] - mins[j]) / (sum_max - sum_min);
        }
        y += s;
        for (auto* row : rows) {
            auto cells = row_cells(*row);
            double x = cx + s;
            double row_h = 0;
            for (std::size_t j = 0; j < cells.size(); ++j) {
                layout_box(*cells[j], x, y, widths[j], std::nullopt, widths[j]);
                row_h = std::max(row_h, cells[j]->h);
                x += widths[j] + s;
            }
            for (std::size_t j = 0; j < cells.size(); ++j)
                layout_box(*cells[j], cells[j]->x, y, widths[j], row_h, widths[j]);
            row->x = cx;
            row->y = y;
            row->w = cw;
            row->h = row_h;
            y += row_h + s;
        }
        for (auto* g : groups) {
            auto grows = table_rows(*g);
            double y0 = 1e300, y1 = -1e300;
            for (auto& r : g->children) {
                if (r->is_text)
                    continue;
                y0 = std::min(y0, r->y);
                y1 = std::max(y1, r->y + r->h);
            }
            g->x = cx;
            g->w = cw;
            g->y = y0 < y1 ? y0 : y;
            g->h = y0 < y1 ? y1 - y0 : 0;
        }
        return y - cy;
    }
};

// --- painting ----------------------------------------------------------------

class Painter {
public:
    Painter(RasterImage& img) : img_(img) {}

    void blend_rect(double x0, double y0, double x1, double y1, const css::Rgba& c)
    {
        if (c.alpha <= 0)
            return;
        int ix0 = std::max(0, static_cast<int>(std::lround(x0)));
        int iy0 = std::max(0, static_cast<int>(std::lround(y0)));
        int ix1 = std::min(img_.width, static_cast<int>(std::lround(x1)));
        int iy1 = std::min(img_.height, static_cast<int>(std::lround(y1)));
        if (c.alpha >= 1.0) {
            img_.fill_rect(ix0, iy0, ix1, iy1, c.rgb);
            return;
        }
        for (int y = iy0; y < iy1; ++y) {
            for (int x = ix0; x < ix1; ++x) {
                auto d = img_.pixel(x, y);
                auto mix = [&](std::uint8_t s, std::uint8_t t) {
                    return static_cast<std::uint8_t>(std::lround(c.alpha * s + (1 - c.alpha) * t));
                };
                img_.set_pixel(x, y, {mix(c.rgb.r, d.r), mix(c.rgb.g, d.g), mix(c.rgb.b, d.b)});
            }
        }
    }

    // Each code point is drawn as a 3x5 cell pattern derived from its value.
    void draw_text(double x, double y, double h, std::string_view text, const ComputedStyle& st)
    {
        double adv = advance(st);
        double gy = y + (h - st.font_size) / 2 + st.font_size * 0.15;
        double gh = st.font_size * 0.7;
        std::size_t i = 0;
        double cx = x;
        while (i < text.size()) {
            std::uint32_t cp = decode(text, i);
            if (cp != ' ' && cp != 0xA0) {
                std::uint32_t bits = pattern(cp);
                double gx = cx + adv * 0.12, gw = adv * 0.76;
                for (int r = 0; r < 5; ++r)
                    for (int c = 0; c < 3; ++c)
                        if (bits & (1u << (r * 3 + c)))
                            blend_rect(gx + gw * c / 3, gy + gh * r / 5, gx + gw * (c + 1) / 3, gy + gh * (r + 1) / 5, st.color);
            }
            cx += adv;
        }
    }

private:
    static std::uint32_t decode(std::string_view s, std::size_t& i)
    {
        auto b = static_cast<unsigned char>(s[i]);
        int len = b < 0x80 ? 1 : (b >> 5) == 6 ? 2 : (b >> 4) == 14 ? 3 : (b >> 3) == 30 ? 4 : 1;
        std::uint32_t cp = len == 1 ? b : b & (0x7F >> len);
        for (int k = 1; k < len && i + static_cast<std::size_t>(k) < s.size(); ++k)
            cp = (cp << 6) | (static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]) & 0x3F);
        i += static_cast<std::size_t>(len);
        return cp;
    }

    static std::uint32_t pattern(std::uint32_t cp)
    {
        std::uint32_t h = 2166136261u;
        for (int k = 0; k < 4; ++k) {
            h ^= (cp >> (8 * k)) & 0xFF;
            h *= 16777619u;
        }
        return (h & 0x7FFF) | (1u << 7);
    }

    RasterImage& img_;
};

void paint(const StyledNode& n, Painter& p, const StyledNode* canvas_source)
{
    const auto& st = n.style;
    if (n.is_text) {
        if (!st.hidden)
            for (const auto& f : n.fragments)
                p.draw_text(f.x, f.y, f.h, f.text, st);
        return;
    }
    if (!st.hidden) {
        if (st.display == Display::inline_ && !is_replaced(n)) {
            for (const auto& f : n.fragments)
                p.blend_rect(f.x, f.y, f.x + f.w, f.y + f.h, st.background);
        } else {
            if (&n != canvas_source)
                p.blend_rect(n.x, n.y, n.x + n.w, n.y + n.h, st.background);
            p.blend_rect(n.x, n.y, n.x + n.w, n.y + st.border[top], st.border_color[top]);
            p.blend_rect(n.x, n.y + n.h - st.border[bottom], n.x + n.w, n.y + n.h, st.border_color[bottom]);
            p.blend_rect(n.x, n.y, n.x + st.border[left], n.y + n.h, st.border_color[left]);
            p.blend_rect(n.x + n.w - st.border[right], n.y, n.x + n.w, n.y + n.h, st.border_color[right]);
        }
        if (n.node && n.node->is_element("img")) {
            double bx = n.x + st.border[left], by = n.y + st.border[top];
            p.blend_rect(bx, by, n.x + n.w - st.border[right], n.y + n.h - st.border[bottom], {{204, 204, 204}, 1.0});
        }
        if (n.node && n.node->is_element("input")) {
            const auto* v = n.node->attribute("value");
            const auto* ph = n.node->attribute("placeholder");
            auto text_st = st;
            if (!v && ph)
                text_st.color = {{117, 117, 117}, 1.0};
            if (v || ph)
                p.draw_text(n.x + st.border[left] + st.padding[left].resolve(0), n.y + st.border[top], st.line_height,
                            v ? *v : *ph, text_st);
        }
        if (st.display == Display::list_item && st.list_style != "none") {
            double cy = n.y + st.border[top] + st.padding[top].resolve(0);
            if (st.list_style == "decimal") {
                auto label = std::to_string(n.list_index) + ".";
                double w = text_width(label, st);
                p.draw_text(n.x - w - st.font_size * 0.3, cy, st.line_height, label, st);
            } else {
                double size = st.font_size * 0.35;
                double mx = n.x - st.font_size * 0.9;
                double my = cy + st.line_height / 2 - size / 2;
                p.blend_rect(mx, my, mx + size, my + size, st.color);
            }
        }
    }
    for (const auto& c : n.children)
        paint(*c, p, canvas_source);
}

// --- block extraction --------------------------------------------------------

void direct_text(const StyledNode& n, std::string& text, std::vector<const Fragment*>& frags)
{
    for (const auto& c : n.children) {
        if (c->is_text) {
            text += c->text;
            for (const auto& f : c->fragments)
                frags.push_back(&f);
        } else if (!c->node) {
            direct_text(*c, text, frags); // anonymous wrapper
        }
    }
}

void extract_blocks(const StyledNode& n, double page_w, double page_h, BlockExtract& out)
{
    if (n.is_text)
        return;
    if (n.node && !n.style.hidden) {
        std::string text;
        std::vector<const Fragment*> frags;
        direct_text(n, text, frags);
        auto collapsed = collapse_whitespace(text);
        if (!collapsed.empty() && !frags.empty()) {
            double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
            for (const auto* f : frags) {
                x0 = std::min(x0, f->x);
                y0 = std::min(y0, f->y);
                x1 = std::max(x1, f->x + f->w);
                y1 = std::max(y1, f->y + f->h);
            }
            x0 = std::clamp(x0, 0.0, page_w);
            x1 = std::clamp(x1, 0.0, page_w);
            y0 = std::clamp(y0, 0.0, page_h);
            y1 = std::clamp(y1, 0.0, page_h);
            if (x1 > x0 && y1 > y0)
                out.push_back({path_to_string(n.path), {x0, y0, x1 - x0, y1 - y0}, collapsed, n.style.color.rgb});
        }
    }
    for (const auto& c : n.children)
        extract_blocks(*c, page_w, page_h, out);
}

double content_bottom(const StyledNode& n)
{
    double b = n.y + n.h;
    for (const auto& f : n.fragments)
        b = std::max(b, f.y + f.h);
    for (const auto& c : n.children)
        b = std::max(b, content_bottom(*c));
    return b;
}

const StyledNode* find_child(const StyledNode& n, std::string_view tag)
{
    for (const auto& c : n.children)
        if (c->is_element(tag))
            return c.get();
    return nullptr;
}

} // namespace

RenderResult LayoutRasterProvider::render(std::string_view html, const Viewport& viewport)
{
    if (viewport.width < 1 || viewport.height < 1)
        throw std::invalid_argument("viewport dimensions must be positive");
    doc::HtmlDocument d;
    try {
        d = doc::parse(html);
    } catch (const HardParseFailure& e) {
        throw ProviderUnavailable(std::string("raster: ") + e.what());
    }
    auto root = detail::build_styled_tree(d, viewport);
    css::Rgb canvas{255, 255, 255};
    const StyledNode* canvas_source = nullptr;
    if (root) {
        fix_anonymous(*root);
        Engine(viewport).layout_root(*root);
        if (root->style.background.alpha > 0) {
            canvas_source = root.get();
        } else if (const auto* body = find_child(*root, "body"); body && body->style.background.alpha > 0) {
            canvas_source = body;
        }
        if (canvas_source) {
            // Blend the propagated background over white once, as browsers do.
            const auto& bg = canvas_source->style.background;
            auto mix = [&](std::uint8_t s) { return static_cast<std::uint8_t>(std::lround(bg.alpha * s + (1 - bg.alpha) * 255)); };
            canvas = {mix(bg.rgb.r), mix(bg.rgb.g), mix(bg.rgb.b)};
        }
    }
    double page_bottom = root ? content_bottom(*root) + margin(*root, Side::bottom, viewport.width) : 0;
    int height = std::clamp(static_cast<int>(std::ceil(page_bottom - 1e-9)), viewport.height, std::max(viewport.height, options_.max_height));
    RenderResult out{RasterImage(viewport.width, height, canvas), {}};
    if (root) {
        Painter painter(out.image);
        paint(*root, painter, canvas_source);
        extract_blocks(*root, viewport.width, height, out.blocks);
    }
    return out;
}

} // namespace refinekit::render
