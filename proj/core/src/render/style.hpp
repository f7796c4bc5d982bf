#pragma once

#include "refinekit/doc/css.hpp"
#include "refinekit/doc/html_document.hpp"
#include "refinekit/render/provider.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace refinekit::render::detail {

enum class Display {
    none,
    block,
    inline_,
    inline_block,
    flex,
    inline_flex,
    grid,
    list_item,
    table,
    table_row,
    table_row_group,
    table_cell,
};

struct Dim {
    enum Kind { automatic, px, percent } kind = automatic;
    double value = 0;

    static Dim auto_() { return {}; }
    static Dim pixels(double v) { return {px, v}; }
    bool is_auto() const { return kind == automatic; }
    // Resolves against a containing-block size; `fallback` for auto.
    double resolve(double basis, double fallback = 0) const
    {
        switch (kind) {
        case px: return value;
        case percent: return basis * value / 100.0;
        default: return fallback;
        }
    }
};

struct Track {
    double px = 0;
    double fr = 0;
    double percent = 0;
};

struct ComputedStyle {
    Display display = Display::inline_;
    double font_size = 16;
    bool bold = false;
    css::Rgba color{{0, 0, 0}, 1.0};
    std::string text_align = "left";
    double line_height = 16 * 1.2;
    bool preserve_newlines = false;
    bool preserve_spaces = false;
    bool nowrap = false;
    bool hidden = false; // visibility:hidden
    std::string list_style = "disc";

    css::Rgba background{{0, 0, 0}, 0.0};
    Dim width, height, min_width, min_height;
    Dim max_width, max_height; // automatic = none
    Dim margin[4];             // top, right, bottom, left
    Dim padding[4];
    double border[4] = {0, 0, 0, 0};
    css::Rgba border_color[4];
    bool border_box = false;

    std::string flex_direction = "row";
    bool flex_wrap = false;
    std::string justify_content = "flex-start";
    std::string align_items = "stretch";
    std::string align_self = "auto";
    double row_gap = 0;
    double column_gap = 0;
    double flex_grow = 0;
    double flex_shrink = 1;
    Dim flex_basis;
    std::string grid_columns; // raw grid-template-columns value
    double border_spacing = 0;
};

struct Fragment {
    double x = 0, y = 0, w = 0, h = 0;
    std::string text;
};

// Element or text node with its computed style and, after layout, its border
// box (absolute CSS px). Anonymous boxes have node == nullptr.
struct StyledNode {
    const doc::Node* node = nullptr;
    doc::NodePath path;
    bool is_text = false;
    std::string text;
    ComputedStyle style;
    std::vector<std::unique_ptr<StyledNode>> children;

    double x = 0, y = 0, w = 0, h = 0;
    std::vector<Fragment> fragments; // text nodes; inline elements collect theirs too
    int list_index = 0;              // 1-based position among list items

    bool is_element(std::string_view tag) const { return node && node->is_element() && node->name == tag; }
};

// Builds the styled tree for a parsed document: resolves the cascade (UA
// defaults, internal stylesheets with min/max-width media queries, inline
// styles) and drops display:none subtrees and comments.
std::unique_ptr<StyledNode> build_styled_tree(const doc::HtmlDocument& doc, const Viewport& viewport);

bool is_block_level(Display d);
bool is_inline_level(Display d);

} // namespace refinekit::render::detail
