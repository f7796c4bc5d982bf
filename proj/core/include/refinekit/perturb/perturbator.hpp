#pragma once

#include "refinekit/doc/html_document.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace refinekit::perturb {

enum class Category { color, layout, alignment, component, image, text };

inline constexpr Category kAllCategories[] = {Category::color,     Category::layout, Category::alignment,
                                              Category::component, Category::image,  Category::text};

std::string_view to_string(Category c);
Category category_from_string(std::string_view s);

enum class Target { attribute, style_property, text, subtree };

std::string_view to_string(Target t);
Target target_from_string(std::string_view s);

struct RuleInfo {
    std::string_view id;
    Category category;
    std::string_view parameter_domain;
};

// Every rule, grouped by category in catalog order.
const std::vector<RuleInfo>& rule_catalog();
const RuleInfo& find_rule(std::string_view id); // throws std::invalid_argument
std::vector<std::string_view> rules_in(Category c);

// One localized edit. `begin`/`end` delimit original_fragment in the
// serialization the edit was applied to; after the edit, replacement_fragment
// occupies [begin, begin + replacement_fragment.size()).
struct EditRecord {
    Category category = Category::color;
    std::string rule_id;
    std::uint64_t seed = 0;
    doc::NodePath node_path;
    Target target = Target::attribute;
    std::string target_name; // attribute name, style property, or element name
    std::string original_fragment;
    std::string replacement_fragment;
    std::size_t begin = 0;
    std::size_t end = 0;

    bool operator==(const EditRecord&) const = default;
};

// Overrides the sampled magnitude of a rule: hue rotation in degrees,
// lightness shift as a signed fraction, gap/height/font-size factor, or
// spacing offset in px. Rules without a magnitude ignore it.
struct RuleOptions {
    std::optional<double> magnitude;
};

struct Perturbed {
    doc::HtmlDocument doc;
    EditRecord edit;
};

// Deterministic in (doc, rule_id, seed). Throws RuleNotApplicable when the
// document has no target the rule can change.
Perturbed apply_rule(const doc::HtmlDocument& doc, std::string_view rule_id, std::uint64_t seed,
                     const RuleOptions& options = {});

struct Composed {
    doc::HtmlDocument doc;
    std::vector<EditRecord> edits; // application order
};

// Applies k rules from distinct categories. Throws InsufficientTargets when
// fewer than k non-overlapping edits can be placed.
Composed compose(const doc::HtmlDocument& doc, int k, std::uint64_t seed);

// Undoes `edits` (last first) on a serialization. Throws SpanMismatch when a
// recorded replacement is not found at its span.
std::string invert(std::string_view perturbed, const std::vector<EditRecord>& edits);

// Applies edits forward to a serialization, verifying every original
// fragment. The inverse of invert.
std::string replay(std::string_view original, const std::vector<EditRecord>& edits);

// Keeps the first ceil(40%) code points of the non-space core of `text`,
// trims trailing space from the cut, and keeps the surrounding whitespace.
std::string truncate_text(std::string_view text);

// Rotates the hue of a color by `degrees`, keeping saturation and lightness.
css::Rgb rotate_hue(css::Rgb c, double degrees);

} // namespace refinekit::perturb
