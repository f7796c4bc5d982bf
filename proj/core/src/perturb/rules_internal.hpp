#pragma once

#include "refinekit/perturb/perturbator.hpp"
#include "refinekit/rng.hpp"

#include <functional>
#include <vector>

namespace refinekit::perturb::detail {

// Which bytes of the original serialization an edit at a site may touch.
enum class SpanKind {
    start_tag,        // [begin, start_tag_end) of the node at `path`
    node,             // whole node at `path`
    stylesheet_block, // [block_begin, block_end) inside the text node at `path`
    sibling_pair,     // from the node at `path` to the end of the node at `path2`
};

struct Site {
    doc::NodePath path;
    doc::NodePath path2;
    SpanKind span = SpanKind::node;
    std::size_t block_begin = 0;
    std::size_t block_end = 0;
    Target target = Target::attribute;
    std::string target_name;
    // Mutates the document in place; returns false when the draw leaves the
    // document unchanged.
    std::function<bool(doc::HtmlDocument&, Rng&)> mutate;
};

std::vector<Site> find_sites(const doc::HtmlDocument& doc, std::string_view rule_id, const RuleOptions& options);

} // namespace refinekit::perturb::detail
