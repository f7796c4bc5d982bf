#pragma once

#include "refinekit/doc/html_document.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace refinekit::doc {

inline constexpr std::string_view kPlaceholderToken = "[Placeholder]";
inline constexpr int kDefaultPlaceholderSize = 100;

struct SanitizeReport {
    std::size_t removed_scripts = 0;       // script elements, on* handlers, javascript: URLs
    std::size_t removed_external_refs = 0; // links, frames, remote CSS resources
    std::size_t repaired_tags = 0;         // copied from the parse diagnostics
    bool rejected = false;
    std::string reason;
    std::vector<std::string> external_urls; // every external URL seen, in document order

    bool operator==(const SanitizeReport&) const = default;
};

struct SanitizeResult {
    HtmlDocument doc;
    SanitizeReport report;
};

// Removes scripts and external dependencies that can be dropped without
// breaking layout; rejects documents with no renderable body content or
// markup too damaged to trust. Image sources are catalogued, not removed:
// substitute_placeholders handles them.
SanitizeResult sanitize(const HtmlDocument& doc);

// Replaces every image source with kPlaceholderToken and makes sure each
// image carries explicit width/height attributes (from attributes, then the
// inline style, then kDefaultPlaceholderSize).
HtmlDocument substitute_placeholders(const HtmlDocument& doc);

// True iff the text contains an opening <html> tag and a closing </html>
// tag, compared case-insensitively.
bool is_complete(std::string_view text);

// Canonical form: attributes sorted by name, style declarations sorted by
// property, internal stylesheets rewritten rule-per-line, and whitespace-only
// text next to block elements collapsed to a single newline.
HtmlDocument normalize(const HtmlDocument& doc);

// Convenience: parse, sanitize, substitute placeholders and normalize.
// Returns the report; `out` is only meaningful when the report is not
// rejected.
SanitizeReport preprocess(std::string_view text, std::string provenance, HtmlDocument& out);

} // namespace refinekit::doc
