#pragma once

#include "refinekit/doc/css.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace refinekit::doc {

enum class NodeKind { document, element, text, comment };

struct Attribute {
    std::string name; // lower-case
    std::string value;

    bool operator==(const Attribute&) const = default;
};

// One node of the document tree. Children are held by value; a document is
// a plain value that can be copied and compared.
struct Node {
    NodeKind kind = NodeKind::element;
    std::string name; // element tag name, lower-case
    std::vector<Attribute> attributes;
    std::string text; // text content or comment data
    std::vector<Node> children;

    static Node element(std::string name, std::vector<Attribute> attrs = {});
    static Node make_text(std::string text);
    static Node comment(std::string data);

    bool is_element() const { return kind == NodeKind::element; }
    bool is_element(std::string_view tag) const { return kind == NodeKind::element && name == tag; }
    bool is_text() const { return kind == NodeKind::text; }

    const std::string* attribute(std::string_view attr) const;
    void set_attribute(std::string_view attr, std::string value);
    bool remove_attribute(std::string_view attr);

    // Parsed view of the style attribute.
    std::vector<css::Declaration> style() const;
    // Rewrites the style attribute canonically; removes it when empty.
    void set_style(const std::vector<css::Declaration>& decls);

    // Concatenated descendant text, excluding script/style content.
    std::string text_content() const;

    bool operator==(const Node&) const = default;
};

// Root-to-node child-index path, starting below the document node.
using NodePath = std::vector<std::uint32_t>;

struct ParseIssue {
    enum class Kind {
        unclosed_element,  // closed implicitly (EOF or ancestor end tag)
        stray_end_tag,     // end tag without a matching open element
        bogus_markup,      // markup kept as a comment or literal text
        duplicate_attribute,
        unterminated_comment,
        invalid_utf8,
    };
    Kind kind;
    std::size_t offset = 0; // byte offset in the source text
    std::string detail;
};

struct HtmlDocument {
    std::string source;     // text the document was parsed from
    std::string provenance; // source identifier (usually a file name)
    std::string doctype;    // e.g. "html"; empty when absent
    Node root{NodeKind::document, {}, {}, {}, {}};
    std::vector<ParseIssue> issues;

    // Number of tags the parser had to repair (implicit closes + stray ends).
    std::size_t repaired_tags() const;

    const Node* html() const;
    const Node* head() const;
    const Node* body() const;
    Node* body_mut();

    const Node* at(const NodePath& path) const;
    Node* at_mut(const NodePath& path);
};

// Error-tolerant HTML parse following browser recovery conventions:
// implied html/head/body, optional end tags closed implicitly, raw-text
// script/style. Throws HardParseFailure when no root element can be
// recovered (empty input, or input with neither tags nor text).
HtmlDocument parse(std::string_view text, std::string provenance = {});

// Deterministic serialization. serialize(parse(serialize(d))) == serialize(d).
std::string serialize(const HtmlDocument& doc);
std::string serialize(const Node& node);

// Byte ranges of one node in a serialization.
struct NodeSpan {
    std::size_t begin = 0;
    std::size_t end = 0;           // one past the node's last byte
    std::size_t start_tag_end = 0; // elements: one past '>' of the start tag
    std::size_t content_begin = 0; // text/comment payload or element content
    std::size_t content_end = 0;
};

struct SerializedDocument {
    std::string text;
    std::map<NodePath, NodeSpan> spans;
};

SerializedDocument serialize_with_spans(const HtmlDocument& doc);

// Depth-first pre-order walk over every node below the document root.
void walk(const Node& root, const std::function<void(const Node&, const NodePath&)>& visit);

bool is_void_element(std::string_view tag);
bool is_raw_text_element(std::string_view tag);
// Elements laid out as blocks by default.
bool is_block_element(std::string_view tag);

std::string escape_text(std::string_view text);
std::string escape_attribute(std::string_view value);

} // namespace refinekit::doc
