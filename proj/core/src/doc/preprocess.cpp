#include "refinekit/doc/preprocess.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace refinekit::doc {
namespace {

bool is_external_url(std::string_view url)
{
    auto u = css::to_lower(css::trim(url));
    if (u.empty() || u[0] == '#')
        return false;
    if (u.rfind("data:", 0) == 0 || u.rfind("about:", 0) == 0 || u == std::string(kPlaceholderToken) ||
        u == css::to_lower(kPlaceholderToken))
        return false;
    return true;
}

bool is_script_url(std::string_view url)
{
    return css::to_lower(css::trim(url)).rfind("javascript:", 0) == 0;
}

// Arguments of every url(...) in a CSS fragment.
std::vector<std::string> css_urls(std::string_view text)
{
    std::vector<std::string> out;
    std::string lower = css::to_lower(text);
    std::size_t pos = 0;
    while ((pos = lower.find("url(", pos)) != std::string::npos) {
        auto close = lower.find(')', pos + 4);
        if (close == std::string::npos)
            break;
        std::string arg(css::trim(text.substr(pos + 4, close - pos - 4)));
        if (arg.size() >= 2 && (arg.front() == '"' || arg.front() == '\''))
            arg = arg.substr(1, arg.size() - 2);
        out.push_back(arg);
        pos = close + 1;
    }
    return out;
}

// Removes @import statements, external @font-face blocks and declarations
// whose url() points outside the document. Untouched text stays
// byte-identical.
std::string strip_external_css(std::string_view text, SanitizeReport& report)
{
    std::string out(text);
    // @import
    for (std::size_t pos = 0;;) {
        std::string lower = css::to_lower(out);
        pos = lower.find("@import", pos);
        if (pos == std::string::npos)
            break;
        auto semi = out.find(';', pos);
        auto end = semi == std::string::npos ? out.size() : semi + 1;
        for (auto& u : css_urls(std::string_view(out).substr(pos, end - pos)))
            report.external_urls.push_back(u);
        auto quoted = out.substr(pos, end - pos);
        if (css_urls(quoted).empty()) {
            auto q = quoted.find_first_of("\"'");
            if (q != std::string::npos) {
                auto q2 = quoted.find(quoted[q], q + 1);
                report.external_urls.push_back(quoted.substr(q + 1, q2 == std::string::npos ? std::string::npos : q2 - q - 1));
            }
        }
        out.erase(pos, end - pos);
        ++report.removed_external_refs;
    }
    // @font-face with remote sources
    for (std::size_t pos = 0;;) {
        std::string lower = css::to_lower(out);
        pos = lower.find("@font-face", pos);
        if (pos == std::string::npos)
            break;
        auto open = out.find('{', pos);
        auto close = open == std::string::npos ? std::string::npos : out.find('}', open);
        auto end = close == std::string::npos ? out.size() : close + 1;
        auto urls = css_urls(std::string_view(out).substr(pos, end - pos));
        bool external = std::any_of(urls.begin(), urls.end(), [](const std::string& u) { return is_external_url(u); });
        if (!external) {
            pos = end;
            continue;
        }
        for (auto& u : urls)
            report.external_urls.push_back(u);
        out.erase(pos, end - pos);
        ++report.removed_external_refs;
    }
    // declarations with remote url()
    for (std::size_t pos = 0;;) {
        std::string lower = css::to_lower(out);
        pos = lower.find("url(", pos);
        if (pos == std::string::npos)
            break;
        auto close = out.find(')', pos);
        std::string arg(css::trim(std::string_view(out).substr(pos + 4, (close == std::string::npos ? out.size() : close) - pos - 4)));
        if (arg.size() >= 2 && (arg.front() == '"' || arg.front() == '\''))
            arg = arg.substr(1, arg.size() - 2);
        if (!is_external_url(arg)) {
            pos += 4;
            continue;
        }
        auto begin = out.find_last_of(";{", pos);
        begin = begin == std::string::npos ? 0 : begin + 1;
        auto end = out.find_first_of(";}", close == std::string::npos ? pos : close);
        if (end == std::string::npos)
            end = out.size();
        else if (out[end] == ';')
            ++end;
        report.external_urls.push_back(arg);
        out.erase(begin, end - begin);
        ++report.removed_external_refs;
        pos = begin;
    }
    return out;
}

bool has_renderable_content(const Node& body)
{
    static const std::set<std::string_view> visual = {"img", "input", "button", "textarea", "select", "svg", "hr", "canvas", "table"};
    if (!css::trim(body.text_content()).empty())
        return true;
    bool found = false;
    walk(body, [&](const Node& n, const NodePath&) {
        if (n.is_element() && (visual.count(n.name) || n.attribute("style") || n.attribute("class")))
            found = true;
    });
    return found;
}

std::size_t element_count(const Node& root)
{
    std::size_t n = 0;
    walk(root, [&](const Node& node, const NodePath&) { n += node.is_element() ? 1 : 0; });
    return n;
}

void sanitize_node(Node& n, SanitizeReport& report)
{
    if (n.is_element()) {
        std::vector<Attribute> kept;
        for (auto& a : n.attributes) {
            if (a.name.size() > 2 && a.name[0] == 'o' && a.name[1] == 'n') {
                ++report.removed_scripts;
                continue;
            }
            if ((a.name == "href" || a.name == "src" || a.name == "action" || a.name == "formaction") && is_script_url(a.value)) {
                ++report.removed_scripts;
                continue;
            }
            if (a.name == "style") {
                auto urls = css_urls(a.value);
                if (std::any_of(urls.begin(), urls.end(), [](const std::string& u) { return is_external_url(u); })) {
                    std::vector<css::Declaration> decls;
                    for (auto& d : css::parse_declarations(a.value)) {
                        auto du = css_urls(d.value);
                        if (std::any_of(du.begin(), du.end(), [](const std::string& u) { return is_external_url(u); })) {
                            for (auto& u : du)
                                report.external_urls.push_back(u);
                            ++report.removed_external_refs;
                        } else {
                            decls.push_back(d);
                        }
                    }
                    if (decls.empty())
                        continue;
                    a.value = css::serialize_declarations(decls);
                }
            }
            kept.push_back(std::move(a));
        }
        n.attributes = std::move(kept);
        if (n.name == "img" || n.name == "source") {
            if (const auto* src = n.attribute("src"); src && is_external_url(*src))
                report.external_urls.push_back(*src);
        }
        if (n.name == "style") {
            for (auto& c : n.children)
                if (c.is_text())
                    c.text = strip_external_css(c.text, report);
        }
    }

    static const std::set<std::string_view> frames = {"iframe", "frame", "frameset", "embed", "object", "applet", "video", "audio", "base"};
    std::vector<Node> kept;
    kept.reserve(n.children.size());
    for (auto& c : n.children) {
        if (c.is_element("script")) {
            ++report.removed_scripts;
            continue;
        }
        if (c.is_element("link")) {
            const auto* href = c.attribute("href");
            if (href && !href->empty() && is_external_url(*href)) {
                report.external_urls.push_back(*href);
                ++report.removed_external_refs;
                continue;
            }
        }
        if (c.is_element() && frames.count(c.name)) {
            for (const char* attr : {"src", "data", "href"})
                if (const auto* v = c.attribute(attr); v && is_external_url(*v))
                    report.external_urls.push_back(*v);
            ++report.removed_external_refs;
            continue;
        }
        sanitize_node(c, report);
        kept.push_back(std::move(c));
    }
    n.children = std::move(kept);
}

} // namespace

SanitizeResult sanitize(const HtmlDocument& doc)
{
    SanitizeResult result{doc, {}};
    result.report.repaired_tags = doc.repaired_tags();
    sanitize_node(result.doc.root, result.report);

    const Node* body = result.doc.body();
    if (!body || !has_renderable_content(*body)) {
        result.report.rejected = true;
        result.report.reason = "no renderable body content";
        return result;
    }
    const std::size_t elements = element_count(result.doc.root);
    const std::size_t repair_limit = std::max<std::size_t>(8, elements / 2);
    if (result.report.repaired_tags > repair_limit) {
        result.report.rejected = true;
        result.report.reason = "structure not recoverable: " + std::to_string(result.report.repaired_tags) + " repaired tags for " +
                               std::to_string(elements) + " elements";
    }
    return result;
}

namespace {

std::string dimension_from_style(const std::vector<css::Declaration>& style, std::string_view property)
{
    auto v = css::find(style, property);
    if (!v)
        return {};
    auto len = css::parse_length(*v);
    if (!len || (len->unit != css::Unit::px && len->unit != css::Unit::none) || len->value <= 0)
        return {};
    auto px = css::format_px(len->value);
    return px.substr(0, px.size() - 2);
}

void substitute(Node& n)
{
    if (n.is_element("img") || (n.is_element("input") && n.attribute("type") && css::to_lower(*n.attribute("type")) == "image")) {
        n.set_attribute("src", std::string(kPlaceholderToken));
        n.remove_attribute("srcset");
        auto style = n.style();
        for (const char* dim : {"width", "height"}) {
            if (const auto* v = n.attribute(dim); v && !css::trim(*v).empty())
                continue;
            auto from_style = dimension_from_style(style, dim);
            n.set_attribute(dim, from_style.empty() ? std::to_string(kDefaultPlaceholderSize) : from_style);
        }
    } else if (n.is_element("source")) {
        if (n.attribute("src"))
            n.set_attribute("src", std::string(kPlaceholderToken));
        n.remove_attribute("srcset");
    }
    for (auto& c : n.children)
        substitute(c);
}

bool is_html_open_at(const std::string& lower, std::size_t pos)
{
    auto after = pos + 5;
    return after < lower.size() && (lower[after] == '>' || lower[after] == ' ' || lower[after] == '\t' || lower[after] == '\n' ||
                                    lower[after] == '\r' || lower[after] == '/');
}

} // namespace

HtmlDocument substitute_placeholders(const HtmlDocument& doc)
{
    HtmlDocument out = doc;
    substitute(out.root);
    return out;
}

bool is_complete(std::string_view text)
{
    std::string lower = css::to_lower(text);
    bool open = false;
    for (std::size_t pos = lower.find("<html"); pos != std::string::npos; pos = lower.find("<html", pos + 1)) {
        if (is_html_open_at(lower, pos)) {
            open = true;
            break;
        }
    }
    if (!open)
        return false;
    for (std::size_t pos = lower.find("</html"); pos != std::string::npos; pos = lower.find("</html", pos + 1)) {
        std::size_t i = pos + 6;
        while (i < lower.size() && (lower[i] == ' ' || lower[i] == '\t' || lower[i] == '\n' || lower[i] == '\r'))
            ++i;
        if (i < lower.size() && lower[i] == '>')
            return true;
    }
    return false;
}

namespace {

bool is_whitespace_text(const Node& n)
{
    return n.is_text() && css::trim(n.text).empty() && !n.text.empty();
}

void normalize_node(Node& n, bool preformatted)
{
    if (n.is_element()) {
        for (auto& a : n.attributes) {
            if (a.name == "style")
                a.value = css::serialize_declarations(css::canonicalize(css::parse_declarations(a.value)));
            else if (a.name == "class") {
                std::string collapsed;
                for (auto& part : css::split_value(a.value)) {
                    if (!collapsed.empty())
                        collapsed.push_back(' ');
                    collapsed += part;
                }
                a.value = collapsed;
            }
        }
        std::erase_if(n.attributes, [](const Attribute& a) { return a.name == "style" && a.value.empty(); });
        std::stable_sort(n.attributes.begin(), n.attributes.end(), [](const Attribute& a, const Attribute& b) { return a.name < b.name; });
        if (n.name == "style")
            for (auto& c : n.children)
                if (c.is_text())
                    c.text = css::canonicalize_stylesheet(c.text);
        if (n.name == "pre" || n.name == "textarea")
            preformatted = true;
        if (is_raw_text_element(n.name))
            return;
    }
    if (!preformatted) {
        const bool block_parent = n.kind == NodeKind::document || (n.is_element() && (is_block_element(n.name) || n.name == "head"));
        for (std::size_t i = 0; i < n.children.size(); ++i) {
            Node& c = n.children[i];
            if (!is_whitespace_text(c))
                continue;
            auto block_sibling = [&](std::size_t j) {
                const Node& s = n.children[j];
                return s.is_element() && (is_block_element(s.name) || s.name == "head" || s.name == "title" || s.name == "meta" ||
                                          s.name == "style" || s.name == "link" || s.name == "br");
            };
            bool edge = block_parent && (i == 0 || i + 1 == n.children.size());
            bool next_to_block = (i > 0 && block_sibling(i - 1)) || (i + 1 < n.children.size() && block_sibling(i + 1));
            if (edge || next_to_block || n.is_element("html") || n.is_element("head"))
                c.text = "\n";
        }
    }
    for (auto& c : n.children)
        normalize_node(c, preformatted);
}

} // namespace

HtmlDocument normalize(const HtmlDocument& doc)
{
    HtmlDocument out = doc;
    normalize_node(out.root, false);
    return out;
}

SanitizeReport preprocess(std::string_view text, std::string provenance, HtmlDocument& out)
{
    auto parsed = parse(text, std::move(provenance));
    auto sanitized = sanitize(parsed);
    if (!sanitized.report.rejected)
        out = normalize(substitute_placeholders(sanitized.doc));
    return sanitized.report;
}

} // namespace refinekit::doc
