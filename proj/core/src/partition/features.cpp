#include "refinekit/partition/partitioner.hpp"

#include "refinekit/doc/css.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace refinekit::partition {

namespace {

bool is_word(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

bool has_direct_text(const doc::Node& n)
{
    for (const auto& c : n.children)
        if (c.is_text() && std::any_of(c.text.begin(), c.text.end(), [](char ch) { return !std::isspace(static_cast<unsigned char>(ch)); }))
            return true;
    return false;
}

void visit(const doc::Node& n, int depth, StructuralFeatures& f, std::set<std::string>& tags, std::size_t& scripts)
{
    if (!n.is_element())
        return;
    f.dom_depth = std::max(f.dom_depth, static_cast<double>(depth));
    tags.insert(n.name);
    if (n.attribute("style"))
        f.inline_style_count += 1;
    if (n.name == "script")
        ++scripts;
    for (const auto& [name, value] : n.attributes) {
        if (name.size() > 2 && name.rfind("on", 0) == 0)
            ++scripts;
        else if (css::to_lower(css::trim(value)).rfind("javascript:", 0) == 0)
            ++scripts;
    }
    if (n.name != "script" && n.name != "style" && has_direct_text(n))
        f.block_count += 1;
    for (const auto& c : n.children)
        visit(c, depth + 1, f, tags, scripts);
}

} // namespace

std::size_t count_tokens(std::string_view text)
{
    std::size_t count = 0;
    for (std::size_t i = 0; i < text.size();) {
        auto c = static_cast<unsigned char>(text[i]);
        if (std::isspace(c)) {
            ++i;
        } else if (is_word(c)) {
            while (i < text.size() && is_word(static_cast<unsigned char>(text[i])))
                ++i;
            ++count;
        } else {
            ++i;
            ++count;
        }
    }
    return count;
}

StructuralFeatures extract_features(const doc::HtmlDocument& d)
{
    StructuralFeatures f;
    std::set<std::string> tags;
    std::size_t scripts = 0;
    for (const auto& c : d.root.children)
        visit(c, 1, f, tags, scripts);
    f.tag_diversity = static_cast<double>(tags.size());
    const auto serialized = doc::serialize(d);
    const double bytes = static_cast<double>(d.source.empty() ? serialized.size() : d.source.size());
    f.script_density = bytes > 0 ? static_cast<double>(scripts) * 1024.0 / bytes : 0.0;
    f.token_count = static_cast<double>(count_tokens(serialized));
    return f;
}

} // namespace refinekit::partition
