#include "refinekit/doc/html_document.hpp"

#include "refinekit/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>
#include <unordered_map>

namespace refinekit::doc {

// --- node helpers ------------------------------------------------------------

Node Node::element(std::string name, std::vector<Attribute> attrs)
{
    Node n;
    n.kind = NodeKind::element;
    n.name = std::move(name);
    n.attributes = std::move(attrs);
    return n;
}

Node Node::make_text(std::string text)
{
    Node n;
    n.kind = NodeKind::text;
    n.text = std::move(text);
    return n;
}

Node Node::comment(std::string data)
{
    Node n;
    n.kind = NodeKind::comment;
    n.text = std::move(data);
    return n;
}

const std::string* Node::attribute(std::string_view attr) const
{
    for (const auto& a : attributes)
        if (a.name == attr)
            return &a.value;
    return nullptr;
}

void Node::set_attribute(std::string_view attr, std::string value)
{
    for (auto& a : attributes) {
        if (a.name == attr) {
            a.value = std::move(value);
            return;
        }
    }
    attributes.push_back({std::string(attr), std::move(value)});
}

bool Node::remove_attribute(std::string_view attr)
{
    auto it = std::find_if(attributes.begin(), attributes.end(), [&](const Attribute& a) { return a.name == attr; });
    if (it == attributes.end())
        return false;
    attributes.erase(it);
    return true;
}

std::vector<css::Declaration> Node::style() const
{
    const auto* s = attribute("style");
    return s ? css::parse_declarations(*s) : std::vector<css::Declaration>{};
}

void Node::set_style(const std::vector<css::Declaration>& decls)
{
    if (decls.empty())
        remove_attribute("style");
    else
        set_attribute("style", css::serialize_declarations(decls));
}

std::string Node::text_content() const
{
    std::string out;
    std::function<void(const Node&)> rec = [&](const Node& n) {
        if (n.kind == NodeKind::text) {
            out += n.text;
            return;
        }
        if (n.kind == NodeKind::element && (n.name == "script" || n.name == "style"))
            return;
        for (const auto& c : n.children)
            rec(c);
    };
    rec(*this);
    return out;
}

// --- document helpers --------------------------------------------------------

std::size_t HtmlDocument::repaired_tags() const
{
    return static_cast<std::size_t>(std::count_if(issues.begin(), issues.end(), [](const ParseIssue& i) {
        return i.kind == ParseIssue::Kind::unclosed_element || i.kind == ParseIssue::Kind::stray_end_tag;
    }));
}

const Node* HtmlDocument::html() const
{
    for (const auto& c : root.children)
        if (c.is_element("html"))
            return &c;
    return nullptr;
}

const Node* HtmlDocument::head() const
{
    if (const auto* h = html())
        for (const auto& c : h->children)
            if (c.is_element("head"))
                return &c;
    return nullptr;
}

const Node* HtmlDocument::body() const
{
    if (const auto* h = html())
        for (const auto& c : h->children)
            if (c.is_element("body"))
                return &c;
    return nullptr;
}

Node* HtmlDocument::body_mut()
{
    return const_cast<Node*>(std::as_const(*this).body());
}

const Node* HtmlDocument::at(const NodePath& path) const
{
    const Node* n = &root;
    for (auto i : path) {
        if (i >= n->children.size())
            return nullptr;
        n = &n->children[i];
    }
    return n;
}

Node* HtmlDocument::at_mut(const NodePath& path)
{
    return const_cast<Node*>(std::as_const(*this).at(path));
}

// --- element categories ------------------------------------------------------

bool is_void_element(std::string_view tag)
{
    static const std::set<std::string_view> v = {"area", "base", "br", "col", "embed", "hr", "img", "input",
                                                 "link", "meta", "param", "source", "track", "wbr"};
    return v.count(tag) != 0;
}

bool is_raw_text_element(std::string_view tag)
{
    return tag == "script" || tag == "style";
}

namespace {

bool is_rcdata_element(std::string_view tag)
{
    return tag == "title" || tag == "textarea";
}

} // namespace

bool is_block_element(std::string_view tag)
{
    static const std::set<std::string_view> v = {
        "address", "article", "aside", "blockquote", "body", "caption", "center", "dd", "details", "dialog",
        "div", "dl", "dt", "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3", "h4",
        "h5", "h6", "header", "hgroup", "hr", "html", "li", "main", "menu", "nav", "ol", "p", "pre",
        "section", "summary", "table", "tbody", "td", "tfoot", "th", "thead", "tr", "ul"};
    return v.count(tag) != 0;
}

// --- escaping ----------------------------------------------------------------

std::string escape_text(std::string_view text)
{
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

std::string escape_attribute(std::string_view value)
{
    std::string out;
    out.reserve(value.size());
    for (char c : value) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

namespace {

void append_utf8(std::string& out, std::uint32_t cp)
{
    if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
        cp = 0xFFFD;
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

const std::unordered_map<std::string_view, std::uint32_t>& entity_table()
{
    static const std::unordered_map<std::string_view, std::uint32_t> t = {
        {"amp", '&'}, {"lt", '<'}, {"gt", '>'}, {"quot", '"'}, {"apos", '\''}, {"nbsp", 0xA0},
        {"copy", 0xA9}, {"reg", 0xAE}, {"trade", 0x2122}, {"hellip", 0x2026}, {"mdash", 0x2014},
        {"ndash", 0x2013}, {"laquo", 0xAB}, {"raquo", 0xBB}, {"middot", 0xB7}, {"bull", 0x2022},
        {"lsquo", 0x2018}, {"rsquo", 0x2019}, {"ldquo", 0x201C}, {"rdquo", 0x201D}, {"euro", 0x20AC},
        {"pound", 0xA3}, {"yen", 0xA5}, {"cent", 0xA2}, {"times", 0xD7}, {"divide", 0xF7},
        {"deg", 0xB0}, {"para", 0xB6}, {"sect", 0xA7}, {"larr", 0x2190}, {"rarr", 0x2192},
        {"uarr", 0x2191}, {"darr", 0x2193}, {"hearts", 0x2665}, {"star", 0x2606}, {"check", 0x2713},
        {"plusmn", 0xB1}, {"frac12", 0xBD}, {"ensp", 0x2002}, {"emsp", 0x2003}, {"thinsp", 0x2009},
    };
    return t;
}

std::string decode_entities(std::string_view s)
{
    if (s.find('&') == std::string_view::npos)
        return std::string(s);
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] != '&') {
            out.push_back(s[i++]);
            continue;
        }
        std::size_t j = i + 1;
        if (j < s.size() && s[j] == '#') {
            ++j;
            bool hex = j < s.size() && (s[j] == 'x' || s[j] == 'X');
            if (hex)
                ++j;
            std::size_t start = j;
            std::uint32_t cp = 0;
            while (j < s.size() && (hex ? std::isxdigit(static_cast<unsigned char>(s[j])) : std::isdigit(static_cast<unsigned char>(s[j])))) {
                int d = std::isdigit(static_cast<unsigned char>(s[j])) ? s[j] - '0' : (std::tolower(s[j]) - 'a' + 10);
                cp = std::min<std::uint32_t>(cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(d), 0x110000);
                ++j;
            }
            if (j > start) {
                if (j < s.size() && s[j] == ';')
                    ++j;
                append_utf8(out, cp);
                i = j;
                continue;
            }
            out.push_back('&');
            ++i;
            continue;
        }
        while (j < s.size() && std::isalnum(static_cast<unsigned char>(s[j])))
            ++j;
        auto name = s.substr(i + 1, j - i - 1);
        const auto& table = entity_table();
        auto it = table.find(name);
        bool terminated = j < s.size() && s[j] == ';';
        bool legacy = name == "amp" || name == "lt" || name == "gt" || name == "quot" || name == "nbsp";
        if (it != table.end() && (terminated || legacy)) {
            append_utf8(out, it->second);
            i = terminated ? j + 1 : j;
        } else {
            out.push_back('&');
            ++i;
        }
    }
    return out;
}

std::optional<std::size_t> first_invalid_utf8(std::string_view s)
{
    std::size_t i = 0;
    while (i < s.size()) {
        auto c = static_cast<unsigned char>(s[i]);
        std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
        if (len == 0 || i + len > s.size())
            return i;
        for (std::size_t k = 1; k < len; ++k)
            if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2)
                return i;
        i += len;
    }
    return std::nullopt;
}

bool is_ws(char c)
{
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f';
}

bool all_ws(std::string_view s)
{
    return std::all_of(s.begin(), s.end(), is_ws);
}

bool istarts_with(std::string_view s, std::size_t pos, std::string_view prefix)
{
    if (pos + prefix.size() > s.size())
        return false;
    for (std::size_t i = 0; i < prefix.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(s[pos + i])) != std::tolower(static_cast<unsigned char>(prefix[i])))
            return false;
    return true;
}

// --- tree construction ---------------------------------------------------------

struct StartTag {
    std::string name;
    std::vector<Attribute> attrs;
    bool self_closing = false;
    std::size_t offset = 0;
};

class TreeBuilder {
public:
    explicit TreeBuilder(HtmlDocument& doc) : doc_(doc) {}

    void text(std::string_view t, std::size_t offset)
    {
        (void)offset;
        if (t.empty())
            return;
        if (stack_.empty()) {
            if (all_ws(t))
                return;
            ensure_html();
        }
        if (!body_ && top()->is_element("html")) {
            if (all_ws(t)) {
                append_text(*top(), t);
                return;
            }
            ensure_body();
        } else if (!body_ && top()->is_element("head")) {
            if (all_ws(t)) {
                append_text(*top(), t);
                return;
            }
            stack_.pop_back();
            ensure_body();
        }
        append_text(*top(), t);
    }

    void comment(std::string data)
    {
        Node& parent = stack_.empty() ? doc_.root : *top();
        parent.children.push_back(Node::comment(std::move(data)));
    }

    void doctype(std::string name, std::size_t offset)
    {
        if (!stack_.empty() || !doc_.doctype.empty() || !doc_.root.children.empty()) {
            issue(ParseIssue::Kind::bogus_markup, offset, "misplaced doctype");
            return;
        }
        doc_.doctype = std::move(name);
    }

    // Returns true when the element was pushed (so raw text may follow).
    bool start(StartTag tag)
    {
        const std::string& name = tag.name;
        if (name == "html") {
            if (stack_.empty() && !html_exists()) {
                doc_.root.children.push_back(Node::element("html", std::move(tag.attrs)));
                stack_.push_back(&doc_.root.children.back());
            } else {
                merge_attrs(*html_mut(), tag.attrs);
                issue(ParseIssue::Kind::bogus_markup, tag.offset, "repeated <html>");
            }
            return false;
        }
        ensure_html();
        if (name == "head") {
            if (!body_ && !head_exists()) {
                html_mut()->children.push_back(Node::element("head", std::move(tag.attrs)));
                stack_.resize(1);
                stack_.push_back(&html_mut()->children.back());
            } else {
                issue(ParseIssue::Kind::bogus_markup, tag.offset, "misplaced <head>");
            }
            return false;
        }
        if (name == "body") {
            if (body_) {
                merge_attrs(*body_, tag.attrs);
                issue(ParseIssue::Kind::bogus_markup, tag.offset, "repeated <body>");
            } else {
                stack_.resize(1);
                html_mut()->children.push_back(Node::element("body", std::move(tag.attrs)));
                body_ = &html_mut()->children.back();
                stack_.push_back(body_);
            }
            return false;
        }
        if (!body_) {
            if (is_head_content(name)) {
                if (!top()->is_element("head")) {
                    Node* head = head_mut();
                    if (!head) {
                        html_mut()->children.push_back(Node::element("head"));
                        head = &html_mut()->children.back();
                    }
                    stack_.resize(1);
                    stack_.push_back(head);
                }
            } else {
                ensure_body();
            }
        }
        close_implied(name, tag.offset);
        bool foreign = in_foreign_content() || name == "svg" || name == "math";
        top()->children.push_back(Node::element(name, std::move(tag.attrs)));
        if (is_void_element(name))
            return false;
        if (tag.self_closing && foreign)
            return false;
        if (tag.self_closing)
            issue(ParseIssue::Kind::bogus_markup, tag.offset, "self-closing syntax on <" + name + ">");
        stack_.push_back(&top()->children.back());
        return true;
    }

    void end(const std::string& name, std::size_t offset)
    {
        if (name == "html" || name == "body")
            return; // trailing content keeps flowing into body
        if (name == "head") {
            if (!stack_.empty() && top()->is_element("head"))
                stack_.pop_back();
            else
                issue(ParseIssue::Kind::stray_end_tag, offset, "</head>");
            return;
        }
        for (std::size_t i = stack_.size(); i-- > 0;) {
            Node* n = stack_[i];
            if (n->is_element("html") || n->is_element("body"))
                break;
            if (n->name == name) {
                while (stack_.size() > i + 1) {
                    issue(ParseIssue::Kind::unclosed_element, offset, "<" + top()->name + "> closed by </" + name + ">");
                    stack_.pop_back();
                }
                stack_.pop_back();
                return;
            }
        }
        issue(ParseIssue::Kind::stray_end_tag, offset, "</" + name + ">");
    }

    void finish(std::size_t offset)
    {
        while (!stack_.empty()) {
            const Node* n = top();
            if (!n->is_element("html") && !n->is_element("head") && !n->is_element("body"))
                issue(ParseIssue::Kind::unclosed_element, offset, "<" + n->name + "> open at end of input");
            stack_.pop_back();
        }
    }

    void issue(ParseIssue::Kind kind, std::size_t offset, std::string detail)
    {
        doc_.issues.push_back({kind, offset, std::move(detail)});
    }

    const Node* top_node() const { return stack_.empty() ? nullptr : stack_.back(); }

private:
    Node* top() { return stack_.back(); }

    bool html_exists() const
    {
        return std::any_of(doc_.root.children.begin(), doc_.root.children.end(), [](const Node& n) { return n.is_element("html"); });
    }

    Node* html_mut()
    {
        for (auto& c : doc_.root.children)
            if (c.is_element("html"))
                return &c;
        return nullptr;
    }

    bool head_exists() { return head_mut() != nullptr; }

    Node* head_mut()
    {
        if (Node* h = html_mut())
            for (auto& c : h->children)
                if (c.is_element("head"))
                    return &c;
        return nullptr;
    }

    void ensure_html()
    {
        if (!stack_.empty())
            return;
        Node* h = html_mut();
        if (!h) {
            doc_.root.children.push_back(Node::element("html"));
            h = &doc_.root.children.back();
        }
        stack_.push_back(h);
        if (body_)
            stack_.push_back(body_);
    }

    void ensure_body()
    {
        if (body_)
            return;
        stack_.resize(1);
        html_mut()->children.push_back(Node::element("body"));
        body_ = &html_mut()->children.back();
        stack_.push_back(body_);
    }

    static bool is_head_content(std::string_view name)
    {
        return name == "base" || name == "link" || name == "meta" || name == "style" || name == "script" || name == "title" ||
               name == "noscript";
    }

    static void append_text(Node& parent, std::string_view t)
    {
        if (!parent.children.empty() && parent.children.back().is_text())
            parent.children.back().text += t;
        else
            parent.children.push_back(Node::make_text(std::string(t)));
    }

    static void merge_attrs(Node& n, const std::vector<Attribute>& attrs)
    {
        for (const auto& a : attrs)
            if (!n.attribute(a.name))
                n.attributes.push_back(a);
    }

    bool in_foreign_content() const
    {
        return std::any_of(stack_.begin(), stack_.end(), [](const Node* n) { return n->name == "svg" || n->name == "math"; });
    }

    // Pops up to and including the nearest open element named in `targets`,
    // searching no further than an element named in `boundaries`.
    void close_nearest(std::initializer_list<std::string_view> targets, std::initializer_list<std::string_view> boundaries,
                       std::size_t offset, const std::string& cause)
    {
        for (std::size_t i = stack_.size(); i-- > 0;) {
            const std::string& n = stack_[i]->name;
            if (n == "html" || n == "body")
                return;
            if (std::find(boundaries.begin(), boundaries.end(), n) != boundaries.end())
                return;
            if (std::find(targets.begin(), targets.end(), n) != targets.end()) {
                while (stack_.size() > i) {
                    issue(ParseIssue::Kind::unclosed_element, offset, "<" + top()->name + "> closed by <" + cause + ">");
                    stack_.pop_back();
                }
                return;
            }
        }
    }

    void close_implied(const std::string& name, std::size_t offset)
    {
        static const std::set<std::string_view> closes_p = {
            "address", "article", "aside", "blockquote", "center", "details", "dialog", "dir", "div", "dl",
            "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6",
            "header", "hgroup", "hr", "main", "menu", "nav", "ol", "p", "pre", "section", "summary",
            "table", "ul", "li", "dd", "dt"};
        if (closes_p.count(name))
            close_nearest({"p"}, {"button", "table", "td", "th", "caption", "object", "li", "div", "section", "article", "nav",
                                  "header", "footer", "aside", "main", "form", "blockquote"},
                          offset, name);
        if (name.size() == 2 && name[0] == 'h' && name[1] >= '1' && name[1] <= '6' && !stack_.empty()) {
            const std::string& t = top()->name;
            if (t.size() == 2 && t[0] == 'h' && t[1] >= '1' && t[1] <= '6') {
                issue(ParseIssue::Kind::unclosed_element, offset, "<" + t + "> closed by <" + name + ">");
                stack_.pop_back();
            }
        }
        if (name == "li")
            close_nearest({"li"}, {"ul", "ol", "menu", "table", "td", "th"}, offset, name);
        else if (name == "dt" || name == "dd")
            close_nearest({"dt", "dd"}, {"dl", "table", "td", "th"}, offset, name);
        else if (name == "option" || name == "optgroup") {
            if (top()->is_element("option")) {
                issue(ParseIssue::Kind::unclosed_element, offset, "<option> closed by <" + name + ">");
                stack_.pop_back();
            }
        } else if (name == "tr")
            close_nearest({"tr"}, {"table"}, offset, name);
        else if (name == "td" || name == "th")
            close_nearest({"td", "th"}, {"tr", "table"}, offset, name);
        else if (name == "thead" || name == "tbody" || name == "tfoot")
            close_nearest({"thead", "tbody", "tfoot"}, {"table"}, offset, name);
        else if (name == "a")
            close_nearest({"a"}, {}, offset, name);
        else if (name == "button")
            close_nearest({"button"}, {}, offset, name);
    }

    HtmlDocument& doc_;
    std::vector<Node*> stack_;
    Node* body_ = nullptr;
};

// --- tokenizer -------------------------------------------------------------------

class Tokenizer {
public:
    Tokenizer(std::string_view src, TreeBuilder& builder) : s_(src), b_(builder) {}

    void run()
    {
        std::size_t text_start = 0;
        while (pos_ < s_.size()) {
            if (s_[pos_] != '<') {
                ++pos_;
                continue;
            }
            auto kind = classify();
            if (kind == Markup::none) {
                ++pos_; // literal '<'
                continue;
            }
            flush_text(text_start, pos_);
            consume(kind);
            text_start = pos_;
        }
        flush_text(text_start, s_.size());
        b_.finish(s_.size());
    }

    bool saw_content() const { return saw_content_; }

private:
    enum class Markup { none, comment, doctype, bogus, end_tag, start_tag };

    Markup classify() const
    {
        if (pos_ + 1 >= s_.size())
            return Markup::none;
        char c = s_[pos_ + 1];
        if (c == '!') {
            if (s_.compare(pos_, 4, "<!--") == 0)
                return Markup::comment;
            if (istarts_with(s_, pos_, "<!doctype"))
                return Markup::doctype;
            return Markup::bogus;
        }
        if (c == '?')
            return Markup::bogus;
        if (c == '/') {
            if (pos_ + 2 < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_ + 2])))
                return Markup::end_tag;
            return Markup::bogus;
        }
        if (std::isalpha(static_cast<unsigned char>(c)))
            return Markup::start_tag;
        return Markup::none;
    }

    void flush_text(std::size_t begin, std::size_t end)
    {
        if (end <= begin)
            return;
        auto raw = s_.substr(begin, end - begin);
        if (!all_ws(raw))
            saw_content_ = true;
        b_.text(decode_entities(raw), begin);
    }

    void consume(Markup kind)
    {
        const std::size_t at = pos_;
        switch (kind) {
        case Markup::comment: {
            std::size_t data_begin = pos_ + 4;
            if (s_.compare(data_begin, 1, ">") == 0) { // "<!-->"
                b_.comment("");
                pos_ = data_begin + 1;
                return;
            }
            auto end = s_.find("-->", data_begin);
            if (end == std::string_view::npos) {
                b_.issue(ParseIssue::Kind::unterminated_comment, at, "comment runs to end of input");
                b_.comment(std::string(s_.substr(data_begin)));
                pos_ = s_.size();
            } else {
                b_.comment(std::string(s_.substr(data_begin, end - data_begin)));
                pos_ = end + 3;
            }
            return;
        }
        case Markup::doctype: {
            auto end = s_.find('>', pos_);
            if (end == std::string_view::npos)
                end = s_.size();
            auto name = css::to_lower(css::trim(s_.substr(pos_ + 9, end - pos_ - 9)));
            b_.doctype(name.empty() ? "html" : name, at);
            pos_ = std::min(end + 1, s_.size());
            return;
        }
        case Markup::bogus: {
            auto end = s_.find('>', pos_);
            if (end == std::string_view::npos)
                end = s_.size();
            std::size_t data_begin = pos_ + 2;
            b_.issue(ParseIssue::Kind::bogus_markup, at, std::string(s_.substr(pos_, std::min<std::size_t>(end + 1, s_.size()) - pos_)));
            b_.comment(data_begin < end ? std::string(s_.substr(data_begin, end - data_begin)) : std::string());
            pos_ = std::min(end + 1, s_.size());
            return;
        }
        case Markup::end_tag: {
            std::size_t i = pos_ + 2;
            std::size_t name_begin = i;
            while (i < s_.size() && !is_ws(s_[i]) && s_[i] != '>' && s_[i] != '/')
                ++i;
            std::string name = css::to_lower(s_.substr(name_begin, i - name_begin));
            auto end = s_.find('>', i);
            pos_ = end == std::string_view::npos ? s_.size() : end + 1;
            saw_content_ = true;
            b_.end(name, at);
            return;
        }
        case Markup::start_tag: {
            StartTag tag = read_start_tag();
            saw_content_ = true;
            std::string name = tag.name;
            bool pushed = b_.start(std::move(tag));
            if (pushed && (is_raw_text_element(name) || is_rcdata_element(name)))
                read_raw_text(name);
            return;
        }
        case Markup::none: return;
        }
    }

    StartTag read_start_tag()
    {
        StartTag tag;
        tag.offset = pos_;
        std::size_t i = pos_ + 1;
        std::size_t name_begin = i;
        while (i < s_.size() && !is_ws(s_[i]) && s_[i] != '>' && s_[i] != '/')
            ++i;
        tag.name = css::to_lower(s_.substr(name_begin, i - name_begin));
        while (i < s_.size()) {
            while (i < s_.size() && is_ws(s_[i]))
                ++i;
            if (i >= s_.size())
                break;
            if (s_[i] == '>') {
                ++i;
                pos_ = i;
                return tag;
            }
            if (s_[i] == '/') {
                if (i + 1 < s_.size() && s_[i + 1] == '>') {
                    tag.self_closing = true;
                    pos_ = i + 2;
                    return tag;
                }
                ++i;
                continue;
            }
            std::size_t an_begin = i;
            ++i; // an attribute name may start with any non-terminator
            while (i < s_.size() && !is_ws(s_[i]) && s_[i] != '>' && s_[i] != '=' && s_[i] != '/')
                ++i;
            std::string aname = css::to_lower(s_.substr(an_begin, i - an_begin));
            std::size_t j = i;
            while (j < s_.size() && is_ws(s_[j]))
                ++j;
            std::string value;
            if (j < s_.size() && s_[j] == '=') {
                ++j;
                while (j < s_.size() && is_ws(s_[j]))
                    ++j;
                if (j < s_.size() && (s_[j] == '"' || s_[j] == '\'')) {
                    char q = s_[j];
                    auto close = s_.find(q, j + 1);
                    if (close == std::string_view::npos) {
                        b_.issue(ParseIssue::Kind::bogus_markup, j, "unterminated attribute value");
                        close = s_.size();
                    }
                    value = decode_entities(s_.substr(j + 1, close - j - 1));
                    i = std::min(close + 1, s_.size());
                } else {
                    std::size_t vb = j;
                    while (j < s_.size() && !is_ws(s_[j]) && s_[j] != '>')
                        ++j;
                    value = decode_entities(s_.substr(vb, j - vb));
                    i = j;
                }
            }
            bool dup = std::any_of(tag.attrs.begin(), tag.attrs.end(), [&](const Attribute& a) { return a.name == aname; });
            if (dup)
                b_.issue(ParseIssue::Kind::duplicate_attribute, an_begin, aname);
            else
                tag.attrs.push_back({std::move(aname), std::move(value)});
        }
        b_.issue(ParseIssue::Kind::bogus_markup, tag.offset, "start tag runs to end of input");
        pos_ = s_.size();
        return tag;
    }

    void read_raw_text(const std::string& name)
    {
        std::size_t i = pos_;
        std::size_t end = s_.size();
        while (true) {
            auto lt = s_.find("</", i);
            if (lt == std::string_view::npos)
                break;
            if (istarts_with(s_, lt + 2, name)) {
                std::size_t after = lt + 2 + name.size();
                if (after >= s_.size() || is_ws(s_[after]) || s_[after] == '>' || s_[after] == '/') {
                    end = lt;
                    break;
                }
            }
            i = lt + 2;
        }
        auto raw = s_.substr(pos_, end - pos_);
        if (!raw.empty())
            b_.text(is_rcdata_element(name) ? decode_entities(raw) : std::string(raw), pos_);
        pos_ = end; // the end tag, if any, is consumed by the main loop
    }

    std::string_view s_;
    TreeBuilder& b_;
    std::size_t pos_ = 0;
    bool saw_content_ = false;
};

// --- serialization -----------------------------------------------------------------

void serialize_node(const Node& n, const Node* parent, NodePath& path, std::string& out, std::map<NodePath, NodeSpan>* spans)
{
    NodeSpan span;
    span.begin = out.size();
    switch (n.kind) {
    case NodeKind::text:
        span.content_begin = out.size();
        if (parent && parent->is_element() && is_raw_text_element(parent->name))
            out += n.text;
        else
            out += escape_text(n.text);
        span.content_end = out.size();
        break;
    case NodeKind::comment:
        out += "<!--";
        span.content_begin = out.size();
        out += n.text;
        span.content_end = out.size();
        out += "-->";
        break;
    case NodeKind::element:
        out.push_back('<');
        out += n.name;
        for (const auto& a : n.attributes) {
            out.push_back(' ');
            out += a.name;
            out += "=\"";
            out += escape_attribute(a.value);
            out.push_back('"');
        }
        out.push_back('>');
        span.start_tag_end = out.size();
        span.content_begin = out.size();
        if (!is_void_element(n.name)) {
            for (std::uint32_t i = 0; i < n.children.size(); ++i) {
                path.push_back(i);
                serialize_node(n.children[i], &n, path, out, spans);
                path.pop_back();
            }
            span.content_end = out.size();
            out += "</";
            out += n.name;
            out.push_back('>');
        } else {
            span.content_end = out.size();
        }
        break;
    case NodeKind::document:
        for (std::uint32_t i = 0; i < n.children.size(); ++i) {
            path.push_back(i);
            serialize_node(n.children[i], &n, path, out, spans);
            path.pop_back();
        }
        break;
    }
    span.end = out.size();
    if (spans && n.kind != NodeKind::document)
        (*spans)[path] = span;
}

} // namespace

HtmlDocument parse(std::string_view text, std::string provenance)
{
    if (text.empty())
        throw HardParseFailure("empty input");
    HtmlDocument doc;
    doc.source = std::string(text);
    doc.provenance = std::move(provenance);
    if (auto bad = first_invalid_utf8(text))
        doc.issues.push_back({ParseIssue::Kind::invalid_utf8, *bad, "invalid UTF-8 byte sequence"});
    TreeBuilder builder(doc);
    Tokenizer tok(text, builder);
    tok.run();
    if (!tok.saw_content() || !doc.html())
        throw HardParseFailure("no root element could be recovered" + (doc.provenance.empty() ? std::string() : " from " + doc.provenance));
    return doc;
}

std::string serialize(const Node& node)
{
    std::string out;
    NodePath path;
    serialize_node(node, nullptr, path, out, nullptr);
    return out;
}

namespace {

std::string doctype_prefix(const HtmlDocument& doc)
{
    if (doc.doctype.empty())
        return {};
    return "<!DOCTYPE " + doc.doctype + ">\n";
}

} // namespace

std::string serialize(const HtmlDocument& doc)
{
    std::string out = doctype_prefix(doc);
    NodePath path;
    serialize_node(doc.root, nullptr, path, out, nullptr);
    return out;
}

SerializedDocument serialize_with_spans(const HtmlDocument& doc)
{
    SerializedDocument s;
    s.text = doctype_prefix(doc);
    NodePath path;
    serialize_node(doc.root, nullptr, path, s.text, &s.spans);
    return s;
}

void walk(const Node& root, const std::function<void(const Node&, const NodePath&)>& visit)
{
    NodePath path;
    std::function<void(const Node&)> rec = [&](const Node& n) {
        for (std::uint32_t i = 0; i < n.children.size(); ++i) {
            path.push_back(i);
            visit(n.children[i], path);
            rec(n.children[i]);
            path.pop_back();
        }
    };
    rec(root);
}

} // namespace refinekit::doc
