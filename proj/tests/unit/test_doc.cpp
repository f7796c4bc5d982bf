#include "support.hpp"

#include "refinekit/doc/css.hpp"
#include "refinekit/doc/html_document.hpp"
#include "refinekit/doc/preprocess.hpp"
#include "refinekit/error.hpp"

#include <gtest/gtest.h>

#include <regex>

using namespace refinekit;
using namespace refinekit::doc;

namespace {

std::size_t count_elements(const Node& root)
{
    std::size_t n = 0;
    walk(root, [&](const Node& x, const NodePath&) { n += x.is_element() ? 1 : 0; });
    return n;
}

} // namespace

TEST(Parse, MinimalDocumentHasOneParagraph)
{
    auto d = parse("<html><body><p>hi</p></body></html>");
    ASSERT_NE(d.body(), nullptr);
    ASSERT_EQ(d.body()->children.size(), 1u);
    const auto& p = d.body()->children[0];
    EXPECT_TRUE(p.is_element("p"));
    EXPECT_EQ(p.text_content(), "hi");
    EXPECT_EQ(d.repaired_tags(), 0u);
}

TEST(Parse, UnclosedParagraphIsRepaired)
{
    auto d = parse("<p>unclosed");
    ASSERT_NE(d.body(), nullptr);
    EXPECT_EQ(d.body()->children.at(0).text_content(), "unclosed");
    auto s = sanitize(d);
    EXPECT_EQ(s.report.repaired_tags, 1u);
    EXPECT_FALSE(s.report.rejected);
}

TEST(Parse, ImplicitCloseOfSiblingParagraphs)
{
    auto d = parse("<html><body><p>a<p>b</body></html>");
    ASSERT_EQ(d.body()->children.size(), 2u);
    EXPECT_EQ(d.body()->children[1].text_content(), "b");
}

TEST(Parse, StrayEndTagIsRecordedNotDropped)
{
    auto d = parse("<html><body><p>x</span></p></body></html>");
    EXPECT_GE(d.repaired_tags(), 1u);
    ASSERT_FALSE(d.issues.empty());
    EXPECT_EQ(d.issues[0].kind, ParseIssue::Kind::stray_end_tag);
}

TEST(Parse, RawTextElementsKeepMarkup)
{
    auto d = parse("<html><head><style>p > a { color: red }</style></head><body></body></html>");
    ASSERT_NE(d.head(), nullptr);
    EXPECT_EQ(d.head()->children.at(0).children.at(0).text, "p > a { color: red }");
}

TEST(Parse, EmptyInputIsHardFailure)
{
    EXPECT_THROW(parse(""), HardParseFailure);
    EXPECT_THROW(parse("   \n "), HardParseFailure);
}

TEST(Serialize, FixpointOverCorpus)
{
    for (const auto& item : testkit::corpus()) {
        auto once = serialize(item.doc);
        EXPECT_EQ(serialize(parse(once)), once) << item.id;
    }
}

TEST(Serialize, FixpointOverRawFixtures)
{
    for (const auto& e : std::filesystem::directory_iterator(testkit::corpus_dir())) {
        auto once = serialize(parse(testkit::read_fixture("corpus/" + e.path().filename().string())));
        EXPECT_EQ(serialize(parse(once)), once) << e.path();
    }
}

TEST(Serialize, SpansCoverEveryNode)
{
    const auto& d = testkit::corpus().front().doc;
    auto s = serialize_with_spans(d);
    EXPECT_EQ(s.text, serialize(d));
    walk(d.root, [&](const Node& n, const NodePath& p) {
        auto it = s.spans.find(p);
        ASSERT_NE(it, s.spans.end());
        EXPECT_EQ(s.text.substr(it->second.begin, it->second.end - it->second.begin), serialize(n));
    });
}

TEST(Sanitize, RemovesScriptElement)
{
    auto s = sanitize(parse("<html><body><p>x</p><script>alert(1)</script></body></html>"));
    EXPECT_EQ(s.report.removed_scripts, 1u);
    EXPECT_EQ(serialize(s.doc).find("script"), std::string::npos);
}

TEST(Sanitize, RemovesRemoteStylesheetLink)
{
    auto s = sanitize(parse("<html><head><link rel=\"stylesheet\" href=\"https://cdn.example.com/a.css\"></head>"
                            "<body><p>x</p></body></html>"));
    EXPECT_EQ(s.report.removed_external_refs, 1u);
    EXPECT_EQ(serialize(s.doc).find("link"), std::string::npos);
    ASSERT_EQ(s.report.external_urls.size(), 1u);
    EXPECT_EQ(s.report.external_urls[0], "https://cdn.example.com/a.css");
}

TEST(Sanitize, RemovesHandlersAndScriptUrls)
{
    auto s = sanitize(parse("<html><body><button onclick=\"go()\">b</button><a href=\"javascript:void(0)\">a</a></body></html>"));
    EXPECT_EQ(s.report.removed_scripts, 2u);
    auto text = serialize(s.doc);
    EXPECT_EQ(text.find("onclick"), std::string::npos);
    EXPECT_EQ(text.find("javascript:"), std::string::npos);
}

TEST(Sanitize, CleanDocumentIsUnchanged)
{
    auto d = parse("<!DOCTYPE html>\n<html><head></head><body><p style=\"color:red\">x</p></body></html>");
    auto s = sanitize(d);
    EXPECT_EQ(serialize(s.doc), serialize(d));
    EXPECT_EQ(s.report, SanitizeReport{});
}

TEST(Sanitize, RejectsEmptyBody)
{
    auto s = sanitize(parse("<html><body>   </body></html>"));
    EXPECT_TRUE(s.report.rejected);
    EXPECT_FALSE(s.report.reason.empty());
}

TEST(Sanitize, CorpusScriptCountsMatchGroundTruth)
{
    // 10_weather: one script element and one onclick.
    // 14_inbox: one onclick and one script element.
    for (const char* name : {"10_weather.html", "14_inbox.html"}) {
        auto s = sanitize(parse(testkit::read_fixture(std::string("corpus/") + name)));
        EXPECT_EQ(s.report.removed_scripts, 2u) << name;
        EXPECT_EQ(s.report.removed_external_refs, 0u) << name;
    }
}

TEST(Placeholders, ReplacesSourceAndKeepsDimensions)
{
    auto d = substitute_placeholders(parse("<html><body><img src=\"http://x/p.png\" width=\"300\" height=\"200\"></body></html>"));
    const auto& img = d.body()->children.at(0);
    EXPECT_EQ(*img.attribute("src"), "[Placeholder]");
    EXPECT_EQ(*img.attribute("width"), "300");
    EXPECT_EQ(*img.attribute("height"), "200");
}

TEST(Placeholders, DimensionsFromStyle)
{
    auto d = substitute_placeholders(parse("<html><body><img src=\"a.png\" style=\"width:120px;height:80px\"></body></html>"));
    const auto& img = d.body()->children.at(0);
    EXPECT_EQ(*img.attribute("width"), "120");
    EXPECT_EQ(*img.attribute("height"), "80");
}

TEST(Placeholders, DefaultDimensions)
{
    auto d = substitute_placeholders(parse("<html><body><img src=\"a.png\"></body></html>"));
    const auto& img = d.body()->children.at(0);
    EXPECT_EQ(*img.attribute("width"), "100");
    EXPECT_EQ(*img.attribute("height"), "100");
}

TEST(Placeholders, NoImagesIsIdentity)
{
    auto d = parse("<html><body><p>x</p></body></html>");
    EXPECT_EQ(serialize(substitute_placeholders(d)), serialize(d));
}

TEST(Placeholders, NoUrlBearingSourcesInCorpus)
{
    std::regex url_src(R"(src="(?!\[Placeholder\]"))");
    for (const auto& item : testkit::corpus())
        EXPECT_FALSE(std::regex_search(serialize(item.doc), url_src)) << item.id;
}

TEST(IsComplete, Cases)
{
    EXPECT_TRUE(is_complete("<html>...</html>"));
    EXPECT_TRUE(is_complete("<HTML lang=\"en\"><body></HTML>"));
    EXPECT_TRUE(is_complete("junk <html> <<< </html> junk"));
    EXPECT_FALSE(is_complete("<html><body>..."));
    EXPECT_FALSE(is_complete(""));
    EXPECT_FALSE(is_complete("</html>"));
    EXPECT_FALSE(is_complete("<htmlx></html>"));
}

TEST(Normalize, StyleOrderIsCanonical)
{
    auto a = normalize(parse("<html><body><p style=\"color:red;margin:0\">x</p></body></html>"));
    auto b = normalize(parse("<html><body><p style=\"margin:0;color:red\">x</p></body></html>"));
    EXPECT_EQ(serialize(a), serialize(b));
}

TEST(Normalize, AttributeOrderIsCanonical)
{
    auto a = normalize(parse("<html><body><a id=\"k\" class=\"c\" href=\"#\">x</a></body></html>"));
    auto b = normalize(parse("<html><body><a href=\"#\" class=\"c\" id=\"k\">x</a></body></html>"));
    EXPECT_EQ(serialize(a), serialize(b));
}

TEST(Normalize, IdempotentAndShapePreservingOverCorpus)
{
    for (const auto& item : testkit::corpus()) {
        auto again = normalize(item.doc);
        EXPECT_EQ(serialize(again), serialize(item.doc)) << item.id;
        EXPECT_EQ(count_elements(again.root), count_elements(item.doc.root)) << item.id;
        EXPECT_EQ(again.root.text_content(), item.doc.root.text_content()) << item.id;
    }
}

TEST(Normalize, ShapePreservedFromRaw)
{
    for (const auto& e : std::filesystem::directory_iterator(testkit::corpus_dir())) {
        auto d = parse(testkit::read_fixture("corpus/" + e.path().filename().string()));
        auto n = normalize(d);
        EXPECT_EQ(count_elements(n.root), count_elements(d.root)) << e.path();
    }
}

TEST(Css, DeclarationsParseAndSerialize)
{
    auto d = css::parse_declarations(" Color : red ; background: url(\"a;b\") ; junk ; margin:0 ");
    ASSERT_EQ(d.size(), 3u);
    EXPECT_EQ(d[0].property, "color");
    EXPECT_EQ(d[1].value, "url(\"a;b\")");
    EXPECT_EQ(css::serialize_declarations(d), "color:red;background:url(\"a;b\");margin:0");
}

TEST(Css, CanonicalizeKeepsShorthandOrder)
{
    auto c = css::canonicalize(css::parse_declarations("margin-top:4px;color:red;margin:0"));
    // margin overrides margin-top entirely.
    EXPECT_EQ(css::serialize_declarations(c), "color:red;margin:0");
    auto k = css::canonicalize(css::parse_declarations("margin:0;margin-top:4px;color:red"));
    EXPECT_EQ(css::serialize_declarations(k), "color:red;margin:0;margin-top:4px");
}

TEST(Css, Colors)
{
    EXPECT_EQ(css::parse_color("#F5A623")->rgb, (css::Rgb{0xF5, 0xA6, 0x23}));
    EXPECT_EQ(css::parse_color("#abc")->rgb, (css::Rgb{0xAA, 0xBB, 0xCC}));
    EXPECT_EQ(css::parse_color("rgb(1, 2, 3)")->rgb, (css::Rgb{1, 2, 3}));
    EXPECT_EQ(css::parse_color("white")->rgb, (css::Rgb{255, 255, 255}));
    EXPECT_FALSE(css::parse_color("nonsense").has_value());
    auto c = css::Rgb{74, 144, 226};
    EXPECT_EQ(css::from_hsl(css::to_hsl(c)), c);
}

TEST(Css, StylesheetRuleSpans)
{
    std::string text = "/* c */ .a { color: red }\n@media (max-width: 600px) { .b { margin: 0 } }";
    auto sheet = css::parse_stylesheet(text);
    ASSERT_EQ(sheet.rules.size(), 2u);
    EXPECT_EQ(sheet.rules[0].selector, ".a");
    EXPECT_EQ(text.substr(sheet.rules[0].block_begin, sheet.rules[0].block_end - sheet.rules[0].block_begin), " color: red ");
    EXPECT_FALSE(sheet.rules[1].media.empty());
    EXPECT_EQ(css::canonicalize_stylesheet(css::canonicalize_stylesheet(text)), css::canonicalize_stylesheet(text));
}
