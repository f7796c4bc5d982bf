#include "fake_devtools.hpp"
#include "support.hpp"

#include "refinekit/error.hpp"
#include "refinekit/render/cdp_provider.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace refinekit;
using namespace refinekit::render;
using refinekit::testkit::FakeDevtools;

namespace {

CdpRenderProvider::Options options(const FakeDevtools& fake, bool discover = false)
{
    CdpRenderProvider::Options o;
    o.port = fake.port();
    if (!discover)
        o.target_path = FakeDevtools::page_path();
    o.timeout = std::chrono::milliseconds(2000);
    return o;
}

} // namespace

TEST(Cdp, RendersThroughProtocol)
{
    FakeDevtools fake;
    fake.set_page_height(1500);
    fake.set_blocks(R"([{"path":"1/0","bbox":[8,8,100,20],"text":"Hello","color":[0,0,0]}])");
    CdpRenderProvider p(options(fake));
    const auto html = testkit::minimal_page("<p>Hello</p>");
    auto r = p.render(html, Viewport{});
    EXPECT_EQ(r.image.width, 1280);
    EXPECT_EQ(r.image.height, 1500);
    EXPECT_EQ(r.image.pixel(100, 100), (css::Rgb{30, 60, 90}));
    ASSERT_EQ(r.blocks.size(), 1u);
    EXPECT_EQ(r.blocks[0].text, "Hello");
    EXPECT_EQ(r.blocks[0].bbox, (BBox{8, 8, 100, 20}));
    EXPECT_EQ(fake.last_html(), html);
    auto m = fake.methods();
    EXPECT_NE(std::find(m.begin(), m.end(), "Page.navigate"), m.end());
    EXPECT_NE(std::find(m.begin(), m.end(), "Page.captureScreenshot"), m.end());
    EXPECT_EQ(fake.discoveries(), 0);
}

TEST(Cdp, ShortPagesUseViewportHeight)
{
    FakeDevtools fake;
    fake.set_page_height(100);
    CdpRenderProvider p(options(fake));
    EXPECT_EQ(p.render(testkit::minimal_page("<p>x</p>"), Viewport{}).image.height, 720);
}

TEST(Cdp, SessionIsReused)
{
    FakeDevtools fake;
    CdpRenderProvider p(options(fake, true));
    p.render(testkit::minimal_page("<p>a</p>"), Viewport{});
    p.render(testkit::minimal_page("<p>b</p>"), Viewport{});
    EXPECT_EQ(fake.discoveries(), 1);
    EXPECT_EQ(fake.last_html(), testkit::minimal_page("<p>b</p>"));
}

TEST(Cdp, StallTimesOut)
{
    FakeDevtools fake;
    fake.set_behavior(FakeDevtools::Behavior::stall_navigate);
    auto o = options(fake);
    o.timeout = std::chrono::milliseconds(200);
    CdpRenderProvider p(o);
    EXPECT_THROW(p.render(testkit::minimal_page("<p>x</p>"), Viewport{}), RenderTimeout);
}

TEST(Cdp, ProtocolErrorsAreUnavailable)
{
    for (auto b : {FakeDevtools::Behavior::error_evaluate, FakeDevtools::Behavior::garbage_screenshot}) {
        FakeDevtools fake;
        fake.set_behavior(b);
        CdpRenderProvider p(options(fake));
        EXPECT_THROW(p.render(testkit::minimal_page("<p>x</p>"), Viewport{}), ProviderUnavailable);
    }
}

TEST(Cdp, MalformedBlocksAreUnavailable)
{
    FakeDevtools fake;
    fake.set_blocks(R"([{"path":"1"}])");
    CdpRenderProvider p(options(fake));
    EXPECT_THROW(p.render(testkit::minimal_page("<p>x</p>"), Viewport{}), ProviderUnavailable);
}

TEST(Cdp, NoBrowserIsUnavailable)
{
    CdpRenderProvider::Options o;
    o.port = "1";
    o.timeout = std::chrono::milliseconds(500);
    CdpRenderProvider p(o);
    EXPECT_THROW(p.render(testkit::minimal_page("<p>x</p>"), Viewport{}), ProviderUnavailable);
}
