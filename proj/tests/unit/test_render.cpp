#include "support.hpp"

#include "refinekit/error.hpp"
#include "refinekit/io.hpp"
#include "refinekit/render/fixture_provider.hpp"
#include "refinekit/render/image.hpp"
#include "refinekit/render/raster_provider.hpp"
#include "refinekit/rng.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <thread>

using namespace refinekit;
using namespace refinekit::render;

namespace {

class CountingProvider final : public RenderProvider {
public:
    std::string name() const override { return "counting"; }
    RenderResult render(std::string_view html, const Viewport& vp) override
    {
        ++calls;
        return LayoutRasterProvider{}.render(html, vp);
    }
    std::atomic<int> calls{0};
};

} // namespace

TEST(PixelBudget, WorkedExample)
{
    EXPECT_EQ(fit_dimensions(2048, 1960), std::make_pair(1024, 980));
    EXPECT_EQ(fit_dimensions(1280, 720), std::make_pair(1280, 720));
    EXPECT_DOUBLE_EQ(budget_scale(1280, 720), 1.0);
}

TEST(PixelBudget, RandomDimensionsFit)
{
    Rng rng(1);
    for (int i = 0; i < 500; ++i) {
        const int w = static_cast<int>(rng.uniform_int(1, 6000));
        const int h = static_cast<int>(rng.uniform_int(1, 20000));
        auto [fw, fh] = fit_dimensions(w, h);
        EXPECT_LE(static_cast<std::size_t>(fw) * static_cast<std::size_t>(fh), kPixelBudget);
        EXPECT_GE(fw, 1);
        EXPECT_GE(fh, 1);
        EXPECT_EQ(fit_dimensions(fw, fh), std::make_pair(fw, fh));
    }
}

TEST(PixelBudget, ImageDownscale)
{
    RasterImage big(2048, 1960, {10, 20, 30});
    auto small = fit_pixel_budget(big);
    EXPECT_EQ(small.width, 1024);
    EXPECT_EQ(small.height, 980);
    EXPECT_EQ(small.pixel(500, 500), (css::Rgb{10, 20, 30}));
    EXPECT_EQ(fit_pixel_budget(small), small);
}

TEST(Image, ResampleAveragesAreas)
{
    RasterImage img(2, 1);
    img.set_pixel(0, 0, {0, 0, 0});
    img.set_pixel(1, 0, {200, 100, 50});
    auto one = resample(img, 1, 1);
    EXPECT_EQ(one.pixel(0, 0), (css::Rgb{100, 50, 25}));
}

TEST(Image, FillRectClips)
{
    RasterImage img(4, 4);
    img.fill_rect(-2, -2, 2, 2, {0, 0, 0});
    EXPECT_EQ(img.pixel(1, 1), (css::Rgb{0, 0, 0}));
    EXPECT_EQ(img.pixel(2, 2), (css::Rgb{255, 255, 255}));
}

TEST(Image, PngRoundTrip)
{
    RasterImage img(37, 11);
    Rng rng(7);
    for (auto& p : img.pixels)
        p = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    EXPECT_EQ(decode_png(encode_png(img)), img);
    testkit::TempDir dir("png");
    write_png(dir / "a/b.png", img);
    EXPECT_EQ(read_png(dir / "a/b.png"), img);
    std::vector<std::uint8_t> junk{1, 2, 3};
    EXPECT_THROW(decode_png(junk), FormatError);
}

TEST(Image, BlankAndDiff)
{
    RasterImage img(100, 100);
    EXPECT_TRUE(is_blank(img));
    img.fill_rect(0, 0, 4, 4, {0, 0, 0});
    EXPECT_TRUE(is_blank(img));
    img.fill_rect(10, 10, 20, 20, {0, 0, 0});
    EXPECT_FALSE(is_blank(img));
    RasterImage other(100, 100);
    EXPECT_EQ(differing_pixels(img, other), 116u);
    EXPECT_EQ(differing_pixels(img, RasterImage(10, 10)), 10000u);
}

TEST(Raster, ColorBoxBlock)
{
    auto r = LayoutRasterProvider{}.render(
        testkit::minimal_page("<div style=\"background:#ff0000;color:#0000ff;width:200px;height:80px\">OK</div>"), Viewport{});
    ASSERT_EQ(r.blocks.size(), 1u);
    EXPECT_EQ(r.blocks[0].text, "OK");
    EXPECT_EQ(r.blocks[0].color, (css::Rgb{0, 0, 255}));
    EXPECT_EQ(r.image.width, 1280);
    EXPECT_EQ(r.image.height, 720);
    EXPECT_EQ(r.image.pixel(150, 60), (css::Rgb{255, 0, 0}));
}

TEST(Raster, DeterministicAndNonBlankOnCorpus)
{
    LayoutRasterProvider p;
    for (const auto& item : testkit::corpus()) {
        auto a = render::render(item.doc, p);
        auto b = render::render(item.doc, p);
        EXPECT_EQ(a.image, b.image) << item.id;
        EXPECT_EQ(a.blocks, b.blocks) << item.id;
        EXPECT_FALSE(is_blank(a.image)) << item.id;
        EXPECT_FALSE(a.blocks.empty()) << item.id;
    }
}

TEST(Raster, TallPagesGrow)
{
    std::string body;
    for (int i = 0; i < 60; ++i)
        body += "<p>line " + std::to_string(i) + "</p>";
    auto r = LayoutRasterProvider{}.render(testkit::minimal_page(body), Viewport{});
    EXPECT_GT(r.image.height, 720);
}

TEST(RenderHtml, RejectsIncompleteDocuments)
{
    LayoutRasterProvider p;
    EXPECT_THROW(render_html("<html><body><div>", p), IncompleteDocument);
}

TEST(Fixture, MissWithoutRecordThroughThrows)
{
    testkit::TempDir dir("fx");
    FixtureRenderProvider fx(dir.path());
    EXPECT_THROW(fx.render(testkit::minimal_page("<p>x</p>"), Viewport{}), ProviderUnavailable);
}

TEST(Fixture, RecordThenReplayByteIdentical)
{
    testkit::TempDir dir("fx");
    auto counting = std::make_shared<CountingProvider>();
    const auto html = testkit::minimal_page("<h1>Title</h1><p>body text</p>");
    FixtureRenderProvider rec(dir.path(), counting);
    EXPECT_FALSE(rec.contains(html, Viewport{}));
    auto first = rec.render(html, Viewport{});
    EXPECT_TRUE(rec.contains(html, Viewport{}));
    auto again = rec.render(html, Viewport{});
    EXPECT_EQ(counting->calls, 1);
    const auto key = fixture_key(html, Viewport{});
    const auto png = read_binary(dir / (key + ".png"));

    FixtureRenderProvider replay(dir.path());
    auto r = replay.render(html, Viewport{});
    EXPECT_EQ(r.image, first.image);
    EXPECT_EQ(r.blocks, first.blocks);
    EXPECT_EQ(again.image, first.image);
    EXPECT_EQ(read_binary(dir / (key + ".png")), png);
}

TEST(Fixture, KeyDependsOnViewport)
{
    EXPECT_NE(fixture_key("x", Viewport{}), fixture_key("x", Viewport{1024, 768}));
    EXPECT_EQ(fixture_key("x", Viewport{}).size(), 64u);
}

TEST(Pool, ConcurrentCallsMatchSerial)
{
    std::vector<std::unique_ptr<RenderProvider>> sessions;
    for (int i = 0; i < 3; ++i)
        sessions.push_back(std::make_unique<LayoutRasterProvider>());
    RenderPool pool(std::move(sessions));
    EXPECT_EQ(pool.size(), 3u);
    const auto& docs = testkit::corpus();
    std::vector<RasterImage> got(docs.size());
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < 4; ++t)
        threads.emplace_back([&, t] {
            for (std::size_t i = t; i < docs.size(); i += 4)
                got[i] = pool.render(doc::serialize(docs[i].doc)).image;
        });
    for (auto& t : threads)
        t.join();
    LayoutRasterProvider serial;
    for (std::size_t i = 0; i < docs.size(); ++i)
        EXPECT_EQ(got[i], render::render(docs[i].doc, serial).image) << docs[i].id;
}

TEST(Blocks, ScaleAndJson)
{
    Block b{"0/1/2", {10, 20, 30, 40}, "Say \"hi\"", {1, 2, 3}};
    auto s = scale_blocks({b}, 0.5);
    EXPECT_EQ(s[0].bbox, (BBox{5, 10, 15, 20}));
    EXPECT_EQ(block_from_json(block_to_json(b)), b);
    testkit::TempDir dir("blk");
    write_blocks(dir / "b.jsonl", {b, b});
    EXPECT_EQ(read_blocks(dir / "b.jsonl"), (BlockExtract{b, b}));
    EXPECT_THROW(block_from_json("{\"path\":1}"), FormatError);
    EXPECT_EQ(path_to_string({1, 0, 12}), "1/0/12");
}
