#include "mock_embed_server.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include "refinekit/error.hpp"
#include "refinekit/render/raster_provider.hpp"
#include "refinekit/similarity/embedding.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <thread>

using namespace refinekit;
using namespace refinekit::similarity;
using render::RasterImage;
using testkit::MockEmbedServer;

namespace {

double norm(const Embedding& v)
{
    double s = 0;
    for (double x : v)
        s += x * x;
    return std::sqrt(s);
}

RemoteEmbedder::Options remote(const MockEmbedServer& server, int in_flight = 4)
{
    RemoteEmbedder::Options o;
    o.endpoint = server.endpoint();
    o.timeout = std::chrono::milliseconds(2000);
    o.max_in_flight = in_flight;
    return o;
}

RasterImage page(const std::string& body) { return render::LayoutRasterProvider{}.render(testkit::minimal_page(body), {}).image; }

} // namespace

TEST(Fallback, SolidImagesByHand)
{
    auto black = fallback_embed(RasterImage(64, 64, {0, 0, 0}));
    ASSERT_EQ(black.size(), kFallbackDim);
    for (std::size_t i = 0; i < black.size(); ++i)
        EXPECT_EQ(black[i], i == kFallbackBiasIndex ? 1.0 : 0.0) << i;

    // White: 64 cells with mean RGB = 1 plus the bias, flat otherwise.
    auto white = fallback_embed(RasterImage(64, 64));
    const double k = 1 / std::sqrt(193.0);
    for (int c = 0; c < 64; ++c)
        for (int j = 0; j < 6; ++j) {
            EXPECT_NEAR(white[static_cast<std::size_t>(c * 6 + j)], j < 3 ? k : 0.0, 1e-15);
        }
    EXPECT_NEAR(white[kFallbackBiasIndex], k, 1e-15);
    EXPECT_NEAR(cosine(black, white), k, 1e-15);
}

TEST(Fallback, CheckerboardCell)
{
    // 16x16 checkerboard: each 2x2 cell has luminance std 0.5 and every step
    // of 1.
    RasterImage img(16, 16, {0, 0, 0});
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            if ((x + y) % 2)
                img.set_pixel(x, y, {255, 255, 255});
    auto v = fallback_embed(img);
    const double raw[6] = {0.5, 0.5, 0.5, 0.5, 1.0, 1.0};
    double n2 = 1;
    for (double r : raw)
        n2 += 64 * r * r;
    for (int j = 0; j < 6; ++j) {
        EXPECT_NEAR(v[static_cast<std::size_t>(j)], raw[j] / std::sqrt(n2), 1e-12);
    }
}

TEST(Fallback, UnitNormAndDeterministic)
{
    for (const auto& item : testkit::corpus()) {
        auto img = render::render(item.doc, testkit::fixture_renderer()).image;
        auto a = fallback_embed(img);
        EXPECT_NEAR(norm(a), 1.0, 1e-12);
        EXPECT_EQ(a, fallback_embed(img));
        FallbackEmbedder e;
        EXPECT_NEAR(similarity::similarity(img, img, e), 1.0, 1e-12);
    }
}

TEST(Fallback, DifferentPagesScoreBelowOne)
{
    FallbackEmbedder e;
    auto a = page("<h1 style=\"color:#c00\">Sale</h1><p>Everything must go</p>");
    auto b = page("<div style=\"background:#003;height:400px\"></div>");
    const double s = similarity::similarity(a, b, e);
    EXPECT_LT(s, 0.99);
    EXPECT_GE(s, 0.0);
    EXPECT_NEAR(s, testkit::oracle::clamped_cosine(fallback_embed(a), fallback_embed(b)), 1e-14);
}

TEST(Cosine, EdgeCases)
{
    EXPECT_EQ(cosine({0, 0}, {1, 0}), 0.0);
    EXPECT_NEAR(cosine({1, 0}, {-1, 0}), -1.0, 1e-15);
    EXPECT_THROW(cosine({1}, {1, 0}), std::invalid_argument);
}

TEST(Mask, FillsWithFrameMedian)
{
    RasterImage img(20, 20, {200, 200, 200});
    img.fill_rect(5, 5, 10, 10, {0, 0, 0});
    img.set_pixel(3, 3, {10, 10, 10});
    render::Block b{"1", {5.2, 5.5, 4.5, 4.0}, "x", {0, 0, 0}};
    auto out = mask_text_regions(img, {b});
    for (int y = 5; y < 10; ++y)
        for (int x = 5; x < 10; ++x) {
            EXPECT_EQ(out.pixel(x, y), (css::Rgb{200, 200, 200}));
        }
    EXPECT_EQ(out.pixel(3, 3), (css::Rgb{10, 10, 10}));
    EXPECT_EQ(mask_text_regions(img, {}), img);
}

TEST(Mask, WholeImageBoxUsesInnerRim)
{
    RasterImage img(10, 10, {50, 60, 70});
    img.fill_rect(2, 2, 8, 8, {0, 0, 0});
    auto out = mask_text_regions(img, {render::Block{"1", {0, 0, 10, 10}, "x", {}}});
    EXPECT_EQ(out, RasterImage(10, 10, {50, 60, 70}));
}

TEST(Remote, HealthAndEmbed)
{
    MockEmbedServer server;
    RemoteEmbedder e(remote(server));
    server.set_ready(false);
    EXPECT_THROW(e.health(), ProviderUnavailable);
    server.set_ready(true);
    auto h = e.health();
    EXPECT_EQ(h.status, "ok");
    EXPECT_EQ(h.dim, 512u);
    EXPECT_EQ(e.dimension(), 512u);
    RasterImage img(30, 30, {1, 2, 3});
    auto v = e.embed(img);
    EXPECT_EQ(v.size(), 512u);
    EXPECT_NEAR(norm(v), 1.0, 1e-9);
    EXPECT_EQ(e.embed(img), v);
    EXPECT_NE(e.embed(RasterImage(30, 30)), v);
    EXPECT_EQ(server.embed_calls(), 3);
}

TEST(Remote, FaultsAreUnavailable)
{
    for (auto f : {MockEmbedServer::Fault::bad_norm, MockEmbedServer::Fault::bad_checksum, MockEmbedServer::Fault::short_vector,
                   MockEmbedServer::Fault::http_500}) {
        MockEmbedServer server;
        server.set_fault(f);
        RemoteEmbedder e(remote(server));
        EXPECT_THROW(e.embed(RasterImage(8, 8)), ProviderUnavailable) << static_cast<int>(f);
    }
}

TEST(Remote, SlowReplyTimesOut)
{
    MockEmbedServer server;
    server.set_fault(MockEmbedServer::Fault::slow);
    auto o = remote(server);
    o.timeout = std::chrono::milliseconds(100);
    RemoteEmbedder e(o);
    EXPECT_THROW(e.embed(RasterImage(8, 8)), ProviderUnavailable);
}

TEST(Remote, DimensionChangeIsRejected)
{
    MockEmbedServer server;
    RemoteEmbedder e(remote(server));
    e.embed(RasterImage(8, 8));
    server.set_dim(256);
    EXPECT_THROW(e.embed(RasterImage(9, 9)), ProviderUnavailable);
}

TEST(Remote, UnreachableOrInvalidEndpoint)
{
    RemoteEmbedder::Options o;
    o.endpoint = "http://127.0.0.1:1";
    o.timeout = std::chrono::milliseconds(300);
    EXPECT_THROW(RemoteEmbedder(o).embed(RasterImage(8, 8)), ProviderUnavailable);
    o.endpoint = "not a url";
    EXPECT_THROW(RemoteEmbedder(o).embed(RasterImage(8, 8)), ProviderUnavailable);
}

TEST(Remote, ConcurrencyIsBounded)
{
    MockEmbedServer server;
    server.set_fault(MockEmbedServer::Fault::slow);
    auto o = remote(server, 2);
    RemoteEmbedder e(o);
    std::vector<std::thread> threads;
    for (int i = 0; i < 6; ++i)
        threads.emplace_back([&, i] { e.embed(RasterImage(8 + i, 8)); });
    for (auto& t : threads)
        t.join();
    EXPECT_EQ(server.embed_calls(), 6);
    EXPECT_LE(server.max_concurrent(), 2);
    EXPECT_GE(server.max_concurrent(), 1);
}

TEST(MakeEmbedder, Selection)
{
    EXPECT_EQ(make_embedder("fallback")->name(), "fallback");
    EXPECT_EQ(make_embedder("")->name(), "fallback");
    EXPECT_NE(make_embedder("http://127.0.0.1:1")->name(), "fallback");
}
