#include "oracles.hpp"
#include "support.hpp"

#include "refinekit/metrics/assignment.hpp"
#include "refinekit/metrics/color.hpp"
#include "refinekit/metrics/metrics.hpp"
#include "refinekit/perturb/perturbator.hpp"
#include "refinekit/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace refinekit;
using namespace refinekit::metrics;
using render::BBox;
using render::Block;

namespace {

struct CiedeCase {
    Lab x, y;
    double de;
};

const CiedeCase kCiede[] = {
    {{50, 2.6772, -79.7751}, {50, 0, -82.7485}, 2.0425},
    {{50, 3.1571, -77.2803}, {50, 0, -82.7485}, 2.8615},
    {{50, 2.8361, -74.0200}, {50, 0, -82.7485}, 3.4412},
    {{50, -1.3802, -84.2814}, {50, 0, -82.7485}, 1.0000},
    {{50, -1.1848, -84.8006}, {50, 0, -82.7485}, 1.0000},
    {{50, -0.9009, -85.5211}, {50, 0, -82.7485}, 1.0000},
    {{50, 0, 0}, {50, -1, 2}, 2.3669},
    {{50, -1, 2}, {50, 0, 0}, 2.3669},
    {{50, 2.49, -0.001}, {50, -2.49, 0.0009}, 7.1792},
    {{50, 2.49, -0.001}, {50, -2.49, 0.0010}, 7.1792},
    {{50, 2.49, -0.001}, {50, -2.49, 0.0011}, 7.2195},
    {{50, 2.49, -0.001}, {50, -2.49, 0.0012}, 7.2195},
    {{50, -0.001, 2.49}, {50, 0.0009, -2.49}, 4.8045},
    {{50, -0.001, 2.49}, {50, 0.0010, -2.49}, 4.8045},
    {{50, -0.001, 2.49}, {50, 0.0011, -2.49}, 4.7461},
    {{50, 2.5, 0}, {50, 0, -2.5}, 4.3065},
    {{50, 2.5, 0}, {73, 25, -18}, 27.1492},
    {{50, 2.5, 0}, {61, -5, 29}, 22.8977},
    {{50, 2.5, 0}, {56, -27, -3}, 31.9030},
    {{50, 2.5, 0}, {58, 24, 15}, 19.4535},
    {{50, 2.5, 0}, {50, 3.1736, 0.5854}, 1.0000},
    {{50, 2.5, 0}, {50, 3.2972, 0}, 1.0000},
    {{50, 2.5, 0}, {50, 1.8634, 0.5757}, 1.0000},
    {{50, 2.5, 0}, {50, 3.2592, 0.3350}, 1.0000},
    {{60.2574, -34.0099, 36.2677}, {60.4626, -34.1751, 39.4387}, 1.2644},
    {{63.0109, -31.0961, -5.8663}, {62.8187, -29.7946, -4.0864}, 1.2630},
    {{61.2901, 3.7196, -5.3901}, {61.4292, 2.2480, -4.9620}, 1.8731},
    {{35.0831, -44.1164, 3.7933}, {35.0232, -40.0716, 1.5901}, 1.8645},
    {{22.7233, 20.0904, -46.6940}, {23.0331, 14.9730, -42.5619}, 2.0373},
    {{36.4612, 47.8580, 18.3852}, {36.2715, 50.5065, 21.2231}, 1.4146},
    {{90.8027, -2.0831, 1.4410}, {91.1528, -1.6435, 0.0447}, 1.4441},
    {{90.9257, -0.5406, -0.9208}, {88.6381, -0.8985, -0.7239}, 1.5381},
    {{6.7747, -0.2908, -2.4247}, {5.8714, -0.0985, -2.2286}, 0.6377},
    {{2.0776, 0.0795, -1.1350}, {0.9033, -0.0636, -0.5514}, 0.9082},
};

render::BlockExtract random_blocks(Rng& rng, std::size_t n)
{
    static const char* words[] = {"home", "about", "shop now", "contact", "price", "sale", "menu", "home page", "log in", "cart"};
    render::BlockExtract out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back({std::to_string(i),
                       {rng.uniform_real(0, 500), rng.uniform_real(0, 500), rng.uniform_real(5, 100), rng.uniform_real(5, 40)},
                       rng.pick(std::vector<std::string>(std::begin(words), std::end(words))),
                       {static_cast<std::uint8_t>(rng.uniform_int(0, 255)), 0, 0}});
    return out;
}

} // namespace

TEST(Ciede2000, VerificationPairs)
{
    for (const auto& c : kCiede) {
        EXPECT_NEAR(ciede2000(c.x, c.y), c.de, 1e-4);
        EXPECT_EQ(ciede2000(c.x, c.y), ciede2000(c.y, c.x));
    }
    EXPECT_EQ(ciede2000({50, 10, 10}, {50, 10, 10}), 0.0);
}

TEST(Lab, KnownColors)
{
    auto w = to_lab({255, 255, 255});
    EXPECT_NEAR(w.l, 100, 1e-3);
    EXPECT_NEAR(w.a, 0, 1e-3);
    EXPECT_NEAR(w.b, 0, 1e-3);
    auto k = to_lab({0, 0, 0});
    EXPECT_NEAR(k.l, 0, 1e-9);
    auto r = to_lab({255, 0, 0});
    EXPECT_NEAR(r.l, 53.24, 0.01);
    EXPECT_NEAR(r.a, 80.09, 0.01);
    EXPECT_NEAR(r.b, 67.20, 0.01);
}

TEST(CharDice, HandValues)
{
    EXPECT_EQ(char_dice("", ""), 1.0);
    EXPECT_EQ(char_dice("a", ""), 0.0);
    EXPECT_DOUBLE_EQ(char_dice("abc", "abd"), 2.0 / 3);
    EXPECT_DOUBLE_EQ(char_dice("aab", "ab"), 0.8);
    EXPECT_DOUBLE_EQ(char_dice("héllo", "hello"), 0.8);
    EXPECT_EQ(char_dice("same", "same"), 1.0);
}

TEST(Assignment, MatchesBruteForce)
{
    Rng rng(3);
    for (int t = 0; t < 300; ++t) {
        const auto n = static_cast<std::size_t>(rng.uniform_int(0, 5));
        const auto m = static_cast<std::size_t>(rng.uniform_int(0, 5));
        std::vector<std::vector<double>> w(n, std::vector<double>(m));
        for (auto& row : w)
            for (auto& x : row)
                x = rng.coin(0.3) ? 0.0 : rng.uniform_real(0, 1);
        auto got = max_weight_assignment(w);
        ASSERT_EQ(got.size(), n);
        double total = 0;
        std::vector<bool> used(m);
        for (std::size_t i = 0; i < n; ++i)
            if (got[i] >= 0) {
                ASSERT_FALSE(used[static_cast<std::size_t>(got[i])]);
                used[static_cast<std::size_t>(got[i])] = true;
                total += w[i][static_cast<std::size_t>(got[i])];
            }
        EXPECT_NEAR(total, testkit::oracle::brute_force_assignment(w).weight, 1e-12);
    }
}

TEST(MatchBlocks, OptimalOnRandomInstances)
{
    Rng rng(9);
    for (int t = 0; t < 200; ++t) {
        auto gen = random_blocks(rng, static_cast<std::size_t>(rng.uniform_int(0, 6)));
        auto ref = random_blocks(rng, static_cast<std::size_t>(rng.uniform_int(0, 6)));
        auto m = match_blocks(gen, ref);
        std::vector<std::vector<double>> w(gen.size(), std::vector<double>(ref.size()));
        for (std::size_t i = 0; i < gen.size(); ++i)
            for (std::size_t j = 0; j < ref.size(); ++j)
                w[i][j] = char_dice(gen[i].text, ref[j].text);
        EXPECT_NEAR(matching_weight(m), testkit::oracle::brute_force_assignment(w).weight, 1e-12);
        EXPECT_EQ(m.pairs.size() + m.unmatched_gen.size(), gen.size());
        EXPECT_EQ(m.pairs.size() + m.unmatched_ref.size(), ref.size());
        for (std::size_t k = 1; k < m.pairs.size(); ++k) {
            EXPECT_LT(m.pairs[k - 1].gen, m.pairs[k].gen);
        }
        for (const auto& p : m.pairs)
            EXPECT_GT(p.dice, 0.0);
    }
}

TEST(MatchBlocks, TieBrokenByOverlap)
{
    render::BlockExtract gen{{"0", {0, 0, 10, 10}, "menu", {}}};
    render::BlockExtract ref{{"0", {300, 300, 10, 10}, "menu", {}}, {"1", {2, 2, 10, 10}, "menu", {}}};
    auto m = match_blocks(gen, ref);
    ASSERT_EQ(m.pairs.size(), 1u);
    EXPECT_EQ(m.pairs[0].ref, 1u);
}

TEST(Scores, HandComputedExample)
{
    render::BlockExtract gen{{"0", {0, 0, 10, 10}, "hello", {0, 0, 0}}};
    render::BlockExtract ref{{"0", {10, 0, 10, 10}, "hello", {0, 0, 0}}, {"1", {0, 20, 20, 10}, "xyz", {0, 0, 0}}};
    auto m = match_blocks(gen, ref);
    EXPECT_DOUBLE_EQ(block_match_score(m, gen, ref), 1.0 / 3);
    EXPECT_DOUBLE_EQ(text_score(m, gen, ref), 1.0);
    EXPECT_DOUBLE_EQ(position_alignment(m, gen, ref, {100, 100}, {100, 100}), 0.95);
    EXPECT_DOUBLE_EQ(color_consistency(m, gen, ref), 1.0);
    gen[0].color = {255, 0, 0};
    EXPECT_NEAR(color_consistency(m, gen, ref), 1 - ciede2000(to_lab({255, 0, 0}), to_lab({0, 0, 0})) / 100, 1e-15);
}

TEST(Scores, EmptySides)
{
    BlockMatching none;
    render::BlockExtract one{{"0", {0, 0, 1, 1}, "x", {}}};
    EXPECT_EQ(block_match_score(none, {}, {}), 1.0);
    EXPECT_EQ(text_score(none, {}, {}), 1.0);
    EXPECT_EQ(block_match_score(none, one, {}), 0.0);
    EXPECT_EQ(text_score(none, {}, one), 0.0);
    EXPECT_EQ(position_alignment(none, one, {}, {}, {}), 0.0);
    EXPECT_EQ(color_consistency(none, {}, one), 0.0);
}

TEST(Evaluate, SelfComparisonIsPerfect)
{
    similarity::FallbackEmbedder e;
    for (const auto& item : testkit::corpus()) {
        const auto html = doc::serialize(item.doc);
        auto r = evaluate(html, html, testkit::fixture_renderer(), e);
        EXPECT_FALSE(r.failed);
        EXPECT_EQ(r.block, 1.0) << item.id;
        EXPECT_EQ(r.text, 1.0) << item.id;
        EXPECT_EQ(r.pos, 1.0) << item.id;
        EXPECT_EQ(r.color, 1.0) << item.id;
        EXPECT_GE(r.clip, 0.999) << item.id;
    }
}

TEST(Evaluate, PerturbedPageScoresLower)
{
    similarity::FallbackEmbedder e;
    const auto& item = testkit::corpus().front();
    const auto ref = doc::serialize(item.doc);
    auto self = evaluate(ref, ref, testkit::fixture_renderer(), e);
    auto p = perturb::compose(item.doc, 3, 11);
    auto r = evaluate(doc::serialize(p.doc), ref, testkit::fixture_renderer(), e);
    EXPECT_LT(r.avg, self.avg);
}

TEST(Evaluate, IncompleteDocumentFails)
{
    similarity::FallbackEmbedder e;
    auto r = evaluate("<html><body><div>", testkit::minimal_page("<p>x</p>"), testkit::fixture_renderer(), e);
    EXPECT_TRUE(r.failed);
    EXPECT_EQ(r.avg, 0.0);
}

TEST(Summary, MeansAndTable)
{
    MetricReport a{1, 1, 1, 1, 1, 1, false};
    MetricReport b{0, 0, 0, 0, 0, 0, true};
    auto s = summarize({a, b});
    EXPECT_EQ(s.count, 2u);
    EXPECT_EQ(s.failed, 1u);
    EXPECT_DOUBLE_EQ(s.mean.avg, 0.5);
    EXPECT_EQ(format_summary_table(s), " Block   Text   Pos.  Color   CLIP    AVG  Pairs Failed\n"
                                       "  50.0   50.0   50.0   50.0   50.0   50.0      2      1\n");
    EXPECT_EQ(metric_record_json("p", a),
              R"({"avg":1.0,"block":1.0,"clip":1.0,"color":1.0,"failed":false,"pair_id":"p","pos":1.0,"text":1.0})");
}
