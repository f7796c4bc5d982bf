#include "oracles.hpp"
#include "support.hpp"

#include "refinekit/error.hpp"
#include "refinekit/grpo/epoch.hpp"
#include "refinekit/grpo/reward.hpp"
#include "refinekit/io.hpp"
#include "refinekit/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace refinekit;
using namespace refinekit::grpo;

TEST(Ris, HandValues)
{
    EXPECT_DOUBLE_EQ(ris(0.5, 0.75), 0.5);
    EXPECT_DOUBLE_EQ(ris(0.0, 0.3), 0.3);
    EXPECT_EQ(ris(0.6, 0.6), 0.0);
    EXPECT_EQ(ris(0.6, 0.4), 0.0);
    EXPECT_EQ(ris(1.0, 1.0), 0.0);
    EXPECT_EQ(ris(1.0 - 1e-7, 1.0), 0.0);
}

TEST(Ris, GateBoundary)
{
    EXPECT_FALSE(passes_gate(0.5, 0.5005));
    EXPECT_FALSE(passes_gate(0.5, 0.501));
    EXPECT_TRUE(passes_gate(0.5, 0.5011));
    EXPECT_EQ(ris(0.5, 0.501), 0.0);
    EXPECT_NEAR(ris(0.5, 0.5011), 0.0022, 1e-12);
    EXPECT_FALSE(passes_gate(0.2, 0.25, 0.05));
    EXPECT_TRUE(passes_gate(0.2, 0.25, 0.0));
}

TEST(Ris, MatchesOracle)
{
    Rng rng(1);
    for (int i = 0; i < 5000; ++i) {
        const double a = rng.uniform_real(0, 1), b = rng.uniform_real(0, 1);
        EXPECT_NEAR(ris(a, b), testkit::oracle::ris(a, b), 1e-12);
    }
}

TEST(Reward, Hierarchy)
{
    EXPECT_EQ(composite_reward(false, 0.2, 0.9), (RewardBreakdown{-1, 0, 0, -1}));
    EXPECT_EQ(composite_reward(true, 0.6, 0.6), (RewardBreakdown{0, 0, 0, 0}));
    auto r = composite_reward(true, 0.5, 0.75);
    EXPECT_EQ(r.r_improve, 1.0);
    EXPECT_DOUBLE_EQ(r.r_quality, 0.5);
    EXPECT_DOUBLE_EQ(r.total, 1.5);
    EXPECT_EQ(composite_reward(true, 0.0, 1.0).total, 2.0);
}

TEST(Advantages, HandValues)
{
    auto a = group_advantages({1, 3});
    EXPECT_NEAR(a[0], -1 / (1 + 1e-8), 1e-15);
    EXPECT_NEAR(a[1], 1 / (1 + 1e-8), 1e-15);
    for (double x : group_advantages({0.7, 0.7, 0.7})) {
        EXPECT_EQ(x, 0.0);
    }
    EXPECT_THROW(group_advantages({1}), GroupTooSmall);
    EXPECT_THROW(group_advantages({}), GroupTooSmall);
}

TEST(Advantages, MatchOracle)
{
    Rng rng(2);
    for (int g = 0; g < 200; ++g) {
        std::vector<double> r(8);
        for (auto& x : r)
            x = rng.uniform_real(-1, 2);
        auto a = group_advantages(r);
        auto o = testkit::oracle::advantages(r);
        double mean = 0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            EXPECT_NEAR(a[i], o[i], 1e-10);
            mean += a[i];
        }
        EXPECT_LT(std::abs(mean / 8), 1e-12);
    }
}

TEST(Loss, ClippingBranches)
{
    EXPECT_DOUBLE_EQ(grpo_loss({1.5}, {1.0}), -1.2);
    EXPECT_DOUBLE_EQ(grpo_loss({1.5}, {-1.0}), 1.5);
    EXPECT_DOUBLE_EQ(grpo_loss({0.5}, {1.0}), -0.5);
    EXPECT_DOUBLE_EQ(grpo_loss({0.5}, {-1.0}), 0.8);
    EXPECT_DOUBLE_EQ(grpo_loss({1, 1}, {1, -1}), 0.0);
    EXPECT_THROW(grpo_loss({1, 1}, {1}), LengthMismatch);
    EXPECT_THROW(grpo_loss({}, {}), LengthMismatch);
}

TEST(Loss, MatchesOracle)
{
    Rng rng(3);
    for (int g = 0; g < 500; ++g) {
        std::vector<double> rho(8), adv(8);
        for (std::size_t i = 0; i < 8; ++i) {
            rho[i] = std::exp(rng.uniform_real(-0.5, 0.5));
            adv[i] = rng.uniform_real(-2, 2);
        }
        EXPECT_NEAR(grpo_loss(rho, adv), testkit::oracle::loss(rho, adv), 1e-12);
    }
    EXPECT_DOUBLE_EQ(policy_ratio(-3, -3), 1.0);
    EXPECT_DOUBLE_EQ(policy_ratio(std::log(2.0), 0), 2.0);
}

TEST(Config, Validation)
{
    EXPECT_NO_THROW(validate(GrpoConfig{}));
    GrpoConfig c;
    c.group_size = 1;
    EXPECT_THROW(validate(c), ConfigError);
    c = {};
    c.clip_eps = 1;
    EXPECT_THROW(validate(c), ConfigError);
    c = {};
    c.delta_min = -0.1;
    EXPECT_THROW(validate(c), ConfigError);
    c = {};
    c.eps_adv = 0;
    EXPECT_THROW(validate(c), ConfigError);
    c = {};
    c.epochs = 0;
    EXPECT_THROW(validate(c), ConfigError);
}

TEST(ScriptedPolicy, Modes)
{
    auto setup = testkit::training_setup(1, 7);
    const auto& id = setup.targets[0].id;
    const auto& draft = setup.drafts.at(id);
    const auto ref = doc::serialize(testkit::corpus()[0].doc);
    RefineRequest req{id, &setup.targets[0].image, nullptr, draft.code, "", "", {}};

    ScriptedPolicy noop(ScriptedPolicy::Mode::noop, setup.drafts);
    EXPECT_EQ(noop.generate({id, nullptr, "", "", {}}), draft.code);
    for (const auto& c : noop.refine(req, 3)) {
        EXPECT_EQ(c.code, draft.code);
    }

    ScriptedPolicy oracle(ScriptedPolicy::Mode::oracle, setup.drafts);
    for (const auto& c : oracle.refine(req, 2)) {
        EXPECT_EQ(c.code, ref);
    }

    ScriptedPolicy mix(ScriptedPolicy::Mode::mixture, setup.drafts, 5);
    ScriptedPolicy mix2(ScriptedPolicy::Mode::mixture, setup.drafts, 5);
    auto a = mix.refine(req, 16);
    auto b = mix2.refine(req, 16);
    ASSERT_EQ(a.size(), 16u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].code, b[i].code);
        EXPECT_GE(a[i].logprob_old, -50);
        EXPECT_LT(a[i].logprob_old, -10);
        EXPECT_LE(std::abs(a[i].logprob_new - a[i].logprob_old), 0.3);
    }

    auto table_drafts = setup.drafts;
    table_drafts[id].refinements = {"a", "b"};
    ScriptedPolicy table(ScriptedPolicy::Mode::table, table_drafts);
    auto t = table.refine(req, 3);
    EXPECT_EQ(t[0].code, "a");
    EXPECT_EQ(t[1].code, "b");
    EXPECT_EQ(t[2].code, "a");

    EXPECT_EQ(scripted_mode_from_string("oracle"), ScriptedPolicy::Mode::oracle);
    EXPECT_EQ(to_string(ScriptedPolicy::Mode::mixture), "mixture");
    EXPECT_THROW(scripted_mode_from_string("bogus"), ConfigError);
}

TEST(Training, MatchesStraightLineOracle)
{
    auto setup = testkit::training_setup(3, 21);
    similarity::FallbackEmbedder embedder;
    testkit::TempDir run("grpo");
    RunOptions opts;
    opts.grpo.epochs = 2;
    ScriptedPolicy p1(ScriptedPolicy::Mode::mixture, setup.drafts, 4);
    ScriptedPolicy p2(ScriptedPolicy::Mode::mixture, setup.drafts, 4);
    auto got = run_grpo(p1, setup.targets, testkit::fixture_renderer(), embedder, opts, run.path());
    testkit::oracle::LoopConfig cfg;
    auto want = testkit::oracle::straight_line_grpo(p2, setup.targets, testkit::fixture_renderer(), embedder, cfg);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t g = 0; g < got.size(); ++g) {
        EXPECT_EQ(got[g].epoch, want[g].epoch);
        EXPECT_EQ(got[g].target_id, want[g].target_id);
        EXPECT_NEAR(got[g].loss, want[g].loss, 1e-12);
        ASSERT_EQ(got[g].group.size(), 8u);
        for (std::size_t i = 0; i < 8; ++i) {
            const auto& a = got[g].group[i];
            const auto& b = want[g].group[i];
            EXPECT_EQ(a.code_path, b.code_path);
            EXPECT_EQ(a.render_path, b.render_path);
            EXPECT_NEAR(a.s_next, b.s_next, 1e-12);
            EXPECT_NEAR(a.reward.total, b.reward.total, 1e-12);
            EXPECT_NEAR(a.advantage, b.advantage, 1e-12);
            EXPECT_NEAR(a.ratio, b.ratio, 1e-12);
        }
    }
    EXPECT_EQ(p1.updates().size(), 6u);
    EXPECT_EQ(read_trajectory(run / "trajectory.jsonl"), got);
    EXPECT_TRUE(std::filesystem::exists(run / ("epoch_1/" + setup.targets[0].id + "/sample_7.html")));
}

TEST(Training, InvalidSamplesScoreMinusOne)
{
    auto setup = testkit::training_setup(1, 2);
    const auto id = setup.targets[0].id;
    setup.drafts[id].refinements = {"<html><body>cut", setup.drafts[id].code};
    ScriptedPolicy policy(ScriptedPolicy::Mode::table, setup.drafts);
    similarity::FallbackEmbedder embedder;
    testkit::TempDir run("grpo");
    RunOptions opts;
    opts.grpo.group_size = 2;
    auto groups = run_grpo_epoch(policy, setup.targets, testkit::fixture_renderer(), embedder, opts, 0, run.path());
    ASSERT_EQ(groups.size(), 1u);
    EXPECT_EQ(groups[0].group[0].reward.total, -1.0);
    EXPECT_TRUE(groups[0].group[0].render_path.empty());
    EXPECT_EQ(groups[0].group[1].reward.total, 0.0);
    EXPECT_LT(groups[0].group[0].advantage, 0.0);
}

TEST(Training, WrongGroupSizeFromPolicy)
{
    class Short final : public PolicyInterface {
    public:
        std::string generate(const GenerateRequest&) override { return testkit::minimal_page("<p>x</p>"); }
        std::vector<Candidate> refine(const RefineRequest&, int) override { return {Candidate{}}; }
    } policy;
    auto setup = testkit::training_setup(1, 1);
    similarity::FallbackEmbedder embedder;
    testkit::TempDir run("grpo");
    EXPECT_THROW(run_grpo(policy, setup.targets, testkit::fixture_renderer(), embedder, RunOptions{}, run.path()), LengthMismatch);
}

TEST(Trajectory, JsonRoundTrip)
{
    GroupRecord g;
    g.epoch = 3;
    g.target_id = "t";
    g.loss = -0.125;
    SampleRecord s;
    s.code_path = "epoch_3/t/sample_0.html";
    s.s_t = 0.1;
    s.s_next = 0.30000000000000004;
    s.reward = composite_reward(true, s.s_t, s.s_next);
    s.advantage = 1.0 / 3;
    s.ratio = 1.1;
    g.group = {s, s};
    EXPECT_EQ(group_from_json(group_to_json(g)), g);
    EXPECT_THROW(group_from_json("{\"epoch\":0}"), FormatError);
}
