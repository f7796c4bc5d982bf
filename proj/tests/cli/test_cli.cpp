#include "cli.hpp"
#include "config.hpp"

#include "mock_embed_server.hpp"
#include "support.hpp"

#include "refinekit/doc/preprocess.hpp"
#include "refinekit/error.hpp"
#include "refinekit/grpo/epoch.hpp"
#include "refinekit/io.hpp"
#include "refinekit/partition/partitioner.hpp"
#include "refinekit/perturb/forge.hpp"

#include "json.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

using namespace refinekit;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "refinekit");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    Result r;
    r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

// The first n fixture documents in their own directory.
fs::path small_corpus(const testkit::TempDir& dir, std::size_t n)
{
    auto out = dir / "corpus";
    fs::create_directories(out);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(testkit::corpus_dir()))
        files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (std::size_t i = 0; i < n; ++i)
        fs::copy_file(files[i], out / files[i].filename());
    return out;
}

void write_config(const fs::path& path, const json& j) { write_file(path, j.dump()); }

class EnvGuard {
public:
    explicit EnvGuard(const std::string& value) { ::setenv(cli::kEmbedEndpointEnv, value.c_str(), 1); }
    ~EnvGuard() { ::unsetenv(cli::kEmbedEndpointEnv); }
};

} // namespace

TEST(CliConfig, HelpListsEveryKey)
{
    auto r = run_cli({"--help"});
    EXPECT_EQ(r.code, 0);
    cli::PipelineConfig c;
    for (const auto& k : cli::config_keys(c))
        EXPECT_NE(r.out.find(k.path() + " = "), std::string::npos) << k.path();
    EXPECT_NE(r.out.find(cli::kEmbedEndpointEnv), std::string::npos);
}

TEST(CliConfig, DefaultsMatchDocumentedValues)
{
    cli::PipelineConfig c;
    auto j = cli::to_json(c);
    EXPECT_EQ(j["render"]["pixel_budget"], 1003520);
    EXPECT_EQ(j["grpo"]["group_size"], 8);
    EXPECT_EQ(j["grpo"]["epochs"], 8);
    EXPECT_EQ(j["grpo"]["delta_min"], 0.001);
    EXPECT_EQ(j["partition"]["rl_size"], 400);
    EXPECT_EQ(j["partition"]["eval_size"], 100);
    EXPECT_EQ(j["sampling"]["nucleus_p"], 0.95);
    EXPECT_EQ(j["sampling"]["top_k"], 50);
    EXPECT_EQ(j["sampling"]["temperature"], 0.9);
    EXPECT_EQ(j["sampling"]["repetition_penalty"], 1.05);
    EXPECT_EQ(j["sampling"]["max_tokens"], 6000);
    EXPECT_EQ(j["embed"]["endpoint"], "fallback");
}

TEST(CliConfig, RoundTripsThroughJson)
{
    cli::PipelineConfig a;
    a.seed = 9;
    a.forge.max_k = 2;
    a.refine.selector = "clip";
    auto j = cli::to_json(a);
    cli::PipelineConfig b;
    cli::apply_config(b, j);
    EXPECT_EQ(cli::to_json(b), j);
}

TEST(CliConfig, UnknownKeysAreRejected)
{
    testkit::TempDir dir("cli");
    write_config(dir / "a.json", {{"forge", {{"pairs_per_sampel", 2}}}});
    auto r = run_cli({"reward", "--s-t", "0.5", "--s-next", "0.6", "--config", (dir / "a.json").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("forge.pairs_per_sampel"), std::string::npos) << r.err;

    write_config(dir / "b.json", {{"forgery", json::object()}});
    r = run_cli({"reward", "--s-t", "0.5", "--s-next", "0.6", "--config", (dir / "b.json").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("forgery"), std::string::npos) << r.err;

    r = run_cli({"reward", "--s-t", "0.5", "--s-next", "0.6", "--forge.max_k", "2"});
    EXPECT_EQ(r.code, 2);
}

TEST(CliConfig, TypeAndRangeErrors)
{
    cli::PipelineConfig c;
    EXPECT_THROW(cli::apply_config(c, {{"grpo", {{"group_size", "eight"}}}}), ConfigError);
    EXPECT_THROW(cli::apply_config(c, {{"partition", {{"rl_size", -1}}}}), ConfigError);
    EXPECT_THROW(cli::apply_config(c, {{"forge", {{"max_k", 2.5}}}}), ConfigError);
    EXPECT_THROW(cli::apply_flag(c, "grpo.epochs", "many"), ConfigError);

    auto invalid = [](auto edit) {
        cli::PipelineConfig k;
        edit(k);
        EXPECT_THROW(cli::validate(k), ConfigError);
    };
    invalid([](cli::PipelineConfig& k) { k.render.pixel_budget = 1000000; });
    invalid([](cli::PipelineConfig& k) { k.render.provider = "webkit"; });
    invalid([](cli::PipelineConfig& k) { k.render.provider = "fixture"; });
    invalid([](cli::PipelineConfig& k) { k.grpo.group_size = 1; });
    invalid([](cli::PipelineConfig& k) { k.refine.selector = "ssim"; });
    invalid([](cli::PipelineConfig& k) { k.grpo_policy.policy = "table"; });
    invalid([](cli::PipelineConfig& k) { k.sampling.nucleus_p = 0; });
    invalid([](cli::PipelineConfig& k) { k.forge.rule_fraction = 0; });
}

TEST(CliConfig, FlagsOverrideConfigFile)
{
    cli::PipelineConfig c;
    cli::apply_config(c, {{"grpo", {{"delta_min", 0.2}}}});
    cli::apply_flag(c, "grpo.delta_min", "0.01");
    EXPECT_EQ(c.grpo.delta_min, 0.01);
    cli::apply_flag(c, "render.cdp_port", "9333");
    EXPECT_EQ(c.render.cdp_port, "9333");

    testkit::TempDir dir("cli");
    write_config(dir / "c.json", {{"grpo", {{"delta_min", 0.2}}}});
    const auto cfg = (dir / "c.json").string();
    auto gated = run_cli({"reward", "--s-t", "0.5", "--s-next", "0.6", "--config", cfg});
    ASSERT_EQ(gated.code, 0) << gated.err;
    EXPECT_EQ(json::parse(gated.out)["total"], 0.0);
    auto flagged = run_cli({"reward", "--s-t", "0.5", "--s-next", "0.6", "--config", cfg, "--grpo.delta_min", "0.001"});
    ASSERT_EQ(flagged.code, 0) << flagged.err;
    EXPECT_NEAR(json::parse(flagged.out)["total"].get<double>(), 1.2, 1e-12);
}

TEST(CliConfig, EnvironmentSetsEmbedEndpointAndFlagsWin)
{
    testkit::TempDir dir("cli");
    auto corpus = small_corpus(dir, 2);
    ASSERT_EQ(run_cli({"forge", corpus.string(), (dir / "pairs").string(), "--forge.pairs_per_sample", "1"}).code, 0);
    const auto manifest = (dir / "pairs" / "manifest.jsonl").string();

    testkit::MockEmbedServer server;
    EnvGuard env(server.endpoint());
    auto remote = run_cli({"eval", manifest, "--self"});
    EXPECT_EQ(remote.code, 0) << remote.err;
    EXPECT_GT(server.embed_calls(), 0);

    const int calls = server.embed_calls();
    auto local = run_cli({"eval", manifest, "--self", "--embed.endpoint", "fallback"});
    EXPECT_EQ(local.code, 0) << local.err;
    EXPECT_EQ(server.embed_calls(), calls);
}

TEST(CliConfig, UnreachableEmbedEndpointFails)
{
    testkit::TempDir dir("cli");
    auto corpus = small_corpus(dir, 1);
    ASSERT_EQ(run_cli({"forge", corpus.string(), (dir / "pairs").string(), "--forge.pairs_per_sample", "1"}).code, 0);
    EnvGuard env("http://127.0.0.1:1");
    auto r = run_cli({"eval", (dir / "pairs" / "manifest.jsonl").string(), "--embed.timeout_ms", "2000"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("error"), std::string::npos);
}

TEST(CliSanitize, CountsAndZeroChangeSecondPass)
{
    testkit::TempDir dir("cli");
    auto first = run_cli({"sanitize", testkit::corpus_dir().string(), (dir / "s1").string()});
    ASSERT_EQ(first.code, 0) << first.err;

    std::size_t scripts = 0, external = 0;
    for (const auto& e : fs::directory_iterator(testkit::corpus_dir())) {
        doc::HtmlDocument d;
        auto rep = doc::preprocess(read_file(e.path()), e.path().filename().string(), d);
        scripts += rep.removed_scripts;
        external += rep.removed_external_refs;
    }
    EXPECT_NE(first.out.find("sanitized 14 of 14 documents"), std::string::npos) << first.out;
    EXPECT_NE(first.out.find("removed scripts " + std::to_string(scripts) + "\n"), std::string::npos);
    EXPECT_NE(first.out.find("removed external refs " + std::to_string(external) + "\n"), std::string::npos);
    EXPECT_EQ(read_lines(dir / "s1" / "sanitize_report.jsonl").size(), 14u);

    auto second = run_cli({"sanitize", (dir / "s1").string(), (dir / "s2").string()});
    ASSERT_EQ(second.code, 0) << second.err;
    EXPECT_NE(second.out.find("removed scripts 0\nremoved external refs 0\nrepaired tags 0\nrejected 0\n"), std::string::npos)
        << second.out;
}

TEST(CliSanitize, UsageErrors)
{
    testkit::TempDir dir("cli");
    EXPECT_EQ(run_cli({"sanitize", (dir / "missing").string(), (dir / "out").string()}).code, 2);
    EXPECT_EQ(run_cli({"sanitize"}).code, 2);
    EXPECT_EQ(run_cli({}).code, 2);
    EXPECT_EQ(run_cli({"frobnicate"}).code, 2);

    fs::create_directories(dir / "empty");
    write_file(dir / "empty" / "blank.html", "<html><body></body></html>");
    auto r = run_cli({"sanitize", (dir / "empty").string(), (dir / "out").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("rejected blank.html"), std::string::npos) << r.err;
}

TEST(CliForge, TenDocumentsGiveTenTimesN)
{
    testkit::TempDir dir("cli");
    auto corpus = small_corpus(dir, 10);
    auto a = run_cli({"forge", corpus.string(), (dir / "a").string(), "--seed", "3"});
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_NE(a.out.find("forged 30 pairs from 10 documents"), std::string::npos) << a.out;
    auto records = perturb::read_manifest(dir / "a" / "manifest.jsonl");
    EXPECT_EQ(records.size(), 30u);
    for (const auto& r : records)
        EXPECT_TRUE(fs::exists(dir / "a" / r.i_t_path));

    auto b = run_cli({"forge", corpus.string(), (dir / "b").string(), "--seed", "3"});
    ASSERT_EQ(b.code, 0);
    EXPECT_EQ(read_file(dir / "a" / "manifest.jsonl"), read_file(dir / "b" / "manifest.jsonl"));

    auto c = run_cli({"forge", corpus.string(), (dir / "c").string(), "--seed", "4"});
    ASSERT_EQ(c.code, 0);
    EXPECT_NE(read_file(dir / "a" / "manifest.jsonl"), read_file(dir / "c" / "manifest.jsonl"));
}

TEST(CliForge, ModelPredictionsRespectTheMix)
{
    testkit::TempDir dir("cli");
    auto corpus = small_corpus(dir, 2);
    fs::create_directories(dir / "pred");
    for (const auto& e : fs::directory_iterator(corpus)) {
        auto html = read_file(e.path());
        auto pos = html.find("<body");
        write_file(dir / "pred" / (e.path().stem().string() + ".m1.html"),
                   html.substr(0, pos) + "<body style=\"background:#102030\"" + html.substr(pos + 5));
    }
    auto r = run_cli({"forge", corpus.string(), (dir / "out").string(), "--predictions", (dir / "pred").string(),
                      "--forge.pairs_per_sample", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("rule-based 6\nmodel-predicted 2\n"), std::string::npos) << r.out;
}

TEST(CliPartition, StratifiedAndDeterministic)
{
    testkit::TempDir dir("cli");
    const auto corpus = testkit::corpus_dir().string();
    const std::vector<std::string> sizes = {"--partition.rl_size", "2", "--partition.eval_size", "3"};
    auto args = [&](const std::string& out) {
        std::vector<std::string> a = {"partition", corpus, (dir / out).string()};
        a.insert(a.end(), sizes.begin(), sizes.end());
        return a;
    };
    auto a = run_cli(args("a"));
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, "sft 9\nrl 2\neval 3\nsft pairs 0\n");
    ASSERT_EQ(run_cli(args("b")).code, 0);
    EXPECT_EQ(read_file(dir / "a" / "splits.jsonl"), read_file(dir / "b" / "splits.jsonl"));
    for (const auto& line : read_lines(dir / "a" / "splits.jsonl")) {
        auto r = partition::split_from_json(line);
        if (r.split == "rl") {
            EXPECT_GE(r.percentile, 0.75);
        }
    }

    auto big = run_cli({"partition", corpus, (dir / "c").string()});
    EXPECT_EQ(big.code, 1);
    EXPECT_NE(big.err.find("EVAL needs"), std::string::npos) << big.err;
}

TEST(CliPartition, SftPairsPointAtForgedFiles)
{
    testkit::TempDir dir("cli");
    ASSERT_EQ(run_cli({"forge", testkit::corpus_dir().string(), (dir / "pairs").string(), "--forge.pairs_per_sample", "1"}).code, 0);
    auto r = run_cli({"partition", testkit::corpus_dir().string(), (dir / "split").string(), "--pairs",
                      (dir / "pairs" / "manifest.jsonl").string(), "--partition.rl_size", "2", "--partition.eval_size", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto pairs = perturb::read_manifest(dir / "split" / "sft_pairs.jsonl");
    EXPECT_EQ(pairs.size(), 9u);
    for (const auto& p : pairs) {
        EXPECT_TRUE(fs::exists(dir / "split" / p.c_t_path)) << p.c_t_path;
        EXPECT_TRUE(fs::exists(dir / "split" / p.i_gt_path)) << p.i_gt_path;
    }
}

TEST(CliEval, SelfScoresHundredAndForgedScoreLower)
{
    testkit::TempDir dir("cli");
    auto corpus = small_corpus(dir, 4);
    ASSERT_EQ(run_cli({"forge", corpus.string(), (dir / "pairs").string(), "--forge.pairs_per_sample", "2"}).code, 0);
    const auto manifest = (dir / "pairs" / "manifest.jsonl").string();

    auto self = run_cli({"eval", manifest, "--self", "--per-pair", "--out", (dir / "self.jsonl").string()});
    ASSERT_EQ(self.code, 0) << self.err;
    EXPECT_NE(self.out.find(" 100.0  100.0  100.0  100.0  100.0  100.0      8      0\n"), std::string::npos) << self.out;
    EXPECT_NE(self.out.find(" 100.0 100.0 100.0 100.0 100.0 100.0\n"), std::string::npos);
    EXPECT_EQ(read_lines(dir / "self.jsonl").size(), 8u);

    auto forged = run_cli({"eval", manifest});
    ASSERT_EQ(forged.code, 0) << forged.err;
    auto lines = read_lines(dir / "pairs" / "metrics.jsonl");
    ASSERT_EQ(lines.size(), 8u);
    for (const auto& l : lines) {
        auto j = json::parse(l);
        EXPECT_LT(j["avg"].get<double>(), 1.0) << l;
        EXPECT_FALSE(j["failed"].get<bool>());
    }
}

TEST(CliReward, CompositeValues)
{
    auto reward = [](std::vector<std::string> args) {
        args.insert(args.begin(), "reward");
        auto r = run_cli(args);
        EXPECT_EQ(r.code, 0) << r.err;
        return json::parse(r.out);
    };
    auto j = reward({"--s-t", "0.5", "--s-next", "0.6"});
    EXPECT_EQ(j["r_improve"], 1.0);
    EXPECT_NEAR(j["r_quality"].get<double>(), 0.2, 1e-12);
    EXPECT_NEAR(j["total"].get<double>(), 1.2, 1e-12);
    EXPECT_EQ(reward({"--s-t", "0.5", "--s-next", "0.6", "--format-ok", "false"})["total"], -1.0);
    EXPECT_EQ(reward({"--s-t", "0.5", "--s-next", "0.501"})["total"], 0.0);
    EXPECT_EQ(run_cli({"reward", "--s-t", "0.5"}).code, 2);
}

TEST(CliReward, FromDocuments)
{
    testkit::TempDir dir("cli");
    auto corpus = small_corpus(dir, 1);
    ASSERT_EQ(run_cli({"forge", corpus.string(), (dir / "pairs").string(), "--forge.pairs_per_sample", "1"}).code, 0);
    auto p = perturb::read_manifest(dir / "pairs" / "manifest.jsonl").front();
    const auto ref = (dir / "pairs" / p.c_next_path).string();
    const auto cur = (dir / "pairs" / p.c_t_path).string();

    auto fixed = run_cli({"reward", "--target", ref, "--current", cur, "--next", ref});
    ASSERT_EQ(fixed.code, 0) << fixed.err;
    auto j = json::parse(fixed.out);
    EXPECT_EQ(j["s_next"], 1.0);
    EXPECT_LT(j["s_t"].get<double>(), 1.0);
    EXPECT_EQ(j["total"], 2.0);

    write_file(dir / "cut.html", read_file(ref).substr(0, 40));
    auto cut = run_cli({"reward", "--target", ref, "--current", cur, "--next", (dir / "cut.html").string()});
    ASSERT_EQ(cut.code, 0) << cut.err;
    EXPECT_EQ(json::parse(cut.out)["total"], -1.0);
}

TEST(CliGrpoSim, DeterministicTrajectory)
{
    testkit::TempDir dir("cli");
    auto corpus = small_corpus(dir, 3);
    auto args = [&](const std::string& run) {
        return std::vector<std::string>{"grpo-sim", corpus.string(), (dir / run).string(), "--grpo.epochs", "2", "--seed", "11"};
    };
    auto a = run_cli(args("a"));
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out.rfind("epoch  mean_reward  mean_loss  invalid\n", 0), 0u) << a.out;
    auto groups = grpo::read_trajectory(dir / "a" / "trajectory.jsonl");
    ASSERT_EQ(groups.size(), 6u);
    for (const auto& g : groups)
        EXPECT_EQ(g.group.size(), 8u);

    ASSERT_EQ(run_cli(args("b")).code, 0);
    EXPECT_EQ(read_file(dir / "a" / "trajectory.jsonl"), read_file(dir / "b" / "trajectory.jsonl"));
}

TEST(CliGrpoSim, OraclePolicyEarnsFullReward)
{
    testkit::TempDir dir("cli");
    auto corpus = small_corpus(dir, 2);
    auto r = run_cli({"grpo-sim", corpus.string(), (dir / "run").string(), "--grpo.epochs", "1", "--grpo.policy", "oracle",
                      "--grpo.group_size", "2"});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const auto& g : grpo::read_trajectory(dir / "run" / "trajectory.jsonl"))
        for (const auto& s : g.group) {
            EXPECT_EQ(s.s_next, 1.0);
            EXPECT_EQ(s.reward.total, 2.0);
        }
}

TEST(CliRefine, OracleSessionsAndTable)
{
    testkit::TempDir dir("cli");
    auto corpus = small_corpus(dir, 3);
    auto r = run_cli({"refine", corpus.string(), (dir / "out").string(), "--refine.turns", "2"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto table = read_file(dir / "out" / "turn_table.txt");
    EXPECT_EQ(r.out, table + "sessions 3, failed 0\n");
    EXPECT_NE(table.find("          Turn 0  Turn 1  Turn 2\n"), std::string::npos) << table;
    EXPECT_NE(table.find("   100.0   100.0\n"), std::string::npos) << table;
    for (const auto& e : fs::directory_iterator(corpus))
        EXPECT_TRUE(fs::exists(dir / "out" / e.path().stem() / "session.json"));

    auto again = run_cli({"refine", corpus.string(), (dir / "again").string(), "--refine.turns", "2"});
    EXPECT_EQ(again.out, r.out);
}
