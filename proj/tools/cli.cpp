#include "cli.hpp"

#include "commands.hpp"
#include "config.hpp"

#include "refinekit/error.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace refinekit::cli {

namespace fs = std::filesystem;

namespace {

std::string key_listing(PipelineConfig& c)
{
    std::ostringstream os;
    os << "Configuration keys (JSON file given with --config; flags --<key> override it):\n";
    std::string section = "-";
    for (const auto& k : config_keys(c)) {
        if (k.section != section) {
            section = k.section;
            os << (section.empty() ? "  [top level]" : "  [" + section + "]") << "\n";
        }
        os << "    " << k.path() << " = " << k.get().dump() << "  " << k.help << "\n";
    }
    os << "Environment: " << kEmbedEndpointEnv << " overrides embed.endpoint.\n";
    return os.str();
}

struct Command {
    CLI::App* app = nullptr;
    std::string name;
    std::map<std::string, std::string> flags;
};

// Registers --config and one --<section.key> flag per key the command reads.
void add_config_flags(Command& cmd, PipelineConfig& defaults, std::string& config_path)
{
    cmd.app->add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    auto sections = kSharedSections;
    for (const auto& s : command_sections(cmd.name))
        sections.push_back(s);
    for (const auto& k : config_keys(defaults)) {
        if (std::find(sections.begin(), sections.end(), k.section) == sections.end())
            continue;
        cmd.app->add_option("--" + k.path(), cmd.flags[k.path()], k.help + " (default " + k.get().dump() + ")");
    }
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    PipelineConfig defaults;
    CLI::App app{"Screenshot-to-HTML pair forging and scoring.", "refinekit"};
    app.footer(key_listing(defaults));
    app.require_subcommand(1);

    std::string config_path;
    std::vector<Command> commands;
    auto add = [&](const std::string& name, const std::string& help) -> Command& {
        commands.push_back({app.add_subcommand(name, help), name, {}});
        return commands.back();
    };
    commands.reserve(7);

    fs::path in_dir, out_dir, corpus_dir, run_dir;
    std::optional<fs::path> predictions, manifest;
    EvalOptions eval;
    RewardOptions reward;

    auto& sanitize = add("sanitize", "Sanitize a directory of HTML documents");
    sanitize.app->add_option("in_dir", in_dir, "input corpus")->required()->check(CLI::ExistingDirectory);
    sanitize.app->add_option("out_dir", out_dir, "sanitized corpus and sanitize_report.jsonl")->required();

    auto& forge = add("forge", "Forge edited page pairs from a corpus");
    forge.app->add_option("corpus", corpus_dir, "corpus directory")->required()->check(CLI::ExistingDirectory);
    forge.app->add_option("out_dir", out_dir, "pair documents, renders and manifest.jsonl")->required();
    forge.app->add_option("--predictions", predictions, "model predictions, <source_id>[.<tag>].html")
        ->check(CLI::ExistingDirectory);

    auto& part = add("partition", "Split a corpus into SFT, RL and EVAL by difficulty");
    part.app->add_option("corpus", corpus_dir, "original corpus directory")->required()->check(CLI::ExistingDirectory);
    part.app->add_option("out_dir", out_dir, "splits.jsonl and sft_pairs.jsonl")->required();
    part.app->add_option("--pairs", manifest, "pair manifest whose SFT pairs are kept")->check(CLI::ExistingFile);

    auto& ev = add("eval", "Score pairs with the five visual metrics");
    ev.app->add_option("manifest", eval.manifest, "pair manifest")->required()->check(CLI::ExistingFile);
    ev.app->add_option("--out", eval.out, "metric records (default: metrics.jsonl next to the manifest)");
    ev.app->add_option("--splits", eval.splits, "split manifest restricting the sources")->check(CLI::ExistingFile);
    ev.app->add_option("--split", eval.split, "split kept with --splits")->check(CLI::IsMember({"sft", "rl", "eval"}));
    ev.app->add_flag("--self", eval.self, "score each reference against itself");
    ev.app->add_flag("--per-pair", eval.per_pair, "print one row per pair");

    auto& rw = add("reward", "Composite reward for one refinement");
    rw.app->add_option("--s-t", reward.s_t, "similarity of the current render");
    rw.app->add_option("--s-next", reward.s_next, "similarity of the refined render");
    rw.app->add_option("--format-ok", reward.format_ok, "refinement is complete and renders (true/false)");
    rw.app->add_option("--target", reward.target, "reference document")->check(CLI::ExistingFile);
    rw.app->add_option("--current", reward.current, "current document")->check(CLI::ExistingFile);
    rw.app->add_option("--next", reward.next, "refined document")->check(CLI::ExistingFile);

    auto& sim = add("grpo-sim", "Run group-relative training epochs with a scripted policy");
    sim.app->add_option("corpus", corpus_dir, "target corpus directory")->required()->check(CLI::ExistingDirectory);
    sim.app->add_option("run_dir", run_dir, "codes, renders and trajectory.jsonl")->required();

    auto& ref = add("refine", "Run multi-turn refinement sessions with a scripted policy");
    ref.app->add_option("corpus", corpus_dir, "target corpus directory")->required()->check(CLI::ExistingDirectory);
    ref.app->add_option("out_dir", out_dir, "one session directory per target and turn_table.txt")->required();

    for (auto& c : commands)
        if (c.name != "sanitize")
            add_config_flags(c, defaults, config_path);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    }

    const auto it = std::find_if(commands.begin(), commands.end(), [](const Command& c) { return c.app->parsed(); });
    PipelineConfig config;
    try {
        if (!config_path.empty())
            load_config_file(config, config_path);
        apply_environment(config);
        for (const auto& [path, value] : it->flags)
            if (it->app->count("--" + path))
                apply_flag(config, path, value);
        validate(config);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << "\n";
        return 2;
    }

    Streams io{out, err};
    try {
        const auto& name = it->name;
        if (name == "sanitize")
            return cmd_sanitize(in_dir, out_dir, io);
        if (name == "forge")
            return cmd_forge(config, corpus_dir, out_dir, predictions, io);
        if (name == "partition")
            return cmd_partition(config, corpus_dir, out_dir, manifest, io);
        if (name == "eval")
            return cmd_eval(config, eval, io);
        if (name == "reward")
            return cmd_reward(config, reward, io);
        if (name == "grpo-sim")
            return cmd_grpo_sim(config, corpus_dir, run_dir, io);
        return cmd_refine(config, corpus_dir, out_dir, io);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace refinekit::cli
