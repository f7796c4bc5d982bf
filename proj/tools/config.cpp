#include "config.hpp"

#include "refinekit/error.hpp"
#include "refinekit/io.hpp"
#include "refinekit/render/cdp_provider.hpp"
#include "refinekit/render/fixture_provider.hpp"
#include "refinekit/render/raster_provider.hpp"
#include "refinekit/rng.hpp"

#include <cstdlib>
#include <limits>
#include <type_traits>

namespace refinekit::cli {

using nlohmann::json;

namespace {

template <class T>
T convert(const json& j, const std::string& path)
{
    auto bad = [&](const char* want) { return ConfigError("config key " + path + ": expected " + want + ", got " + j.dump()); };
    if constexpr (std::is_same_v<T, bool>) {
        if (!j.is_boolean())
            throw bad("a boolean");
        return j.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (!j.is_string())
            throw bad("a string");
        return j.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
        if (!j.is_number())
            throw bad("a number");
        return j.get<T>();
    } else if constexpr (std::is_unsigned_v<T>) {
        if (!j.is_number_unsigned())
            throw bad("a non-negative integer");
        return j.get<T>();
    } else {
        if (!j.is_number_integer())
            throw bad("an integer");
        const auto v = j.get<std::int64_t>();
        if (v < std::numeric_limits<T>::min() || v > std::numeric_limits<T>::max())
            throw bad("an integer in range");
        return static_cast<T>(v);
    }
}

template <class T>
ConfigKey key(std::string section, std::string name, std::string help, T& field)
{
    ConfigKey k{std::move(section), std::move(name), std::move(help), nullptr, nullptr};
    k.get = [&field] { return json(field); };
    k.set = [&field, path = k.path()](const json& j) { field = convert<T>(j, path); };
    return k;
}

void require(bool ok, const std::string& message)
{
    if (!ok)
        throw ConfigError(message);
}

} // namespace

std::vector<ConfigKey> config_keys(PipelineConfig& c)
{
    return {
        key("", "seed", "root seed; forge, partition and grpo draw from named substreams", c.seed),

        key("render", "provider", "raster | cdp | fixture", c.render.provider),
        key("render", "viewport_width", "viewport width in CSS px", c.render.viewport.width),
        key("render", "viewport_height", "minimum page height in CSS px", c.render.viewport.height),
        key("render", "pixel_budget", "pixel cap for scored screenshots (fixed at 1003520)", c.render.pixel_budget),
        key("render", "timeout_ms", "per-step browser timeout", c.render.timeout_ms),
        key("render", "max_height", "page height cap in px", c.render.max_height),
        key("render", "cdp_host", "devtools host", c.render.cdp_host),
        key("render", "cdp_port", "devtools port", c.render.cdp_port),
        key("render", "fixture_dir", "stored renders for the fixture provider", c.render.fixture_dir),
        key("render", "fixture_record", "render fixture misses with the raster provider and store them", c.render.fixture_record),

        key("embed", "endpoint", "\"fallback\" or the URL of the embedding service (env REFINEKIT_EMBED_ENDPOINT)", c.embed.endpoint),
        key("embed", "timeout_ms", "embedding request timeout", c.embed.timeout_ms),
        key("embed", "max_in_flight", "concurrent embedding requests", c.embed.max_in_flight),

        key("forge", "pairs_per_sample", "rule-based pairs per document", c.forge.pairs_per_sample),
        key("forge", "rule_fraction", "share of rule-based pairs in the manifest", c.forge.rule_fraction),
        key("forge", "max_k", "edits per pair drawn from [1, max_k]", c.forge.max_k),
        key("forge", "attempts_per_pair", "seeds tried before giving up on a pair", c.forge.attempts_per_pair),
        key("forge", "workers", "documents forged concurrently", c.forge.workers),

        key("partition", "rl_size", "RL split size", c.partition.rl_size),
        key("partition", "eval_size", "EVAL split size", c.partition.eval_size),
        key("partition", "top_fraction", "RL draws from this top share of difficulty", c.partition.top_fraction),

        key("sampling", "nucleus_p", "nucleus sampling mass", c.sampling.nucleus_p),
        key("sampling", "top_k", "top-k cutoff", c.sampling.top_k),
        key("sampling", "temperature", "sampling temperature", c.sampling.temperature),
        key("sampling", "repetition_penalty", "repetition penalty", c.sampling.repetition_penalty),
        key("sampling", "max_tokens", "maximum generation length", c.sampling.max_tokens),

        key("grpo", "group_size", "refinements sampled per target", c.grpo.group_size),
        key("grpo", "eps_adv", "advantage denominator epsilon", c.grpo.eps_adv),
        key("grpo", "clip_eps", "ratio clip range", c.grpo.clip_eps),
        key("grpo", "delta_min", "minimum similarity gain for the improvement reward", c.grpo.delta_min),
        key("grpo", "epochs", "training epochs", c.grpo.epochs),
        key("grpo", "policy", "scripted policy: noop | oracle | mixture", c.grpo_policy.policy),
        key("grpo", "draft_k", "perturbations in each scripted draft", c.grpo_policy.draft_k),

        key("refine", "turns", "refinement turns after turn 0", c.refine.turns),
        key("refine", "max_retries", "retries per turn", c.refine.max_retries),
        key("refine", "selector", "metric for Filtered: avg | block | text | pos | color | clip", c.refine.selector),
        key("refine", "policy", "scripted policy: noop | oracle | mixture", c.refine_policy.policy),
        key("refine", "draft_k", "perturbations in each scripted draft", c.refine_policy.draft_k),
    };
}

std::vector<std::string> command_sections(const std::string& command)
{
    if (command == "forge")
        return {"forge"};
    if (command == "partition")
        return {"partition"};
    if (command == "reward")
        return {"grpo"};
    if (command == "grpo-sim")
        return {"grpo", "sampling"};
    if (command == "refine")
        return {"refine", "sampling"};
    return {};
}

void apply_config(PipelineConfig& c, const json& j)
{
    require(j.is_object(), "config: top level must be an object");
    auto keys = config_keys(c);
    auto find = [&](const std::string& section, const std::string& name) -> ConfigKey* {
        for (auto& k : keys)
            if (k.section == section && k.name == name)
                return &k;
        return nullptr;
    };
    auto known_section = [&](const std::string& s) {
        for (const auto& k : keys)
            if (k.section == s)
                return true;
        return false;
    };
    for (const auto& [name, value] : j.items()) {
        if (auto* k = find("", name)) {
            k->set(value);
            continue;
        }
        require(known_section(name), "config: unknown key " + name);
        require(value.is_object(), "config: section " + name + " must be an object");
        for (const auto& [field, v] : value.items()) {
            auto* k = find(name, field);
            require(k != nullptr, "config: unknown key " + name + "." + field);
            k->set(v);
        }
    }
}

void load_config_file(PipelineConfig& c, const std::filesystem::path& path)
{
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    apply_config(c, j);
}

void apply_flag(PipelineConfig& c, const std::string& path, const std::string& value)
{
    for (auto& k : config_keys(c)) {
        if (k.path() != path)
            continue;
        if (k.get().is_string()) {
            k.set(json(value));
            return;
        }
        json v;
        try {
            v = json::parse(value);
        } catch (const json::exception&) {
            v = value;
        }
        k.set(v);
        return;
    }
    throw ConfigError("unknown config key " + path);
}

void apply_environment(PipelineConfig& c)
{
    if (const char* v = std::getenv(kEmbedEndpointEnv); v && *v)
        c.embed.endpoint = v;
}

void validate(const PipelineConfig& c)
{
    const auto& r = c.render;
    require(r.provider == "raster" || r.provider == "cdp" || r.provider == "fixture",
            "render.provider must be raster, cdp or fixture");
    require(r.provider != "fixture" || !r.fixture_dir.empty(), "render.fixture_dir is required for the fixture provider");
    require(r.viewport.width > 0 && r.viewport.height > 0, "render viewport must be positive");
    require(r.pixel_budget == render::kPixelBudget, "render.pixel_budget is fixed at " + std::to_string(render::kPixelBudget));
    require(r.timeout_ms > 0 && r.max_height >= r.viewport.height, "render.timeout_ms and render.max_height out of range");
    require(c.embed.timeout_ms > 0 && c.embed.max_in_flight > 0, "embed.timeout_ms and embed.max_in_flight must be positive");

    require(c.forge.pairs_per_sample > 0 && c.forge.max_k > 0 && c.forge.attempts_per_pair > 0 && c.forge.workers > 0,
            "forge counts must be positive");
    require(c.forge.rule_fraction > 0 && c.forge.rule_fraction <= 1, "forge.rule_fraction must be in (0, 1]");
    require(c.partition.top_fraction > 0 && c.partition.top_fraction <= 1, "partition.top_fraction must be in (0, 1]");

    const auto& s = c.sampling;
    require(s.nucleus_p > 0 && s.nucleus_p <= 1, "sampling.nucleus_p must be in (0, 1]");
    require(s.top_k > 0 && s.temperature > 0 && s.repetition_penalty > 0 && s.max_tokens > 0,
            "sampling values must be positive");

    grpo::validate(c.grpo);
    for (const auto* p : {&c.grpo_policy, &c.refine_policy}) {
        require(p->policy == "noop" || p->policy == "oracle" || p->policy == "mixture",
                "policy must be noop, oracle or mixture, got " + p->policy);
        require(p->draft_k > 0, "draft_k must be positive");
    }
    require(c.refine.turns >= 0 && c.refine.max_retries >= 0, "refine.turns and refine.max_retries must be non-negative");
    refine::select_metric({}, c.refine.selector);
}

json to_json(PipelineConfig& c)
{
    json out = json::object();
    for (const auto& k : config_keys(c)) {
        if (k.section.empty())
            out[k.name] = k.get();
        else
            out[k.section][k.name] = k.get();
    }
    return out;
}

std::uint64_t substream(const PipelineConfig& c, std::string_view name) { return mix_seed(c.seed, name); }

std::unique_ptr<render::RenderProvider> make_renderer(const RenderSettings& s)
{
    render::LayoutRasterProvider::Options raster{s.max_height};
    if (s.provider == "raster")
        return std::make_unique<render::LayoutRasterProvider>(raster);
    if (s.provider == "cdp") {
        render::CdpRenderProvider::Options o;
        o.host = s.cdp_host;
        o.port = s.cdp_port;
        o.timeout = std::chrono::milliseconds(s.timeout_ms);
        o.max_height = s.max_height;
        return std::make_unique<render::CdpRenderProvider>(o);
    }
    std::shared_ptr<render::RenderProvider> through;
    if (s.fixture_record)
        through = std::make_shared<render::LayoutRasterProvider>(raster);
    return std::make_unique<render::FixtureRenderProvider>(s.fixture_dir, through);
}

} // namespace refinekit::cli
