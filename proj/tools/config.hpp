#pragma once

#include "refinekit/grpo/policy.hpp"
#include "refinekit/grpo/reward.hpp"
#include "refinekit/partition/partitioner.hpp"
#include "refinekit/perturb/forge.hpp"
#include "refinekit/refine/session.hpp"
#include "refinekit/render/image.hpp"
#include "refinekit/render/provider.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace refinekit::cli {

inline constexpr const char* kEmbedEndpointEnv = "REFINEKIT_EMBED_ENDPOINT";

struct RenderSettings {
    std::string provider = "raster"; // raster | cdp | fixture
    render::Viewport viewport;
    std::size_t pixel_budget = render::kPixelBudget;
    int timeout_ms = 30000;
    int max_height = 16384;
    std::string cdp_host = "127.0.0.1";
    std::string cdp_port = "9222";
    std::string fixture_dir;
    bool fixture_record = false; // render misses with the raster provider and store them
};

struct EmbedSettings {
    std::string endpoint = "fallback";
    int timeout_ms = 30000;
    int max_in_flight = 4;
};

struct PolicySettings {
    std::string policy;
    int draft_k = 2;
};

struct PipelineConfig {
    std::uint64_t seed = 0;
    RenderSettings render;
    EmbedSettings embed;
    perturb::ForgeConfig forge;
    partition::PartitionConfig partition;
    grpo::SamplingConfig sampling;
    grpo::GrpoConfig grpo;
    PolicySettings grpo_policy{"mixture", 2};
    refine::RefineConfig refine;
    PolicySettings refine_policy{"oracle", 2};
};

// One documented configuration key. `set` parses a JSON value into the bound
// field and throws ConfigError on a type or range mismatch.
struct ConfigKey {
    std::string section; // empty for top-level keys
    std::string name;
    std::string help;
    std::function<nlohmann::json()> get;
    std::function<void(const nlohmann::json&)> set;

    std::string path() const { return section.empty() ? name : section + "." + name; }
};

std::vector<ConfigKey> config_keys(PipelineConfig& c);

// Sections read by each command, in addition to the shared ones.
std::vector<std::string> command_sections(const std::string& command);
inline const std::vector<std::string> kSharedSections = {"", "render", "embed"};

// Applies a JSON object of per-section objects. Unknown sections and keys
// are rejected with ConfigError.
void apply_config(PipelineConfig& c, const nlohmann::json& j);
void load_config_file(PipelineConfig& c, const std::filesystem::path& path);

// Parses a flag value for `key`: JSON when it parses, a bare string
// otherwise.
void apply_flag(PipelineConfig& c, const std::string& path, const std::string& value);

// Overrides embed.endpoint from the environment when the variable is set.
void apply_environment(PipelineConfig& c);

// Cross-field checks shared by every command.
void validate(const PipelineConfig& c);

// The whole configuration as a JSON object with the file layout.
nlohmann::json to_json(PipelineConfig& c);

// Named random substream of the root seed.
std::uint64_t substream(const PipelineConfig& c, std::string_view name);

std::unique_ptr<render::RenderProvider> make_renderer(const RenderSettings& s);

} // namespace refinekit::cli
