#pragma once

#include "refinekit/grpo/policy.hpp"
#include "refinekit/grpo/reward.hpp"
#include "refinekit/render/provider.hpp"
#include "refinekit/similarity/embedding.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace refinekit::grpo {

struct TrainingTarget {
    std::string id;
    render::RasterImage image; // I_gt
};

struct SampleRecord {
    std::string code_path;   // relative to the run directory
    std::string render_path; // empty when the render failed
    double s_t = 0;
    double s_next = 0;
    RewardBreakdown reward;
    double advantage = 0;
    double ratio = 1;

    bool operator==(const SampleRecord&) const = default;
};

struct GroupRecord {
    int epoch = 0;
    std::string target_id;
    std::vector<SampleRecord> group;
    double loss = 0;

    bool operator==(const GroupRecord&) const = default;
};

struct RunOptions {
    GrpoConfig grpo;
    SamplingConfig sampling;
    render::Viewport viewport;
};

// One epoch of self-refinement training over `targets`: the policy is
// snapshotted, then per target a draft C_t is generated and rendered, G
// refinements are sampled, rendered and rewarded against the target image,
// and the group's advantages, ratios and loss are handed to policy.update.
// A refinement that is incomplete or fails to render is invalid (total -1).
// Codes and renders are written under run_dir/epoch_<e>/<target>/ and one
// trajectory line per group is appended to run_dir/trajectory.jsonl.
std::vector<GroupRecord> run_grpo_epoch(PolicyInterface& policy, const std::vector<TrainingTarget>& targets,
                                        render::RenderProvider& renderer, similarity::EmbeddingProvider& embedder,
                                        const RunOptions& options, int epoch, const std::filesystem::path& run_dir);

// Runs options.grpo.epochs epochs (numbered from 0).
std::vector<GroupRecord> run_grpo(PolicyInterface& policy, const std::vector<TrainingTarget>& targets,
                                  render::RenderProvider& renderer, similarity::EmbeddingProvider& embedder,
                                  const RunOptions& options, const std::filesystem::path& run_dir);

// {epoch, target_id, group: [{code_path, render_path, s_t, s_next, r_format,
// r_improve, r_quality, total, advantage, ratio}], loss}
std::string group_to_json(const GroupRecord& g);
GroupRecord group_from_json(std::string_view line);
std::vector<GroupRecord> read_trajectory(const std::filesystem::path& path);

} // namespace refinekit::grpo
