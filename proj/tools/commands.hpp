#pragma once

#include "config.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace refinekit::cli {

struct Streams {
    std::ostream& out;
    std::ostream& err;
};

int cmd_sanitize(const std::filesystem::path& in_dir, const std::filesystem::path& out_dir, Streams io);

int cmd_forge(PipelineConfig& c, const std::filesystem::path& corpus_dir, const std::filesystem::path& out_dir,
              const std::optional<std::filesystem::path>& predictions_dir, Streams io);

int cmd_partition(PipelineConfig& c, const std::filesystem::path& corpus_dir, const std::filesystem::path& out_dir,
                  const std::optional<std::filesystem::path>& manifest, Streams io);

struct EvalOptions {
    std::filesystem::path manifest;
    std::optional<std::filesystem::path> out;
    std::optional<std::filesystem::path> splits; // restrict to sources in `split`
    std::string split = "eval";
    bool self = false;     // score each reference against itself
    bool per_pair = false; // print one row per pair
};
int cmd_eval(PipelineConfig& c, const EvalOptions& o, Streams io);

struct RewardOptions {
    std::optional<double> s_t;
    std::optional<double> s_next;
    bool format_ok = true;
    std::optional<std::filesystem::path> target; // reference document
    std::optional<std::filesystem::path> current;
    std::optional<std::filesystem::path> next;
};
int cmd_reward(PipelineConfig& c, const RewardOptions& o, Streams io);

int cmd_grpo_sim(PipelineConfig& c, const std::filesystem::path& corpus_dir, const std::filesystem::path& run_dir, Streams io);

int cmd_refine(PipelineConfig& c, const std::filesystem::path& corpus_dir, const std::filesystem::path& out_dir, Streams io);

} // namespace refinekit::cli
