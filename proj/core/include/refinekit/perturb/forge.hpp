#pragma once

#include "refinekit/perturb/perturbator.hpp"
#include "refinekit/render/provider.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace refinekit::perturb {

enum class PairSource { rule_based, model_predicted };

std::string_view to_string(PairSource s);
PairSource pair_source_from_string(std::string_view s);

struct CorpusDocument {
    std::string id;
    doc::HtmlDocument doc; // preprocessed
};

// A prediction of some model for a corpus document, kept as-is.
struct ModelPrediction {
    std::string source_id;
    std::string html;
};

struct ForgeConfig {
    int pairs_per_sample = 3;
    double rule_fraction = 0.7; // share of rule-based pairs in the manifest
    int max_k = 3;              // k drawn uniformly from [1, max_k]
    int attempts_per_pair = 4;  // fresh seeds tried before giving up on a pair
    std::uint64_t seed = 0;
    int workers = 1; // documents processed concurrently; >1 needs a thread-safe provider
    render::Viewport viewport;
};

// One manifest line. Paths are relative to the manifest directory.
struct PairRecord {
    std::string pair_id;
    PairSource source = PairSource::rule_based;
    std::string source_id;
    std::string c_t_path;
    std::string c_next_path;
    std::string i_t_path;
    std::string i_gt_path;
    std::vector<EditRecord> edits;
    std::uint64_t seed = 0;
    std::vector<std::string> rule_ids;

    bool operator==(const PairRecord&) const = default;
};

struct ForgeFailure {
    std::string source_id;
    std::string reason;
};

struct ForgeReport {
    std::vector<PairRecord> records;
    std::size_t discarded_imperceptible = 0;
    std::size_t skipped_model_predicted = 0; // dropped to respect rule_fraction
    std::vector<ForgeFailure> failures;
};

// hash(source id, rule ids, seed), 16 hex digits.
std::string make_pair_id(std::string_view source_id, const std::vector<std::string>& rule_ids, std::uint64_t seed);

// Forges up to pairs_per_sample rule-based pairs per document, each from k
// composed perturbations, and adds model-predicted pairs up to the configured
// mix. Pairs whose two renders are pixel-identical after fitting the pixel
// budget are discarded. Render failures are reported per document without
// stopping the batch. Writes documents, PNGs and manifest.jsonl under out_dir.
ForgeReport forge_pairs(const std::vector<CorpusDocument>& corpus, const std::vector<ModelPrediction>& predictions,
                        render::RenderProvider& provider, const ForgeConfig& config, const std::filesystem::path& out_dir);

std::string edit_to_json(const EditRecord& e);
EditRecord edit_from_json(std::string_view line);
std::string pair_to_json(const PairRecord& r);
PairRecord pair_from_json(std::string_view line);
std::vector<PairRecord> read_manifest(const std::filesystem::path& path);

} // namespace refinekit::perturb
