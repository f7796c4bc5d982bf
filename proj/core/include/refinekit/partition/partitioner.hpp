#pragma once

#include "refinekit/doc/html_document.hpp"
#include "refinekit/perturb/forge.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace refinekit::partition {

inline constexpr std::size_t kFeatureCount = 6;

struct StructuralFeatures {
    double dom_depth = 0;          // element nesting depth, root = 1
    double tag_diversity = 0;      // distinct element names
    double inline_style_count = 0; // elements with a style attribute
    double script_density = 0;     // script constructs per 1024 bytes of source
    double token_count = 0;        // see count_tokens
    double block_count = 0;        // elements with non-whitespace direct text

    std::array<double, kFeatureCount> values() const
    {
        return {dom_depth, tag_diversity, inline_style_count, script_density, token_count, block_count};
    }
    bool operator==(const StructuralFeatures&) const = default;
};

// Runs of letters/digits count one token each; every other non-space byte is
// a token of its own.
std::size_t count_tokens(std::string_view text);

// Measured on the document as parsed, before sanitization. Script constructs
// are <script> elements, on* attributes and javascript: URLs; density uses
// the original source length (the serialization when there is no source).
StructuralFeatures extract_features(const doc::HtmlDocument& doc);

struct SampleFeatures {
    std::string sample_id;
    StructuralFeatures features;
};

struct DifficultyScore {
    std::string sample_id;
    double s = 0;
    double percentile = 0; // rank / (n - 1), ties broken by sample_id

    bool operator==(const DifficultyScore&) const = default;
};

// s_i = sum_j (x_ij - mean_j) / sd_j with population standard deviations;
// features with sd_j = 0 contribute 0. Throws DegenerateCorpus for fewer
// than two samples.
std::vector<DifficultyScore> difficulty_scores(const std::vector<SampleFeatures>& samples);

struct PartitionConfig {
    std::size_t rl_size = 400;
    std::size_t eval_size = 100;
    double top_fraction = 0.25;
    std::uint64_t seed = 0;
};

struct SplitRecord {
    std::string sample_id;
    std::string split; // sft | rl | eval
    double difficulty = 0;
    double percentile = 0;

    bool operator==(const SplitRecord&) const = default;
};

struct Partition {
    std::vector<SplitRecord> records;             // one per sample, in score order
    std::vector<perturb::PairRecord> sft_pairs;   // pairs whose source is in sft
};

// Decile of a percentile: min(9, floor(10 p)).
int decile(double percentile);

// EVAL: stratified over percentile deciles, eval_size / 10 per decile with
// the remainder spread over randomly chosen deciles. RL: uniform from the
// samples with percentile >= 1 - top_fraction that are not in EVAL. SFT:
// everything else, with its pairs. Throws InsufficientSamples when a stratum
// is too small.
Partition partition(const std::vector<DifficultyScore>& scores, const std::vector<perturb::PairRecord>& pairs,
                    const PartitionConfig& config);

std::string split_to_json(const SplitRecord& r);
SplitRecord split_from_json(std::string_view line);

} // namespace refinekit::partition
