#pragma once

#include "refinekit/render/provider.hpp"
#include "refinekit/similarity/embedding.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace refinekit::metrics {

// 2 * |multiset intersection of code points| / (|a| + |b|); 1 when both are
// empty.
double char_dice(std::string_view a, std::string_view b);

struct MatchedPair {
    std::size_t gen = 0;
    std::size_t ref = 0;
    double dice = 0;

    bool operator==(const MatchedPair&) const = default;
};

struct BlockMatching {
    std::vector<MatchedPair> pairs; // ascending gen index
    std::vector<std::size_t> unmatched_gen;
    std::vector<std::size_t> unmatched_ref;
};

// Maximum total char_dice one-to-one matching; zero-weight pairs are left
// unmatched. Among optimal matchings, pairs with larger box overlap and then
// closer centers are preferred.
BlockMatching match_blocks(const render::BlockExtract& gen, const render::BlockExtract& ref);

// Total char_dice of a matching.
double matching_weight(const BlockMatching& m);

double block_match_score(const BlockMatching& m, const render::BlockExtract& gen, const render::BlockExtract& ref);
double text_score(const BlockMatching& m, const render::BlockExtract& gen, const render::BlockExtract& ref);

struct Dims {
    double width = 1;
    double height = 1;
};

double position_alignment(const BlockMatching& m, const render::BlockExtract& gen, const render::BlockExtract& ref,
                          Dims gen_dims, Dims ref_dims);
double color_consistency(const BlockMatching& m, const render::BlockExtract& gen, const render::BlockExtract& ref);

// A render fitted to the pixel budget with its blocks scaled to match.
struct Page {
    render::RasterImage image;
    render::BlockExtract blocks;
};

Page fit_page(const render::RenderResult& r);

double clip_metric(const Page& gen, const Page& ref, similarity::EmbeddingProvider& provider);

struct MetricReport {
    double block = 0, text = 0, pos = 0, color = 0, clip = 0, avg = 0;
    bool failed = false;

    bool operator==(const MetricReport&) const = default;
};

MetricReport evaluate(const Page& gen, const Page& ref, similarity::EmbeddingProvider& provider);

// Renders both documents. A render failure on either side (including an
// incomplete document) gives an all-zero report with failed set.
MetricReport evaluate(std::string_view gen_html, std::string_view ref_html, render::RenderProvider& renderer,
                      similarity::EmbeddingProvider& provider, const render::Viewport& viewport = {});

// {pair_id, block, text, pos, color, clip, avg, failed}
std::string metric_record_json(std::string_view pair_id, const MetricReport& r);

struct MetricSummary {
    std::size_t count = 0;
    std::size_t failed = 0;
    MetricReport mean; // over all reports, failed ones counting as zero
};

MetricSummary summarize(const std::vector<MetricReport>& reports);

// Percentages to one decimal: header line plus one row.
std::string format_summary_table(const MetricSummary& s);

} // namespace refinekit::metrics
