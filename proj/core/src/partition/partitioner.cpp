#include "refinekit/partition/partitioner.hpp"

#include "refinekit/error.hpp"
#include "refinekit/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace refinekit::partition {

std::vector<DifficultyScore> difficulty_scores(const std::vector<SampleFeatures>& samples)
{
    if (samples.size() < 2)
        throw DegenerateCorpus("difficulty_scores: need at least 2 samples, got " + std::to_string(samples.size()));
    const double n = static_cast<double>(samples.size());
    std::array<double, kFeatureCount> mean{}, sd{};
    for (const auto& s : samples) {
        auto v = s.features.values();
        for (std::size_t j = 0; j < kFeatureCount; ++j)
            mean[j] += v[j];
    }
    for (auto& m : mean)
        m /= n;
    for (const auto& s : samples) {
        auto v = s.features.values();
        for (std::size_t j = 0; j < kFeatureCount; ++j)
            sd[j] += (v[j] - mean[j]) * (v[j] - mean[j]);
    }
    for (auto& d : sd)
        d = std::sqrt(d / n);

    std::vector<DifficultyScore> out;
    for (const auto& s : samples) {
        auto v = s.features.values();
        double score = 0;
        for (std::size_t j = 0; j < kFeatureCount; ++j)
            if (sd[j] > 0)
                score += (v[j] - mean[j]) / sd[j];
        out.push_back({s.sample_id, score, 0.0});
    }
    std::vector<std::size_t> order(out.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (out[a].s != out[b].s)
            return out[a].s < out[b].s;
        return out[a].sample_id < out[b].sample_id;
    });
    for (std::size_t rank = 0; rank < order.size(); ++rank)
        out[order[rank]].percentile = static_cast<double>(rank) / (n - 1);
    return out;
}

int decile(double percentile) { return std::min(9, static_cast<int>(std::floor(percentile * 10))); }

Partition partition(const std::vector<DifficultyScore>& scores, const std::vector<perturb::PairRecord>& pairs,
                    const PartitionConfig& config)
{
    if (!(config.top_fraction > 0 && config.top_fraction <= 1))
        throw ConfigError("partition: top_fraction must lie in (0, 1]");
    std::set<std::string> ids;
    for (const auto& s : scores)
        if (!ids.insert(s.sample_id).second)
            throw ConfigError("partition: duplicate sample id " + s.sample_id);

    std::vector<const DifficultyScore*> sorted;
    for (const auto& s : scores)
        sorted.push_back(&s);
    std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
        if (a->percentile != b->percentile)
            return a->percentile < b->percentile;
        return a->sample_id < b->sample_id;
    });

    Rng rng(mix_seed(config.seed, "partition"));
    std::map<std::string, std::string> split;

    // EVAL: even allocation over deciles.
    std::array<std::vector<const DifficultyScore*>, 10> strata;
    for (const auto* s : sorted)
        strata[static_cast<std::size_t>(decile(s->percentile))].push_back(s);
    std::array<std::size_t, 10> quota;
    quota.fill(config.eval_size / 10);
    std::vector<std::size_t> deciles{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    rng.shuffle(deciles);
    for (std::size_t i = 0; i < config.eval_size % 10; ++i)
        ++quota[deciles[i]];
    for (std::size_t d = 0; d < 10; ++d) {
        auto members = strata[d];
        if (members.size() < quota[d])
            throw InsufficientSamples("partition: decile " + std::to_string(d) + " has " + std::to_string(members.size()) +
                                      " samples, EVAL needs " + std::to_string(quota[d]));
        rng.shuffle(members);
        for (std::size_t i = 0; i < quota[d]; ++i)
            split[members[i]->sample_id] = "eval";
    }

    // RL: uniform from the top stratum minus EVAL.
    std::vector<const DifficultyScore*> top;
    for (const auto* s : sorted)
        if (s->percentile >= 1.0 - config.top_fraction && !split.count(s->sample_id))
            top.push_back(s);
    if (top.size() < config.rl_size)
        throw InsufficientSamples("partition: top stratum has " + std::to_string(top.size()) + " samples outside EVAL, RL needs " +
                                  std::to_string(config.rl_size));
    rng.shuffle(top);
    for (std::size_t i = 0; i < config.rl_size; ++i)
        split[top[i]->sample_id] = "rl";

    Partition out;
    for (const auto* s : sorted) {
        auto it = split.find(s->sample_id);
        out.records.push_back({s->sample_id, it == split.end() ? "sft" : it->second, s->s, s->percentile});
    }
    for (const auto& p : pairs) {
        if (!ids.count(p.source_id))
            continue;
        if (!split.count(p.source_id))
            out.sft_pairs.push_back(p);
    }
    return out;
}

std::string split_to_json(const SplitRecord& r)
{
    return nlohmann::json{{"sample_id", r.sample_id}, {"split", r.split}, {"difficulty", r.difficulty}, {"percentile", r.percentile}}.dump();
}

SplitRecord split_from_json(std::string_view line)
{
    try {
        auto j = nlohmann::json::parse(line);
        return {j.at("sample_id").get<std::string>(), j.at("split").get<std::string>(), j.at("difficulty").get<double>(),
                j.at("percentile").get<double>()};
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("split record: ") + e.what());
    }
}

} // namespace refinekit::partition
