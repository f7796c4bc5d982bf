#include "refinekit/perturb/forge.hpp"

#include "refinekit/digest.hpp"
#include "refinekit/error.hpp"
#include "refinekit/io.hpp"
#include "refinekit/rng.hpp"

#include "json.hpp"

#include <atomic>
#include <cmath>
#include <map>
#include <thread>

namespace refinekit::perturb {

using nlohmann::json;

std::string_view to_string(PairSource s) { return s == PairSource::rule_based ? "rule_based" : "model_predicted"; }

PairSource pair_source_from_string(std::string_view s)
{
    if (s == "rule_based")
        return PairSource::rule_based;
    if (s == "model_predicted")
        return PairSource::model_predicted;
    throw FormatError("unknown pair source: " + std::string(s));
}

std::string make_pair_id(std::string_view source_id, const std::vector<std::string>& rule_ids, std::uint64_t seed)
{
    std::string material(source_id);
    material += '\x1f';
    for (const auto& r : rule_ids)
        material += r + ",";
    material += '\x1f' + std::to_string(seed);
    return sha256_hex(material).substr(0, 16);
}

namespace {

json edit_json(const EditRecord& e)
{
    return {
        {"category", to_string(e.category)},
        {"rule_id", e.rule_id},
        {"seed", e.seed},
        {"node_path", e.node_path},
        {"target", to_string(e.target)},
        {"target_name", e.target_name},
        {"original_fragment", e.original_fragment},
        {"replacement_fragment", e.replacement_fragment},
        {"byte_span", {e.begin, e.end}},
    };
}

EditRecord edit_from(const json& j)
{
    EditRecord e;
    e.category = category_from_string(j.at("category").get<std::string>());
    e.rule_id = j.at("rule_id").get<std::string>();
    e.seed = j.at("seed").get<std::uint64_t>();
    e.node_path = j.at("node_path").get<doc::NodePath>();
    e.target = target_from_string(j.at("target").get<std::string>());
    e.target_name = j.at("target_name").get<std::string>();
    e.original_fragment = j.at("original_fragment").get<std::string>();
    e.replacement_fragment = j.at("replacement_fragment").get<std::string>();
    e.begin = j.at("byte_span").at(0).get<std::size_t>();
    e.end = j.at("byte_span").at(1).get<std::size_t>();
    return e;
}

struct DocResult {
    std::vector<PairRecord> records;
    std::size_t discarded = 0;
    std::vector<ForgeFailure> failures;
};

std::string ref_stem(std::string_view source_id) { return "refs/" + sha256_hex(source_id).substr(0, 16); }

render::RasterImage budget_render(std::string_view html, render::RenderProvider& provider, const render::Viewport& vp)
{
    return render::fit_pixel_budget(render::render_html(html, provider, vp).image);
}

DocResult forge_document(const CorpusDocument& item, render::RenderProvider& provider, const ForgeConfig& config,
                         const std::filesystem::path& out_dir)
{
    DocResult out;
    auto reference = doc::serialize(item.doc);
    render::RasterImage i_gt;
    try {
        i_gt = budget_render(reference, provider, config.viewport);
    } catch (const Error& e) {
        out.failures.push_back({item.id, std::string("reference render: ") + e.what()});
        return out;
    }
    const auto stem = ref_stem(item.id);
    write_file(out_dir / (stem + ".html"), reference);
    render::write_png(out_dir / (stem + ".png"), i_gt);

    const auto doc_seed = mix_seed(config.seed, item.id);
    for (int j = 0; j < config.pairs_per_sample; ++j) {
        for (int attempt = 0; attempt < config.attempts_per_pair; ++attempt) {
            auto seed = mix_seed(doc_seed, static_cast<std::uint64_t>(j * config.attempts_per_pair + attempt));
            Rng rng(seed);
            int k = static_cast<int>(rng.uniform_int(1, std::max(1, config.max_k)));
            Composed composed;
            try {
                composed = compose(item.doc, k, seed);
            } catch (const InsufficientTargets&) {
                continue;
            }
            auto c_t = doc::serialize(composed.doc);
            render::RasterImage i_t;
            try {
                i_t = budget_render(c_t, provider, config.viewport);
            } catch (const Error& e) {
                out.failures.push_back({item.id, std::string("perturbed render: ") + e.what()});
                continue;
            }
            if (render::differing_pixels(i_t, i_gt) == 0) {
                ++out.discarded;
                continue;
            }
            PairRecord r;
            r.source = PairSource::rule_based;
            r.source_id = item.id;
            r.seed = seed;
            for (const auto& e : composed.edits)
                r.rule_ids.push_back(e.rule_id);
            r.pair_id = make_pair_id(item.id, r.rule_ids, seed);
            r.edits = std::move(composed.edits);
            r.c_t_path = "pairs/" + r.pair_id + "/c_t.html";
            r.i_t_path = "pairs/" + r.pair_id + "/i_t.png";
            r.c_next_path = stem + ".html";
            r.i_gt_path = stem + ".png";
            write_file(out_dir / r.c_t_path, c_t);
            render::write_png(out_dir / r.i_t_path, i_t);
            out.records.push_back(std::move(r));
            break;
        }
    }
    return out;
}

} // namespace

std::string edit_to_json(const EditRecord& e) { return edit_json(e).dump(); }

EditRecord edit_from_json(std::string_view line)
{
    try {
        return edit_from(json::parse(line));
    } catch (const json::exception& e) {
        throw FormatError(std::string("edit record: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("edit record: ") + e.what());
    }
}

std::string pair_to_json(const PairRecord& r)
{
    json edits = json::array();
    for (const auto& e : r.edits)
        edits.push_back(edit_json(e));
    json j = {
        {"pair_id", r.pair_id},       {"source", to_string(r.source)}, {"source_id", r.source_id},
        {"c_t_path", r.c_t_path},     {"c_next_path", r.c_next_path},  {"i_t_path", r.i_t_path},
        {"i_gt_path", r.i_gt_path},   {"edits", edits},                {"seed", r.seed},
        {"rule_ids", r.rule_ids},
    };
    return j.dump();
}

PairRecord pair_from_json(std::string_view line)
{
    try {
        auto j = json::parse(line);
        PairRecord r;
        r.pair_id = j.at("pair_id").get<std::string>();
        r.source = pair_source_from_string(j.at("source").get<std::string>());
        r.source_id = j.value("source_id", "");
        r.c_t_path = j.at("c_t_path").get<std::string>();
        r.c_next_path = j.at("c_next_path").get<std::string>();
        r.i_t_path = j.at("i_t_path").get<std::string>();
        r.i_gt_path = j.at("i_gt_path").get<std::string>();
        for (const auto& e : j.at("edits"))
            r.edits.push_back(edit_from(e));
        r.seed = j.at("seed").get<std::uint64_t>();
        r.rule_ids = j.at("rule_ids").get<std::vector<std::string>>();
        return r;
    } catch (const json::exception& e) {
        throw FormatError(std::string("pair record: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("pair record: ") + e.what());
    }
}

std::vector<PairRecord> read_manifest(const std::filesystem::path& path)
{
    std::vector<PairRecord> out;
    for (const auto& line : read_lines(path))
        out.push_back(pair_from_json(line));
    return out;
}

ForgeReport forge_pairs(const std::vector<CorpusDocument>& corpus, const std::vector<ModelPrediction>& predictions,
                        render::RenderProvider& provider, const ForgeConfig& config, const std::filesystem::path& out_dir)
{
    if (config.pairs_per_sample < 0 || config.max_k < 1 || config.attempts_per_pair < 1)
        throw ConfigError("forge: pairs_per_sample >= 0, max_k >= 1 and attempts_per_pair >= 1 are required");
    if (!(config.rule_fraction > 0.0 && config.rule_fraction <= 1.0))
        throw ConfigError("forge: rule_fraction must lie in (0, 1]");

    std::vector<DocResult> results(corpus.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i; (i = next++) < corpus.size();)
            results[i] = forge_document(corpus[i], provider, config, out_dir);
    };
    int workers = std::max(1, config.workers);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }

    ForgeReport report;
    for (auto& r : results) {
        report.discarded_imperceptible += r.discarded;
        for (auto& rec : r.records)
            report.records.push_back(std::move(rec));
        for (auto& f : r.failures)
            report.failures.push_back(std::move(f));
    }

    // Model-predicted pairs fill the remaining share of the mix.
    const auto rule_count = report.records.size();
    const auto allowed = static_cast<std::size_t>(
        std::floor(static_cast<double>(rule_count) * (1.0 - config.rule_fraction) / config.rule_fraction + 1e-9));
    std::map<std::string, const CorpusDocument*> by_id;
    for (const auto& c : corpus)
        by_id[c.id] = &c;
    std::vector<std::size_t> order(predictions.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    Rng rng(mix_seed(config.seed, "model_predicted"));
    rng.shuffle(order);
    std::size_t taken = 0;
    for (std::size_t idx : order) {
        const auto& p = predictions[idx];
        if (taken >= allowed) {
            ++report.skipped_model_predicted;
            continue;
        }
        auto it = by_id.find(p.source_id);
        if (it == by_id.end()) {
            report.failures.push_back({p.source_id, "model prediction for unknown document"});
            continue;
        }
        auto seed = mix_seed(config.seed, "model:" + p.source_id + ":" + std::to_string(idx));
        render::RasterImage i_t, i_gt;
        try {
            i_t = budget_render(p.html, provider, config.viewport);
            i_gt = budget_render(doc::serialize(it->second->doc), provider, config.viewport);
        } catch (const Error& e) {
            report.failures.push_back({p.source_id, std::string("model-predicted render: ") + e.what()});
            continue;
        }
        if (render::differing_pixels(i_t, i_gt) == 0) {
            ++report.discarded_imperceptible;
            continue;
        }
        PairRecord r;
        r.source = PairSource::model_predicted;
        r.source_id = p.source_id;
        r.seed = seed;
        r.pair_id = make_pair_id(p.source_id, {}, seed);
        r.c_t_path = "pairs/" + r.pair_id + "/c_t.html";
        r.i_t_path = "pairs/" + r.pair_id + "/i_t.png";
        auto stem = ref_stem(p.source_id);
        r.c_next_path = stem + ".html";
        r.i_gt_path = stem + ".png";
        write_file(out_dir / r.c_t_path, p.html);
        render::write_png(out_dir / r.i_t_path, i_t);
        if (!std::filesystem::exists(out_dir / r.i_gt_path)) {
            write_file(out_dir / r.c_next_path, doc::serialize(it->second->doc));
            render::write_png(out_dir / r.i_gt_path, i_gt);
        }
        report.records.push_back(std::move(r));
        ++taken;
    }

    std::vector<std::string> lines;
    for (const auto& r : report.records)
        lines.push_back(pair_to_json(r));
    write_lines(out_dir / "manifest.jsonl", lines);
    return report;
}

} // namespace refinekit::perturb
