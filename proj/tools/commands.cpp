#include "commands.hpp"

#include "refinekit/doc/preprocess.hpp"
#include "refinekit/error.hpp"
#include "refinekit/grpo/epoch.hpp"
#include "refinekit/io.hpp"
#include "refinekit/metrics/metrics.hpp"
#include "refinekit/perturb/perturbator.hpp"
#include "refinekit/rng.hpp"
#include "refinekit/similarity/embedding.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

namespace refinekit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<fs::path> html_files(const fs::path& dir)
{
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".html")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<perturb::CorpusDocument> load_corpus(const fs::path& dir, Streams io)
{
    std::vector<perturb::CorpusDocument> docs;
    for (const auto& f : html_files(dir)) {
        perturb::CorpusDocument d;
        d.id = f.stem().string();
        auto report = doc::preprocess(read_file(f), f.filename().string(), d.doc);
        if (report.rejected) {
            io.err << "skipping " << f.filename().string() << ": " << report.reason << "\n";
            continue;
        }
        docs.push_back(std::move(d));
    }
    if (docs.empty())
        throw Error("no usable documents in " + dir.string());
    return docs;
}

std::unique_ptr<similarity::EmbeddingProvider> make_embedder(const EmbedSettings& s)
{
    if (s.endpoint == "fallback")
        return std::make_unique<similarity::FallbackEmbedder>();
    similarity::RemoteEmbedder::Options o;
    o.endpoint = s.endpoint;
    o.timeout = std::chrono::milliseconds(s.timeout_ms);
    o.max_in_flight = s.max_in_flight;
    return std::make_unique<similarity::RemoteEmbedder>(o);
}

// Scripted drafts: each corpus document perturbed by `k` composed edits.
// Documents without k placeable edits are reported and left out.
std::map<std::string, grpo::ScriptedPolicy::Draft> make_drafts(const std::vector<perturb::CorpusDocument>& docs, int k,
                                                               std::uint64_t seed, Streams io)
{
    std::map<std::string, grpo::ScriptedPolicy::Draft> drafts;
    for (const auto& d : docs) {
        try {
            auto c = perturb::compose(d.doc, k, mix_seed(seed, d.id));
            drafts[d.id] = {doc::serialize(c.doc), c.edits, {}, {}};
        } catch (const InsufficientTargets& e) {
            io.err << "skipping " << d.id << ": " << e.what() << "\n";
        }
    }
    return drafts;
}

std::string percent(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", 100 * v);
    return buf;
}

} // namespace

int cmd_sanitize(const fs::path& in_dir, const fs::path& out_dir, Streams io)
{
    if (fs::exists(out_dir) && fs::equivalent(in_dir, out_dir))
        throw ConfigError("sanitize: output directory must differ from the input");
    std::vector<std::string> lines;
    std::size_t written = 0, scripts = 0, external = 0, repaired = 0, rejected = 0;
    const auto files = html_files(in_dir);
    for (const auto& f : files) {
        doc::HtmlDocument out;
        auto r = doc::preprocess(read_file(f), f.filename().string(), out);
        lines.push_back(json{{"id", f.stem().string()},
                             {"removed_scripts", r.removed_scripts},
                             {"removed_external_refs", r.removed_external_refs},
                             {"repaired_tags", r.repaired_tags},
                             {"rejected", r.rejected},
                             {"reason", r.reason},
                             {"external_urls", r.external_urls}}
                            .dump());
        if (r.rejected) {
            ++rejected;
            io.err << "rejected " << f.filename().string() << ": " << r.reason << "\n";
            continue;
        }
        write_file(out_dir / f.filename(), doc::serialize(out));
        ++written;
        scripts += r.removed_scripts;
        external += r.removed_external_refs;
        repaired += r.repaired_tags;
    }
    write_lines(out_dir / "sanitize_report.jsonl", lines);
    io.out << "sanitized " << written << " of " << files.size() << " documents\n"
           << "removed scripts " << scripts << "\n"
           << "removed external refs " << external << "\n"
           << "repaired tags " << repaired << "\n"
           << "rejected " << rejected << "\n";
    return written > 0 ? 0 : 1;
}

int cmd_forge(PipelineConfig& c, const fs::path& corpus_dir, const fs::path& out_dir,
              const std::optional<fs::path>& predictions_dir, Streams io)
{
    if (c.render.provider == "cdp" && c.forge.workers > 1)
        throw ConfigError("forge.workers > 1 needs a thread-safe provider; the cdp provider serves one render at a time");
    auto corpus = load_corpus(corpus_dir, io);
    std::vector<perturb::ModelPrediction> predictions;
    if (predictions_dir)
        for (const auto& f : html_files(*predictions_dir)) {
            const auto name = f.filename().string();
            predictions.push_back({name.substr(0, name.find('.')), read_file(f)});
        }

    auto renderer = make_renderer(c.render);
    auto cfg = c.forge;
    cfg.seed = substream(c, "forge");
    cfg.viewport = c.render.viewport;
    auto report = perturb::forge_pairs(corpus, predictions, *renderer, cfg, out_dir);

    std::size_t rule = 0;
    for (const auto& r : report.records)
        rule += r.source == perturb::PairSource::rule_based;
    io.out << "forged " << report.records.size() << " pairs from " << corpus.size() << " documents\n"
           << "rule-based " << rule << "\n"
           << "model-predicted " << report.records.size() - rule << "\n"
           << "discarded imperceptible " << report.discarded_imperceptible << "\n"
           << "skipped model-predicted " << report.skipped_model_predicted << "\n"
           << "failures " << report.failures.size() << "\n";
    for (const auto& f : report.failures)
        io.err << "failed " << f.source_id << ": " << f.reason << "\n";
    return report.records.empty() ? 1 : 0;
}

int cmd_partition(PipelineConfig& c, const fs::path& corpus_dir, const fs::path& out_dir, const std::optional<fs::path>& manifest,
                  Streams io)
{
    std::vector<partition::SampleFeatures> samples;
    for (const auto& f : html_files(corpus_dir))
        samples.push_back({f.stem().string(), partition::extract_features(doc::parse(read_file(f), f.filename().string()))});

    std::vector<perturb::PairRecord> pairs;
    if (manifest) {
        pairs = perturb::read_manifest(*manifest);
        // Pair paths are relative to the manifest; rebase them onto out_dir.
        const auto base = fs::absolute(manifest->parent_path());
        const auto target = fs::absolute(out_dir);
        auto rebase = [&](std::string& p) { p = fs::relative(base / p, target).generic_string(); };
        fs::create_directories(target);
        for (auto& p : pairs) {
            rebase(p.c_t_path);
            rebase(p.c_next_path);
            rebase(p.i_t_path);
            rebase(p.i_gt_path);
        }
    }

    auto cfg = c.partition;
    cfg.seed = substream(c, "partition");
    auto result = partition::partition(partition::difficulty_scores(samples), pairs, cfg);

    std::vector<std::string> split_lines, pair_lines;
    std::map<std::string, std::size_t> counts;
    for (const auto& r : result.records) {
        split_lines.push_back(partition::split_to_json(r));
        ++counts[r.split];
    }
    for (const auto& p : result.sft_pairs)
        pair_lines.push_back(perturb::pair_to_json(p));
    write_lines(out_dir / "splits.jsonl", split_lines);
    write_lines(out_dir / "sft_pairs.jsonl", pair_lines);
    io.out << "sft " << counts["sft"] << "\n"
           << "rl " << counts["rl"] << "\n"
           << "eval " << counts["eval"] << "\n"
           << "sft pairs " << result.sft_pairs.size() << "\n";
    return 0;
}

int cmd_eval(PipelineConfig& c, const EvalOptions& o, Streams io)
{
    auto pairs = perturb::read_manifest(o.manifest);
    if (o.splits) {
        std::set<std::string> keep;
        for (const auto& line : read_lines(*o.splits)) {
            auto r = partition::split_from_json(line);
            if (r.split == o.split)
                keep.insert(r.sample_id);
        }
        std::erase_if(pairs, [&](const perturb::PairRecord& p) { return !keep.count(p.source_id); });
    }
    if (pairs.empty())
        throw Error("eval: no pairs to evaluate");

    auto renderer = make_renderer(c.render);
    auto embedder = make_embedder(c.embed);
    const auto base = o.manifest.parent_path();
    std::vector<metrics::MetricReport> reports;
    std::vector<std::string> lines;
    for (const auto& p : pairs) {
        const auto ref = read_file(base / p.c_next_path);
        const auto gen = o.self ? ref : read_file(base / p.c_t_path);
        auto r = metrics::evaluate(gen, ref, *renderer, *embedder, c.render.viewport);
        if (o.per_pair)
            io.out << p.pair_id << " " << percent(r.block) << " " << percent(r.text) << " " << percent(r.pos) << " "
                   << percent(r.color) << " " << percent(r.clip) << " " << percent(r.avg) << (r.failed ? " failed" : "")
                   << "\n";
        lines.push_back(metrics::metric_record_json(p.pair_id, r));
        reports.push_back(r);
    }
    write_lines(o.out.value_or(base / "metrics.jsonl"), lines);
    io.out << metrics::format_summary_table(metrics::summarize(reports));
    return 0;
}

int cmd_reward(PipelineConfig& c, const RewardOptions& o, Streams io)
{
    const bool by_path = o.target || o.current || o.next;
    const bool by_value = o.s_t || o.s_next;
    if (by_path == by_value || (by_path && !(o.target && o.current && o.next)) || (by_value && !(o.s_t && o.s_next)))
        throw ConfigError("reward: give either --s-t and --s-next, or --target, --current and --next");

    double s_t = o.s_t.value_or(0), s_next = o.s_next.value_or(0);
    bool format_ok = o.format_ok;
    if (by_path) {
        auto renderer = make_renderer(c.render);
        auto embedder = make_embedder(c.embed);
        auto fitted = [&](const std::string& html) {
            return render::fit_pixel_budget(render::render_html(html, *renderer, c.render.viewport).image);
        };
        const auto target = fitted(read_file(*o.target));
        s_t = similarity::similarity(fitted(read_file(*o.current)), target, *embedder);
        const auto next = read_file(*o.next);
        format_ok = doc::is_complete(next);
        if (format_ok) {
            try {
                s_next = similarity::similarity(fitted(next), target, *embedder);
            } catch (const IncompleteDocument&) {
                format_ok = false;
            } catch (const RenderTimeout&) {
                format_ok = false;
            } catch (const ProviderUnavailable&) {
                format_ok = false;
            }
        }
    }
    auto r = grpo::composite_reward(format_ok, s_t, s_next, c.grpo.delta_min);
    io.out << json{{"s_t", s_t},
                   {"s_next", s_next},
                   {"format_ok", format_ok},
                   {"r_format", r.r_format},
                   {"r_improve", r.r_improve},
                   {"r_quality", r.r_quality},
                   {"total", r.total}}
                  .dump()
           << "\n";
    return 0;
}

int cmd_grpo_sim(PipelineConfig& c, const fs::path& corpus_dir, const fs::path& run_dir, Streams io)
{
    auto corpus = load_corpus(corpus_dir, io);
    auto renderer = make_renderer(c.render);
    auto embedder = make_embedder(c.embed);
    auto drafts = make_drafts(corpus, c.grpo_policy.draft_k, substream(c, "grpo"), io);
    std::vector<grpo::TrainingTarget> targets;
    for (const auto& d : corpus)
        if (drafts.count(d.id))
            targets.push_back({d.id, render::fit_pixel_budget(render::render(d.doc, *renderer, c.render.viewport).image)});
    if (targets.empty())
        throw Error("grpo-sim: no targets");

    grpo::ScriptedPolicy policy(grpo::scripted_mode_from_string(c.grpo_policy.policy), std::move(drafts),
                                substream(c, "grpo-policy"));
    grpo::RunOptions options{c.grpo, c.sampling, c.render.viewport};
    auto groups = grpo::run_grpo(policy, targets, *renderer, *embedder, options, run_dir);

    io.out << "epoch  mean_reward  mean_loss  invalid\n";
    for (int e = 0; e < c.grpo.epochs; ++e) {
        double reward = 0, loss = 0;
        std::size_t samples = 0, invalid = 0, n = 0;
        for (const auto& g : groups) {
            if (g.epoch != e)
                continue;
            loss += g.loss;
            ++n;
            for (const auto& s : g.group) {
                reward += s.reward.total;
                invalid += s.reward.r_format < 0;
                ++samples;
            }
        }
        char row[96];
        std::snprintf(row, sizeof row, "%5d  %11.4f  %9.4f  %7zu\n", e, samples ? reward / static_cast<double>(samples) : 0.0,
                      n ? loss / static_cast<double>(n) : 0.0, invalid);
        io.out << row;
    }
    io.out << "trajectory " << (run_dir / "trajectory.jsonl").string() << "\n";
    return 0;
}

int cmd_refine(PipelineConfig& c, const fs::path& corpus_dir, const fs::path& out_dir, Streams io)
{
    auto corpus = load_corpus(corpus_dir, io);
    auto renderer = make_renderer(c.render);
    auto embedder = make_embedder(c.embed);
    auto drafts = make_drafts(corpus, c.refine_policy.draft_k, substream(c, "refine"), io);
    grpo::ScriptedPolicy policy(grpo::scripted_mode_from_string(c.refine_policy.policy), drafts, substream(c, "refine-policy"));

    auto cfg = c.refine;
    cfg.viewport = c.render.viewport;
    cfg.sampling = c.sampling;
    std::vector<refine::RefinementSession> sessions;
    std::size_t failed = 0;
    for (const auto& d : corpus) {
        if (!drafts.count(d.id))
            continue;
        refine::SessionTarget target{d.id, metrics::fit_page(render::render(d.doc, *renderer, c.render.viewport))};
        refine::SessionContext ctx{policy, *renderer, *embedder, cfg, out_dir / d.id};
        try {
            sessions.push_back(refine::run_session(ctx, target));
        } catch (const AllRetriesInvalid& e) {
            io.err << "session " << d.id << ": " << e.what() << "\n";
            ++failed;
        }
    }
    const auto table = refine::format_turn_table(sessions);
    write_file(out_dir / "turn_table.txt", table);
    io.out << table << "sessions " << sessions.size() << ", failed " << failed << "\n";
    return failed || sessions.empty() ? 1 : 0;
}

} // namespace refinekit::cli
