#include "refinekit/refine/session.hpp"

#include "refinekit/doc/preprocess.hpp"
#include "refinekit/error.hpp"
#include "refinekit/io.hpp"
#include "refinekit/refine/prompts.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdio>

namespace refinekit::refine {

using nlohmann::json;

namespace {

struct Attempt {
    bool valid = false;
    metrics::Page page;
};

Attempt check(SessionContext& ctx, const std::string& code)
{
    Attempt a;
    if (!doc::is_complete(code))
        return a;
    try {
        a.page = metrics::fit_page(render::render_html(code, ctx.renderer, ctx.config.viewport));
    } catch (const IncompleteDocument&) {
        return a;
    } catch (const RenderTimeout&) {
        return a;
    } catch (const ProviderUnavailable&) {
        return a;
    }
    a.valid = !render::is_blank(a.page.image);
    return a;
}

std::string stem(int turn) { return "turn_" + std::to_string(turn); }

TurnRecord finish(SessionContext& ctx, const SessionTarget& target, int turn, const std::string& code, Attempt& a, int retries)
{
    TurnRecord t;
    t.turn = turn;
    t.code = code;
    t.valid = a.valid;
    t.retries_used = retries;
    write_file(ctx.dir / (stem(turn) + ".html"), code);
    if (a.valid) {
        t.render_path = stem(turn) + ".png";
        render::write_png(ctx.dir / t.render_path, a.page.image);
        render::write_blocks(ctx.dir / (stem(turn) + ".blocks.jsonl"), a.page.blocks);
        t.report = metrics::evaluate(a.page, target.reference, ctx.embedder);
    }
    return t;
}

json report_json(const std::optional<metrics::MetricReport>& r)
{
    if (!r)
        return nullptr;
    return {{"block", r->block}, {"text", r->text}, {"pos", r->pos}, {"color", r->color}, {"clip", r->clip}, {"avg", r->avg}};
}

void fill_scores(RefinementSession& s, const std::string& selector)
{
    s.current.clear();
    std::vector<bool> valid;
    for (const auto& t : s.turns) {
        s.current.push_back(t.valid && t.report ? select_metric(*t.report, selector) : 0.0);
        valid.push_back(t.valid);
    }
    s.filtered = running_best(s.current, valid);
}

} // namespace

double select_metric(const metrics::MetricReport& r, const std::string& selector)
{
    if (selector == "avg")
        return r.avg;
    if (selector == "block")
        return r.block;
    if (selector == "text")
        return r.text;
    if (selector == "pos")
        return r.pos;
    if (selector == "color")
        return r.color;
    if (selector == "clip")
        return r.clip;
    throw ConfigError("unknown selector metric: " + selector);
}

std::vector<double> running_best(const std::vector<double>& current, const std::vector<bool>& valid)
{
    std::vector<double> out;
    double best = 0;
    bool any = false;
    for (std::size_t i = 0; i < current.size(); ++i) {
        if (valid[i] && (!any || current[i] > best)) {
            best = current[i];
            any = true;
        }
        out.push_back(best);
    }
    return out;
}

TurnRecord initial_generate(SessionContext& ctx, const SessionTarget& target)
{
    grpo::GenerateRequest req{target.id, &target.reference.image, std::string(system_prompt()), initial_prompt(), ctx.config.sampling};
    for (int attempt = 0; attempt <= ctx.config.max_retries; ++attempt) {
        auto code = ctx.policy.generate(req);
        auto a = check(ctx, code);
        if (a.valid)
            return finish(ctx, target, 0, code, a, attempt);
    }
    throw AllRetriesInvalid("target " + target.id + ": no valid initial generation after " +
                            std::to_string(ctx.config.max_retries + 1) + " attempts");
}

TurnRecord refine_step(SessionContext& ctx, const SessionTarget& target, const TurnRecord& last_valid, int turn)
{
    auto current = render::read_png(ctx.dir / last_valid.render_path);
    grpo::RefineRequest req{target.id, &target.reference.image, &current, last_valid.code, std::string(system_prompt()),
                            refinement_prompt(last_valid.code), ctx.config.sampling};
    std::string code;
    Attempt a;
    int attempt = 0;
    for (; attempt <= ctx.config.max_retries; ++attempt) {
        auto candidates = ctx.policy.refine(req, 1);
        code = candidates.empty() ? std::string() : candidates.front().code;
        a = check(ctx, code);
        if (a.valid)
            break;
    }
    return finish(ctx, target, turn, code, a, std::min(attempt, ctx.config.max_retries));
}

RefinementSession run_session(SessionContext& ctx, const SessionTarget& target)
{
    if (ctx.config.turns < 0 || ctx.config.max_retries < 0)
        throw ConfigError("refine: turns and max_retries must be non-negative");
    select_metric({}, ctx.config.selector);
    RefinementSession s;
    s.target_id = target.id;
    s.turns.push_back(initial_generate(ctx, target));
    std::size_t last_valid = 0;
    for (int k = 1; k <= ctx.config.turns; ++k) {
        s.turns.push_back(refine_step(ctx, target, s.turns[last_valid], k));
        if (s.turns.back().valid)
            last_valid = s.turns.size() - 1;
    }
    fill_scores(s, ctx.config.selector);
    write_file(ctx.dir / "session.json", session_to_json(s));
    return s;
}

const TurnRecord& filtered_best(const RefinementSession& s, const std::string& selector)
{
    const TurnRecord* best = nullptr;
    double best_value = 0;
    for (const auto& t : s.turns) {
        if (!t.valid || !t.report)
            continue;
        double v = select_metric(*t.report, selector);
        if (!best || v > best_value) {
            best = &t;
            best_value = v;
        }
    }
    if (!best)
        throw NoValidTurn("session " + s.target_id + " has no valid turn");
    return *best;
}

std::string session_to_json(const RefinementSession& s)
{
    json turns = json::array();
    for (const auto& t : s.turns)
        turns.push_back({{"turn", t.turn},
                         {"code_path", stem(t.turn) + ".html"},
                         {"render_path", t.render_path},
                         {"valid", t.valid},
                         {"retries_used", t.retries_used},
                         {"report", report_json(t.report)}});
    return json{{"target_id", s.target_id}, {"turns", turns}, {"current", s.current}, {"filtered", s.filtered}}.dump(2);
}

RefinementSession replay_session(const std::filesystem::path& dir, const SessionTarget& target,
                                 similarity::EmbeddingProvider& embedder, const std::string& selector)
{
    json j;
    try {
        j = json::parse(read_file(dir / "session.json"));
    } catch (const json::exception& e) {
        throw FormatError(std::string("session record: ") + e.what());
    }
    RefinementSession s;
    s.target_id = j.value("target_id", "");
    for (const auto& jt : j.at("turns")) {
        TurnRecord t;
        t.turn = jt.at("turn").get<int>();
        t.valid = jt.at("valid").get<bool>();
        t.retries_used = jt.at("retries_used").get<int>();
        t.render_path = jt.at("render_path").get<std::string>();
        t.code = read_file(dir / jt.at("code_path").get<std::string>());
        if (t.valid) {
            metrics::Page page{render::read_png(dir / t.render_path), render::read_blocks(dir / (stem(t.turn) + ".blocks.jsonl"))};
            t.report = metrics::evaluate(page, target.reference, embedder);
        }
        s.turns.push_back(std::move(t));
    }
    fill_scores(s, selector);
    return s;
}

std::string format_turn_table(const std::vector<RefinementSession>& sessions)
{
    std::size_t turns = 0;
    for (const auto& s : sessions)
        turns = std::max(turns, s.current.size());
    std::string out = "        ";
    char cell[32];
    for (std::size_t t = 0; t < turns; ++t) {
        std::snprintf(cell, sizeof cell, "%8s", ("Turn " + std::to_string(t)).c_str());
        out += cell;
    }
    out += '\n';
    auto row = [&](const char* name, auto pick) {
        std::snprintf(cell, sizeof cell, "%-8s", name);
        out += cell;
        for (std::size_t t = 0; t < turns; ++t) {
            double sum = 0;
            std::size_t n = 0;
            for (const auto& s : sessions)
                if (t < s.current.size()) {
                    sum += pick(s)[t];
                    ++n;
                }
            std::snprintf(cell, sizeof cell, "%8.1f", n ? 100 * sum / static_cast<double>(n) : 0.0);
            out += cell;
        }
        out += '\n';
    };
    row("Current", [](const RefinementSession& s) -> const std::vector<double>& { return s.current; });
    row("Filtered", [](const RefinementSession& s) -> const std::vector<double>& { return s.filtered; });
    return out;
}

} // namespace refinekit::refine
