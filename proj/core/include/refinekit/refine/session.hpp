#pragma once

#include "refinekit/grpo/policy.hpp"
#include "refinekit/metrics/metrics.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace refinekit::refine {

struct RefineConfig {
    int max_retries = 2;
    int turns = 5;                // refinement turns after turn 0
    std::string selector = "avg"; // avg | block | text | pos | color | clip
    render::Viewport viewport;
    grpo::SamplingConfig sampling;
};

// The target of a session: its identifier and the reference render (image
// and blocks, fitted to the pixel budget).
struct SessionTarget {
    std::string id;
    metrics::Page reference;
};

struct TurnRecord {
    int turn = 0;
    std::string code;
    std::string render_path; // relative to the session directory; empty if invalid
    bool valid = false;
    std::optional<metrics::MetricReport> report;
    int retries_used = 0;
};

struct RefinementSession {
    std::string target_id;
    std::vector<TurnRecord> turns;
    std::vector<double> current;  // selector value per turn, 0 for invalid turns
    std::vector<double> filtered; // best valid value so far
};

// Shared state of one session: collaborators plus the last valid render.
struct SessionContext {
    grpo::PolicyInterface& policy;
    render::RenderProvider& renderer;
    similarity::EmbeddingProvider& embedder;
    RefineConfig config;
    std::filesystem::path dir; // turn files are written here
};

// Turn 0. Throws AllRetriesInvalid when no attempt is valid.
TurnRecord initial_generate(SessionContext& ctx, const SessionTarget& target);

// Refines the latest valid turn. An all-invalid turn is returned with
// valid = false rather than thrown.
TurnRecord refine_step(SessionContext& ctx, const SessionTarget& target, const TurnRecord& last_valid, int turn);

// Turn 0 plus ctx.config.turns refinement turns, each consuming the latest
// valid turn. Writes turn_<k>.html, turn_<k>.png, turn_<k>.blocks.jsonl and
// session.json under ctx.dir. Turn-0 failure propagates as AllRetriesInvalid.
RefinementSession run_session(SessionContext& ctx, const SessionTarget& target);

// Valid turn with the highest selector value, earliest on ties. Throws
// NoValidTurn.
const TurnRecord& filtered_best(const RefinementSession& s, const std::string& selector = "avg");

double select_metric(const metrics::MetricReport& r, const std::string& selector);

// Running maximum of `current` over the turns flagged valid.
std::vector<double> running_best(const std::vector<double>& current, const std::vector<bool>& valid);

std::string session_to_json(const RefinementSession& s);

// Recomputes current/filtered from the stored renders and blocks of a
// session directory.
RefinementSession replay_session(const std::filesystem::path& dir, const SessionTarget& target,
                                 similarity::EmbeddingProvider& embedder, const std::string& selector = "avg");

// Per-turn means over sessions, as percentages to one decimal:
// a header row, a Current row and a Filtered row.
std::string format_turn_table(const std::vector<RefinementSession>& sessions);

} // namespace refinekit::refine
