#include "refinekit/grpo/policy.hpp"

#include "refinekit/error.hpp"
#include "refinekit/rng.hpp"

#include <stdexcept>

namespace refinekit::grpo {

ScriptedPolicy::Mode scripted_mode_from_string(std::string_view s)
{
    if (s == "noop")
        return ScriptedPolicy::Mode::noop;
    if (s == "oracle")
        return ScriptedPolicy::Mode::oracle;
    if (s == "mixture")
        return ScriptedPolicy::Mode::mixture;
    if (s == "table")
        return ScriptedPolicy::Mode::table;
    throw ConfigError("unknown scripted policy: " + std::string(s));
}

std::string_view to_string(ScriptedPolicy::Mode m)
{
    switch (m) {
    case ScriptedPolicy::Mode::noop: return "noop";
    case ScriptedPolicy::Mode::oracle: return "oracle";
    case ScriptedPolicy::Mode::mixture: return "mixture";
    case ScriptedPolicy::Mode::table: return "table";
    }
    return "noop";
}

ScriptedPolicy::ScriptedPolicy(Mode mode, std::map<std::string, Draft> drafts, std::uint64_t seed)
    : mode_(mode), drafts_(std::move(drafts)), seed_(seed)
{
}

const ScriptedPolicy::Draft& ScriptedPolicy::draft(const std::string& target_id) const
{
    auto it = drafts_.find(target_id);
    if (it == drafts_.end())
        throw std::invalid_argument("scripted policy has no draft for target " + target_id);
    return it->second;
}

std::string ScriptedPolicy::generate(const GenerateRequest& request)
{
    const auto& d = draft(request.target_id);
    auto call = calls_["generate:" + request.target_id]++;
    if (!d.generations.empty())
        return d.generations[call % d.generations.size()];
    return d.code;
}

namespace {

std::string undo(const ScriptedPolicy::Draft& d, const std::string& code)
{
    try {
        return perturb::invert(code, d.edits);
    } catch (const SpanMismatch&) {
        return code;
    }
}

} // namespace

std::vector<Candidate> ScriptedPolicy::refine(const RefineRequest& request, int n)
{
    const auto& d = draft(request.target_id);
    std::vector<Candidate> out;
    for (int i = 0; i < n; ++i) {
        auto call = calls_["refine:" + request.target_id]++;
        Candidate c;
        switch (mode_) {
        case Mode::noop: c.code = request.code; break;
        case Mode::oracle: c.code = undo(d, request.code); break;
        case Mode::table: c.code = d.refinements.empty() ? request.code : d.refinements[call % d.refinements.size()]; break;
        case Mode::mixture: {
            Rng rng(mix_seed(seed_, request.target_id + ":" + std::to_string(call)));
            c.logprob_old = rng.uniform_real(-50.0, -10.0);
            c.logprob_new = c.logprob_old + rng.uniform_real(-0.3, 0.3);
            switch (rng.index(4)) {
            case 0: c.code = undo(d, request.code); break;
            case 1: c.code = request.code; break;
            case 2: {
                c.code = request.code;
                try {
                    auto parsed = doc::parse(request.code);
                    const auto& rules = perturb::rule_catalog();
                    auto rule = rules[rng.index(rules.size())].id;
                    c.code = doc::serialize(perturb::apply_rule(parsed, rule, rng.next()).doc);
                } catch (const Error&) {
                }
                break;
            }
            default: {
                auto cut = request.code.rfind("</html>");
                c.code = request.code.substr(0, cut == std::string::npos ? request.code.size() / 2 : cut);
                break;
            }
            }
            break;
        }
        }
        out.push_back(std::move(c));
    }
    return out;
}

bool ScriptedPolicy::update(const UpdateRecord& record)
{
    updates_.push_back(record);
    return true;
}

} // namespace refinekit::grpo
