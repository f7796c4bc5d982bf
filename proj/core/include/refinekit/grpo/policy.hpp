#pragma once

#include "refinekit/perturb/perturbator.hpp"
#include "refinekit/render/image.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace refinekit::grpo {

// Decoding settings handed to policies unchanged. Scripted policies ignore
// them.
struct SamplingConfig {
    double nucleus_p = 0.95;
    int top_k = 50;
    double temperature = 0.9;
    double repetition_penalty = 1.05;
    int max_tokens = 6000;
};

struct GenerateRequest {
    std::string target_id;
    const render::RasterImage* target = nullptr; // I_gt
    std::string system_prompt;
    std::string prompt;
    SamplingConfig sampling;
};

struct RefineRequest {
    std::string target_id;
    const render::RasterImage* target = nullptr;  // I_gt
    const render::RasterImage* current = nullptr; // I_t
    std::string code;                             // C_t
    std::string system_prompt;
    std::string prompt;
    SamplingConfig sampling;
};

// One refinement with the summed token log-probabilities under the current
// and the snapshot policy.
struct Candidate {
    std::string code;
    double logprob_new = 0;
    double logprob_old = 0;
};

struct UpdateRecord {
    int epoch = 0;
    std::string target_id;
    double loss = 0;
    std::vector<double> advantages;
    std::vector<double> ratios;
};

class PolicyInterface {
public:
    virtual ~PolicyInterface() = default;
    virtual std::string generate(const GenerateRequest& request) = 0;
    virtual std::vector<Candidate> refine(const RefineRequest& request, int n) = 0;
    // Freezes the current parameters as the reference for ratios.
    virtual void snapshot() {}
    // Returns true once the update has been applied (or deliberately skipped).
    virtual bool update(const UpdateRecord&) { return true; }
};

// Test and simulation policies: deterministic given their seed and the
// sequence of calls.
//
// generate replays the target's `generations` in order when given, and
// otherwise returns its draft code.
//
//   noop     refine returns C_t.
//   oracle   refine undoes the draft's recorded edits, giving back the
//            reference document.
//   mixture  each refinement is drawn from
//            {reference, C_t unchanged, C_t with one more perturbation,
//            C_t cut before </html>}.
//   table    refine replays the target's `refinements` in order, cycling
//            when exhausted.
//
// Log-probabilities are zero for noop/oracle/table. For mixture, logprob_old
// is drawn from [-50, -10) and logprob_new = logprob_old + U[-0.3, 0.3).
class ScriptedPolicy final : public PolicyInterface {
public:
    enum class Mode { noop, oracle, mixture, table };

    struct Draft {
        std::string code;                        // C_t handed out by generate
        std::vector<perturb::EditRecord> edits;  // edits that produced it
        std::vector<std::string> generations;    // replayed by generate when non-empty
        std::vector<std::string> refinements;    // table mode
    };

    ScriptedPolicy(Mode mode, std::map<std::string, Draft> drafts, std::uint64_t seed = 0);

    std::string generate(const GenerateRequest& request) override;
    std::vector<Candidate> refine(const RefineRequest& request, int n) override;
    bool update(const UpdateRecord& record) override;

    const std::vector<UpdateRecord>& updates() const { return updates_; }
    Mode mode() const { return mode_; }

private:
    const Draft& draft(const std::string& target_id) const;

    Mode mode_;
    std::map<std::string, Draft> drafts_;
    std::uint64_t seed_;
    std::map<std::string, std::uint64_t> calls_;
    std::vector<UpdateRecord> updates_;
};

ScriptedPolicy::Mode scripted_mode_from_string(std::string_view s);
std::string_view to_string(ScriptedPolicy::Mode m);

} // namespace refinekit::grpo
