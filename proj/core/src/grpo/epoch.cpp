#include "refinekit/grpo/epoch.hpp"

#include "refinekit/doc/preprocess.hpp"
#include "refinekit/error.hpp"
#include "refinekit/io.hpp"
#include "refinekit/refine/prompts.hpp"

#include "json.hpp"

#include <fstream>
#include <optional>

namespace refinekit::grpo {

using nlohmann::json;

namespace {

std::optional<render::RasterImage> try_render(std::string_view code, render::RenderProvider& renderer, const render::Viewport& vp)
{
    if (!doc::is_complete(code))
        return std::nullopt;
    try {
        return render::fit_pixel_budget(render::render_html(code, renderer, vp).image);
    } catch (const IncompleteDocument&) {
        return std::nullopt;
    } catch (const RenderTimeout&) {
        return std::nullopt;
    } catch (const ProviderUnavailable&) {
        return std::nullopt;
    }
}

void append_line(const std::filesystem::path& path, const std::string& line)
{
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::app | std::ios::binary);
    out << line << '\n';
    if (!out)
        throw FormatError("cannot append to " + path.string());
}

} // namespace

std::vector<GroupRecord> run_grpo_epoch(PolicyInterface& policy, const std::vector<TrainingTarget>& targets,
                                        render::RenderProvider& renderer, similarity::EmbeddingProvider& embedder,
                                        const RunOptions& options, int epoch, const std::filesystem::path& run_dir)
{
    validate(options.grpo);
    policy.snapshot();
    std::vector<GroupRecord> out;
    for (const auto& target : targets) {
        const auto dir = "epoch_" + std::to_string(epoch) + "/" + target.id;

        GenerateRequest gen{target.id, &target.image, std::string(refine::system_prompt()), refine::initial_prompt(), options.sampling};
        auto c_t = policy.generate(gen);
        auto i_t = try_render(c_t, renderer, options.viewport);
        write_file(run_dir / dir / "draft.html", c_t);
        const double s_t = i_t ? similarity::similarity(*i_t, target.image, embedder) : 0.0;
        const render::RasterImage blank;

        RefineRequest req{target.id,           &target.image, i_t ? &*i_t : &blank, c_t, std::string(refine::system_prompt()),
                          refine::refinement_prompt(c_t), options.sampling};
        auto candidates = policy.refine(req, options.grpo.group_size);
        if (static_cast<int>(candidates.size()) != options.grpo.group_size)
            throw LengthMismatch("policy returned " + std::to_string(candidates.size()) + " refinements, expected " +
                                 std::to_string(options.grpo.group_size));

        GroupRecord g;
        g.epoch = epoch;
        g.target_id = target.id;
        std::vector<double> totals, ratios;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            SampleRecord s;
            s.code_path = dir + "/sample_" + std::to_string(i) + ".html";
            write_file(run_dir / s.code_path, candidates[i].code);
            auto img = try_render(candidates[i].code, renderer, options.viewport);
            s.s_t = s_t;
            if (img) {
                s.render_path = dir + "/sample_" + std::to_string(i) + ".png";
                render::write_png(run_dir / s.render_path, *img);
                s.s_next = similarity::similarity(*img, target.image, embedder);
            }
            s.reward = composite_reward(img.has_value(), s_t, s.s_next, options.grpo.delta_min);
            s.ratio = policy_ratio(candidates[i].logprob_new, candidates[i].logprob_old);
            totals.push_back(s.reward.total);
            ratios.push_back(s.ratio);
            g.group.push_back(std::move(s));
        }
        auto adv = group_advantages(totals, options.grpo.eps_adv);
        for (std::size_t i = 0; i < adv.size(); ++i)
            g.group[i].advantage = adv[i];
        g.loss = grpo_loss(ratios, adv, options.grpo.clip_eps);
        policy.update({epoch, target.id, g.loss, adv, ratios});
        append_line(run_dir / "trajectory.jsonl", group_to_json(g));
        out.push_back(std::move(g));
    }
    return out;
}

std::vector<GroupRecord> run_grpo(PolicyInterface& policy, const std::vector<TrainingTarget>& targets,
                                  render::RenderProvider& renderer, similarity::EmbeddingProvider& embedder,
                                  const RunOptions& options, const std::filesystem::path& run_dir)
{
    validate(options.grpo);
    std::filesystem::remove(run_dir / "trajectory.jsonl");
    std::vector<GroupRecord> all;
    for (int e = 0; e < options.grpo.epochs; ++e) {
        auto groups = run_grpo_epoch(policy, targets, renderer, embedder, options, e, run_dir);
        all.insert(all.end(), groups.begin(), groups.end());
    }
    return all;
}

std::string group_to_json(const GroupRecord& g)
{
    json group = json::array();
    for (const auto& s : g.group)
        group.push_back({{"code_path", s.code_path},
                         {"render_path", s.render_path},
                         {"s_t", s.s_t},
                         {"s_next", s.s_next},
                         {"r_format", s.reward.r_format},
                         {"r_improve", s.reward.r_improve},
                         {"r_quality", s.reward.r_quality},
                         {"total", s.reward.total},
                         {"advantage", s.advantage},
                         {"ratio", s.ratio}});
    return json{{"epoch", g.epoch}, {"target_id", g.target_id}, {"group", group}, {"loss", g.loss}}.dump();
}

GroupRecord group_from_json(std::string_view line)
{
    try {
        auto j = json::parse(line);
        GroupRecord g;
        g.epoch = j.at("epoch").get<int>();
        g.target_id = j.at("target_id").get<std::string>();
        g.loss = j.at("loss").get<double>();
        for (const auto& s : j.at("group")) {
            SampleRecord r;
            r.code_path = s.at("code_path").get<std::string>();
            r.render_path = s.at("render_path").get<std::string>();
            r.s_t = s.at("s_t").get<double>();
            r.s_next = s.at("s_next").get<double>();
            r.reward = {s.at("r_format").get<double>(), s.at("r_improve").get<double>(), s.at("r_quality").get<double>(),
                        s.at("total").get<double>()};
            r.advantage = s.at("advantage").get<double>();
            r.ratio = s.at("ratio").get<double>();
            g.group.push_back(std::move(r));
        }
        return g;
    } catch (const json::exception& e) {
        throw FormatError(std::string("trajectory record: ") + e.what());
    }
}

std::vector<GroupRecord> read_trajectory(const std::filesystem::path& path)
{
    std::vector<GroupRecord> out;
    for (const auto& line : read_lines(path))
        out.push_back(group_from_json(line));
    return out;
}

} // namespace refinekit::grpo
